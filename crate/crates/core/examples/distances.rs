//! Unit vectors and the exact distance oracle.

use coherent_fingerprint::vectors::{inner_product_from_distance, sum_norm_sq};
use coherent_fingerprint::{euclidean_distance_sq, normalize, random_unit_vector, Result, UnitVector};

fn main() -> Result<()> {
    let x = normalize(&[3.0, 4.0])?;
    println!("normalize([3, 4]) = {:?}", x.as_slice());

    let e1 = UnitVector::basis(3, 0)?;
    let e2 = UnitVector::basis(3, 1)?;
    println!("||e1 - e2||^2 = {}", euclidean_distance_sq(&e1, &e2)?);
    println!("||e1 + e1||^2 = {}", sum_norm_sq(&e1, &e1)?);

    let a = random_unit_vector(1000, 3)?;
    let b = random_unit_vector(1000, 4)?;
    let d = euclidean_distance_sq(&a, &b)?;
    println!("random pair in R^1000: ||a - b||^2 = {d:.6}");
    println!("  <a, b> = {:.6} (direct {:.6})", inner_product_from_distance(d)?, a.dot(&b)?);
    println!("  ||a - (-a)||^2 = {}", euclidean_distance_sq(&a, &(-&a))?);

    match normalize(&[0.0, 0.0]) {
        Err(e) => println!("normalize([0, 0]) fails: {e}"),
        Ok(v) => println!("unexpected {v:?}"),
    }
    Ok(())
}
