//! One full protocol run at n = 1024 against the exact distance.

use coherent_fingerprint::{
    euclidean_distance_sq, random_unit_vector, required_repetitions, run_multiplexed_protocol, ProtocolParams, Result,
};

fn main() -> Result<()> {
    let n = 1024;
    let params = ProtocolParams::new(5.0, 0.99, 0.0, 0.2, 0.05, n, 1)?;
    println!("required repetitions: {}", required_repetitions(&params)?);

    for (label, seed_y) in [("random pair", 2), ("same vector", 1)] {
        let x = random_unit_vector(n, 1)?;
        let y = random_unit_vector(n, seed_y)?;
        let run = run_multiplexed_protocol(&x, &y, &params, 42)?;
        println!(
            "{label:<12} true {:.4}  e_hat {:+.4}  clamped {:.4}  s0 {} s1 {}",
            euclidean_distance_sq(&x, &y)?,
            run.estimate.e_hat,
            run.estimate.clamped(),
            run.tally.s0,
            run.tally.s1
        );
    }
    Ok(())
}
