//! Two fingerprints meeting on the beam splitter: per-slot click
//! probabilities under both click models.

use coherent_fingerprint::optics::detector_click_probability;
use coherent_fingerprint::{
    beamsplitter_amplitudes, click_probabilities, make_fingerprint, random_unit_vector, ClickModel,
    ProtocolParams, Result,
};

fn main() -> Result<()> {
    let n = 16;
    let mu = 2.0;
    let params = ProtocolParams::new(mu, 0.98, 1e-5, 0.2, 0.05, n, 1)?;
    let x = random_unit_vector(n, 11)?;
    let y = random_unit_vector(n, 12)?;
    let fx = make_fingerprint(&x, mu)?;
    let fy = make_fingerprint(&y, mu)?;
    println!("mean photon number per fingerprint: {:.3}", fx.mean_photon_number());

    let (o0, o1) = beamsplitter_amplitudes(fx.amplitudes()[0], fy.amplitudes()[0]);
    println!("slot 0 outputs: {o0:+.4} {o1:+.4}");

    let exact = click_probabilities(&fx, &fy, &params, ClickModel::Exact)?;
    let lin = click_probabilities(&fx, &fy, &params, ClickModel::Linearized)?;
    println!("slot      p0 exact     p0 linear     p1 exact     p1 linear");
    for j in 0..n {
        println!(
            "{j:>4}  {:>12.3e}  {:>12.3e}  {:>12.3e}  {:>12.3e}",
            exact.p0[j], lin.p0[j], exact.p1[j], lin.p1[j]
        );
    }
    println!("expected clicks difference per pass: {:.5} (linearized {:.5})", exact.expected_difference(), lin.expected_difference());

    // Identical inputs leave the difference port dark apart from dark counts.
    let same = click_probabilities(&fx, &fx, &params, ClickModel::Exact)?;
    let dark_port: f64 = same.p1.iter().sum();
    println!("x = y: total p1 = {dark_port:.3e}, of which visibility leakage and dark counts");
    println!("exact click at I = 0.01, no dark counts: {:.15}", detector_click_probability(0.01, 0.0, ClickModel::Exact));
    Ok(())
}
