//! How many repetitions the Chernoff bound asks for, and how the estimator
//! actually spreads at that budget.

use coherent_fingerprint::estimator::repetition_prefactor;
use coherent_fingerprint::multiplex::ProtocolOptions;
use coherent_fingerprint::{
    euclidean_distance_sq, random_unit_vector, required_repetitions, run_multiplexed_protocol_with, ClickModel,
    ProtocolParams, Result,
};

fn main() -> Result<()> {
    println!("epsilon   delta      mu    nu     R");
    for (eps, delta, mu, nu) in [(0.2, 0.05, 5.0, 0.99), (0.1, 0.05, 5.0, 0.99), (0.2, 1e-6, 100.0, 0.99), (0.2, 0.05, 5.0, 0.75)] {
        let r = repetition_prefactor(eps, delta, mu, nu)?.ceil();
        println!("{eps:<8}  {delta:<8}  {mu:>5}  {nu:<5}  {r}");
    }

    let n = 1024;
    let params = ProtocolParams::new(5.0, 0.99, 0.0, 0.2, 0.05, n, 1)?;
    let x = random_unit_vector(n, 5)?;
    let y = random_unit_vector(n, 6)?;
    let truth = euclidean_distance_sq(&x, &y)?;
    let opts = ProtocolOptions { model: ClickModel::Linearized, ..Default::default() };
    let trials = 200;
    let hits = (0..trials)
        .filter(|&t| {
            let run = run_multiplexed_protocol_with(&x, &y, &params, &opts, t).expect("valid run");
            (run.estimate.e_hat - truth).abs() <= params.epsilon
        })
        .count();
    println!(
        "R = {}: {hits}/{trials} estimates within epsilon of {truth:.4}",
        required_repetitions(&params)?
    );
    Ok(())
}
