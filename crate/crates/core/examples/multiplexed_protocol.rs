//! Splitting the fingerprint over k channels: the schedule, the photon
//! budget, and the fact that the click tally does not depend on k.

use coherent_fingerprint::multiplex::photon_budget;
use coherent_fingerprint::{random_unit_vector, run_multiplexed_protocol, schedule, ProtocolParams, Result};

fn main() -> Result<()> {
    let s = schedule(8, 4)?;
    for t in 0..s.time_units() {
        println!("time {t}: channels carry inputs {:?}", s.time_slice(t).collect::<Vec<_>>());
    }

    let n = 64;
    let x = random_unit_vector(n, 7)?;
    let y = random_unit_vector(n, 8)?;
    println!("   k  budget  time units     s0     s1   e_hat");
    for k in [1, 2, 4, 8, 16, 32] {
        let params = ProtocolParams::new(1.5, 0.99, 0.0, 0.2, 0.05, n, k)?;
        let run = run_multiplexed_protocol(&x, &y, &params, 3)?;
        println!(
            "{k:>4}  {:>6.3}  {:>10}  {:>5}  {:>5}  {:+.4}",
            photon_budget(&params),
            run.communication_time,
            run.tally.s0,
            run.tally.s1,
            run.estimate.e_hat
        );
    }

    let too_many = ProtocolParams::new(1.5, 0.99, 0.0, 0.2, 0.05, n, 64)?;
    if let Err(e) = run_multiplexed_protocol(&x, &y, &too_many, 3) {
        println!("k = 64: {e}");
    }
    Ok(())
}
