//! Equality of bit strings through distance estimation: encode both strings
//! with a random linear code, then threshold the estimated distance.

use coherent_fingerprint::multiplex::ProtocolOptions;
use coherent_fingerprint::{
    euclidean_distance_sq, run_multiplexed_protocol_with, BinaryString, ClickModel, LinearCode, ProtocolParams,
    Result,
};

fn main() -> Result<()> {
    let n_bits = 64;
    let code = LinearCode::new(n_bits, 16, 1)?;
    let m = code.codeword_len();
    let params = ProtocolParams::new(5.0, 0.99, 0.0, 0.2, 0.05, m, 1)?;
    let opts = ProtocolOptions { model: ClickModel::Linearized, ..Default::default() };

    let s = BinaryString::random(n_bits, 100);
    let mut t = s.clone();
    let mut flipped = t.bits().to_vec();
    flipped[0] = !flipped[0];
    t = BinaryString::new(flipped);
    let u = BinaryString::random(n_bits, 200);

    for (label, other) in [("s vs s", &s), ("s vs s^e0", &t), ("s vs random", &u)] {
        let x = code.encode(&s)?;
        let y = code.encode(other)?;
        let run = run_multiplexed_protocol_with(&x, &y, &params, &opts, 17)?;
        let decision = if run.estimate.e_hat <= params.epsilon { "EQUAL" } else { "UNEQUAL" };
        println!(
            "{label:<12} hamming {:>2}  codeword distance {:.4}  e_hat {:+.4}  {decision}",
            s.hamming(other)?,
            euclidean_distance_sq(&x, &y)?,
            run.estimate.e_hat
        );
    }
    Ok(())
}
