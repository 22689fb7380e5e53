//! Subcarrier encoding and delay-line decoding of one OFDM symbol.

use coherent_fingerprint::cli::ofdm_round_trip;
use coherent_fingerprint::{ofdm_decode, ofdm_encode, Result};
use num_complex::Complex64;

fn main() -> Result<()> {
    let amps = [
        Complex64::new(0.5, 0.0),
        Complex64::new(-0.25, 0.1),
        Complex64::new(0.0, -0.7),
        Complex64::new(0.3, 0.3),
    ];
    let symbol = ofdm_encode(&amps)?;
    for (m, s) in symbol.time_samples.iter().enumerate() {
        println!("E({m}) = {:+.4} {:+.4}i", s.re, s.im);
    }
    for (q, a) in amps.iter().enumerate() {
        let d = ofdm_decode(&symbol.time_samples, q + 1)?;
        println!("subcarrier {}: sent {:+.4} {:+.4}i  decoded {:+.4} {:+.4}i", q + 1, a.re, a.im, d.re, d.im);
    }
    for k in [2, 4, 8, 16, 64] {
        let c = ofdm_round_trip(k, 100, 9)?;
        println!("k = {k:>2}: max error {:.2e}, Parseval error {:.2e}", c.max_error, c.parseval_error);
    }
    Ok(())
}
