//! The k-channel protocol: each input is cut into `k` substrings of length
//! `n/k`, and at time unit `t` the `t`-th pulse of every substring is sent in
//! parallel. Channels are either `k` separate fibers or `k` orthogonal OFDM
//! subcarriers on one fiber.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{self, EstimateResult};
use crate::optics::{
    self, make_fingerprint, ClickModel, ClickProbabilities, ClickTally, ProtocolParams, Sampler,
};
use crate::vectors::UnitVector;

/// Index of the first OFDM subcarrier: `omega_j = 2 pi j / T` for `j = 1..=k`.
pub const SUBCARRIER_INDEX_ORIGIN: usize = 1;

/// Maps `(time unit, channel)` to input indices. All indices are 0-based:
/// channel `c` at time `t` carries input `c * (n/k) + t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChannelSchedule {
    n: usize,
    k: usize,
}

impl ChannelSchedule {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Time units for one fingerprint pass, `n / k`.
    pub fn time_units(&self) -> usize {
        self.n / self.k
    }

    pub fn input_index(&self, time: usize, channel: usize) -> usize {
        debug_assert!(time < self.time_units() && channel < self.k);
        channel * self.time_units() + time
    }

    /// Inverse of [`input_index`](Self::input_index): `(time, channel)`.
    pub fn position(&self, input_index: usize) -> (usize, usize) {
        (input_index % self.time_units(), input_index / self.time_units())
    }

    /// Input indices in transmission order: time-major, then channel.
    pub fn transmission_order(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.time_units())
            .flat_map(move |t| (0..self.k).map(move |c| self.input_index(t, c)))
    }

    /// Input indices sent at time unit `time`, one per channel.
    pub fn time_slice(&self, time: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.k).map(move |c| self.input_index(time, c))
    }
}

pub fn schedule(n: usize, k: usize) -> Result<ChannelSchedule> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("n and k must be positive".into()));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds n = {n}")));
    }
    if !n.is_multiple_of(k) {
        return Err(Error::Indivisible { n, k });
    }
    Ok(ChannelSchedule { n, k })
}

/// Expected photons per time unit across all channels, `mu k / n`.
/// A configuration is admissible only when this is below one.
pub fn photon_budget(params: &ProtocolParams) -> f64 {
    params.mu * params.k as f64 / params.n as f64
}

pub fn check_photon_budget(params: &ProtocolParams) -> Result<f64> {
    let budget = photon_budget(params);
    if budget < 1.0 {
        Ok(budget)
    } else {
        Err(Error::PhotonBudget { budget })
    }
}

/// One OFDM symbol: `k` subcarrier amplitudes and the signal sampled at the
/// `k` chip instants `t = m T / k`.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmSymbol {
    pub subcarrier_amplitudes: Vec<Complex64>,
    pub time_samples: Vec<Complex64>,
}

fn twiddle(numerator: usize, k: usize) -> Complex64 {
    Complex64::from_polar(1.0, TAU * (numerator % k) as f64 / k as f64)
}

/// `E(m T_c) = sum_{j=1}^{k} A_j exp(i 2 pi j m / k)` with baseband
/// `omega_0 = 0` and unit symbol period.
pub fn ofdm_encode(amplitudes: &[Complex64]) -> Result<OfdmSymbol> {
    let k = amplitudes.len();
    if k == 0 {
        return Err(Error::EmptyVector);
    }
    let time_samples = (0..k)
        .map(|m| {
            amplitudes
                .iter()
                .enumerate()
                .map(|(idx, a)| a * twiddle((idx + SUBCARRIER_INDEX_ORIGIN) * m, k))
                .sum()
        })
        .collect();
    Ok(OfdmSymbol {
        subcarrier_amplitudes: amplitudes.to_vec(),
        time_samples,
    })
}

/// Recovers subcarrier `q` (1-based) with the delay-line ODFT read out at
/// `t = 0`: `(1/k) sum_{j=1}^{k} E(-(j-1) T_c) exp(i 2 pi (j-1) q / k)`.
///
/// The signal is periodic in the symbol period, so the delayed sample
/// `E(-(j-1) T_c)` is `time_samples[(k - (j-1)) mod k]`.
pub fn ofdm_decode(symbol_samples: &[Complex64], q: usize) -> Result<Complex64> {
    let k = symbol_samples.len();
    if k == 0 {
        return Err(Error::EmptyVector);
    }
    if !(1..=k).contains(&q) {
        return Err(Error::InvalidParameter(format!("subcarrier {q} outside 1..={k}")));
    }
    let sum: Complex64 = (0..k)
        .map(|delay| symbol_samples[(k - delay) % k] * twiddle(delay * q, k))
        .sum();
    Ok(sum / k as f64)
}

pub fn ofdm_decode_all(symbol_samples: &[Complex64]) -> Result<Vec<Complex64>> {
    (1..=symbol_samples.len())
        .map(|q| ofdm_decode(symbol_samples, q))
        .collect()
}

/// How the `k` parallel pulses reach the Referee.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// `k` physical channels.
    #[default]
    Fibers,
    /// One OFDM symbol per time unit, demultiplexed by the ODFT.
    Ofdm,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Fibers => "fibers",
            Backend::Ofdm => "ofdm",
        })
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fibers" | "fiber" => Ok(Backend::Fibers),
            "ofdm" => Ok(Backend::Ofdm),
            other => Err(Error::Parse(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ProtocolOptions {
    pub model: ClickModel,
    pub sampler: Sampler,
    pub backend: Backend,
    /// Defaults to [`estimator::required_repetitions`].
    pub repetitions: Option<u64>,
    /// Parameters the Referee plugs into the estimator, if they differ from
    /// the physical ones.
    pub assumed: Option<ProtocolParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiplexedRun {
    pub estimate: EstimateResult,
    pub tally: ClickTally,
    /// Time units per fingerprint pass, `n / k`.
    pub time_units_per_pass: usize,
    /// `(n / k) * repetitions`.
    pub communication_time: u64,
    pub photon_budget: f64,
}

pub fn run_multiplexed_protocol(
    x: &UnitVector,
    y: &UnitVector,
    params: &ProtocolParams,
    seed: u64,
) -> Result<MultiplexedRun> {
    run_multiplexed_protocol_with(x, y, params, &ProtocolOptions::default(), seed)
}

/// Referee-side click probabilities, indexed by input position.
///
/// Pulses travel in schedule order; the probabilities are written back to the
/// input index each pulse carries, so the randomness consumed by slot `j` is
/// the same for every `k`.
pub fn multiplexed_click_probabilities(
    x: &UnitVector,
    y: &UnitVector,
    params: &ProtocolParams,
    model: ClickModel,
    backend: Backend,
) -> Result<ClickProbabilities> {
    params.validate()?;
    for v in [x, y] {
        if v.len() != params.n {
            return Err(Error::DimensionMismatch {
                left: v.len(),
                right: params.n,
            });
        }
    }
    let sched = schedule(params.n, params.k)?;
    let fx = make_fingerprint(x, params.mu)?;
    let fy = make_fingerprint(y, params.mu)?;

    let mut p0 = vec![0.0; params.n];
    let mut p1 = vec![0.0; params.n];
    for t in 0..sched.time_units() {
        let slice: Vec<usize> = sched.time_slice(t).collect();
        let (ax, ay) = match backend {
            Backend::Fibers => (
                slice.iter().map(|&j| fx.amplitudes()[j]).collect::<Vec<_>>(),
                slice.iter().map(|&j| fy.amplitudes()[j]).collect::<Vec<_>>(),
            ),
            Backend::Ofdm => (
                through_ofdm(&slice, fx.amplitudes())?,
                through_ofdm(&slice, fy.amplitudes())?,
            ),
        };
        for (c, &j) in slice.iter().enumerate() {
            let (a, b) = optics::slot_click_probabilities(ax[c], ay[c], params.dark, params.nu, model);
            p0[j] = a;
            p1[j] = b;
        }
    }
    ClickProbabilities::new(p0, p1)
}

fn through_ofdm(slice: &[usize], amplitudes: &[f64]) -> Result<Vec<f64>> {
    let carriers: Vec<Complex64> = slice.iter().map(|&j| Complex64::new(amplitudes[j], 0.0)).collect();
    let symbol = ofdm_encode(&carriers)?;
    Ok(ofdm_decode_all(&symbol.time_samples)?.into_iter().map(|a| a.re).collect())
}

pub fn run_multiplexed_protocol_with(
    x: &UnitVector,
    y: &UnitVector,
    params: &ProtocolParams,
    options: &ProtocolOptions,
    seed: u64,
) -> Result<MultiplexedRun> {
    params.validate()?;
    let budget = check_photon_budget(params)?;
    let repetitions = match options.repetitions {
        Some(r) => r,
        None => estimator::required_repetitions(params)?,
    };
    let probs = multiplexed_click_probabilities(x, y, params, options.model, options.backend)?;
    let tally = optics::sample_clicks_with(&probs, repetitions, seed, options.sampler)?;
    let estimate = estimator::estimate_distance(&tally, options.assumed.as_ref().unwrap_or(params))?;
    let time_units_per_pass = params.n / params.k;
    Ok(MultiplexedRun {
        estimate,
        tally,
        time_units_per_pass,
        communication_time: time_units_per_pass as u64 * repetitions,
        photon_budget: budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectors::random_unit_vector;
    use approx::assert_abs_diff_eq;

    #[test]
    fn schedule_examples() {
        let s = schedule(6, 3).unwrap();
        assert_eq!(s.time_units(), 2);
        // Substrings {0,1}, {2,3}, {4,5}; time 0 carries their first elements.
        assert_eq!(s.time_slice(0).collect::<Vec<_>>(), vec![0, 2, 4]);
        assert_eq!(s.time_slice(1).collect::<Vec<_>>(), vec![1, 3, 5]);
        let id = schedule(6, 1).unwrap();
        assert_eq!(id.time_units(), 6);
        assert_eq!(id.transmission_order().collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
        assert!(matches!(schedule(6, 4), Err(Error::Indivisible { .. })));
        assert!(schedule(4, 8).is_err());
        assert!(schedule(4, 0).is_err());
    }

    #[test]
    fn schedule_is_bijective_up_to_64() {
        for n in 1..=64 {
            for k in (1..=n).filter(|k| n % k == 0) {
                let s = schedule(n, k).unwrap();
                let mut seen = vec![false; n];
                for t in 0..s.time_units() {
                    for c in 0..k {
                        let j = s.input_index(t, c);
                        assert!(!seen[j]);
                        seen[j] = true;
                        assert_eq!(s.position(j), (t, c));
                    }
                }
                assert!(seen.iter().all(|&b| b));
            }
        }
    }

    fn params(mu: f64, n: usize, k: usize) -> ProtocolParams {
        ProtocolParams::new(mu, 0.99, 0.0, 0.2, 0.05, n, k).unwrap()
    }

    #[test]
    fn photon_budget_examples() {
        let p = params(100.0, 1_000_000, 10_000);
        assert_eq!(photon_budget(&p), 1.0);
        assert!(check_photon_budget(&p).is_err());
        let p = params(100.0, 1_000_000, 1000);
        assert_abs_diff_eq!(photon_budget(&p), 0.1, epsilon = 1e-15);
        assert!(check_photon_budget(&p).is_ok());
        let p = params(0.5, 16, 16);
        assert_eq!(photon_budget(&p), 0.5);
    }

    #[test]
    fn ofdm_examples() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let sym = ofdm_encode(&[one, zero]).unwrap();
        assert_abs_diff_eq!(sym.time_samples[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sym.time_samples[1].re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sym.time_samples[1].im, 0.0, epsilon = 1e-15);
        assert!((ofdm_decode(&sym.time_samples, 1).unwrap() - one).norm() < 1e-15);
        assert!(ofdm_decode(&sym.time_samples, 2).unwrap().norm() < 1e-15);
        let z = ofdm_encode(&[zero; 4]).unwrap();
        assert!(z.time_samples.iter().all(|s| *s == zero));
        assert!(ofdm_decode_all(&z.time_samples).unwrap().iter().all(|a| a.norm() == 0.0));
        assert!(ofdm_encode(&[]).is_err());
        assert!(ofdm_decode(&sym.time_samples, 0).is_err());
        assert!(ofdm_decode(&sym.time_samples, 3).is_err());
    }

    #[test]
    fn ofdm_backend_matches_fibers() {
        let x = random_unit_vector(64, 1).unwrap();
        let y = random_unit_vector(64, 2).unwrap();
        let p = params(5.0, 64, 8);
        let a = multiplexed_click_probabilities(&x, &y, &p, ClickModel::Exact, Backend::Fibers).unwrap();
        let b = multiplexed_click_probabilities(&x, &y, &p, ClickModel::Exact, Backend::Ofdm).unwrap();
        for j in 0..64 {
            assert_abs_diff_eq!(a.p0[j], b.p0[j], epsilon = 1e-14);
            assert_abs_diff_eq!(a.p1[j], b.p1[j], epsilon = 1e-14);
        }
    }

    #[test]
    fn protocol_run_bookkeeping() {
        let x = random_unit_vector(64, 1).unwrap();
        let p = params(5.0, 64, 4);
        let opts = ProtocolOptions {
            repetitions: Some(100),
            ..Default::default()
        };
        let run = run_multiplexed_protocol_with(&x, &x, &p, &opts, 3).unwrap();
        assert_eq!(run.time_units_per_pass, 16);
        assert_eq!(run.communication_time, 1600);
        assert_eq!(run.tally.repetitions, 100);
        let default_run = run_multiplexed_protocol(&x, &x, &p, 3).unwrap();
        assert_eq!(default_run.tally.repetitions, estimator::required_repetitions(&p).unwrap());
    }

    #[test]
    fn protocol_rejects_bad_configurations() {
        let x = random_unit_vector(64, 1).unwrap();
        let p = params(64.0, 64, 1);
        assert!(matches!(
            run_multiplexed_protocol(&x, &x, &p, 1),
            Err(Error::PhotonBudget { .. })
        ));
        let p = params(5.0, 32, 1);
        assert!(run_multiplexed_protocol(&x, &x, &p, 1).is_err());
    }
}
