//! Squared-distance estimator built from the difference of the two
//! detectors' click counts, its expectation, and the repetition planner.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::optics::{ClickTally, ProtocolParams};
use crate::vectors::{self, UnitVector};

/// Leading constant of the multiplicative Chernoff bound.
pub const CHERNOFF_CONSTANT: f64 = 3.0;

/// Base of the logarithm in `log(1/delta)`. Chernoff bounds are stated with
/// `exp`, so the natural logarithm.
pub const LOG_INV_DELTA_BASE: f64 = std::f64::consts::E;

pub fn log_inv_delta(delta: f64) -> f64 {
    (1.0 / delta).ln() / LOG_INV_DELTA_BASE.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateResult {
    /// Estimated `||x - y||^2`, unclamped.
    pub e_hat: f64,
    pub repetitions: u64,
    /// `s0 - s1`.
    pub raw_diff: i64,
    /// Plug-in standard error of `e_hat`; `None` when the tally carries no
    /// per-repetition statistic or has a single repetition.
    pub std_error: Option<f64>,
}

impl EstimateResult {
    /// `e_hat` clamped to the feasible range `[0, 4]`.
    pub fn clamped(&self) -> f64 {
        self.e_hat.clamp(0.0, 4.0)
    }

    /// Estimated inner product `<x, y>`.
    pub fn inner_product(&self) -> f64 {
        1.0 - self.e_hat / 2.0
    }
}

/// `e_hat = 2 - (s0 - s1) / (R mu (2 nu - 1))`.
///
/// `params` holds the parameters the Referee *assumes*; passing values that
/// differ from the ones used to generate the tally measures sensitivity to
/// misestimated `mu` or `nu`.
pub fn estimate_distance(tally: &ClickTally, params: &ProtocolParams) -> Result<EstimateResult> {
    if !(params.nu > 0.5) {
        return Err(Error::Visibility(params.nu));
    }
    if !(params.mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be > 0, got {}", params.mu)));
    }
    if tally.repetitions == 0 {
        return Err(Error::InvalidParameter("tally has no repetitions".into()));
    }
    let r = tally.repetitions as f64;
    let scale = params.mu * params.contrast();
    let raw_diff = tally.raw_diff();
    let e_hat = 2.0 - raw_diff as f64 / (r * scale);

    let std_error = match tally.diff_sq_sum {
        Some(sq) if tally.repetitions >= 2 => {
            let mean = raw_diff as f64 / r;
            let var = ((sq as f64) - r * mean * mean) / (r - 1.0);
            Some((var.max(0.0) / r).sqrt() / scale)
        }
        _ => None,
    };
    Ok(EstimateResult {
        e_hat,
        repetitions: tally.repetitions,
        raw_diff,
        std_error,
    })
}

/// `E[sum_j (Z0_j - Z1_j)] = ((2 nu - 1) / 2) mu (||x+y||^2 - ||x-y||^2)`
/// under the linearized click model; dark counts cancel.
pub fn analytic_expectation(x: &UnitVector, y: &UnitVector, params: &ProtocolParams) -> Result<f64> {
    let plus = vectors::sum_norm_sq(x, y)?;
    let minus = vectors::euclidean_distance_sq(x, y)?;
    Ok(params.contrast() / 2.0 * params.mu * (plus - minus))
}

/// `3 log(1/delta) / (epsilon^2 2 mu (2 nu - 1))` before rounding up.
pub fn repetition_prefactor(epsilon: f64, delta: f64, mu: f64, nu: f64) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::out_of_range("delta", delta, 0.0, 1.0));
    }
    if !(nu > 0.5 && nu <= 1.0) {
        return Err(Error::Visibility(nu));
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be > 0, got {mu}")));
    }
    Ok(CHERNOFF_CONSTANT * log_inv_delta(delta) / (epsilon * epsilon * 2.0 * mu * (2.0 * nu - 1.0)))
}

/// Number of protocol repetitions the Chernoff bound asks for.
pub fn required_repetitions(params: &ProtocolParams) -> Result<u64> {
    let pre = repetition_prefactor(params.epsilon, params.delta, params.mu, params.nu)?;
    Ok((pre.ceil() as u64).max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectors::random_unit_vector;
    use approx::assert_abs_diff_eq;

    fn params(mu: f64, nu: f64, n: usize) -> ProtocolParams {
        ProtocolParams::new(mu, nu, 0.0, 0.2, 0.05, n, 1).unwrap()
    }

    #[test]
    fn estimate_formula() {
        let p = params(2.0, 0.75, 8);
        let t = ClickTally::from_counts(30, 10, 10, 8).unwrap();
        let est = estimate_distance(&t, &p).unwrap();
        assert_abs_diff_eq!(est.e_hat, 2.0 - 20.0 / (10.0 * 2.0 * 0.5), epsilon = 1e-15);
        assert_eq!(est.raw_diff, 20);
        assert_eq!(est.std_error, None);
        assert_eq!(est.clamped(), 0.0);
    }

    #[test]
    fn expected_tallies_give_the_three_landmarks() {
        // x = y: E[diff] = 2 mu (2nu - 1); x orthogonal to y: 0; x = -y: -2 mu (2nu - 1).
        let (mu, nu, r) = (4.0, 0.9, 1000u64);
        let p = params(mu, nu, 8);
        let per_rep = 2.0 * mu * (2.0 * nu - 1.0);
        for (diff, expected) in [(per_rep, 0.0), (0.0, 2.0), (-per_rep, 4.0)] {
            let total = (diff * r as f64).round() as i64;
            let (s0, s1) = if total >= 0 { (total as u64, 0) } else { (0, (-total) as u64) };
            let t = ClickTally::from_counts(s0, s1, r, 8).unwrap();
            assert_abs_diff_eq!(estimate_distance(&t, &p).unwrap().e_hat, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn std_error_from_per_repetition_differences() {
        // Differences 1, 3 over two repetitions: var = 2, se(mean) = 1.
        let p = params(1.0, 1.0, 4);
        let t = ClickTally { s0: 4, s1: 0, repetitions: 2, slots: 4, diff_sq_sum: Some(10) };
        let est = estimate_distance(&t, &p).unwrap();
        assert_abs_diff_eq!(est.std_error.unwrap(), 1.0, epsilon = 1e-15);
        let one = ClickTally { s0: 1, s1: 0, repetitions: 1, slots: 4, diff_sq_sum: Some(1) };
        assert_eq!(estimate_distance(&one, &p).unwrap().std_error, None);
    }

    #[test]
    fn estimate_errors() {
        let mut p = params(1.0, 1.0, 4);
        let t = ClickTally::from_counts(0, 0, 0, 4).unwrap();
        assert!(estimate_distance(&t, &p).is_err());
        p.nu = 0.5;
        let t = ClickTally::from_counts(0, 0, 1, 4).unwrap();
        assert!(matches!(estimate_distance(&t, &p), Err(Error::Visibility(_))));
    }

    #[test]
    fn analytic_landmarks() {
        let x = random_unit_vector(32, 1).unwrap();
        let p = params(3.0, 1.0, 32);
        assert_abs_diff_eq!(analytic_expectation(&x, &x, &p).unwrap(), 6.0, epsilon = 1e-12);
        let e1 = UnitVector::basis(32, 0).unwrap();
        let e2 = UnitVector::basis(32, 1).unwrap();
        assert_eq!(analytic_expectation(&e1, &e2, &p).unwrap(), 0.0);
    }

    #[test]
    fn analytic_matches_inner_product_route() {
        let p = params(5.0, 0.99, 256);
        for seed in 0..20 {
            let x = random_unit_vector(256, seed).unwrap();
            let y = random_unit_vector(256, seed + 100).unwrap();
            let via_norms = analytic_expectation(&x, &y, &p).unwrap();
            let via_dot = p.contrast() / 2.0 * p.mu * 4.0 * x.dot(&y).unwrap();
            assert_abs_diff_eq!(via_norms, via_dot, epsilon = 1e-12);
        }
    }

    #[test]
    fn repetition_examples() {
        // epsilon = 1 lies outside ProtocolParams' open interval, so use the prefactor directly.
        let pre = repetition_prefactor(1.0, (-1f64).exp(), 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(pre, 1.5, epsilon = 1e-15);
        assert_eq!(pre.ceil(), 2.0);
        let p = ProtocolParams::new(100.0, 0.99, 0.0, 0.2, 1e-6, 4, 1).unwrap();
        // 3 ln(1e6) / (2 * 0.04 * 100 * 0.98) = 5.2865474073842885...
        assert_abs_diff_eq!(
            repetition_prefactor(0.2, 1e-6, 100.0, 0.99).unwrap(),
            5.286_547_407_384_288_6,
            epsilon = 1e-12
        );
        assert_eq!(required_repetitions(&p).unwrap(), 6);
        let a = repetition_prefactor(0.2, 0.01, 3.0, 0.95).unwrap();
        let b = repetition_prefactor(0.1, 0.01, 3.0, 0.95).unwrap();
        assert_abs_diff_eq!(b / a, 4.0, epsilon = 1e-12);
        assert!(repetition_prefactor(0.2, 0.01, 3.0, 0.5).is_err());
        assert!(repetition_prefactor(0.2, 1.0, 3.0, 0.9).is_err());
    }
}
