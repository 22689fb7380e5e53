//! Closed-form communication time and transmitted information for the
//! classical and coherent-state protocols, single- and multi-channel.
//!
//! Logarithm conventions (all exported, all recorded in outputs):
//!
//! * `log k` in the classical multi-channel bounds is base 2: a channel index
//!   costs `log2 k` bits on a single channel.
//! * The `2 log 2` under the square root of the lower bound is `2 ln 2`.
//! * `log(1/delta)` is natural, see [`estimator::LOG_INV_DELTA_BASE`].
//! * `log2 n` in the quantum information term is explicit.
//! * `log n` in the `k = c sqrt(n) log n` channel rule is base 2, matching
//!   the `log2 sqrt(n)` factor of the advantage formula.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator;
use crate::optics::ProtocolParams;

pub const LOG_K_BASE: f64 = 2.0;
pub const SQRT_TERM_LOG_BASE: f64 = std::f64::consts::E;
pub const INFO_LOG_N_BASE: f64 = 2.0;
pub const K_RULE_LOG_BASE: f64 = 2.0;

/// Human-readable list of the conventions above, for output headers.
pub fn log_conventions() -> Vec<(&'static str, &'static str)> {
    vec![
        ("log_k", "base 2 (channel index bits)"),
        ("sqrt_2log2", "natural log: sqrt(n / (2 ln 2))"),
        ("log_inv_delta", "natural log"),
        ("info_log_n", "base 2"),
        ("k_rule_log_n", "base 2"),
    ]
}

fn log_base(x: f64, base: f64) -> f64 {
    x.ln() / base.ln()
}

fn check_k(k: f64) -> Result<()> {
    if !(k >= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "classical multi-channel bounds need k >= 2, got {k}"
        )));
    }
    Ok(())
}

fn check_n(n: f64) -> Result<()> {
    if !(n >= 1.0 && n.is_finite()) {
        return Err(Error::InvalidParameter(format!("n must be >= 1, got {n}")));
    }
    Ok(())
}

/// Single-channel lower bound `(1 - 2 sqrt(delta)) sqrt(n / (2 ln 2)) - 1`,
/// which may be negative.
pub fn classical_single_channel_bound(n: f64, delta: f64) -> Result<f64> {
    check_n(n)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::out_of_range("delta", delta, 0.0, 1.0));
    }
    let two_log2 = 2.0 * log_base(2.0, SQRT_TERM_LOG_BASE);
    Ok((1.0 - 2.0 * delta.sqrt()) * (n / two_log2).sqrt() - 1.0)
}

/// `T_cl = I_cl` before flooring at zero.
pub fn classical_lower_bound_raw(n: f64, delta: f64, k: f64) -> Result<f64> {
    check_k(k)?;
    Ok(classical_single_channel_bound(n, delta)? / log_base(k, LOG_K_BASE))
}

/// Classical lower bound on time and information with `k` channels, floored
/// at zero since a negative bound is vacuous.
pub fn classical_lower_bound(n: f64, delta: f64, k: f64) -> Result<f64> {
    Ok(classical_lower_bound_raw(n, delta, k)?.max(0.0))
}

/// Best known classical protocol: `2 sqrt(n) + 1` bits repeated 10 times,
/// spread over `k` channels.
pub fn classical_best_protocol(n: f64, k: f64) -> Result<f64> {
    check_n(n)?;
    check_k(k)?;
    Ok((20.0 * n.sqrt() + 10.0) / log_base(k, LOG_K_BASE))
}

/// Parameters that enter the resource curves; `n` and `k` vary per point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveParams {
    pub epsilon: f64,
    pub delta: f64,
    pub mu: f64,
    pub nu: f64,
}

impl CurveParams {
    /// Reference operating point: `epsilon = 0.2`, `delta = 1e-6`, `mu = 100`, `nu = 0.99`.
    pub fn reference() -> Self {
        CurveParams {
            epsilon: 0.2,
            delta: 1e-6,
            mu: 100.0,
            nu: 0.99,
        }
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    /// Repetitions prefactor shared with the estimator's planner.
    pub fn prefactor(&self) -> Result<f64> {
        estimator::repetition_prefactor(self.epsilon, self.delta, self.mu, self.nu)
    }
}

impl From<&ProtocolParams> for CurveParams {
    fn from(p: &ProtocolParams) -> Self {
        CurveParams {
            epsilon: p.epsilon,
            delta: p.delta,
            mu: p.mu,
            nu: p.nu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantumResources {
    /// `T_qp`, in time units.
    pub t_quantum: f64,
    /// `I_qp`, in bits.
    pub i_quantum: f64,
    /// `3 log(1/delta) / (epsilon^2 2 mu (2 nu - 1))`.
    pub prefactor: f64,
}

pub fn quantum_resources_at(params: &CurveParams, n: f64, k: f64) -> Result<QuantumResources> {
    check_n(n)?;
    if !(k >= 1.0) {
        return Err(Error::InvalidParameter(format!("k must be >= 1, got {k}")));
    }
    let prefactor = params.prefactor()?;
    Ok(QuantumResources {
        t_quantum: prefactor * n / k,
        i_quantum: prefactor * params.mu * log_base(n, INFO_LOG_N_BASE),
        prefactor,
    })
}

pub fn quantum_resources(params: &ProtocolParams) -> Result<QuantumResources> {
    quantum_resources_at(&CurveParams::from(params), params.n as f64, params.k as f64)
}

/// Channel count at which both quantum resources match the classical bound
/// up to constants; grows as `sqrt(n) log n`.
pub fn channels_for_advantage(params: &CurveParams, n: f64) -> Result<f64> {
    check_n(n)?;
    if !(params.delta < 0.25) {
        return Err(Error::out_of_range("delta", params.delta, 0.0, 0.25));
    }
    let two_log2 = 2.0 * log_base(2.0, SQRT_TERM_LOG_BASE);
    Ok(params.prefactor()? / (1.0 - 2.0 * params.delta.sqrt())
        * log_base(n.sqrt(), 2.0)
        * (two_log2 * n).sqrt())
}

/// How the channel count scales with the input size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum KRule {
    /// `factor * sqrt(n) * log2 n`.
    SqrtLog { factor: f64 },
    Constant(f64),
    /// [`channels_for_advantage`] at the curve parameters.
    Advantage,
}

impl KRule {
    /// The channel rule used for the reference curves, `20 sqrt(n) log n`.
    pub fn reference() -> Self {
        KRule::SqrtLog { factor: 20.0 }
    }

    pub fn channels(&self, params: &CurveParams, n: f64) -> Result<f64> {
        match *self {
            KRule::SqrtLog { factor } => Ok(factor * n.sqrt() * log_base(n, K_RULE_LOG_BASE)),
            KRule::Constant(k) => Ok(k),
            KRule::Advantage => channels_for_advantage(params, n),
        }
    }
}

impl fmt::Display for KRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KRule::SqrtLog { factor } => write!(f, "sqrt-log:{factor}"),
            KRule::Constant(k) => write!(f, "const:{k}"),
            KRule::Advantage => f.write_str("advantage"),
        }
    }
}

impl FromStr for KRule {
    type Err = Error;

    /// `sqrt-log:<factor>`, `const:<k>` or `advantage`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| Error::Parse(format!("k-rule {s:?}: {e}")))
        };
        match s.split_once(':') {
            Some(("sqrt-log", v)) => Ok(KRule::SqrtLog { factor: num(v)? }),
            Some(("const", v)) => Ok(KRule::Constant(num(v)?)),
            None if s == "advantage" => Ok(KRule::Advantage),
            None if s == "sqrt-log" => Ok(KRule::reference()),
            _ => Err(Error::Parse(format!("unknown k-rule {s:?}"))),
        }
    }
}

/// All four curves at one `(n, k)` point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResourceReport {
    pub n: f64,
    pub k: f64,
    /// `T_cl = I_cl`, floored at zero.
    pub t_classical_lb: f64,
    /// `T_cp = I_cp`.
    pub t_classical_best: f64,
    pub t_quantum: f64,
    pub i_quantum: f64,
}

pub fn resource_report(params: &CurveParams, n: f64, k: f64) -> Result<ResourceReport> {
    let q = quantum_resources_at(params, n, k)?;
    Ok(ResourceReport {
        n,
        k,
        t_classical_lb: classical_lower_bound(n, params.delta, k)?,
        t_classical_best: classical_best_protocol(n, k)?,
        t_quantum: q.t_quantum,
        i_quantum: q.i_quantum,
    })
}

pub fn report_for_rule(params: &CurveParams, rule: &KRule, n: f64) -> Result<ResourceReport> {
    let k = rule.channels(params, n)?;
    resource_report(params, n, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Crossover {
    /// Smallest scanned `n` with `T_qp < T_cl`.
    pub n_time: Option<u64>,
    /// Smallest scanned `n` with both `T_qp < T_cl` and `I_qp < T_cl`.
    pub n_both: Option<u64>,
}

/// Scans `n = 2, 4, ..., 2^max_exponent`.
pub fn crossover_search<F>(params: &CurveParams, k_rule: F, max_exponent: u32) -> Result<Crossover>
where
    F: Fn(f64) -> f64,
{
    let grid: Vec<u64> = (1..=max_exponent.min(63)).map(|e| 1u64 << e).collect();
    crossover_search_on(params, k_rule, &grid)
}

/// Like [`crossover_search`] over an arbitrary increasing grid of `n`.
pub fn crossover_search_on<F>(params: &CurveParams, k_rule: F, grid: &[u64]) -> Result<Crossover>
where
    F: Fn(f64) -> f64,
{
    let mut out = Crossover {
        n_time: None,
        n_both: None,
    };
    for &n in grid {
        let r = resource_report(params, n as f64, k_rule(n as f64))?;
        let time_ok = r.t_quantum < r.t_classical_lb;
        if time_ok && out.n_time.is_none() {
            out.n_time = Some(n);
        }
        if time_ok && r.i_quantum < r.t_classical_lb {
            out.n_both = Some(n);
            break;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub protocol: &'static str,
    pub time_order: &'static str,
    pub info_order: &'static str,
    pub time_value: f64,
    pub info_value: f64,
}

/// The four resource rows evaluated at one point.
pub fn table1_orders(params: &CurveParams, n: f64, k: f64) -> Result<Vec<Table1Row>> {
    let single = classical_single_channel_bound(n, params.delta)?.max(0.0);
    let coherent = quantum_resources_at(params, n, 1.0)?;
    let mux_classical = classical_lower_bound(n, params.delta, k)?;
    let mux = quantum_resources_at(params, n, k)?;
    Ok(vec![
        Table1Row {
            protocol: "Classical",
            time_order: "Omega(sqrt(n))",
            info_order: "Omega(sqrt(n))",
            time_value: single,
            info_value: single,
        },
        Table1Row {
            protocol: "Coherent",
            time_order: "O(n)",
            info_order: "O(mu log n)",
            time_value: coherent.t_quantum,
            info_value: coherent.i_quantum,
        },
        Table1Row {
            protocol: "Mux Classical",
            time_order: "Omega(sqrt(n)/log k)",
            info_order: "Omega(sqrt(n)/log k)",
            time_value: mux_classical,
            info_value: mux_classical,
        },
        Table1Row {
            protocol: "Mux Coherent",
            time_order: "O(n/k)",
            info_order: "O(mu log n)",
            time_value: mux.t_quantum,
            info_value: mux.i_quantum,
        },
    ])
}
