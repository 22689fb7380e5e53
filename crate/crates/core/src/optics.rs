//! Coherent-state fingerprints, the 50/50 beam splitter, and the threshold
//! detector model.
//!
//! Alice and Bob each send a train of `n` weak coherent pulses whose
//! amplitudes are `x_j * alpha`. The Referee interferes pulse `j` of both
//! trains and records which of the two detectors click. Clicks are
//! independent across slots and repetitions because coherent states factorize
//! over modes.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::vectors::UnitVector;

/// Dark-count probability of each detector per time unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DarkCounts {
    pub d0: f64,
    pub d1: f64,
}

impl DarkCounts {
    pub fn symmetric(p: f64) -> Self {
        DarkCounts { d0: p, d1: p }
    }

    pub fn is_symmetric(&self) -> bool {
        self.d0 == self.d1
    }
}

/// Every physical and statistical parameter of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Mean photon number of one whole fingerprint, `|alpha|^2`.
    pub mu: f64,
    /// Interferometer visibility.
    pub nu: f64,
    pub dark: DarkCounts,
    /// Additive accuracy target on the squared distance.
    pub epsilon: f64,
    /// Failure probability target.
    pub delta: f64,
    /// Input dimension.
    pub n: usize,
    /// Number of parallel channels.
    pub k: usize,
}

impl ProtocolParams {
    /// Validated parameters with symmetric dark counts.
    pub fn new(
        mu: f64,
        nu: f64,
        p_dark: f64,
        epsilon: f64,
        delta: f64,
        n: usize,
        k: usize,
    ) -> Result<Self> {
        let params = ProtocolParams {
            mu,
            nu,
            dark: DarkCounts::symmetric(p_dark),
            epsilon,
            delta,
            n,
            k,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_dark_counts(mut self, d0: f64, d1: f64) -> Result<Self> {
        self.dark = DarkCounts { d0, d1 };
        self.validate()?;
        Ok(self)
    }

    pub fn with_k(mut self, k: usize) -> Result<Self> {
        self.k = k;
        self.validate()?;
        Ok(self)
    }

    pub fn with_n(mut self, n: usize) -> Result<Self> {
        self.n = n;
        self.validate()?;
        Ok(self)
    }

    /// Visibility-scaled signal factor `2 nu - 1`.
    pub fn contrast(&self) -> f64 {
        2.0 * self.nu - 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.nu <= 1.0) || self.nu.is_nan() {
            return Err(Error::out_of_range("nu", self.nu, 0.5, 1.0));
        }
        if !(self.nu > 0.5) {
            return Err(Error::Visibility(self.nu));
        }
        for (what, p) in [("p_dark_d0", self.dark.d0), ("p_dark_d1", self.dark.d1)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::out_of_range(what, p, 0.0, 1.0));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::out_of_range("epsilon", self.epsilon, 0.0, 1.0));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::out_of_range("delta", self.delta, 0.0, 1.0));
        }
        if self.n == 0 || self.k == 0 {
            return Err(Error::InvalidParameter("n and k must be positive".into()));
        }
        if self.k > self.n {
            return Err(Error::InvalidParameter(format!(
                "k = {} exceeds n = {}",
                self.k, self.n
            )));
        }
        if !self.n.is_multiple_of(self.k) {
            return Err(Error::Indivisible { n: self.n, k: self.k });
        }
        Ok(())
    }
}

/// Per-slot coherent amplitudes `x_j * sqrt(mu)` of one fingerprint.
///
/// The phase of `alpha` is fixed to zero; only intensities matter downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain {
    amplitudes: Vec<f64>,
    mu: f64,
}

impl PulseTrain {
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Total mean photon number, `sum_j |amplitude_j|^2`.
    pub fn mean_photon_number(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }
}

pub fn make_fingerprint(x: &UnitVector, mu: f64) -> Result<PulseTrain> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be > 0, got {mu}")));
    }
    let alpha = mu.sqrt();
    Ok(PulseTrain {
        amplitudes: x.as_slice().iter().map(|xj| xj * alpha).collect(),
        mu,
    })
}

/// Output amplitudes `(D0 arm, D1 arm)` of a lossless 50/50 beam splitter.
#[inline]
pub fn beamsplitter_amplitudes(a_x: f64, a_y: f64) -> (f64, f64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ((a_x + a_y) * s, (a_x - a_y) * s)
}

/// How detector intensities become click probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClickModel {
    /// `1 - (1 - p_d) exp(-I)`: Poissonian no-click composed with an
    /// independent dark count.
    #[default]
    Exact,
    /// First-order expansion `I + p_d`, under which the estimator is unbiased.
    Linearized,
}

impl fmt::Display for ClickModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClickModel::Exact => "exact",
            ClickModel::Linearized => "linearized",
        })
    }
}

impl FromStr for ClickModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(ClickModel::Exact),
            "linearized" | "linear" => Ok(ClickModel::Linearized),
            other => Err(Error::Parse(format!("unknown click model {other:?}"))),
        }
    }
}

/// Click probability of one detector given its mean incident intensity.
#[inline]
pub fn detector_click_probability(intensity: f64, p_dark: f64, model: ClickModel) -> f64 {
    match model {
        ClickModel::Exact => p_dark + (1.0 - p_dark) * -(-intensity).exp_m1(),
        ClickModel::Linearized => intensity + p_dark,
    }
}

/// `(p0, p1)` for one slot with incoming amplitudes `a_x`, `a_y`.
///
/// With visibility `nu` a fraction `1 - nu` of each arm's intensity leaks
/// into the other arm.
pub fn slot_click_probabilities(
    a_x: f64,
    a_y: f64,
    dark: DarkCounts,
    nu: f64,
    model: ClickModel,
) -> (f64, f64) {
    let (o0, o1) = beamsplitter_amplitudes(a_x, a_y);
    let (i0, i1) = (o0 * o0, o1 * o1);
    let mixed0 = nu * i0 + (1.0 - nu) * i1;
    let mixed1 = nu * i1 + (1.0 - nu) * i0;
    (
        detector_click_probability(mixed0, dark.d0, model),
        detector_click_probability(mixed1, dark.d1, model),
    )
}

/// Per-slot click probabilities of both detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickProbabilities {
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
}

impl ClickProbabilities {
    pub fn new(p0: Vec<f64>, p1: Vec<f64>) -> Result<Self> {
        if p0.len() != p1.len() {
            return Err(Error::DimensionMismatch {
                left: p0.len(),
                right: p1.len(),
            });
        }
        for (slot, &p) in p0.iter().chain(&p1).enumerate() {
            if !(0.0..=1.0).contains(&p) {
                if p > 1.0 {
                    return Err(Error::ProbabilityOverflow {
                        slot: slot % p0.len().max(1),
                        value: p,
                    });
                }
                return Err(Error::out_of_range("click probability", p, 0.0, 1.0));
            }
        }
        Ok(ClickProbabilities { p0, p1 })
    }

    pub fn uniform(slots: usize, p0: f64, p1: f64) -> Result<Self> {
        Self::new(vec![p0; slots], vec![p1; slots])
    }

    pub fn slots(&self) -> usize {
        self.p0.len()
    }

    /// Expected `sum_j (Z0_j - Z1_j)` for one repetition.
    pub fn expected_difference(&self) -> f64 {
        self.p0.iter().zip(&self.p1).map(|(a, b)| a - b).sum()
    }
}

pub fn click_probabilities(
    fx: &PulseTrain,
    fy: &PulseTrain,
    params: &ProtocolParams,
    model: ClickModel,
) -> Result<ClickProbabilities> {
    if fx.len() != fy.len() {
        return Err(Error::DimensionMismatch {
            left: fx.len(),
            right: fy.len(),
        });
    }
    params.validate()?;
    let (p0, p1) = fx
        .amplitudes
        .iter()
        .zip(&fy.amplitudes)
        .map(|(&a, &b)| slot_click_probabilities(a, b, params.dark, params.nu, model))
        .unzip();
    ClickProbabilities::new(p0, p1)
}

/// Aggregated detector clicks over `repetitions` passes of `slots` slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickTally {
    pub s0: u64,
    pub s1: u64,
    pub repetitions: u64,
    pub slots: usize,
    /// `sum_r D_r^2` with `D_r` the per-repetition click difference, when
    /// the per-repetition statistic was tracked.
    pub diff_sq_sum: Option<u128>,
}

impl ClickTally {
    pub fn empty(slots: usize) -> Self {
        ClickTally {
            s0: 0,
            s1: 0,
            repetitions: 0,
            slots,
            diff_sq_sum: Some(0),
        }
    }

    /// A tally from bare totals, without a per-repetition variance.
    pub fn from_counts(s0: u64, s1: u64, repetitions: u64, slots: usize) -> Result<Self> {
        let cap = repetitions.saturating_mul(slots as u64);
        if s0 > cap || s1 > cap {
            return Err(Error::InvalidParameter(format!(
                "click counts ({s0}, {s1}) exceed slots x repetitions = {cap}"
            )));
        }
        Ok(ClickTally {
            s0,
            s1,
            repetitions,
            slots,
            diff_sq_sum: None,
        })
    }

    /// `s0 - s1`.
    pub fn raw_diff(&self) -> i64 {
        self.s0 as i64 - self.s1 as i64
    }

    fn record(&mut self, c0: u64, c1: u64) {
        self.s0 += c0;
        self.s1 += c1;
        self.repetitions += 1;
        let d = c0 as i128 - c1 as i128;
        if let Some(sq) = self.diff_sq_sum.as_mut() {
            *sq += (d * d) as u128;
        }
    }

    /// Combines tallies of disjoint repetition ranges over the same slots.
    pub fn merge(mut self, other: ClickTally) -> ClickTally {
        debug_assert_eq!(self.slots, other.slots);
        self.s0 += other.s0;
        self.s1 += other.s1;
        self.repetitions += other.repetitions;
        self.diff_sq_sum = match (self.diff_sq_sum, other.diff_sq_sum) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        self
    }
}

/// Strategy for realizing the independent per-slot clicks.
///
/// Both produce independent `Bernoulli(p_j)` clicks. Repetition `r` always
/// draws from ChaCha stream `r`, so any partition of repetitions across
/// workers yields the same tally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    /// Only visits candidate slots: slots are bucketed by probability and
    /// candidates are generated by geometric skipping, then thinned. Cost per
    /// repetition is proportional to the number of clicks, not to `n`.
    #[default]
    Thinned,
    /// One uniform per slot and detector at a fixed counter address, see
    /// [`slot_uniform`]. Cost is `2n` draws per repetition, but draws are
    /// shared across probability vectors, which couples runs that differ
    /// only in their probabilities.
    Slotwise,
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sampler::Thinned => "thinned",
            Sampler::Slotwise => "slotwise",
        })
    }
}

impl FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "thinned" => Ok(Sampler::Thinned),
            "slotwise" => Ok(Sampler::Slotwise),
            other => Err(Error::Parse(format!("unknown sampler {other:?}"))),
        }
    }
}

/// Repetitions handed to one worker.
const BLOCK_REPETITIONS: u64 = 1024;

pub fn sample_clicks(probs: &ClickProbabilities, repetitions: u64, seed: u64) -> Result<ClickTally> {
    sample_clicks_with(probs, repetitions, seed, Sampler::default())
}

pub fn sample_clicks_with(
    probs: &ClickProbabilities,
    repetitions: u64,
    seed: u64,
    sampler: Sampler,
) -> Result<ClickTally> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
    }
    let prepared = PreparedSampler::new(probs, sampler);
    let blocks = repetitions.div_ceil(BLOCK_REPETITIONS);
    Ok((0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK_REPETITIONS;
            let end = (start + BLOCK_REPETITIONS).min(repetitions);
            prepared.run(start..end, seed)
        })
        .reduce(|| ClickTally::empty(probs.slots()), ClickTally::merge))
}

/// Samples only the repetitions in `range`; tallies of disjoint ranges
/// [`merge`](ClickTally::merge) into the tally of their union.
pub fn sample_click_range(
    probs: &ClickProbabilities,
    range: Range<u64>,
    seed: u64,
    sampler: Sampler,
) -> ClickTally {
    PreparedSampler::new(probs, sampler).run(range, seed)
}

/// The uniform that the slotwise sampler compares against `p_detector[slot]`
/// in repetition `rep`.
pub fn slot_uniform(seed: u64, rep: u64, slot: usize, detector: usize) -> f64 {
    let mut rng = rng::keyed(seed);
    rng.set_stream(rep);
    rng.set_word_pos(2 * (2 * slot as u128 + detector as u128));
    rng::next_unit(&mut rng)
}

enum PreparedSampler<'a> {
    Slotwise(&'a ClickProbabilities),
    Thinned { d0: ThinningPlan, d1: ThinningPlan, slots: usize },
}

impl<'a> PreparedSampler<'a> {
    fn new(probs: &'a ClickProbabilities, sampler: Sampler) -> Self {
        match sampler {
            Sampler::Slotwise => PreparedSampler::Slotwise(probs),
            Sampler::Thinned => PreparedSampler::Thinned {
                d0: ThinningPlan::new(&probs.p0),
                d1: ThinningPlan::new(&probs.p1),
                slots: probs.slots(),
            },
        }
    }

    fn run(&self, range: Range<u64>, seed: u64) -> ClickTally {
        let base = rng::keyed(seed);
        let mut rng = base.clone();
        match self {
            PreparedSampler::Slotwise(probs) => {
                let mut tally = ClickTally::empty(probs.slots());
                for rep in range {
                    rng::seek_stream(&mut rng, rep);
                    let (mut c0, mut c1) = (0u64, 0u64);
                    for (&p0, &p1) in probs.p0.iter().zip(&probs.p1) {
                        c0 += (rng::next_unit(&mut rng) < p0) as u64;
                        c1 += (rng::next_unit(&mut rng) < p1) as u64;
                    }
                    tally.record(c0, c1);
                }
                tally
            }
            PreparedSampler::Thinned { d0, d1, slots } => {
                let mut tally = ClickTally::empty(*slots);
                for rep in range {
                    rng::seek_stream(&mut rng, rep);
                    let c0 = d0.count(&mut rng);
                    let c1 = d1.count(&mut rng);
                    tally.record(c0, c1);
                }
                tally
            }
        }
    }
}

struct Bucket {
    /// Largest probability in the bucket; candidates arrive at this rate.
    envelope: f64,
    ln_miss: f64,
    probs: Vec<f64>,
}

/// Slots grouped by `floor(-log2 p)`, so every acceptance ratio `p / envelope`
/// is at least one half.
struct ThinningPlan {
    buckets: Vec<Bucket>,
}

impl ThinningPlan {
    fn new(probs: &[f64]) -> Self {
        let mut by_exp: std::collections::BTreeMap<i32, Vec<f64>> = Default::default();
        for &p in probs.iter().filter(|&&p| p > 0.0) {
            let e = (-p.log2()).floor().min(1100.0) as i32;
            by_exp.entry(e).or_default().push(p);
        }
        let buckets = by_exp
            .into_values()
            .map(|probs| {
                let envelope = probs.iter().cloned().fold(0.0, f64::max);
                Bucket {
                    envelope,
                    ln_miss: (-envelope).ln_1p(),
                    probs,
                }
            })
            .collect();
        ThinningPlan { buckets }
    }

    fn count(&self, rng: &mut ChaCha8Rng) -> u64 {
        let mut clicks = 0;
        for bucket in &self.buckets {
            let len = bucket.probs.len();
            if bucket.envelope >= 1.0 {
                for &p in &bucket.probs {
                    clicks += (p >= 1.0 || rng::next_unit(rng) < p) as u64;
                }
                continue;
            }
            // Failures before the next candidate are Geometric(envelope).
            let mut i = 0usize;
            loop {
                let skip = rng::next_unit_open0(rng).ln() / bucket.ln_miss;
                if skip >= (len - i) as f64 {
                    break;
                }
                i += skip as usize;
                let p = bucket.probs[i];
                if p == bucket.envelope || rng::next_unit(rng) * bucket.envelope < p {
                    clicks += 1;
                }
                i += 1;
                if i >= len {
                    break;
                }
            }
        }
        clicks
    }
}
