//! The `cohfp` experiment harness.
//!
//! Four subcommands share one flat `key = value` configuration. A file given
//! with `--config` is read first; each key can then be overridden by a flag
//! of the same name (`--mu 5 --x_file a.txt`).
//!
//! * `simulate` and `equality` write JSON lines: one `meta` header, then one
//!   `run` record per trial in trial order.
//! * `resources` writes CSV with `#` metadata lines.
//! * `ofdm-check` writes JSON lines, one record per `k`.
//!
//! Exit status is 0 on success, 2 for configuration and I/O errors and 3 for
//! physics violations. Errors are reported on stderr as one JSON object.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, ErrorKind, Result};
use crate::multiplex::{self, Backend, ProtocolOptions, SUBCARRIER_INDEX_ORIGIN};
use crate::optics::{ClickModel, ProtocolParams, Sampler};
use crate::resources::{self, CurveParams, KRule};
use crate::rng;
use crate::vectors::{self, BinaryString, UnitVector};

pub const EXIT_SUCCESS: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_PHYSICS: u8 = 3;

pub const OFDM_ERROR_TOLERANCE: f64 = 1e-12;
pub const PARSEVAL_TOLERANCE: f64 = 1e-10;

pub fn exit_code(err: &Error) -> u8 {
    match err.kind() {
        ErrorKind::Physics => EXIT_PHYSICS,
        ErrorKind::Config | ErrorKind::Io => EXIT_CONFIG,
    }
}

/// How `equality` draws its bit strings when no files are given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairMode {
    /// `t = s`.
    Equal,
    /// `t` drawn independently of `s`.
    Random,
    /// `t` drawn independently, redrawn until it differs from `s`.
    Unequal,
}

impl FromStr for PairMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "equal" => Ok(PairMode::Equal),
            "random" => Ok(PairMode::Random),
            "unequal" => Ok(PairMode::Unequal),
            other => Err(Error::Parse(format!("unknown pair mode {other:?}"))),
        }
    }
}

/// Everything a run needs. Unset options take per-command defaults, see
/// [`ExperimentConfig::protocol_params`] and friends.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub mu: Option<f64>,
    pub nu: Option<f64>,
    pub p_dark: Option<f64>,
    pub p_dark_d0: Option<f64>,
    pub p_dark_d1: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub seed: u64,
    pub trials: Option<u64>,
    pub repetitions: Option<u64>,
    pub model: Option<ClickModel>,
    pub sampler: Sampler,
    pub backend: Backend,
    pub x_file: Option<PathBuf>,
    pub y_file: Option<PathBuf>,
    pub x_bits: Option<PathBuf>,
    pub y_bits: Option<PathBuf>,
    pub n_bits: Option<usize>,
    pub pair: Option<PairMode>,
    pub rate_inverse: Option<usize>,
    pub code_seed: Option<u64>,
    pub assumed_mu: Option<f64>,
    pub assumed_nu: Option<f64>,
    pub k_rule: Option<KRule>,
    pub n_list: Option<Vec<u64>>,
    pub nu_band: Vec<f64>,
    pub k_list: Option<Vec<usize>>,
    /// Not echoed, so the same run written to two places is byte-identical.
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub record_timing: bool,
}

macro_rules! config_keys {
    ($($key:ident),* $(,)?) => {
        pub const CONFIG_KEYS: &[&str] = &[$(stringify!($key)),*];

        /// Per-key overrides; every flag is named after its config key.
        #[derive(Debug, Clone, Default, Args)]
        pub struct Overrides {
            $(
                #[arg(long = stringify!($key), value_name = "VALUE")]
                $key: Option<String>,
            )*
        }

        impl Overrides {
            fn pairs(&self) -> Vec<(&'static str, &str)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$key {
                        out.push((stringify!($key), v.as_str()));
                    }
                )*
                out
            }
        }
    };
}

config_keys!(
    mu, nu, p_dark, p_dark_d0, p_dark_d1, epsilon, delta, n, k, seed, trials, repetitions, model,
    sampler, backend, x_file, y_file, x_bits, y_bits, n_bits, pair, rate_inverse, code_seed,
    assumed_mu, assumed_nu, k_rule, n_list, nu_band, k_list, output, record_timing,
);

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| Error::Parse(format!("{key} = {value:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn parse_size(item: &str) -> Result<u64> {
    match item.split_once('^') {
        Some((base, exp)) => {
            let base: u64 = parse_value("n_list", base)?;
            let exp: u32 = parse_value("n_list", exp)?;
            base.checked_pow(exp)
                .ok_or_else(|| Error::Parse(format!("n_list: {item} overflows")))
        }
        None => parse_value("n_list", item),
    }
}

/// Parses `1024, 2^12, 2^14..2^20`. A range `2^a..2^b` expands to every
/// power of two in between.
pub fn parse_n_list(value: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once("..") {
            Some((lo, hi)) => {
                let (lo, hi) = (parse_size(lo.trim())?, parse_size(hi.trim())?);
                if !lo.is_power_of_two() || !hi.is_power_of_two() || lo > hi {
                    return Err(Error::Parse(format!("n_list range {item:?} needs powers of two lo <= hi")));
                }
                let mut n = lo;
                while n <= hi {
                    out.push(n);
                    match n.checked_mul(2) {
                        Some(next) => n = next,
                        None => break,
                    }
                }
            }
            None => out.push(parse_size(item)?),
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("n_list is empty".into()));
    }
    Ok(out)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Parse(format!("{key} = {other:?}: expected true or false"))),
    }
}

impl ExperimentConfig {
    /// Sets one key. Relative paths are resolved against `base` when given.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<()> {
        let path = |v: &str| {
            let p = PathBuf::from(v.trim());
            match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }
        };
        match key {
            "mu" => self.mu = Some(parse_value(key, value)?),
            "nu" => self.nu = Some(parse_value(key, value)?),
            "p_dark" => self.p_dark = Some(parse_value(key, value)?),
            "p_dark_d0" => self.p_dark_d0 = Some(parse_value(key, value)?),
            "p_dark_d1" => self.p_dark_d1 = Some(parse_value(key, value)?),
            "epsilon" => self.epsilon = Some(parse_value(key, value)?),
            "delta" => self.delta = Some(parse_value(key, value)?),
            "n" => self.n = Some(parse_value(key, value)?),
            "k" => self.k = Some(parse_value(key, value)?),
            "seed" => self.seed = parse_value(key, value)?,
            "trials" => self.trials = Some(parse_value(key, value)?),
            "repetitions" => self.repetitions = Some(parse_value(key, value)?),
            "model" => self.model = Some(value.parse()?),
            "sampler" => self.sampler = value.parse()?,
            "backend" => self.backend = value.parse()?,
            "x_file" => self.x_file = Some(path(value)),
            "y_file" => self.y_file = Some(path(value)),
            "x_bits" => self.x_bits = Some(path(value)),
            "y_bits" => self.y_bits = Some(path(value)),
            "n_bits" => self.n_bits = Some(parse_value(key, value)?),
            "pair" => self.pair = Some(value.parse()?),
            "rate_inverse" => self.rate_inverse = Some(parse_value(key, value)?),
            "code_seed" => self.code_seed = Some(parse_value(key, value)?),
            "assumed_mu" => self.assumed_mu = Some(parse_value(key, value)?),
            "assumed_nu" => self.assumed_nu = Some(parse_value(key, value)?),
            "k_rule" => self.k_rule = Some(value.parse()?),
            "n_list" => self.n_list = Some(parse_n_list(value)?),
            "nu_band" => self.nu_band = parse_list(key, value)?,
            "k_list" => self.k_list = Some(parse_list(key, value)?),
            "output" => self.output = Some(path(value)),
            "record_timing" => self.record_timing = parse_bool(key, value)?,
            other => return Err(Error::Parse(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, base: Option<&Path>) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", i + 1)))?;
            self.set(key.trim(), value, base)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(text, None)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(&text, path.parent())?;
        Ok(cfg)
    }

    fn dark_counts(&self) -> (f64, f64) {
        let p = self.p_dark.unwrap_or(0.0);
        (self.p_dark_d0.unwrap_or(p), self.p_dark_d1.unwrap_or(p))
    }

    /// Protocol parameters for an `n`-dimensional input. Defaults:
    /// `mu = 5`, `nu = 0.99`, `p_dark = 0`, `epsilon = 0.2`, `delta = 0.05`,
    /// `k = 1`.
    pub fn protocol_params(&self, n: usize) -> Result<ProtocolParams> {
        let (d0, d1) = self.dark_counts();
        let params = ProtocolParams {
            mu: self.mu.unwrap_or(5.0),
            nu: self.nu.unwrap_or(0.99),
            dark: crate::optics::DarkCounts { d0, d1 },
            epsilon: self.epsilon.unwrap_or(0.2),
            delta: self.delta.unwrap_or(0.05),
            n,
            k: self.k.unwrap_or(1),
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters the Referee assumes, when they differ from the physical ones.
    pub fn assumed_params(&self, physical: &ProtocolParams) -> Result<Option<ProtocolParams>> {
        if self.assumed_mu.is_none() && self.assumed_nu.is_none() {
            return Ok(None);
        }
        let mut p = *physical;
        p.mu = self.assumed_mu.unwrap_or(p.mu);
        p.nu = self.assumed_nu.unwrap_or(p.nu);
        p.validate()?;
        Ok(Some(p))
    }

    /// Curve parameters; defaults are the reference curve
    /// (`epsilon = 0.2`, `delta = 1e-6`, `mu = 100`, `nu = 0.99`).
    pub fn curve_params(&self) -> CurveParams {
        let r = CurveParams::reference();
        CurveParams {
            epsilon: self.epsilon.unwrap_or(r.epsilon),
            delta: self.delta.unwrap_or(r.delta),
            mu: self.mu.unwrap_or(r.mu),
            nu: self.nu.unwrap_or(r.nu),
        }
    }

    fn trials(&self) -> u64 {
        self.trials.unwrap_or(1)
    }
}

/// First line of every JSON-lines output.
#[derive(Debug, Clone, Serialize)]
pub struct MetaHeader {
    #[serde(rename = "type")]
    pub record_type: &'static str,
    pub command: &'static str,
    pub software: &'static str,
    pub version: &'static str,
    pub generator: &'static str,
    pub log_conventions: BTreeMap<&'static str, &'static str>,
    pub model: Option<ClickModel>,
    pub sampler: Sampler,
    pub backend: Backend,
    pub subcarrier_index_origin: usize,
    pub config: ExperimentConfig,
}

pub fn meta_header(command: &'static str, config: &ExperimentConfig, model: Option<ClickModel>) -> MetaHeader {
    let mut log_conventions: BTreeMap<_, _> = resources::log_conventions().into_iter().collect();
    log_conventions.insert("estimator_log_inv_delta", "natural log");
    MetaHeader {
        record_type: "meta",
        command,
        software: env!("CARGO_PKG_NAME"),
        version: crate::VERSION,
        generator: rng::GENERATOR_NAME,
        log_conventions,
        model,
        sampler: config.sampler,
        backend: config.backend,
        subcarrier_index_origin: SUBCARRIER_INDEX_ORIGIN,
        config: config.clone(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EqualityOutcome {
    /// `"EQUAL"` iff `e_hat <= threshold`.
    pub decision: &'static str,
    pub threshold: f64,
    pub inputs_equal: bool,
    pub hamming_distance: usize,
    pub correct: bool,
}

impl EqualityOutcome {
    pub fn says_equal(&self) -> bool {
        self.decision == "EQUAL"
    }
}

/// One protocol execution.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    #[serde(rename = "type")]
    pub record_type: &'static str,
    pub trial: u64,
    /// Seed handed to the sampler, `rng::sub_seed(config.seed, trial)`.
    pub seed: u64,
    pub e_hat: f64,
    pub true_distance_sq: f64,
    pub std_error: Option<f64>,
    pub repetitions: u64,
    pub s0: u64,
    pub s1: u64,
    pub raw_diff: i64,
    pub communication_time: u64,
    pub photon_budget: f64,
    pub model: ClickModel,
    pub generator: &'static str,
    pub params: ProtocolParams,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equality: Option<EqualityOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

fn read_vector(path: &Path) -> Result<UnitVector> {
    let text = fs::read_to_string(path)?;
    vectors::normalize(&vectors::parse_vector_text(&text)?)
}

fn read_bits(path: &Path) -> Result<BinaryString> {
    fs::read_to_string(path)?.parse()
}

/// The two simulate inputs: both files, or two seed-derived random vectors.
pub fn simulate_inputs(config: &ExperimentConfig) -> Result<(UnitVector, UnitVector)> {
    let (x, y) = match (&config.x_file, &config.y_file) {
        (Some(xf), Some(yf)) => (read_vector(xf)?, read_vector(yf)?),
        (None, None) => {
            let n = config.n.unwrap_or(1024);
            (
                vectors::random_unit_vector(n, rng::tagged_seed(config.seed, "input-x"))?,
                vectors::random_unit_vector(n, rng::tagged_seed(config.seed, "input-y"))?,
            )
        }
        _ => return Err(Error::InvalidParameter("x_file and y_file must be given together".into())),
    };
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if let Some(n) = config.n {
        if n != x.len() {
            return Err(Error::DimensionMismatch { left: x.len(), right: n });
        }
    }
    Ok((x, y))
}

fn options(config: &ExperimentConfig, params: &ProtocolParams, model: ClickModel) -> Result<ProtocolOptions> {
    Ok(ProtocolOptions {
        model,
        sampler: config.sampler,
        backend: config.backend,
        repetitions: config.repetitions,
        assumed: config.assumed_params(params)?,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    config: &ExperimentConfig,
    params: &ProtocolParams,
    opts: &ProtocolOptions,
    trial: u64,
    x: &UnitVector,
    y: &UnitVector,
    equality: Option<(f64, bool, usize)>,
) -> Result<RunRecord> {
    let seed = rng::sub_seed(config.seed, trial);
    let start = Instant::now();
    let run = multiplex::run_multiplexed_protocol_with(x, y, params, opts, seed)?;
    let elapsed = start.elapsed().as_secs_f64();
    let equality = equality.map(|(threshold, inputs_equal, hamming_distance)| {
        let says_equal = run.estimate.e_hat <= threshold;
        EqualityOutcome {
            decision: if says_equal { "EQUAL" } else { "UNEQUAL" },
            threshold,
            inputs_equal,
            hamming_distance,
            correct: says_equal == inputs_equal,
        }
    });
    Ok(RunRecord {
        record_type: "run",
        trial,
        seed,
        e_hat: run.estimate.e_hat,
        true_distance_sq: vectors::euclidean_distance_sq(x, y)?,
        std_error: run.estimate.std_error,
        repetitions: run.tally.repetitions,
        s0: run.tally.s0,
        s1: run.tally.s1,
        raw_diff: run.tally.raw_diff(),
        communication_time: run.communication_time,
        photon_budget: run.photon_budget,
        model: opts.model,
        generator: rng::GENERATOR_NAME,
        params: *params,
        config: config.clone(),
        equality,
        wall_time_s: config.record_timing.then_some(elapsed),
    })
}

pub const SIMULATE_DEFAULT_MODEL: ClickModel = ClickModel::Exact;
pub const EQUALITY_DEFAULT_MODEL: ClickModel = ClickModel::Linearized;

/// Runs `trials` independent protocol executions on the configured inputs.
/// Trial `i` samples with `rng::sub_seed(seed, i)`.
pub fn simulate(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let (x, y) = simulate_inputs(config)?;
    let params = config.protocol_params(x.len())?;
    multiplex::check_photon_budget(&params)?;
    let opts = options(config, &params, config.model.unwrap_or(SIMULATE_DEFAULT_MODEL))?;
    (0..config.trials())
        .into_par_iter()
        .map(|t| run_trial(config, &params, &opts, t, &x, &y, None))
        .collect()
}

/// The bit strings for one equality trial.
pub fn equality_inputs(config: &ExperimentConfig, trial: u64) -> Result<(BinaryString, BinaryString)> {
    let (s, t) = match (&config.x_bits, &config.y_bits) {
        (Some(xf), Some(yf)) => (read_bits(xf)?, read_bits(yf)?),
        (None, None) => {
            let n_bits = config.n_bits.unwrap_or(64);
            let base = rng::sub_seed(config.seed, trial);
            let s = BinaryString::random(n_bits, rng::tagged_seed(base, "bits-x"));
            let t = match config.pair.unwrap_or(PairMode::Equal) {
                PairMode::Equal => s.clone(),
                PairMode::Random => BinaryString::random(n_bits, rng::tagged_seed(base, "bits-y")),
                PairMode::Unequal => {
                    if n_bits == 0 {
                        return Err(Error::EmptyVector);
                    }
                    let mut draw = 0u64;
                    loop {
                        let t = BinaryString::random(n_bits, rng::tagged_seed(rng::sub_seed(base, draw), "bits-y"));
                        if t != s {
                            break t;
                        }
                        draw += 1;
                    }
                }
            };
            (s, t)
        }
        _ => return Err(Error::InvalidParameter("x_bits and y_bits must be given together".into())),
    };
    if s.is_empty() || t.is_empty() {
        return Err(Error::EmptyVector);
    }
    if s.len() != t.len() {
        return Err(Error::DimensionMismatch {
            left: s.len(),
            right: t.len(),
        });
    }
    Ok((s, t))
}

/// Decides Equality through the distance protocol: both strings are encoded
/// with the same pseudorandom linear code and the answer is EQUAL iff
/// `e_hat <= epsilon`.
pub fn equality(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let rate_inverse = config.rate_inverse.unwrap_or(vectors::DEFAULT_RATE_INVERSE);
    let (s0, _) = equality_inputs(config, 0)?;
    let code = vectors::LinearCode::new(s0.len(), rate_inverse, config.code_seed.unwrap_or(1))?;
    let m = code.codeword_len();
    if let Some(n) = config.n {
        if n != m {
            return Err(Error::DimensionMismatch { left: m, right: n });
        }
    }
    let params = config.protocol_params(m)?;
    multiplex::check_photon_budget(&params)?;
    let opts = options(config, &params, config.model.unwrap_or(EQUALITY_DEFAULT_MODEL))?;
    (0..config.trials())
        .into_par_iter()
        .map(|trial| {
            let (s, t) = equality_inputs(config, trial)?;
            let x = code.encode(&s)?;
            let y = code.encode(&t)?;
            let hd = s.hamming(&t)?;
            run_trial(config, &params, &opts, trial, &x, &y, Some((params.epsilon, s == t, hd)))
        })
        .collect()
}

/// The resource curves over an `n` grid.
#[derive(Debug, Clone)]
pub struct ResourceTable {
    pub params: CurveParams,
    pub k_rule: KRule,
    pub nu_band: Vec<f64>,
    pub rows: Vec<resources::ResourceReport>,
    /// `(T_qp, I_qp)` at each band visibility, row-major.
    pub band: Vec<Vec<(f64, f64)>>,
    pub crossover: resources::Crossover,
}

pub const DEFAULT_N_LIST: &str = "2^10..2^30";

pub fn resources_table(config: &ExperimentConfig) -> Result<ResourceTable> {
    let params = config.curve_params();
    params.prefactor()?;
    let k_rule = config.k_rule.unwrap_or_else(KRule::reference);
    let grid = match &config.n_list {
        Some(g) => g.clone(),
        None => parse_n_list(DEFAULT_N_LIST)?,
    };
    let mut rows = Vec::with_capacity(grid.len());
    let mut band = Vec::with_capacity(grid.len());
    for &n in &grid {
        let r = resources::report_for_rule(&params, &k_rule, n as f64)?;
        let mut extra = Vec::with_capacity(config.nu_band.len());
        for &nu in &config.nu_band {
            let q = resources::quantum_resources_at(&params.with_nu(nu), n as f64, r.k)?;
            extra.push((q.t_quantum, q.i_quantum));
        }
        rows.push(r);
        band.push(extra);
    }
    let crossover = resources::crossover_search_on(
        &params,
        |n| k_rule.channels(&params, n).unwrap_or(f64::NAN),
        &grid,
    )?;
    Ok(ResourceTable {
        params,
        k_rule,
        nu_band: config.nu_band.clone(),
        rows,
        band,
        crossover,
    })
}

fn opt_u64(v: Option<u64>) -> String {
    v.map_or_else(|| "none".to_string(), |n| n.to_string())
}

impl ResourceTable {
    pub fn to_csv(&self, model: Option<ClickModel>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# software: {} {}", env!("CARGO_PKG_NAME"), crate::VERSION);
        let _ = writeln!(out, "# generator: {}", rng::GENERATOR_NAME);
        for (name, base) in resources::log_conventions() {
            let _ = writeln!(out, "# log {name}: {base}");
        }
        let _ = writeln!(
            out,
            "# model: {} (curves are closed-form)",
            model.map_or_else(|| "none".to_string(), |m| m.to_string())
        );
        let _ = writeln!(out, "# subcarrier_index_origin: {SUBCARRIER_INDEX_ORIGIN}");
        let p = &self.params;
        let _ = writeln!(
            out,
            "# epsilon: {} delta: {} mu: {} nu: {} k_rule: {}",
            p.epsilon, p.delta, p.mu, p.nu, self.k_rule
        );
        let _ = writeln!(
            out,
            "# crossover_time_n: {} crossover_both_n: {}",
            opt_u64(self.crossover.n_time),
            opt_u64(self.crossover.n_both)
        );
        out.push_str("n,k,T_cl,T_cp,T_qp,I_qp");
        for nu in &self.nu_band {
            let _ = write!(out, ",T_qp@nu={nu},I_qp@nu={nu}");
        }
        out.push('\n');
        for (r, extra) in self.rows.iter().zip(&self.band) {
            let _ = write!(
                out,
                "{},{},{},{},{},{}",
                r.n, r.k, r.t_classical_lb, r.t_classical_best, r.t_quantum, r.i_quantum
            );
            for (t, i) in extra {
                let _ = write!(out, ",{t},{i}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OfdmCheck {
    #[serde(rename = "type")]
    pub record_type: &'static str,
    pub k: usize,
    pub trials: u64,
    /// Largest `|decoded - sent|` over all subcarriers and symbols.
    pub max_error: f64,
    /// Largest `|sum |E|^2 / k - sum |A|^2|` over all symbols.
    pub parseval_error: f64,
    pub within_tolerance: bool,
}

/// Encodes and decodes `trials` random symbols of `k` subcarriers with
/// amplitudes uniform in the unit square.
pub fn ofdm_round_trip(k: usize, trials: u64, seed: u64) -> Result<OfdmCheck> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let mut g = rng::keyed(rng::sub_seed(rng::tagged_seed(seed, "ofdm-check"), k as u64));
    let mut max_error = 0.0f64;
    let mut parseval_error = 0.0f64;
    for _ in 0..trials {
        let amps: Vec<Complex64> = (0..k)
            .map(|_| Complex64::new(g.random_range(-1.0..1.0), g.random_range(-1.0..1.0)))
            .collect();
        let symbol = multiplex::ofdm_encode(&amps)?;
        let decoded = multiplex::ofdm_decode_all(&symbol.time_samples)?;
        for (a, b) in amps.iter().zip(&decoded) {
            max_error = max_error.max((a - b).norm());
        }
        let sent: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let carried: f64 = symbol.time_samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / k as f64;
        parseval_error = parseval_error.max((sent - carried).abs());
    }
    Ok(OfdmCheck {
        record_type: "ofdm",
        k,
        trials,
        max_error,
        parseval_error,
        within_tolerance: max_error <= OFDM_ERROR_TOLERANCE && parseval_error <= PARSEVAL_TOLERANCE,
    })
}

pub const DEFAULT_K_LIST: &[usize] = &[1, 2, 4, 8, 16, 64];

pub fn ofdm_check(config: &ExperimentConfig) -> Result<Vec<OfdmCheck>> {
    let ks = config.k_list.clone().unwrap_or_else(|| DEFAULT_K_LIST.to_vec());
    let trials = config.trials.unwrap_or(100);
    ks.iter().map(|&k| ofdm_round_trip(k, trials, config.seed)).collect()
}

#[derive(Debug, Parser)]
#[command(name = "cohfp", version, about = "Coherent-state fingerprinting experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate ||x - y||^2 for vector inputs, one JSON record per trial.
    Simulate(CommandArgs),
    /// Decide Equality of bit strings through an error-correcting code.
    Equality(CommandArgs),
    /// Classical and quantum resource curves as CSV.
    Resources(CommandArgs),
    /// OFDM encode/decode round trips.
    OfdmCheck(CommandArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommandArgs {
    /// Flat `key = value` file, applied before the flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

impl CommandArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        for (key, value) in self.overrides.pairs() {
            cfg.set(key, value, None)?;
        }
        Ok(cfg)
    }
}

fn to_line<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Parse(e.to_string()))
}

fn json_lines<T: Serialize>(out: &mut dyn Write, header: &MetaHeader, records: &[T]) -> Result<()> {
    writeln!(out, "{}", to_line(header)?)?;
    for r in records {
        writeln!(out, "{}", to_line(r)?)?;
    }
    Ok(())
}

/// Renders the full output of one command. Nothing is written until every
/// trial has finished, so a failing run never leaves a partial file.
pub fn render(command: &Command, config: &ExperimentConfig) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match command {
        Command::Simulate(_) => {
            let records = simulate(config)?;
            let model = config.model.unwrap_or(SIMULATE_DEFAULT_MODEL);
            json_lines(&mut buf, &meta_header("simulate", config, Some(model)), &records)?;
        }
        Command::Equality(_) => {
            let records = equality(config)?;
            let model = config.model.unwrap_or(EQUALITY_DEFAULT_MODEL);
            json_lines(&mut buf, &meta_header("equality", config, Some(model)), &records)?;
        }
        Command::Resources(_) => {
            buf.extend_from_slice(resources_table(config)?.to_csv(config.model).as_bytes());
        }
        Command::OfdmCheck(_) => {
            let records = ofdm_check(config)?;
            json_lines(&mut buf, &meta_header("ofdm-check", config, config.model), &records)?;
        }
    }
    Ok(buf)
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let args = match &cli.command {
        Command::Simulate(a) | Command::Equality(a) | Command::Resources(a) | Command::OfdmCheck(a) => a,
    };
    let config = args.resolve()?;
    let bytes = render(&cli.command, &config)?;
    match &config.output {
        Some(path) => {
            let mut f = BufWriter::new(fs::File::create(path)?);
            f.write_all(&bytes)?;
            f.flush()?;
        }
        None => stdout.write_all(&bytes)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    exit_code: u8,
    message: String,
}

fn report(stderr: &mut dyn Write, kind: &str, code: u8, message: String) {
    let line = ErrorLine {
        error: kind,
        exit_code: code,
        message,
    };
    if let Ok(s) = serde_json::to_string(&line) {
        let _ = writeln!(stderr, "{s}");
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                let _ = write!(stdout, "{}", e.render());
                return EXIT_SUCCESS;
            }
            report(stderr, "config", EXIT_CONFIG, e.render().to_string().trim_end().to_string());
            return EXIT_CONFIG;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => EXIT_SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            let kind = match e.kind() {
                ErrorKind::Config => "config",
                ErrorKind::Physics => "physics",
                ErrorKind::Io => "io",
            };
            report(stderr, kind, code, e.to_string());
            code
        }
    }
}

/// Entry point of the `cohfp` binary.
pub fn main() -> ExitCode {
    let code = run(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_and_unknown_keys() {
        let cfg = ExperimentConfig::from_text("# comment\nmu = 3\nnu=0.9 # inline\nmodel = linearized\n").unwrap();
        assert_eq!(cfg.mu, Some(3.0));
        assert_eq!(cfg.nu, Some(0.9));
        assert_eq!(cfg.model, Some(ClickModel::Linearized));
        assert!(ExperimentConfig::from_text("colour = red").is_err());
        assert!(ExperimentConfig::from_text("mu 3").is_err());
        assert!(ExperimentConfig::from_text("mu = abc").is_err());
    }

    #[test]
    fn every_key_is_settable() {
        let samples = [
            ("mu", "1"), ("nu", "0.9"), ("p_dark", "0"), ("p_dark_d0", "0"), ("p_dark_d1", "0"),
            ("epsilon", "0.1"), ("delta", "0.1"), ("n", "8"), ("k", "2"), ("seed", "3"),
            ("trials", "2"), ("repetitions", "10"), ("model", "exact"), ("sampler", "slotwise"),
            ("backend", "ofdm"), ("x_file", "a"), ("y_file", "b"), ("x_bits", "c"), ("y_bits", "d"),
            ("n_bits", "4"), ("pair", "random"), ("rate_inverse", "4"), ("code_seed", "2"),
            ("assumed_mu", "1"), ("assumed_nu", "0.9"), ("k_rule", "const:2"), ("n_list", "4"),
            ("nu_band", "0.9"), ("k_list", "2"), ("output", "o"), ("record_timing", "true"),
        ];
        assert_eq!(samples.len(), CONFIG_KEYS.len());
        let mut cfg = ExperimentConfig::default();
        for (key, value) in samples {
            assert!(CONFIG_KEYS.contains(&key));
            cfg.set(key, value, None).unwrap();
        }
    }

    #[test]
    fn n_list_forms() {
        assert_eq!(parse_n_list("1024, 2^12").unwrap(), vec![1024, 4096]);
        assert_eq!(parse_n_list("2^3..2^5").unwrap(), vec![8, 16, 32]);
        assert_eq!(parse_n_list("2^10..2^30").unwrap().len(), 21);
        assert!(parse_n_list("3..8").is_err());
        assert!(parse_n_list("").is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text("x_file = x.txt\noutput = /tmp/o", Some(Path::new("/data"))).unwrap();
        assert_eq!(cfg.x_file, Some(PathBuf::from("/data/x.txt")));
        assert_eq!(cfg.output, Some(PathBuf::from("/tmp/o")));
    }

    #[test]
    fn ofdm_round_trip_is_exact_enough() {
        for k in [1, 2, 4, 8] {
            let c = ofdm_round_trip(k, 20, 5).unwrap();
            assert!(c.within_tolerance, "{c:?}");
        }
        assert_eq!(ofdm_round_trip(4, 10, 1).unwrap(), ofdm_round_trip(4, 10, 1).unwrap());
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(exit_code(&Error::PhotonBudget { budget: 2.0 }), EXIT_PHYSICS);
        assert_eq!(exit_code(&Error::Visibility(0.5)), EXIT_PHYSICS);
        assert_eq!(exit_code(&Error::Parse("x".into())), EXIT_CONFIG);
    }
}
