//! Input vectors, exact distance oracles, and the code that turns Equality
//! instances into Euclidean-distance instances.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;

/// Tolerance on `sum x_j^2 = 1`.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Default code expansion factor `m / n_bits` for the Equality reduction.
pub const DEFAULT_RATE_INVERSE: usize = 16;

/// A real vector with unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Wraps already-normalized components, checking the norm.
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyVector);
        }
        let norm_sq = norm_sq(&components);
        if !((norm_sq - 1.0).abs() <= UNIT_TOLERANCE) {
            return Err(Error::NotUnit { norm_sq });
        }
        Ok(UnitVector(components))
    }

    /// Standard basis vector `e_index` in `R^n`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::InvalidParameter(format!(
                "basis index {index} out of range for n = {n}"
            )));
        }
        let mut v = vec![0.0; n];
        v[index] = 1.0;
        Ok(UnitVector(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &UnitVector) -> Result<f64> {
        check_dims(self, other)?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }
}

impl std::ops::Neg for &UnitVector {
    type Output = UnitVector;

    fn neg(self) -> UnitVector {
        UnitVector(self.0.iter().map(|v| -v).collect())
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn check_dims(x: &UnitVector, y: &UnitVector) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

/// Scales `v` to unit length.
pub fn normalize(v: &[f64]) -> Result<UnitVector> {
    if v.is_empty() {
        return Err(Error::EmptyVector);
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("vector has non-finite entries".into()));
    }
    let norm = norm_sq(v).sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(UnitVector(v.iter().map(|x| x / norm).collect()))
}

/// `||x - y||^2`, the quantity the protocol estimates.
pub fn euclidean_distance_sq(x: &UnitVector, y: &UnitVector) -> Result<f64> {
    check_dims(x, y)?;
    Ok(x.0
        .iter()
        .zip(&y.0)
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// `||x + y||^2`.
pub fn sum_norm_sq(x: &UnitVector, y: &UnitVector) -> Result<f64> {
    check_dims(x, y)?;
    Ok(x.0
        .iter()
        .zip(&y.0)
        .map(|(a, b)| (a + b) * (a + b))
        .sum())
}

/// `<x, y> = 1 - d/2` for unit vectors at squared distance `d`.
pub fn inner_product_from_distance(d_sq: f64) -> Result<f64> {
    if !(0.0..=4.0).contains(&d_sq) {
        return Err(Error::out_of_range("squared distance", d_sq, 0.0, 4.0));
    }
    Ok(1.0 - d_sq / 2.0)
}

/// Uniformly distributed point on the sphere in `R^n` (normalized Gaussians).
pub fn random_unit_vector(n: usize, seed: u64) -> Result<UnitVector> {
    if n == 0 {
        return Err(Error::EmptyVector);
    }
    let mut rng = rng::keyed(rng::tagged_seed(seed, "unit-vector"));
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        if norm_sq(&v) > 0.0 {
            return normalize(&v);
        }
    }
}

/// Parses the plain-text vector format: one decimal number per line.
///
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_vector_text(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}: {l:?}", i + 1)))
        })
        .collect()
}

/// A string of bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryString(Vec<bool>);

impl BinaryString {
    pub fn new(bits: Vec<bool>) -> Self {
        BinaryString(bits)
    }

    pub fn zeros(len: usize) -> Self {
        BinaryString(vec![false; len])
    }

    /// Low `len` bits of `value`, least significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        BinaryString((0..len).map(|i| i < 64 && (value >> i) & 1 == 1).collect())
    }

    pub fn random(len: usize, seed: u64) -> Self {
        let mut rng = rng::keyed(rng::tagged_seed(seed, "binary-string"));
        BinaryString((0..len).map(|_| rng.random::<bool>()).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn xor(&self, other: &BinaryString) -> Result<BinaryString> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(BinaryString(
            self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect(),
        ))
    }

    pub fn hamming(&self, other: &BinaryString) -> Result<usize> {
        Ok(self.xor(other)?.weight())
    }

    fn packed(&self) -> Vec<u64> {
        let mut words = vec![0u64; self.len().div_ceil(64)];
        for (i, &b) in self.0.iter().enumerate() {
            if b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        words
    }
}

impl FromStr for BinaryString {
    type Err = Error;

    /// Accepts `0`/`1` characters; whitespace (including newlines) and
    /// `#` comment lines are ignored, so both one-bit-per-line files and a
    /// single line of bits parse the same way.
    fn from_str(s: &str) -> Result<Self> {
        let mut bits = Vec::new();
        for line in s.lines().map(str::trim) {
            if line.starts_with('#') {
                continue;
            }
            for c in line.chars().filter(|c| !c.is_whitespace()) {
                match c {
                    '0' => bits.push(false),
                    '1' => bits.push(true),
                    other => return Err(Error::Parse(format!("unexpected character {other:?} in bit string"))),
                }
            }
        }
        Ok(BinaryString(bits))
    }
}

impl fmt::Display for BinaryString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A pseudorandom systematic binary linear code `[m, n_bits]` with
/// `m = rate_inverse * n_bits`.
///
/// The first `n_bits` codeword positions repeat the message; the remaining
/// ones are parities over seed-derived random subsets of message bits.
#[derive(Debug, Clone)]
pub struct LinearCode {
    n_bits: usize,
    len: usize,
    // One packed message mask per codeword position.
    columns: Vec<Vec<u64>>,
}

impl LinearCode {
    pub fn new(n_bits: usize, rate_inverse: usize, seed: u64) -> Result<Self> {
        if n_bits == 0 {
            return Err(Error::EmptyVector);
        }
        if rate_inverse < 2 {
            return Err(Error::InvalidParameter(format!(
                "rate_inverse must be >= 2, got {rate_inverse}"
            )));
        }
        let len = n_bits
            .checked_mul(rate_inverse)
            .ok_or_else(|| Error::InvalidParameter("code length overflows".into()))?;
        let words = n_bits.div_ceil(64);
        let tail_mask = if n_bits.is_multiple_of(64) {
            u64::MAX
        } else {
            (1u64 << (n_bits % 64)) - 1
        };

        let mut rng = rng::keyed(rng::tagged_seed(seed, "ecc-generator"));
        let mut columns = Vec::with_capacity(len);
        for i in 0..n_bits {
            let mut col = vec![0u64; words];
            col[i / 64] = 1 << (i % 64);
            columns.push(col);
        }
        for _ in n_bits..len {
            let mut col: Vec<u64> = (0..words).map(|_| rng.next_u64()).collect();
            if let Some(last) = col.last_mut() {
                *last &= tail_mask;
            }
            columns.push(col);
        }
        Ok(LinearCode {
            n_bits,
            len,
            columns,
        })
    }

    pub fn message_len(&self) -> usize {
        self.n_bits
    }

    pub fn codeword_len(&self) -> usize {
        self.len
    }

    /// Row `message_bit` of the generator matrix.
    pub fn generator_row(&self, message_bit: usize) -> Vec<bool> {
        self.columns
            .iter()
            .map(|col| (col[message_bit / 64] >> (message_bit % 64)) & 1 == 1)
            .collect()
    }

    pub fn codeword(&self, message: &BinaryString) -> Result<BinaryString> {
        if message.len() != self.n_bits {
            return Err(Error::DimensionMismatch {
                left: message.len(),
                right: self.n_bits,
            });
        }
        let packed = message.packed();
        Ok(BinaryString(
            self.columns
                .iter()
                .map(|col| {
                    col.iter()
                        .zip(&packed)
                        .map(|(c, m)| (c & m).count_ones())
                        .sum::<u32>()
                        % 2
                        == 1
                })
                .collect(),
        ))
    }

    /// Codeword mapped to amplitudes `(-1)^b / sqrt(m)`.
    pub fn encode(&self, message: &BinaryString) -> Result<UnitVector> {
        let word = self.codeword(message)?;
        let amp = 1.0 / (self.len as f64).sqrt();
        Ok(UnitVector(
            word.0.iter().map(|&b| if b { -amp } else { amp }).collect(),
        ))
    }
}

/// Encodes `s` with the code determined by `(s.len(), rate_inverse, seed)`.
pub fn ecc_encode(s: &BinaryString, rate_inverse: usize, seed: u64) -> Result<UnitVector> {
    if s.is_empty() {
        return Err(Error::EmptyVector);
    }
    LinearCode::new(s.len(), rate_inverse, seed)?.encode(s)
}
