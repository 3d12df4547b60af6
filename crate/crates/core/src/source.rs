//! Memoryless joint sources and the information measures built on them.
//!
//! All quantities are in nats. Distributions are validated at construction
//! and never renormalized: a pmf that does not sum to one is rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// `x ln x` with the convention `0 ln 0 = 0`.
#[inline]
pub(crate) fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Binary entropy without range checks; callers guarantee `d` in [0, 1].
#[inline]
pub(crate) fn h2(d: f64) -> f64 {
    -xlnx(d) - xlnx(1.0 - d)
}

/// `p^a` restricted to the support: zero-probability letters contribute 0
/// for every exponent, including a <= 0.
#[inline]
pub(crate) fn pow_supp(p: f64, a: f64) -> f64 {
    if p > 0.0 {
        p.powf(a)
    } else {
        0.0
    }
}

/// `ln sum_i exp(a_i)`, tolerant of `-inf` entries.
pub(crate) fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + v.iter().map(|a| (a - m).exp()).sum::<f64>().ln()
}

fn check_distribution(what: &str, p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidSource(format!("{what} is empty")));
    }
    for (i, &v) in p.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidSource(format!("{what}[{i}] = {v} is not a probability")));
        }
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidSource(format!("{what} sums to {total}, expected 1")));
    }
    Ok(())
}

/// A probability vector over the Y alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionOverY(Vec<f64>);

impl DistributionOverY {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        check_distribution("distribution over Y", &p)?;
        Ok(Self(p))
    }

    pub fn uniform(size: usize) -> Self {
        Self(vec![1.0 / size as f64; size])
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
}

/// Stochastic matrix P(x|y), stored one row per y symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalXgivenY {
    rows: Vec<Vec<f64>>,
}

impl ConditionalXgivenY {
    /// Builds a conditional from rows indexed by y; each row must be a distribution over X.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        for (y, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidSource(format!(
                    "conditional row {y} has {} entries, expected {width}",
                    row.len()
                )));
            }
            check_distribution(&format!("conditional row y={y}"), row)?;
        }
        Ok(Self { rows })
    }

    /// P(·|y).
    pub fn row(&self, y: usize) -> &[f64] {
        &self.rows[y]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[y][x]
    }
}

/// Bit-for-bit layout of the JSON source file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceSpec {
    pub alphabet_x: Vec<String>,
    pub alphabet_y: Vec<String>,
    pub pmf: Vec<Vec<f64>>,
}

/// Joint pmf P(x,y) of a memoryless source pair, rows indexed by x.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSource {
    alphabet_x: Vec<String>,
    alphabet_y: Vec<String>,
    pmf: Vec<Vec<f64>>,
    py: Vec<f64>,
    px: Vec<f64>,
    // cond[y][x]
    cond: Vec<Vec<f64>>,
}

impl JointSource {
    pub fn new(alphabet_x: Vec<String>, alphabet_y: Vec<String>, pmf: Vec<Vec<f64>>) -> Result<Self> {
        if alphabet_x.is_empty() || alphabet_y.is_empty() {
            return Err(Error::InvalidSource("alphabets must be nonempty".into()));
        }
        if pmf.len() != alphabet_x.len() {
            return Err(Error::InvalidSource(format!(
                "pmf has {} rows but alphabet_x has {} symbols",
                pmf.len(),
                alphabet_x.len()
            )));
        }
        let mut total = 0.0;
        for (i, row) in pmf.iter().enumerate() {
            if row.len() != alphabet_y.len() {
                return Err(Error::InvalidSource(format!(
                    "pmf row {i} has {} entries but alphabet_y has {} symbols",
                    row.len(),
                    alphabet_y.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidSource(format!("pmf[{i}][{j}] = {v} is not a probability")));
                }
                total += v;
            }
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidSource(format!("pmf sums to {total}, expected 1")));
        }
        let px: Vec<f64> = pmf.iter().map(|row| row.iter().sum()).collect();
        if let Some(i) = px.iter().position(|&v| v <= 0.0) {
            return Err(Error::InvalidSource(format!(
                "pmf row {i} (x = {}) is all zero",
                alphabet_x[i]
            )));
        }
        let cond = conditional_rows(&pmf, &alphabet_y)?;
        let py = (0..alphabet_y.len()).map(|j| pmf.iter().map(|r| r[j]).sum()).collect();
        Ok(Self { alphabet_x, alphabet_y, pmf, py, px, cond })
    }

    /// Source with alphabets labelled "0", "1", ...
    pub fn from_pmf(pmf: Vec<Vec<f64>>) -> Result<Self> {
        let nx = pmf.len();
        let ny = pmf.first().map(Vec::len).unwrap_or(0);
        Self::new(labels(nx), labels(ny), pmf)
    }

    /// Doubly symmetric binary pair with crossover `p`.
    pub fn bss(p: f64) -> Result<Self> {
        Ok(BinarySymmetricPair::new(p)?.to_joint())
    }

    /// `k`-ary symmetric pair: Y uniform, X = Y with probability 1 - p,
    /// otherwise uniform over the other k - 1 letters.
    pub fn symmetric(k: usize, p: f64) -> Result<Self> {
        if k < 2 {
            return domain(format!("alphabet size {k} must be at least 2"));
        }
        if !(p > 0.0 && p < 1.0) {
            return domain(format!("crossover {p} must lie in (0, 1)"));
        }
        let kf = k as f64;
        let pmf = (0..k)
            .map(|x| {
                (0..k)
                    .map(|y| if x == y { (1.0 - p) / kf } else { p / (kf * (kf - 1.0)) })
                    .collect()
            })
            .collect();
        Self::from_pmf(pmf)
    }

    pub fn from_spec(spec: SourceSpec) -> Result<Self> {
        Self::new(spec.alphabet_x, spec.alphabet_y, spec.pmf)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: SourceSpec = serde_json::from_str(text)?;
        Self::from_spec(spec)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_spec(&self) -> SourceSpec {
        SourceSpec {
            alphabet_x: self.alphabet_x.clone(),
            alphabet_y: self.alphabet_y.clone(),
            pmf: self.pmf.clone(),
        }
    }

    pub fn alphabet_x(&self) -> &[String] {
        &self.alphabet_x
    }

    pub fn alphabet_y(&self) -> &[String] {
        &self.alphabet_y
    }

    pub fn size_x(&self) -> usize {
        self.alphabet_x.len()
    }

    pub fn size_y(&self) -> usize {
        self.alphabet_y.len()
    }

    /// Joint pmf, rows indexed by x.
    pub fn pmf(&self) -> &[Vec<f64>] {
        &self.pmf
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.pmf[x][y]
    }

    pub fn marginal_x(&self) -> &[f64] {
        &self.px
    }

    /// P(y) = sum_x P(x,y).
    pub fn marginal_y(&self) -> DistributionOverY {
        DistributionOverY(self.py.clone())
    }

    pub(crate) fn py(&self) -> &[f64] {
        &self.py
    }

    /// P(x|y) rows, indexed `[y][x]`.
    pub(crate) fn cond_rows(&self) -> &[Vec<f64>] {
        &self.cond
    }

    pub fn conditional_x_given_y(&self) -> Result<ConditionalXgivenY> {
        conditional_x_given_y(&self.pmf, &self.alphabet_y)
    }

    /// H(X|Y) in nats.
    pub fn conditional_entropy(&self) -> f64 {
        -self
            .pmf
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().enumerate().map(move |(y, &p)| (x, y, p)))
            .map(|(x, y, p)| if p > 0.0 { p * self.cond[y][x].ln() } else { 0.0 })
            .sum::<f64>()
    }

    /// True when the source is a doubly symmetric binary pair; returns its crossover.
    pub fn as_bss(&self) -> Option<f64> {
        if self.size_x() != 2 || self.size_y() != 2 {
            return None;
        }
        let (a, b) = (self.pmf[0][0], self.pmf[0][1]);
        let sym = (self.pmf[1][1] - a).abs() < 1e-12 && (self.pmf[1][0] - b).abs() < 1e-12;
        (sym && b <= a).then_some(2.0 * b)
    }
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn conditional_rows(pmf: &[Vec<f64>], alphabet_y: &[String]) -> Result<Vec<Vec<f64>>> {
    (0..alphabet_y.len())
        .map(|y| {
            let py: f64 = pmf.iter().map(|r| r[y]).sum();
            if py <= 0.0 {
                return Err(Error::ZeroMarginal { symbol: alphabet_y[y].clone() });
            }
            Ok(pmf.iter().map(|r| r[y] / py).collect())
        })
        .collect()
}

/// P(x|y) = P(x,y)/P(y) for a raw pmf matrix (rows indexed by x).
pub fn conditional_x_given_y(pmf: &[Vec<f64>], alphabet_y: &[String]) -> Result<ConditionalXgivenY> {
    Ok(ConditionalXgivenY { rows: conditional_rows(pmf, alphabet_y)? })
}

/// Correlated binary symmetric sources: P(x,y) = (1-p)/2 on the diagonal, p/2 off it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinarySymmetricPair {
    p: f64,
}

impl BinarySymmetricPair {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 0.5) {
            return domain(format!("crossover probability {p} outside (0, 1/2]"));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn to_joint(&self) -> JointSource {
        let (d, o) = ((1.0 - self.p) / 2.0, self.p / 2.0);
        JointSource::from_pmf(vec![vec![d, o], vec![o, d]]).expect("valid BSS pmf")
    }
}

/// Shannon entropy of a probability vector, nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&v| xlnx(v)).sum::<f64>()
}

/// D(P||Q) in nats; `+inf` when P is not absolutely continuous w.r.t. Q.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return domain(format!("dimension mismatch: {} vs {}", p.len(), q.len()));
    }
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            d += a * (a / b).ln();
        }
    }
    Ok(d.max(0.0))
}

/// h(δ) = -δ ln δ - (1-δ) ln(1-δ).
pub fn binary_entropy(delta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return domain(format!("binary entropy argument {delta} outside [0, 1]"));
    }
    Ok(h2(delta))
}

/// Inverse of the binary entropy restricted to [0, 1/2], by bisection.
pub fn binary_entropy_inverse(rate: f64) -> Result<f64> {
    let ln2 = std::f64::consts::LN_2;
    if !(0.0..=ln2 + 1e-15).contains(&rate) {
        return domain(format!("rate {rate} outside [0, ln 2]"));
    }
    Ok(h2_inverse(rate.min(ln2)))
}

pub(crate) fn h2_inverse(rate: f64) -> f64 {
    if rate <= 0.0 {
        return 0.0;
    }
    if rate >= std::f64::consts::LN_2 {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if h2(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
