//! Type-class-enumeration exponent for general finite alphabets.
//!
//! Inner problem, for an auxiliary Y-marginal `w`:
//!
//! ```text
//! L(w,R,s) = min_q  s[D(q‖P_{X|Y}|w) + R] + (1−s)[R − H_w(q)]₊
//! ```
//!
//! For `s ≤ 1` the optimal conditional is a per-letter tilt `q_y ∝ P(·|y)^β`
//! with `β ∈ [s, 1]`, fixed by `H_w(q) = R` when the kink is active. For
//! `s > 1` the objective is the minimum of two smooth branches, each solved
//! by a tilt (`β = s` and `β = 1`).
//!
//! Middle problem:
//!
//! ```text
//! E1'(R,T,s) = min_w [D(w‖P_Y) + L(w,R,s) − Σ_y w(y) c_y(s)] − sT,
//! c_y(s) = ln Σ_x P^{1−s}(x|y)
//! ```
//!
//! Minimizing over `w` first turns each branch into a log-partition
//! function, so the middle minimum is available in closed form: for `s ≤ 1`
//! it is a concave maximization over a single multiplier `λ ∈ [0, 1]`, for
//! `s > 1` the smaller of two explicit expressions. Sums over `x` run over
//! the support of `P(·|y)`.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::exponent::{Argmax, ExponentResult};
use crate::optim::{bisect_increasing, golden_max, sup_over_s};
use crate::source::{kl_divergence, log_sum_exp, xlnx, ConditionalXgivenY, DistributionOverY, JointSource};

/// Largest supported |X| and |Y|.
pub const MAX_ALPHABET: usize = 6;
/// Branch values closer than this are reported as joint minimizers.
pub const TIE_TOLERANCE: f64 = 1e-7;

/// Minimizer of the inner problem.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerExponent {
    pub value: f64,
    pub conditional: ConditionalXgivenY,
    /// Tilt β with `q(x|y) ∝ P(x|y)^β`; 0 is the uniform conditional.
    pub tilt: f64,
}

/// A global minimizer (P_Y′, P_{X′|Y}) of the middle problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiddleMinimizer {
    pub py_prime: Vec<f64>,
    /// Rows indexed `[y][x]`.
    pub conditional: Vec<Vec<f64>>,
    pub tilt: f64,
}

fn check_source(src: &JointSource) -> Result<()> {
    if src.size_x() > MAX_ALPHABET || src.size_y() > MAX_ALPHABET {
        return domain(format!(
            "alphabets {}x{} exceed the supported {MAX_ALPHABET}x{MAX_ALPHABET}",
            src.size_x(),
            src.size_y()
        ));
    }
    Ok(())
}

fn check_params(rate: f64, s: f64) -> Result<()> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return domain(format!("rate R = {rate} must be finite and >= 0"));
    }
    if !(s >= 0.0 && s.is_finite()) {
        return domain(format!("s = {s} must be finite and >= 0"));
    }
    Ok(())
}

/// `ln P(x|y)` with `-inf` off the support.
fn log_rows(src: &JointSource) -> Vec<Vec<f64>> {
    src.cond_rows().iter().map(|row| row.iter().map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY }).collect()).collect()
}

/// `ln Σ_{x ∈ supp} P(x|y)^a`.
fn log_moment(ln_row: &[f64], a: f64) -> f64 {
    log_sum_exp(ln_row.iter().filter(|v| v.is_finite()).map(|&l| a * l))
}

/// `q(x) ∝ P(x|y)^β` on the support.
fn tilted(ln_row: &[f64], beta: f64) -> Vec<f64> {
    let z = log_moment(ln_row, beta);
    ln_row.iter().map(|&l| if l.is_finite() { (beta * l - z).exp() } else { 0.0 }).collect()
}

fn tilted_rows(ln_rows: &[Vec<f64>], beta: f64) -> Vec<Vec<f64>> {
    ln_rows.iter().map(|r| tilted(r, beta)).collect()
}

fn conditional_entropy(w: &[f64], q: &[Vec<f64>]) -> f64 {
    w.iter().zip(q).map(|(&wy, row)| -wy * row.iter().map(|&v| xlnx(v)).sum::<f64>()).sum()
}

fn conditional_divergence(w: &[f64], q: &[Vec<f64>], p: &[Vec<f64>]) -> f64 {
    let mut d = 0.0;
    for ((&wy, qrow), prow) in w.iter().zip(q).zip(p) {
        if wy == 0.0 {
            continue;
        }
        for (&qv, &pv) in qrow.iter().zip(prow) {
            if qv > 0.0 {
                if pv == 0.0 {
                    return f64::INFINITY;
                }
                d += wy * qv * (qv / pv).ln();
            }
        }
    }
    d
}

/// The inner objective at an arbitrary conditional `q` (rows `[y][x]`).
pub fn inner_objective(src: &JointSource, py_prime: &[f64], q: &[Vec<f64>], rate: f64, s: f64) -> f64 {
    let div = conditional_divergence(py_prime, q, src.cond_rows());
    let gap = rate - conditional_entropy(py_prime, q);
    let div_term = if s == 0.0 { 0.0 } else { s * (div + rate) };
    div_term + (1.0 - s) * gap.max(0.0)
}

/// L(P_Y′, R, s) with its minimizing conditional.
pub fn inner_l(src: &JointSource, py_prime: &DistributionOverY, rate: f64, s: f64) -> Result<InnerExponent> {
    check_source(src)?;
    check_params(rate, s)?;
    if py_prime.len() != src.size_y() {
        return domain(format!("P_Y' has {} entries, source has |Y| = {}", py_prime.len(), src.size_y()));
    }
    let w = py_prime.as_slice();
    let ln_rows = log_rows(src);
    let entropy_at = |beta: f64| conditional_entropy(w, &tilted_rows(&ln_rows, beta));
    let beta = if s == 0.0 {
        0.0
    } else if s > 1.0 {
        // min of s[D + R] (β = 1) and R − Σ w ln Σ P^s (β = s)
        let typical = s * rate;
        let small = rate - w.iter().zip(&ln_rows).map(|(&wy, r)| wy * log_moment(r, s)).sum::<f64>();
        if small < typical {
            s
        } else {
            1.0
        }
    } else if entropy_at(1.0) >= rate {
        1.0
    } else if entropy_at(s) <= rate {
        s
    } else {
        // H_w(q_β) decreases in β; solve H_w(q_β) = R
        bisect_increasing(|b| rate - entropy_at(b), s, 1.0, 1e-15)
    };
    let q = tilted_rows(&ln_rows, beta);
    let value = inner_objective(src, w, &q, rate, s);
    Ok(InnerExponent { value, conditional: ConditionalXgivenY::new(q)?, tilt: beta })
}

/// `D(w‖P_Y) + L(w,R,s) − Σ_y w(y) c_y(s) − sT`, the middle objective at `w`.
pub fn middle_objective(src: &JointSource, py_prime: &DistributionOverY, rate: f64, threshold: f64, s: f64) -> Result<f64> {
    let inner = inner_l(src, py_prime, rate, s)?;
    let ln_rows = log_rows(src);
    let d = kl_divergence(py_prime.as_slice(), src.py())?;
    let c: f64 = py_prime.as_slice().iter().zip(&ln_rows).map(|(&wy, r)| wy * log_moment(r, 1.0 - s)).sum();
    Ok(d + inner.value - c - s * threshold)
}

struct Middle {
    value: f64,
    minimizers: Vec<MiddleMinimizer>,
}

/// The middle minimum for fixed s (without the −sT term) and its minimizers.
fn middle_min(src: &JointSource, ln_rows: &[Vec<f64>], rate: f64, s: f64) -> Middle {
    let py = src.py();
    let c: Vec<f64> = ln_rows.iter().map(|r| log_moment(r, 1.0 - s)).collect();
    // value of -ln Σ_y P(y) exp(a_y) and the tilted marginal ∝ P(y) exp(a_y)
    let partition = |a: &[f64]| {
        let logs: Vec<f64> = py.iter().zip(a).map(|(&p, &ay)| if p > 0.0 { p.ln() + ay } else { f64::NEG_INFINITY }).collect();
        let z = log_sum_exp(logs.iter().copied());
        let w: Vec<f64> = logs.iter().map(|&l| (l - z).exp()).collect();
        (-z, w)
    };
    let make = |w: Vec<f64>, beta: f64| MiddleMinimizer { py_prime: w, conditional: tilted_rows(ln_rows, beta), tilt: beta };
    if s > 1.0 {
        let a_small: Vec<f64> = ln_rows.iter().zip(&c).map(|(r, cy)| log_moment(r, s) + cy).collect();
        let (small_part, w_small) = partition(&a_small);
        let (typ_part, w_typ) = partition(&c);
        let small = rate + small_part;
        let typical = s * rate + typ_part;
        let value = small.min(typical);
        let mut minimizers = Vec::new();
        if small - value <= TIE_TOLERANCE {
            minimizers.push(make(w_small, s));
        }
        if typical - value <= TIE_TOLERANCE {
            minimizers.push(make(w_typ, 1.0));
        }
        return Middle { value, minimizers };
    }
    // Φ(λ) = ρR − ln Σ_y P(y) exp(ρ ln Σ_x P^β(x|y) + c_y), ρ = s + λ(1−s), β = s/ρ
    let exponents = |lambda: f64| -> (f64, f64, Vec<f64>) {
        let rho = s + lambda * (1.0 - s);
        if rho <= 0.0 {
            return (0.0, 0.0, c.clone());
        }
        let beta = s / rho;
        let a = ln_rows.iter().zip(&c).map(|(r, cy)| rho * log_moment(r, beta) + cy).collect();
        (rho, beta, a)
    };
    let phi = |lambda: f64| {
        let (rho, _, a) = exponents(lambda);
        rho * rate + partition(&a).0
    };
    let (lambda, value) = if s == 1.0 { (0.0, phi(0.0)) } else { golden_max(phi, 0.0, 1.0, 1e-12) };
    let (_, beta, a) = exponents(lambda);
    let (_, w) = partition(&a);
    Middle { value, minimizers: vec![make(w, beta)] }
}

/// E1'(R,T,s) with every global minimizer of the middle problem.
pub fn e1_prime_general_s(src: &JointSource, rate: f64, threshold: f64, s: f64) -> Result<(f64, Vec<MiddleMinimizer>)> {
    check_source(src)?;
    check_params(rate, s)?;
    let m = middle_min(src, &log_rows(src), rate, s);
    Ok((m.value - s * threshold, m.minimizers))
}

/// E1'(R,T) = sup_{s ≥ 0} E1'(R,T,s).
pub fn e1_prime_general(src: &JointSource, rate: f64, threshold: f64) -> Result<ExponentResult> {
    check_source(src)?;
    check_params(rate, 0.0)?;
    let ln_rows = log_rows(src);
    let sup = sup_over_s(|s| middle_min(src, &ln_rows, rate, s).value - s * threshold);
    let minimizers = if sup.diverged { Vec::new() } else { middle_min(src, &ln_rows, rate, sup.s).minimizers };
    Ok(ExponentResult {
        value: sup.value,
        argmax: Argmax::General { s: sup.s, minimizers },
        diverged: sup.diverged,
        trace: None,
    })
}
