//! Forney/Gallager-style random-binning exponents for the erasure/list decoder.
//!
//! The objective `E0(ρ,s) + ρR − sT` is jointly concave in (ρ, s) on the
//! triangle `0 ≤ s ≤ ρ ≤ 1`. It is maximized by a 1/64 grid on the triangle
//! followed by cyclic golden-section refinement in the coordinates
//! (ρ, t = s/ρ), which turn the triangle into the unit square.

use crate::error::{domain, Result};
use crate::exponent::{Argmax, ExponentResult};
use crate::optim::{golden_min, refine_box, OptimizerTrace};
use crate::source::{pow_supp, JointSource};

/// Grid spacing over the (s, ρ) triangle.
pub const GRID_STEP: f64 = 1.0 / 64.0;
/// Parameter tolerance of the golden-section refinement.
pub const REFINE_TOL: f64 = 1e-8;
/// ρ at which ρ → 0 limits are evaluated.
pub const RHO_LIMIT: f64 = 1e-6;
/// Second ρ used for the Richardson check of ρ → 0 limits.
pub const RHO_LIMIT_CHECK: f64 = 1e-5;

const MAX_SWEEPS: usize = 400;

/// E0(ρ,s) = −ln Σ_y P(y) Σ_x P^{1−s}(x|y) (Σ_x' P^{s/ρ}(x'|y))^ρ.
pub fn e0(src: &JointSource, rho: f64, s: f64) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return domain(format!("rho = {rho} outside (0, 1]"));
    }
    if !(0.0..=rho).contains(&s) {
        return domain(format!("s = {s} outside [0, rho = {rho}]"));
    }
    Ok(e0_unchecked(src, rho, s))
}

/// E0 without parameter checks; ρ = 0 returns the limit value 0.
pub(crate) fn e0_unchecked(src: &JointSource, rho: f64, s: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let ratio = (s / rho).min(1.0);
    let total: f64 = src
        .cond_rows()
        .iter()
        .zip(src.py())
        .map(|(row, &py)| {
            let inner: f64 = row.iter().map(|&p| pow_supp(p, ratio)).sum();
            let outer: f64 = row.iter().map(|&p| pow_supp(p, 1.0 - s)).sum();
            py * outer * inner.powf(rho)
        })
        .sum();
    -total.ln()
}

fn objective(src: &JointSource, rate: f64, threshold: f64, rho: f64, s: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    e0_unchecked(src, rho, s) + rho * rate - s * threshold
}

/// Maximizes `f(ρ, s)` over the triangle; ties go to smaller s, then smaller ρ.
pub(crate) fn maximize_triangle(
    mut f: impl FnMut(f64, f64) -> f64,
    grid_step: f64,
    extra_start: Option<(f64, f64)>,
) -> ((f64, f64), f64, OptimizerTrace) {
    let n = (1.0 / grid_step).round() as usize;
    let mut best = ((0.0, 0.0), f64::NEG_INFINITY);
    let mut points = 0;
    for i in 0..=n {
        let s = i as f64 / n as f64;
        for j in i..=n {
            let rho = j as f64 / n as f64;
            let v = f(rho, s);
            points += 1;
            if v > best.1 {
                best = ((rho, s), v);
            }
        }
    }
    if let Some((rho, s)) = extra_start {
        let v = f(rho, s);
        if v > best.1 {
            best = ((rho, s), v);
        }
    }
    let ((rho_g, s_g), grid_value) = best;
    let t_g = if rho_g > 0.0 { s_g / rho_g } else { 0.0 };
    let mut evals = 0usize;
    let mut g = |rho: f64, t: f64| {
        evals += 1;
        f(rho, t * rho)
    };
    let ((rho, t), value, sweeps) =
        refine_box(&mut g, (rho_g, t_g), [(0.0, 1.0), (0.0, 1.0)], REFINE_TOL, MAX_SWEEPS);
    let trace = OptimizerTrace {
        grid_points: points,
        grid_best: (rho_g, s_g),
        grid_value,
        sweeps,
        evaluations: evals,
        richardson: None,
    };
    if value > grid_value {
        ((rho, t * rho), value, trace)
    } else {
        ((rho_g, s_g), grid_value, trace)
    }
}

/// E1(R,T) = sup_{0 ≤ s ≤ ρ ≤ 1} [E0(ρ,s) + ρR − sT].
///
/// The raw supremum is reported; it is never below the value 0 at ρ = s = 0.
pub fn e1(src: &JointSource, rate: f64, threshold: f64) -> ExponentResult {
    let ((rho, s), value, trace) =
        maximize_triangle(|rho, s| objective(src, rate, threshold, rho, s), GRID_STEP, None);
    ExponentResult { value, argmax: Argmax::RhoS { rho, s }, diverged: false, trace: Some(trace) }
}

/// E2(R,T) = E1(R,T) + T, with the optimizer of E1.
pub fn e2(src: &JointSource, rate: f64, threshold: f64) -> ExponentResult {
    e1(src, rate, threshold).shifted(threshold)
}

/// Minimizes `q(ρ, t)` in the limit ρ → 0.
///
/// `E0(ρ, tρ)/ρ` is nonincreasing in ρ (E0 is jointly concave and vanishes
/// at the origin), so both R_min and T_max are attained as ρ → 0. `t` is
/// optimized at ρ = 1e-6 by a 1/64 grid and golden section, and the limit is
/// Richardson-extrapolated from the values at 1e-6 and 1e-5.
fn limit_min(mut q: impl FnMut(f64, f64) -> f64, t_lo: f64) -> (f64, f64, OptimizerTrace) {
    let n = (1.0 / GRID_STEP).round() as usize;
    let ts: Vec<f64> = (0..=n).map(|i| (i as f64 / n as f64).max(t_lo)).collect();
    let (k, grid_value) = ts
        .iter()
        .map(|&t| q(RHO_LIMIT, t))
        .enumerate()
        .fold((0, f64::INFINITY), |(kb, vb), (k, v)| if v < vb { (k, v) } else { (kb, vb) });
    let lo = ts[k.saturating_sub(1)];
    let hi = ts[(k + 1).min(n)];
    let (mut t, mut v1) = golden_min(|t| q(RHO_LIMIT, t), lo, hi, 1e-12);
    if grid_value < v1 {
        (t, v1) = (ts[k], grid_value);
    }
    let v2 = q(RHO_LIMIT_CHECK, t);
    let trace = OptimizerTrace {
        grid_points: ts.len(),
        grid_best: (RHO_LIMIT, ts[k]),
        grid_value,
        sweeps: 0,
        evaluations: ts.len() + 1,
        richardson: Some((v1, v2)),
    };
    (v1 + (v1 - v2) * RHO_LIMIT / (RHO_LIMIT_CHECK - RHO_LIMIT), t, trace)
}

/// R_min(T) = inf_{0 ≤ s ≤ ρ ≤ 1, ρ > 0} (sT − E0(ρ,s))/ρ.
pub fn r_min(src: &JointSource, threshold: f64) -> f64 {
    r_min_detailed(src, threshold).0
}

/// R_min(T) with the optimizing t = s/ρ and the optimizer trace.
pub fn r_min_detailed(src: &JointSource, threshold: f64) -> (f64, f64, OptimizerTrace) {
    limit_min(|rho, t| t * threshold - e0_unchecked(src, rho, t * rho) / rho, 0.0)
}

/// T_max(R) = sup_{0 ≤ s ≤ ρ ≤ 1, s > 0} (ρR + E0(ρ,s))/s.
///
/// Infinite for R > ln|X|, where E1(R,T) > 0 for every T.
pub fn t_max(src: &JointSource, rate: f64) -> f64 {
    if rate > (src.size_x() as f64).ln() + 1e-12 {
        return f64::INFINITY;
    }
    let (v, _, _) = limit_min(|rho, t| -(rho * rate + e0_unchecked(src, rho, t * rho)) / (t * rho), 1e-6);
    -v
}
