//! Variable-rate binning with an additive rate function `R(x) = (1/n) Σ r(x_i)`.
//!
//! Convention: `Ẽ0(ρ,s; r)` carries the rate inside the exponent, so a
//! constant assignment `r ≡ R` gives `Ẽ0 = E0(ρ,s) + ρR` and `Ẽ1` reduces to
//! the fixed-rate `E1`. At ρ = 1 the optimal assignment is water-filling,
//! `r*(x) = [ln(Q(x)/P(x)) + μ]₊`, and with interior rates
//! `Ẽ0(1,s) = E0(1,s) + R + D(P‖Q)`: the gain over fixed rate is `D(P‖Q)`.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::exponent::{Argmax, ExponentResult};
use crate::gallager::{e1, maximize_triangle, GRID_STEP};
use crate::optim::bisect_increasing;
use crate::source::{kl_divergence, pow_supp, JointSource};

/// Iteration cap of the projected-gradient solver used for ρ < 1.
pub const PG_ITERATIONS: usize = 200;
/// Step tolerance of the projected-gradient solver.
pub const PG_TOLERANCE: f64 = 1e-8;

/// Per-letter rates r(x), in nats, indexed like the X alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateAssignment {
    pub rates: Vec<f64>,
    pub mu: f64,
    pub mean_rate: f64,
    /// The unclipped solution `R + D(P‖Q) + ln(Q/P)` was already positive.
    pub interior: bool,
}

/// F(x) and Q(x) = F(x)/Σ F.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FWeights {
    pub f: Vec<f64>,
    pub q: Vec<f64>,
}

/// F(x) = Σ_y P(y) P^s(x|y) Σ_x' P^{1−s}(x'|y).
pub fn f_weights(src: &JointSource, s: f64) -> FWeights {
    let mut f = vec![0.0; src.size_x()];
    for (row, &py) in src.cond_rows().iter().zip(src.py()) {
        let tail: f64 = row.iter().map(|&p| pow_supp(p, 1.0 - s)).sum();
        for (fx, &p) in f.iter_mut().zip(row) {
            *fx += py * pow_supp(p, s) * tail;
        }
    }
    let total: f64 = f.iter().sum();
    let q = f.iter().map(|v| v / total).collect();
    FWeights { f, q }
}

/// D(P‖Q) for the X-marginal P and Q from `f_weights`; the ρ = 1 gain.
pub fn rate_improvement(src: &JointSource, s: f64) -> f64 {
    kl_divergence(src.marginal_x(), &f_weights(src, s).q).unwrap_or(f64::INFINITY)
}

/// Water-filling rates maximizing Ẽ0(1,s) under Σ P(x) r(x) = R, r ≥ 0.
pub fn optimal_rates(src: &JointSource, s: f64, rate: f64) -> Result<RateAssignment> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InfeasibleRate(rate));
    }
    if !(0.0..=1.0).contains(&s) {
        return domain(format!("s = {s} outside [0, 1]"));
    }
    let px = src.marginal_x();
    let log_ratio: Vec<f64> = f_weights(src, s).q.iter().zip(px).map(|(q, p)| (q / p).ln()).collect();
    let divergence: f64 = -px.iter().zip(&log_ratio).map(|(p, l)| p * l).sum::<f64>();
    let mu_interior = rate + divergence;
    if log_ratio.iter().all(|l| l + mu_interior > 0.0) {
        let rates = log_ratio.iter().map(|l| l + mu_interior).collect();
        return Ok(RateAssignment { rates, mu: mu_interior, mean_rate: rate, interior: true });
    }
    let max_lr = log_ratio.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_lr = log_ratio.iter().copied().fold(f64::INFINITY, f64::min);
    let residual = |mu: f64| px.iter().zip(&log_ratio).map(|(p, l)| p * (l + mu).max(0.0)).sum::<f64>() - rate;
    let mu = bisect_increasing(residual, -max_lr, rate - min_lr, 1e-15);
    // exact solve on the active set found by bisection
    let active: Vec<bool> = log_ratio.iter().map(|l| l + mu > 0.0).collect();
    let (mass, weighted) = px
        .iter()
        .zip(&log_ratio)
        .zip(&active)
        .filter(|(_, &a)| a)
        .fold((0.0, 0.0), |(m, w), ((p, l), _)| (m + p, w + p * l));
    let exact = (rate - weighted) / mass;
    let consistent = log_ratio.iter().zip(&active).all(|(l, &a)| (l + exact > 0.0) == a || (l + exact).abs() < 1e-12);
    let mu = if consistent { exact } else { mu };
    let rates: Vec<f64> = log_ratio.iter().map(|l| (l + mu).max(0.0)).collect();
    let mean_rate = px.iter().zip(&rates).map(|(p, r)| p * r).sum();
    Ok(RateAssignment { rates, mu, mean_rate, interior: false })
}

/// Ẽ0(ρ,s; r) = −ln Σ_y P(y) Σ_x P^{1−s}(x|y) (Σ_x' P^{s/ρ}(x'|y) e^{−r(x')})^ρ.
pub fn e0_tilde(src: &JointSource, rho: f64, s: f64, rates: &[f64]) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return domain(format!("rho = {rho} outside (0, 1]"));
    }
    if !(0.0..=rho).contains(&s) {
        return domain(format!("s = {s} outside [0, rho = {rho}]"));
    }
    if rates.len() != src.size_x() {
        return domain(format!("{} rates for |X| = {}", rates.len(), src.size_x()));
    }
    if let Some(r) = rates.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return domain(format!("rate {r} is not a finite nonnegative number"));
    }
    Ok(Tilde::new(src, rho, s).value(rates))
}

/// Ẽ0 at fixed (ρ, s) with the r-independent factors precomputed.
struct Tilde {
    rho: f64,
    /// P(y) Σ_x P^{1−s}(x|y)
    a: Vec<f64>,
    /// P^{s/ρ}(x'|y), rows [y][x']
    b: Vec<Vec<f64>>,
}

impl Tilde {
    fn new(src: &JointSource, rho: f64, s: f64) -> Self {
        let ratio = (s / rho).min(1.0);
        let a = src
            .cond_rows()
            .iter()
            .zip(src.py())
            .map(|(row, &py)| py * row.iter().map(|&p| pow_supp(p, 1.0 - s)).sum::<f64>())
            .collect();
        let b = src.cond_rows().iter().map(|row| row.iter().map(|&p| pow_supp(p, ratio)).collect()).collect();
        Self { rho, a, b }
    }

    fn value(&self, rates: &[f64]) -> f64 {
        let total: f64 = self
            .a
            .iter()
            .zip(&self.b)
            .map(|(a, row)| a * row.iter().zip(rates).map(|(b, r)| b * (-r).exp()).sum::<f64>().powf(self.rho))
            .sum();
        -total.ln()
    }

    fn value_and_gradient(&self, rates: &[f64]) -> (f64, Vec<f64>) {
        let e: Vec<f64> = rates.iter().map(|r| (-r).exp()).collect();
        let mut total = 0.0;
        let mut grad = vec![0.0; rates.len()];
        for (a, row) in self.a.iter().zip(&self.b) {
            let inner: f64 = row.iter().zip(&e).map(|(b, e)| b * e).sum();
            total += a * inner.powf(self.rho);
            let scale = a * self.rho * inner.powf(self.rho - 1.0);
            for ((g, b), e) in grad.iter_mut().zip(row).zip(&e) {
                *g += scale * b * e;
            }
        }
        for g in &mut grad {
            *g /= total;
        }
        (-total.ln(), grad)
    }
}

/// Projection onto {r ≥ 0, Σ P r = R} in the P-weighted Euclidean metric.
fn project(v: &[f64], px: &[f64], rate: f64) -> Vec<f64> {
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min) - rate;
    let excess = |lambda: f64| rate - px.iter().zip(v).map(|(p, x)| p * (x - lambda).max(0.0)).sum::<f64>();
    let lambda = bisect_increasing(excess, lo, hi, 1e-15);
    v.iter().map(|x| (x - lambda).max(0.0)).collect()
}

fn projected_gradient(tilde: &Tilde, px: &[f64], rate: f64, start: Vec<f64>) -> (Vec<f64>, f64) {
    let mut r = start;
    let (mut value, mut grad) = tilde.value_and_gradient(&r);
    let mut step = 1.0;
    for _ in 0..PG_ITERATIONS {
        let mut moved = false;
        while step > 1e-12 {
            let v: Vec<f64> = r.iter().zip(&grad).zip(px).map(|((x, g), p)| x + step * g / p).collect();
            let cand = project(&v, px, rate);
            let ascent: f64 = grad.iter().zip(&cand).zip(&r).map(|((g, c), x)| g * (c - x)).sum();
            let cv = tilde.value(&cand);
            if cv >= value + 1e-4 * ascent && cv >= value {
                let shift = cand.iter().zip(&r).map(|(c, x)| (c - x).abs()).fold(0.0, f64::max);
                r = cand;
                (value, grad) = tilde.value_and_gradient(&r);
                moved = shift > PG_TOLERANCE;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (r, value)
}

/// sup over r of Ẽ0(ρ,s; r) subject to Σ P(x) r(x) = R, r ≥ 0.
pub fn best_rates(src: &JointSource, rho: f64, s: f64, rate: f64) -> Result<(Vec<f64>, f64)> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InfeasibleRate(rate));
    }
    if !(rho > 0.0 && rho <= 1.0) || !(0.0..=rho).contains(&s) {
        return domain(format!("(rho, s) = ({rho}, {s}) outside 0 <= s <= rho <= 1, rho > 0"));
    }
    Ok(best_rates_unchecked(src, rho, s, rate))
}

fn best_rates_unchecked(src: &JointSource, rho: f64, s: f64, rate: f64) -> (Vec<f64>, f64) {
    let tilde = Tilde::new(src, rho, s);
    let water = optimal_rates(src, s, rate).map(|a| a.rates).unwrap_or_else(|_| vec![rate; src.size_x()]);
    if rho >= 1.0 {
        let v = tilde.value(&water);
        return (water, v);
    }
    let px = src.marginal_x();
    let a = projected_gradient(&tilde, px, rate, vec![rate; src.size_x()]);
    let b = projected_gradient(&tilde, px, rate, water);
    if b.1 > a.1 {
        b
    } else {
        a
    }
}

/// Ẽ1(R,T) = sup_{0 ≤ s ≤ ρ ≤ 1} sup_r [Ẽ0(ρ,s; r) − sT].
pub fn e1_tilde(src: &JointSource, rate: f64, threshold: f64) -> Result<ExponentResult> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InfeasibleRate(rate));
    }
    let seed = e1(src, rate, threshold);
    let start = match seed.argmax {
        Argmax::RhoS { rho, s } => Some((rho, s)),
        _ => None,
    };
    let objective = |rho: f64, s: f64| {
        if rho <= 0.0 {
            return 0.0;
        }
        best_rates_unchecked(src, rho, s, rate).1 - s * threshold
    };
    let ((rho, s), value, trace) = maximize_triangle(objective, GRID_STEP, start);
    let rates = if rho > 0.0 { best_rates_unchecked(src, rho, s, rate).0 } else { vec![rate; src.size_x()] };
    Ok(ExponentResult { value, argmax: Argmax::VariableRate { rho, s, rates }, diverged: false, trace: Some(trace) })
}
