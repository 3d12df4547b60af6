//! Weighted least-squares fit of an exponent to simulated event rates.

use serde::Serialize;

use crate::error::{domain, Error, Result};

/// An event rate observed at block length `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub rate: f64,
    /// Trials behind `rate`; `None` marks an exact rate and gives unit weight.
    pub trials: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    /// Fitted exponent, nats per symbol.
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% band on the slope.
    pub ci_half_width: f64,
    pub reduced_chi2: f64,
}

/// Fits `−ln(rate) ≈ a + E·n`, i.e. `−ln(rate)/n ≈ E + a/n`.
///
/// Points with a trial count are weighted by the inverse binomial variance
/// of `−ln(rate)`, `r·trials/(1 − r)`; the band is widened by
/// `sqrt(reduced χ²)` when the scatter exceeds the binomial noise.
pub fn empirical_exponent(points: &[RatePoint]) -> Result<ExponentFit> {
    let mut ns: Vec<usize> = points.iter().map(|p| p.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return domain(format!("need at least 3 block lengths, got {}", ns.len()));
    }
    for p in points {
        if p.rate == 0.0 {
            let trials = p.trials.unwrap_or(0);
            let bound = if trials > 0 { -(3.0 / trials as f64).ln() / p.n as f64 } else { f64::INFINITY };
            return Err(Error::DegenerateData { n: p.n, trials, one_sided_bound: bound });
        }
        if !(p.rate > 0.0 && p.rate <= 1.0) {
            return domain(format!("event rate {} at n = {} outside (0, 1]", p.rate, p.n));
        }
    }
    let weighted = points.iter().all(|p| p.trials.is_some());
    let w: Vec<f64> = points
        .iter()
        .map(|p| match (weighted, p.trials) {
            (true, Some(t)) => p.rate * t as f64 / (1.0 - p.rate).max(1.0 / t as f64),
            _ => 1.0,
        })
        .collect();
    let z: Vec<f64> = points.iter().map(|p| -p.rate.ln()).collect();
    let x: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let s: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(&x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(&z).map(|(w, z)| w * z).sum();
    let sxx: f64 = w.iter().zip(&x).map(|(w, x)| w * x * x).sum();
    let sxy: f64 = w.iter().zip(&x).zip(&z).map(|((w, x), z)| w * x * z).sum();
    let det = s * sxx - sx * sx;
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / s;
    let chi2: f64 = w.iter().zip(&x).zip(&z).map(|((w, x), z)| w * (z - intercept - slope * x).powi(2)).sum();
    let dof = (points.len() - 2).max(1) as f64;
    let reduced_chi2 = chi2 / dof;
    let var_slope = s / det;
    let se = if weighted { (var_slope * reduced_chi2.max(1.0)).sqrt() } else { (var_slope * reduced_chi2).sqrt() };
    Ok(ExponentFit { slope, intercept, ci_half_width: 1.96 * se, reduced_chi2 })
}
