//! Type-class-enumeration exponent for correlated binary symmetric sources.
//!
//! The inner problem is `L(R,s) = min_δ L(R,s,δ)` with
//! `L(R,s,δ) = sδ ln((1−p)/p) + s[R − h(δ)] + (1−s)[R − h(δ)]₊`,
//! whose minimizer is one of `p`, `h⁻¹(R)` or the tilted crossover `p_s`
//! depending on where (s, R) falls in the seven-region phase diagram A–G.

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::exponent::{Argmax, ExponentResult};
use crate::optim::sup_over_s;
use crate::source::{h2, h2_inverse};

const LN2: f64 = std::f64::consts::LN_2;

/// Region of the (s, R) strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Region {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

/// Main phase, i.e. which closed form of L(R,s) applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    /// C ∪ F ∪ G: minimizer δ* = p.
    Typical,
    /// B: minimizer δ* = h⁻¹(R).
    Glassy,
    /// A ∪ D ∪ E: minimizer δ* = p_s.
    SmallClass,
}

impl Region {
    pub const ALL: [Region; 7] = [Region::A, Region::B, Region::C, Region::D, Region::E, Region::F, Region::G];

    pub fn phase(self) -> Phase {
        match self {
            Region::C | Region::F | Region::G => Phase::Typical,
            Region::B => Phase::Glassy,
            Region::A | Region::D | Region::E => Phase::SmallClass,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// A point of the phase diagram with its minimizer and the value of L(R,s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub s: f64,
    pub rate: f64,
    pub region: Region,
    pub delta_star: f64,
    pub l_value: f64,
}

/// Tilted crossover p_s = p^s / (p^s + (1−p)^s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedCrossover(f64);

impl TiltedCrossover {
    pub fn new(p: f64, s: f64) -> Result<Self> {
        check_p(p)?;
        check_s(s)?;
        Ok(Self(p_tilted(p, s)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 0.5) {
        return domain(format!("crossover p = {p} outside (0, 1/2]"));
    }
    Ok(())
}

fn check_s(s: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return domain(format!("s = {s} must be finite and >= 0"));
    }
    Ok(())
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..=LN2 + 1e-15).contains(&rate) {
        return domain(format!("rate R = {rate} outside [0, ln 2]"));
    }
    Ok(())
}

#[inline]
fn log_odds(p: f64) -> f64 {
    ((1.0 - p) / p).ln()
}

pub(crate) fn p_tilted(p: f64, s: f64) -> f64 {
    1.0 / (1.0 + (s * log_odds(p)).exp())
}

/// ln(p^a + (1−p)^a), stable for large |a|.
pub(crate) fn ln_z(p: f64, a: f64) -> f64 {
    let (u, v) = (a * p.ln(), a * (1.0 - p).ln());
    let m = u.max(v);
    m + (-(u - v).abs()).exp().ln_1p()
}

/// R(s) = −ln[p^s + (1−p)^s]/(s − 1), the E/F boundary for s > 1.
pub fn renyi_boundary(p: f64, s: f64) -> f64 {
    if (s - 1.0).abs() < 1e-9 {
        return h2(p);
    }
    -ln_z(p, s) / (s - 1.0)
}

/// L(R,s,δ).
pub fn l_objective(p: f64, rate: f64, s: f64, delta: f64) -> Result<f64> {
    check_p(p)?;
    check_rate(rate)?;
    check_s(s)?;
    if !(0.0..=1.0).contains(&delta) {
        return domain(format!("delta = {delta} outside [0, 1]"));
    }
    Ok(l_objective_unchecked(p, rate, s, delta))
}

pub(crate) fn l_objective_unchecked(p: f64, rate: f64, s: f64, delta: f64) -> f64 {
    let gap = rate - h2(delta);
    s * delta * log_odds(p) + s * gap + (1.0 - s) * gap.max(0.0)
}

/// Region label of (s, R), following the set inequalities verbatim.
pub fn classify_region(p: f64, rate: f64, s: f64) -> Region {
    let hp = h2(p);
    let hps = h2(p_tilted(p, s));
    if s <= 1.0 {
        if rate <= hp {
            Region::C
        } else if rate <= hps {
            Region::B
        } else {
            Region::A
        }
    } else if rate > hp {
        Region::D
    } else if rate > renyi_boundary(p, s) {
        Region::E
    } else if rate > hps {
        Region::F
    } else {
        Region::G
    }
}

/// Closed form of L(R,s) for the given phase, with its minimizer.
pub fn phase_value(p: f64, rate: f64, s: f64, phase: Phase) -> (f64, f64) {
    let lo = log_odds(p);
    match phase {
        Phase::Typical => (s * (p * lo + rate - h2(p)), p),
        Phase::Glassy => {
            let d = h2_inverse(rate);
            (s * d * lo, d)
        }
        Phase::SmallClass => {
            let ps = p_tilted(p, s);
            (s * ps * lo + rate - h2(ps), ps)
        }
    }
}

/// L(R,s) in closed form, with its region and minimizer.
pub fn l_closed_form(p: f64, rate: f64, s: f64) -> Result<PhasePoint> {
    check_p(p)?;
    check_rate(rate)?;
    check_s(s)?;
    let rate = rate.min(LN2);
    let region = classify_region(p, rate, s);
    let (l_value, delta_star) = phase_value(p, rate, s, region.phase());
    Ok(PhasePoint { s, rate, region, delta_star, l_value })
}

/// D(δ‖p) for Bernoulli distributions.
pub fn binary_divergence(delta: f64, p: f64) -> f64 {
    let term = |a: f64, b: f64| if a > 0.0 { a * (a / b).ln() } else { 0.0 };
    term(delta, p) + term(1.0 - delta, 1.0 - p)
}

/// E1'(R,T,s) in its three-case form.
pub fn e1_prime_s(p: f64, rate: f64, threshold: f64, s: f64) -> Result<f64> {
    check_p(p)?;
    check_rate(rate)?;
    check_s(s)?;
    Ok(e1_prime_s_unchecked(p, rate.min(LN2), threshold, s))
}

fn e1_prime_s_unchecked(p: f64, rate: f64, threshold: f64, s: f64) -> f64 {
    let tail = ln_z(p, 1.0 - s);
    match classify_region(p, rate, s).phase() {
        Phase::Typical => s * (rate - threshold) - tail,
        Phase::Glassy => s * (rate - threshold + binary_divergence(h2_inverse(rate), p)) - tail,
        Phase::SmallClass => rate - s * threshold - ln_z(p, s) - tail,
    }
}

/// E1'(R,T,s) assembled from L(R,s): L + s ln(1/(1−p)) − ln[p^{1−s} + (1−p)^{1−s}] − sT.
pub fn e1_prime_s_from_l(p: f64, rate: f64, threshold: f64, s: f64) -> Result<f64> {
    let l = l_closed_form(p, rate, s)?.l_value;
    Ok(l - s * (1.0 - p).ln() - ln_z(p, 1.0 - s) - s * threshold)
}

/// E1'(R,T) = sup_{s ≥ 0} E1'(R,T,s), reported as `+inf` when the
/// objective grows affinely in s.
pub fn e1_prime_binary(p: f64, rate: f64, threshold: f64) -> Result<ExponentResult> {
    check_p(p)?;
    check_rate(rate)?;
    let rate = rate.min(LN2);
    let sup = sup_over_s(|s| e1_prime_s_unchecked(p, rate, threshold, s));
    Ok(ExponentResult { value: sup.value, argmax: Argmax::S { s: sup.s }, diverged: sup.diverged, trace: None })
}

/// E2' = E1' + T. The E2 = E1 + T relation is only established for the
/// Gallager/Forney bound; carrying it over to the type-enumeration bound is
/// an extrapolation.
pub fn e2_prime_binary(p: f64, rate: f64, threshold: f64) -> Result<ExponentResult> {
    Ok(e1_prime_binary(p, rate, threshold)?.shifted(threshold))
}

/// Closed-form bounds for weakly correlated sources p = 1/2 − ε,
/// R = ln 2 − 2θ²ε², T = −τε².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VeryNoisyBounds {
    /// (τ + 2)ε², an upper bound on E1(R,T).
    pub e1_upper: f64,
    /// [τ(τ + 8)/16 − 1]ε², a lower bound on E1'(R,T).
    pub e1_prime_lower: f64,
}

pub fn very_noisy_bounds(eps: f64, tau: f64, theta: f64) -> Result<VeryNoisyBounds> {
    if !(eps > 0.0 && eps <= 0.05) {
        return domain(format!("epsilon = {eps} outside (0, 0.05]"));
    }
    if !(tau > 4.0) {
        return domain(format!("tau = {tau} must exceed 4"));
    }
    if !(0.0..=1.0).contains(&theta) {
        return domain(format!("theta = {theta} outside [0, 1]"));
    }
    let e2 = eps * eps;
    Ok(VeryNoisyBounds { e1_upper: (tau + 2.0) * e2, e1_prime_lower: (tau * (tau + 8.0) / 16.0 - 1.0) * e2 })
}

/// Second-order expansion γ(t) ≈ (t − 1)(ln 2 − 2tε²) of −ln[(1/2−ε)^t + (1/2+ε)^t].
pub fn very_noisy_gamma(t: f64, eps: f64) -> f64 {
    (t - 1.0) * (LN2 - 2.0 * t * eps * eps)
}

/// Unconstrained maximizer ρ_s* = s/θ of the expanded fixed-rate objective.
pub fn very_noisy_rho_star(s: f64, theta: f64) -> f64 {
    s / theta
}

/// Maximizer s* = (τ + 4)/8 of s(4ε² − T) − 4s²ε² at T = −τε².
pub fn very_noisy_s_star(tau: f64) -> f64 {
    (tau + 4.0) / 8.0
}

/// One row of the boundary-curve table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryRow {
    pub s: f64,
    pub h_p: f64,
    pub h_ps: f64,
    /// R(s); only defined for s > 1.
    pub r_s: Option<f64>,
}

/// Value of L(R,s) on both sides of a region boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityCheck {
    pub boundary: &'static str,
    pub s: f64,
    pub rate: f64,
    pub left: Region,
    pub right: Region,
    pub l_left: f64,
    pub l_right: f64,
}

impl ContinuityCheck {
    pub fn gap(&self) -> f64 {
        (self.l_left - self.l_right).abs()
    }
}

/// Region-labelled grid plus boundary curves.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    pub p: f64,
    pub points: Vec<PhasePoint>,
    pub boundaries: Vec<BoundaryRow>,
    pub continuity: Vec<ContinuityCheck>,
}

pub fn boundary_row(p: f64, s: f64) -> BoundaryRow {
    BoundaryRow { s, h_p: h2(p), h_ps: h2(p_tilted(p, s)), r_s: (s > 1.0).then(|| renyi_boundary(p, s)) }
}

/// Points on every region boundary, `per_boundary` of each, with L evaluated
/// by the closed forms of the two adjacent regions.
pub fn continuity_checks(p: f64, s_max: f64, per_boundary: usize) -> Vec<ContinuityCheck> {
    let mut out = Vec::new();
    let hp = h2(p);
    let frac = |k: usize| (k as f64 + 0.5) / per_boundary as f64;
    let mut push = |boundary, s: f64, rate: f64, left: Region, right: Region| {
        let rate = rate.clamp(0.0, LN2);
        out.push(ContinuityCheck {
            boundary,
            s,
            rate,
            left,
            right,
            l_left: phase_value(p, rate, s, left.phase()).0,
            l_right: phase_value(p, rate, s, right.phase()).0,
        });
    };
    for k in 0..per_boundary {
        let s_low = frac(k);
        let s_high = 1.0 + (s_max - 1.0) * frac(k);
        let r_frac = frac(k);
        push("C|B", s_low, hp, Region::C, Region::B);
        push("B|A", s_low, h2(p_tilted(p, s_low)), Region::B, Region::A);
        push("A|D", 1.0, hp + (LN2 - hp) * r_frac, Region::A, Region::D);
        push("C|G", 1.0, hp * r_frac, Region::C, Region::G);
        push("D|E", s_high, hp, Region::D, Region::E);
        push("E|F", s_high, renyi_boundary(p, s_high), Region::E, Region::F);
        push("F|G", s_high, h2(p_tilted(p, s_high)), Region::F, Region::G);
    }
    out
}

pub fn phase_diagram(p: f64, s_grid: &[f64], rate_grid: &[f64]) -> Result<PhaseDiagram> {
    check_p(p)?;
    let mut points = Vec::with_capacity(s_grid.len() * rate_grid.len());
    for &s in s_grid {
        for &rate in rate_grid {
            points.push(l_closed_form(p, rate, s)?);
        }
    }
    let boundaries = s_grid.iter().map(|&s| boundary_row(p, s)).collect();
    let s_max = s_grid.iter().copied().fold(1.0, f64::max).max(1.5);
    Ok(PhaseDiagram { p, points, boundaries, continuity: continuity_checks(p, s_max, 5) })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl PhaseDiagram {
    pub fn write_points_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "s,R,region,delta_star,L")?;
        for pt in &self.points {
            writeln!(w, "{},{},{},{},{}", pt.s, pt.rate, pt.region, pt.delta_star, pt.l_value + 0.0)?;
        }
        Ok(())
    }

    pub fn write_boundaries_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "s,h_p,h_ps,R_s")?;
        for b in &self.boundaries {
            writeln!(w, "{},{},{},{}", b.s, b.h_p, b.h_ps, fmt_opt(b.r_s))?;
        }
        Ok(())
    }

    pub fn write_continuity_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "boundary,s,R,left,right,L_left,L_right,gap")?;
        for c in &self.continuity {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{:e}",
                c.boundary,
                c.s,
                c.rate,
                c.left,
                c.right,
                c.l_left,
                c.l_right,
                c.gap()
            )?;
        }
        Ok(())
    }

    /// Gnuplot script: region-coloured grid, main phase boundaries solid,
    /// sub-phase boundaries dashed.
    pub fn gnuplot_script(&self, points_csv: &str, boundaries_csv: &str, output_png: &str) -> String {
        format!(
            r#"# phase diagram of L(R,s), p = {p}
set datafile separator ','
set terminal pngcairo size 900,600
set output '{output_png}'
set xlabel 's'
set ylabel 'R [nats]'
set yrange [0:log(2)]
set key outside right
set arrow from 1, graph 0 to 1, graph 1 nohead dashtype 2 lc rgb 'black'
region(r) = (r eq 'A') ? 0 : (r eq 'B') ? 1 : (r eq 'C') ? 2 : (r eq 'D') ? 3 : (r eq 'E') ? 4 : (r eq 'F') ? 5 : 6
plot '{points_csv}' every ::1 using 1:2:(region(strcol(3))) with points pt 5 ps 0.6 lc palette notitle, \
     '{boundaries_csv}' every ::1 using ($1<=1 ? $1 : 1/0):2 with lines lw 2 dt 1 lc rgb 'black' title 'h(p)', \
     '{boundaries_csv}' every ::1 using ($1<=1 ? $1 : 1/0):3 with lines lw 2 dt 1 lc rgb 'black' title 'h(p_s)', \
     '{boundaries_csv}' every ::1 using ($1>1 ? $1 : 1/0):4 with lines lw 2 dt 1 lc rgb 'black' title 'R(s)', \
     '{boundaries_csv}' every ::1 using ($1>1 ? $1 : 1/0):2 with lines lw 1 dt 2 lc rgb 'black' notitle, \
     '{boundaries_csv}' every ::1 using ($1>1 ? $1 : 1/0):3 with lines lw 1 dt 2 lc rgb 'black' notitle
"#,
            p = self.p
        )
    }

    pub fn regions_present(&self) -> Vec<Region> {
        let mut r: Vec<Region> = self.points.iter().map(|pt| pt.region).collect();
        r.sort();
        r.dedup();
        r
    }
}
