//! Small derivative-free optimizers shared by the exponent calculators.

use serde::Serialize;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes a unimodal `f` on `[a, b]`; returns `(argmax, max)`.
///
/// The endpoints are compared against the interior optimum so a maximum on
/// the boundary is returned exactly.
pub fn golden_max(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (fa, fb) = (f(a), f(b));
    if b - a <= tol {
        return if fb > fa { (b, fb) } else { (a, fa) };
    }
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let (mut best_x, mut best_f) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    // lower endpoint wins ties
    if fa >= best_f {
        best_x = a;
        best_f = fa;
    } else if fb > best_f {
        best_x = b;
        best_f = fb;
    }
    (best_x, best_f)
}

/// Minimizes a unimodal `f` on `[a, b]`.
pub fn golden_min(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, v) = golden_max(|t| -f(t), a, b, tol);
    (x, -v)
}

/// Finds the root of a nondecreasing `g` on `[lo, hi]` with `g(lo) <= 0 <= g(hi)`.
pub fn bisect_increasing(mut g: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Record of a grid-then-refine run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OptimizerTrace {
    pub grid_points: usize,
    pub grid_best: (f64, f64),
    pub grid_value: f64,
    pub sweeps: usize,
    pub evaluations: usize,
    /// Values at the two smallest ρ used for a ρ → 0 limit, when one was taken.
    pub richardson: Option<(f64, f64)>,
}

/// Box-constrained 2-D maximization by cyclic golden-section line searches
/// started from `start`. Each sweep searches along the first coordinate and
/// then along the second, so the returned second coordinate is always a
/// line-search optimum for the returned first coordinate.
///
/// Returns `((u, v), value, sweeps)`.
pub fn refine_box(
    f: &mut impl FnMut(f64, f64) -> f64,
    start: (f64, f64),
    bounds: [(f64, f64); 2],
    tol: f64,
    max_sweeps: usize,
) -> ((f64, f64), f64, usize) {
    let (mut u, mut v) = start;
    let mut best = f(u, v);
    let line_tol = (tol * 1e-2).max(1e-12);
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let (u0, v0) = (u, v);
        let (nu, val) = golden_max(|t| f(t, v), bounds[0].0, bounds[0].1, line_tol);
        if val >= best {
            u = nu;
            best = val;
        }
        let (nv, val) = golden_max(|t| f(u, t), bounds[1].0, bounds[1].1, line_tol);
        if val >= best {
            v = nv;
            best = val;
        }
        if (u - u0).abs() < tol && (v - v0).abs() < tol {
            break;
        }
    }
    ((u, v), best, sweeps)
}

/// Outcome of a supremum over s >= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupOverS {
    pub value: f64,
    pub s: f64,
    pub diverged: bool,
}

/// Largest s on the divergence-detection grid.
pub const S_MAX: f64 = 256.0;
/// Spacing of the divergence-detection grid.
pub const S_STEP: f64 = 2.0;

/// sup_{s >= 0} f(s) for a concave `f` that may grow without bound.
///
/// `f` is sampled on {0, 2, 4, ..., 256}. The supremum is declared infinite
/// when the last three increments per unit s are all above 1e-9 and agree
/// to within a relative 1e-3, i.e. `f` has become affine with positive
/// slope. Otherwise the best grid point is refined by golden section on the
/// neighbouring grid cells.
pub fn sup_over_s(mut f: impl FnMut(f64) -> f64) -> SupOverS {
    let steps = (S_MAX / S_STEP) as usize;
    let values: Vec<f64> = (0..=steps).map(|k| f(k as f64 * S_STEP)).collect();
    let inc: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]) / S_STEP).collect();
    let tail = &inc[inc.len() - 3..];
    let (hi, lo) = tail.iter().fold((f64::MIN, f64::MAX), |(h, l), &d| (h.max(d), l.min(d)));
    if lo > 1e-9 && hi - lo <= 1e-3 * lo {
        return SupOverS { value: f64::INFINITY, s: S_MAX, diverged: true };
    }
    let (k_best, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(kb, vb), (k, &v)| if v > vb { (k, v) } else { (kb, vb) });
    let a = (k_best as f64 - 1.0).max(0.0) * S_STEP;
    let b = (k_best as f64 + 1.0) * S_STEP;
    let (s, v) = golden_max(&mut f, a, b, 1e-10);
    if v >= values[k_best] {
        SupOverS { value: v, s, diverged: false }
    } else {
        SupOverS { value: values[k_best], s: k_best as f64 * S_STEP, diverged: false }
    }
}
