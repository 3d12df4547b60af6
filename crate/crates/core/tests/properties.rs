use proptest::prelude::*;

use swexp::simulator::{exact_oracle, SimConfig};
use swexp::tce_binary::{self, Region};
use swexp::{gallager, variable_rate, JointSource};

const LN2: f64 = std::f64::consts::LN_2;

fn ln_pow_sum(p: f64, a: f64) -> f64 {
    (p.powf(a) + (1.0 - p).powf(a)).ln()
}

/// ρR − ln[p^{1−s} + (1−p)^{1−s}] − ρ ln[p^{s/ρ} + (1−p)^{s/ρ}] − sT.
fn bss_objective(p: f64, rate: f64, t: f64, rho: f64, s: f64) -> f64 {
    let inner = if rho > 0.0 { rho * ln_pow_sum(p, s / rho) } else { 0.0 };
    rho * rate - ln_pow_sum(p, 1.0 - s) - inner - s * t
}

fn skewed() -> JointSource {
    JointSource::from_pmf(vec![vec![0.56, 0.14], vec![0.06, 0.24]]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn e1_is_midpoint_convex(p in 0.03f64..0.45, r1 in 0.0f64..LN2, r2 in 0.0f64..LN2,
                             t1 in -0.5f64..0.5, t2 in -0.5f64..0.5) {
        let src = JointSource::bss(p).unwrap();
        let mid = gallager::e1(&src, (r1 + r2) / 2.0, (t1 + t2) / 2.0).value;
        let avg = (gallager::e1(&src, r1, t1).value + gallager::e1(&src, r2, t2).value) / 2.0;
        prop_assert!(mid <= avg + 1e-6, "mid {mid} avg {avg}");
    }

    #[test]
    fn e1_monotone_in_rate_and_threshold(p in 0.03f64..0.45, r in 0.0f64..0.6, dr in 0.0f64..0.09,
                                         t in -0.5f64..0.5, dt in 0.0f64..0.2) {
        let src = JointSource::bss(p).unwrap();
        let base = gallager::e1(&src, r, t).value;
        prop_assert!(gallager::e1(&src, r + dr, t).value >= base - 1e-9);
        prop_assert!(gallager::e1(&src, r, t + dt).value <= base + 1e-9);
    }

    #[test]
    fn e0_matches_bss_expression(p in 0.01f64..0.5, rho in 0.01f64..1.0, frac in 0.0f64..1.0) {
        let s = frac * rho;
        let src = JointSource::bss(p).unwrap();
        let expected = -(ln_pow_sum(p, 1.0 - s) + rho * ln_pow_sum(p, s / rho));
        prop_assert!((gallager::e0(&src, rho, s).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn e1_matches_specialized_bss_objective(p in 0.02f64..0.45, r in 0.0f64..LN2, t in -0.4f64..0.4,
                                            rho in 0.0f64..1.0, frac in 0.0f64..1.0) {
        let src = JointSource::bss(p).unwrap();
        let e1 = gallager::e1(&src, r, t);
        let (rho_star, s_star) = (e1.rho().unwrap(), e1.s());
        if e1.value > 0.0 {
            prop_assert!((bss_objective(p, r, t, rho_star, s_star) - e1.value).abs() < 1e-8);
        }
        prop_assert!(bss_objective(p, r, t, rho, frac * rho) <= e1.value + 1e-8);
    }

    #[test]
    fn variable_rate_dominates_and_meets_the_mean_rate(r in 0.05f64..1.0, t in -0.3f64..0.3) {
        let src = skewed();
        let fixed = gallager::e1(&src, r, t).value;
        let var = variable_rate::e1_tilde(&src, r, t).unwrap();
        prop_assert!(var.value >= fixed - 1e-9);
        if let swexp::Argmax::VariableRate { rates, .. } = &var.argmax {
            let mean: f64 = src.marginal_x().iter().zip(rates).map(|(p, x)| p * x).sum();
            prop_assert!((mean - r).abs() <= 1e-6, "mean rate {mean} vs {r}");
            prop_assert!(rates.iter().all(|&x| x >= 0.0));
        } else {
            prop_assert!(false, "unexpected argmax");
        }
    }

    #[test]
    fn water_filling_residual(s in 0.0f64..1.0, r in 0.01f64..2.0) {
        let src = skewed();
        let w = variable_rate::optimal_rates(&src, s, r).unwrap();
        let q = variable_rate::f_weights(&src, s).q;
        let px = src.marginal_x();
        let filled: f64 = px.iter().zip(&q).map(|(p, q)| p * ((q / p).ln() + w.mu).max(0.0)).sum();
        prop_assert!((filled - r).abs() <= 1e-9);
    }

    #[test]
    fn tilted_crossover_decreases(p in 0.01f64..0.49, s in 0.0f64..10.0, ds in 0.01f64..2.0) {
        let a = tce_binary::TiltedCrossover::new(p, s).unwrap().value();
        let b = tce_binary::TiltedCrossover::new(p, s + ds).unwrap().value();
        prop_assert!(b < a);
        prop_assert!((tce_binary::TiltedCrossover::new(p, 0.0).unwrap().value() - 0.5).abs() < 1e-15);
        prop_assert!((tce_binary::TiltedCrossover::new(p, 1.0).unwrap().value() - p).abs() < 1e-15);
    }

    #[test]
    fn two_local_minima_in_regions_e_and_f(p in 0.05f64..0.4, s in 1.05f64..4.0, frac in 0.01f64..0.99) {
        let ps = tce_binary::TiltedCrossover::new(p, s).unwrap().value();
        let hp = swexp::source::binary_entropy(p).unwrap();
        let hps = swexp::source::binary_entropy(ps).unwrap();
        let rate = hps + frac * (hp - hps);
        let region = tce_binary::classify_region(p, rate, s);
        prop_assert!(matches!(region, Region::E | Region::F));
        let l = |d: f64| tce_binary::l_objective(p, rate, s, d).unwrap();
        for d in [p, ps] {
            let h = 1e-4 * d;
            prop_assert!(l(d - h) > l(d) && l(d + h) > l(d), "no local minimum at {d}");
        }
        let smaller = if l(ps) < l(p) { Region::E } else { Region::F };
        // at the E/F boundary both minima agree
        if (l(ps) - l(p)).abs() > 1e-12 {
            prop_assert_eq!(region, smaller);
        }
    }

    #[test]
    fn type_enumeration_dominates(p in 0.02f64..0.5, r in 0.0f64..LN2, t in -1.0f64..0.5) {
        let src = JointSource::bss(p).unwrap();
        let tce = tce_binary::e1_prime_binary(p, r, t).unwrap().value;
        prop_assert!(tce >= gallager::e1(&src, r, t).value - 1e-6);
    }
}

#[test]
fn exact_e1_nonincreasing_in_rate() {
    let src = JointSource::bss(0.1).unwrap();
    let mut last = 1.0;
    for bins in [2.0f64, 3.0, 4.0, 6.0, 8.0] {
        let cfg = SimConfig::new(src.clone(), 3, bins.ln() / 3.0, 0.0, 0, 0);
        assert_eq!(cfg.bins(), bins as u64);
        let e1 = exact_oracle(&cfg).unwrap().e1;
        assert!(e1 <= last + 1e-15, "M = {bins}: {e1} > {last}");
        last = e1;
    }
}
