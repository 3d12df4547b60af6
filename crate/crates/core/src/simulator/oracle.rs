//! Exact event probabilities over the source and the binning ensemble, for
//! tiny block lengths.

use serde::Serialize;

use super::{evaluate, Mode, SimConfig, Tables};
use crate::error::{Error, Result};

/// Cap on the number of enumerated bin maps, or of enumerated subsets per
/// source pair.
pub const MAX_ENUMERATION: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ExactProbabilities {
    pub e1: f64,
    pub e2: f64,
    pub erasure: f64,
    pub correct_unique: f64,
    pub wrong_unique: f64,
    pub list: f64,
    pub expected_candidates: f64,
}

impl ExactProbabilities {
    fn add(&mut self, weight: f64, lp: &[f64], n_threshold: f64) {
        let o = evaluate(lp, n_threshold);
        let incorrect = o.candidates - u64::from(o.true_is_candidate);
        if !o.true_is_candidate {
            self.e1 += weight;
        }
        if incorrect > 0 {
            self.e2 += weight;
        }
        match (o.candidates, o.true_is_candidate) {
            (0, _) => self.erasure += weight,
            (1, true) => self.correct_unique += weight,
            (1, false) => self.wrong_unique += weight,
            _ => self.list += weight,
        }
        self.expected_candidates += weight * o.candidates as f64;
    }

    /// Largest absolute difference between corresponding fields.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.e1 - other.e1,
            self.e2 - other.e2,
            self.erasure - other.erasure,
            self.correct_unique - other.correct_unique,
            self.wrong_unique - other.wrong_unique,
            self.list - other.list,
            self.expected_candidates - other.expected_candidates,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// ln P(x', y) for every x' and every y sequence, indexed [y][x'].
fn log_prob_table(t: &Tables) -> Vec<Vec<f64>> {
    let ny = (t.size_y as u64).pow(t.n as u32);
    let mut counts = vec![0u32; t.k * t.size_y];
    let ys: Vec<Vec<usize>> = (0..ny)
        .map(|j| {
            let mut rest = j;
            (0..t.n)
                .map(|_| {
                    let d = (rest % t.size_y as u64) as usize;
                    rest /= t.size_y as u64;
                    d
                })
                .collect()
        })
        .collect();
    ys.iter().map(|y| (0..t.sequences).map(|x| t.log_prob(x, y, &mut counts)).collect()).collect()
}

/// Averages over every bin map `f` (each sequence's bin drawn from its own range).
pub fn exact_oracle_enumeration(cfg: &SimConfig) -> Result<ExactProbabilities> {
    let t = Tables::new(cfg)?;
    let ranges: Vec<u64> = (0..t.sequences).map(|x| t.bins_of(x)).collect();
    let mut maps: u64 = 1;
    for &r in &ranges {
        maps = maps.saturating_mul(r);
        if maps > MAX_ENUMERATION {
            return Err(Error::Resource(format!("more than {MAX_ENUMERATION} bin maps to enumerate")));
        }
    }
    let table = log_prob_table(&t);
    let nt = cfg.n as f64 * cfg.threshold;
    let mut acc = ExactProbabilities::default();
    let mut f = vec![0u64; ranges.len()];
    let mut lp = Vec::new();
    for _ in 0..maps {
        for row in &table {
            for x in 0..ranges.len() {
                if row[x] == f64::NEG_INFINITY {
                    continue;
                }
                lp.clear();
                lp.push(row[x]);
                lp.extend((0..ranges.len()).filter(|&m| m != x && f[m] == f[x]).map(|m| row[m]));
                acc.add(row[x].exp() / maps as f64, &lp, nt);
            }
        }
        // next map, mixed radix
        for (digit, &r) in f.iter_mut().zip(&ranges) {
            *digit += 1;
            if *digit < r {
                break;
            }
            *digit = 0;
        }
    }
    Ok(acc)
}

/// For each (x, y), sums over every set of bin-mates of x weighted by its
/// probability under independent bin assignments.
pub fn exact_oracle_factorized(cfg: &SimConfig) -> Result<ExactProbabilities> {
    let t = Tables::new(cfg)?;
    let others = t.sequences - 1;
    if others >= 64 || 1u64 << others > MAX_ENUMERATION {
        return Err(Error::Resource(format!("2^{others} bin-mate subsets exceed {MAX_ENUMERATION}")));
    }
    let table = log_prob_table(&t);
    let nt = cfg.n as f64 * cfg.threshold;
    let ranges: Vec<u64> = (0..t.sequences).map(|x| t.bins_of(x)).collect();
    let mut acc = ExactProbabilities::default();
    let mut lp = Vec::new();
    for row in &table {
        for x in 0..t.sequences as usize {
            if row[x] == f64::NEG_INFINITY {
                continue;
            }
            let mates: Vec<usize> = (0..t.sequences as usize).filter(|&m| m != x).collect();
            // in fixed-rate mode the inclusion probabilities do not depend on x's bin
            let own_bins = if matches!(cfg.mode, Mode::FixedRate) { 1 } else { ranges[x] };
            for b in 0..own_bins {
                let q: Vec<f64> = mates
                    .iter()
                    .map(|&m| if b < ranges[m] { 1.0 / ranges[m] as f64 } else { 0.0 })
                    .collect();
                for mask in 0..(1u64 << others) {
                    let mut w = row[x].exp() / own_bins as f64;
                    lp.clear();
                    lp.push(row[x]);
                    for (i, (&m, &qi)) in mates.iter().zip(&q).enumerate() {
                        if mask >> i & 1 == 1 {
                            w *= qi;
                            lp.push(row[m]);
                        } else {
                            w *= 1.0 - qi;
                        }
                    }
                    if w > 0.0 {
                        acc.add(w, &lp, nt);
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// Exact probabilities by full enumeration when feasible, otherwise by the
/// per-pair factorization.
pub fn exact_oracle(cfg: &SimConfig) -> Result<ExactProbabilities> {
    match exact_oracle_enumeration(cfg) {
        Err(Error::Resource(_)) => exact_oracle_factorized(cfg),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::JointSource;

    fn cfg(n: usize, rate: f64, t: f64) -> SimConfig {
        SimConfig::new(JointSource::bss(0.1).unwrap(), n, rate, t, 0, 0)
    }

    #[test]
    fn single_letter_closed_form() {
        // the other sequence shares the bin w.p. 1/2; it then beats x iff x ≠ y
        let c = cfg(1, 2f64.ln(), 0.0);
        assert_eq!(c.bins(), 2);
        let a = exact_oracle_enumeration(&c).unwrap();
        let b = exact_oracle_factorized(&c).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
        assert!((a.e1 - 0.05).abs() < 1e-12);
        assert!((a.e2 - 0.05).abs() < 1e-12);
        assert!((a.correct_unique - 0.95).abs() < 1e-12);
        assert!(a.erasure.abs() < 1e-12);
    }

    #[test]
    fn two_letter_methods_agree() {
        for &t in &[-0.5, -0.1, 0.0, 0.1, 0.6] {
            let c = cfg(2, 2f64.ln() / 2.0, t);
            let a = exact_oracle_enumeration(&c).unwrap();
            let b = exact_oracle_factorized(&c).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12, "T={t}");
            let total = a.erasure + a.correct_unique + a.wrong_unique + a.list;
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn variable_rate_methods_agree() {
        let c = cfg(2, 0.4, 0.0).with_mode(Mode::VariableRate { rates: vec![0.2, 0.7] });
        let a = exact_oracle_enumeration(&c).unwrap();
        let b = exact_oracle_factorized(&c).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn e1_nondecreasing_in_threshold() {
        let mut last = 0.0;
        for k in 0..=20 {
            let t = -1.0 + 0.1 * k as f64;
            let a = exact_oracle(&cfg(2, 0.35, t)).unwrap();
            assert!((0.0..=1.0).contains(&a.e1));
            assert!(a.e1 >= last - 1e-15);
            last = a.e1;
        }
    }

    #[test]
    fn larger_blocks_fall_back_to_factorization() {
        let c = cfg(3, 1.0, 0.0);
        assert!(matches!(exact_oracle_enumeration(&c), Err(Error::Resource(_))));
        let a = exact_oracle(&c).unwrap();
        assert!(a.e1 > 0.0 && a.e1 < 1.0);
    }
}
