//! Monte Carlo simulation of random binning with the erasure/list decoder.
//!
//! A sequence `x̂` in the received bin is a candidate when
//! `P(x̂,y) / Σ_{x' ∈ bin∖{x̂}} P(x',y) ≥ e^{nT}`; an empty remainder makes
//! the ratio infinite.
//!
//! Only the bin of the true sequence matters, so each trial draws the other
//! members of that bin directly: with `N = |X|^n` sequences and `M` bins,
//! the number of other members is Binomial(N − 1, 1/M) and the members are a
//! uniform subset of the remaining sequences. This has the same law as
//! assigning every sequence an independent uniform bin. Trial `t` uses the
//! ChaCha8 stream `t` of the master seed, so results do not depend on the
//! number of worker threads.

mod fit;
mod oracle;

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::source::JointSource;

pub use fit::{empirical_exponent, ExponentFit, RatePoint};
pub use oracle::{exact_oracle, exact_oracle_enumeration, exact_oracle_factorized, ExactProbabilities};

/// Largest number of source sequences |X|^n the simulator will index.
pub const MAX_SEQUENCES: u64 = 1 << 24;

/// CSV header written by [`write_csv`].
pub const CSV_HEADER: &str = "n,R_nominal,R_actual,T,trials,seed,e1_count,e2_count,erasure_count,mean_list_size";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Mode {
    FixedRate,
    /// Per-letter rates r(x); sequence `x` is binned uniformly into
    /// `round(exp(Σ_i r(x_i)))` bins.
    VariableRate { rates: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub source: JointSource,
    pub n: usize,
    pub rate: f64,
    pub threshold: f64,
    pub trials: u64,
    pub master_seed: u64,
    pub mode: Mode,
}

impl SimConfig {
    pub fn new(source: JointSource, n: usize, rate: f64, threshold: f64, trials: u64, master_seed: u64) -> Self {
        Self { source, n, rate, threshold, trials, master_seed, mode: Mode::FixedRate }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    /// M = round(e^{nR}), at least 2.
    pub fn bins(&self) -> u64 {
        bins_for(self.n as f64 * self.rate).max(2)
    }

    /// ln(M)/n in fixed-rate mode, Σ_x P(x) r(x) in variable-rate mode.
    pub fn actual_rate(&self) -> f64 {
        match &self.mode {
            Mode::FixedRate => (self.bins() as f64).ln() / self.n as f64,
            Mode::VariableRate { rates } => self.source.marginal_x().iter().zip(rates).map(|(p, r)| p * r).sum(),
        }
    }

    /// |X|^n.
    pub fn sequences(&self) -> Result<u64> {
        let k = self.source.size_x() as u64;
        let mut total: u64 = 1;
        for _ in 0..self.n {
            total = total.saturating_mul(k);
            if total > MAX_SEQUENCES {
                return Err(Error::Resource(format!(
                    "|X|^n = {}^{} exceeds the cap of {MAX_SEQUENCES} sequences",
                    k, self.n
                )));
            }
        }
        Ok(total)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return domain("block length n must be >= 1");
        }
        if !self.rate.is_finite() || self.rate < 0.0 {
            return domain(format!("rate R = {} must be finite and >= 0", self.rate));
        }
        if !self.threshold.is_finite() {
            return domain(format!("threshold T = {} must be finite", self.threshold));
        }
        if let Mode::VariableRate { rates } = &self.mode {
            if rates.len() != self.source.size_x() {
                return domain(format!("{} rates for |X| = {}", rates.len(), self.source.size_x()));
            }
            if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
                return domain(format!("rate {r} is not a finite nonnegative number"));
            }
        }
        self.sequences()?;
        Ok(())
    }
}

fn bins_for(total_rate: f64) -> u64 {
    total_rate.exp().round().clamp(1.0, (1u64 << 62) as f64) as u64
}

/// Counts over a batch of trials.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TrialBatch {
    pub trials: u64,
    pub seed: u64,
    /// Exactly one candidate, the true sequence.
    pub correct_unique: u64,
    /// Exactly one candidate, an incorrect sequence.
    pub wrong_unique: u64,
    /// No candidates.
    pub erasures: u64,
    /// Two or more candidates.
    pub lists: u64,
    /// The true sequence is not a candidate.
    pub e1_count: u64,
    /// At least one incorrect candidate.
    pub e2_count: u64,
    pub candidate_total: u64,
    pub incorrect_total: u64,
    pub max_candidates: u64,
    /// Trials with two or more candidates that all have exactly the same probability.
    pub exact_tie_lists: u64,
    /// `incorrect_histogram[k]` = number of trials with k incorrect candidates.
    pub incorrect_histogram: Vec<u64>,
}

impl TrialBatch {
    fn record(&mut self, o: &Outcome) {
        self.trials += 1;
        match (o.candidates, o.true_is_candidate) {
            (0, _) => self.erasures += 1,
            (1, true) => self.correct_unique += 1,
            (1, false) => self.wrong_unique += 1,
            _ => self.lists += 1,
        }
        let incorrect = o.candidates - u64::from(o.true_is_candidate);
        self.e1_count += u64::from(!o.true_is_candidate);
        self.e2_count += u64::from(incorrect > 0);
        self.candidate_total += o.candidates;
        self.incorrect_total += incorrect;
        self.max_candidates = self.max_candidates.max(o.candidates);
        self.exact_tie_lists += u64::from(o.candidates > 1 && o.tied);
        let k = incorrect as usize;
        if self.incorrect_histogram.len() <= k {
            self.incorrect_histogram.resize(k + 1, 0);
        }
        self.incorrect_histogram[k] += 1;
    }

    fn merge(mut self, other: Self) -> Self {
        self.trials += other.trials;
        self.correct_unique += other.correct_unique;
        self.wrong_unique += other.wrong_unique;
        self.erasures += other.erasures;
        self.lists += other.lists;
        self.e1_count += other.e1_count;
        self.e2_count += other.e2_count;
        self.candidate_total += other.candidate_total;
        self.incorrect_total += other.incorrect_total;
        self.max_candidates = self.max_candidates.max(other.max_candidates);
        self.exact_tie_lists += other.exact_tie_lists;
        if self.incorrect_histogram.len() < other.incorrect_histogram.len() {
            self.incorrect_histogram.resize(other.incorrect_histogram.len(), 0);
        }
        for (a, b) in self.incorrect_histogram.iter_mut().zip(&other.incorrect_histogram) {
            *a += b;
        }
        self
    }

    pub fn e1_rate(&self) -> f64 {
        self.e1_count as f64 / self.trials as f64
    }

    pub fn e2_rate(&self) -> f64 {
        self.e2_count as f64 / self.trials as f64
    }

    pub fn erasure_rate(&self) -> f64 {
        self.erasures as f64 / self.trials as f64
    }

    /// Mean number of candidates per trial.
    pub fn mean_list_size(&self) -> f64 {
        self.candidate_total as f64 / self.trials as f64
    }
}

/// Decoder outcome for one received bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Outcome {
    pub candidates: u64,
    pub true_is_candidate: bool,
    /// All candidates have identical probability.
    pub tied: bool,
}

/// Applies the candidate test to a bin whose members have log-probabilities
/// `lp`; `lp[0]` is the true sequence.
pub(crate) fn evaluate(lp: &[f64], n_threshold: f64) -> Outcome {
    let (mut i1, mut m1, mut m2) = (0, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, &v) in lp.iter().enumerate() {
        if v > m1 {
            m2 = m1;
            m1 = v;
            i1 = i;
        } else if v > m2 {
            m2 = v;
        }
    }
    let scaled_total: f64 = if m1.is_finite() { lp.iter().map(|v| (v - m1).exp()).sum() } else { 0.0 };
    let mut candidates = 0;
    let mut true_is_candidate = false;
    let mut first_lp = None;
    let mut tied = true;
    for (i, &v) in lp.iter().enumerate() {
        if v == f64::NEG_INFINITY {
            continue;
        }
        // ln Σ_{j ≠ i} e^{lp_j}, scaled by the largest remaining term
        let log_rest = if i == i1 {
            if m2 == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                let s: f64 = lp.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, w)| (w - m2).exp()).sum();
                m2 + s.ln()
            }
        } else {
            m1 + (scaled_total - (v - m1).exp()).ln()
        };
        if v - log_rest >= n_threshold {
            candidates += 1;
            true_is_candidate |= i == 0;
            match first_lp {
                None => first_lp = Some(v),
                Some(f) => tied &= f == v,
            }
        }
    }
    Outcome { candidates, true_is_candidate, tied }
}

/// Per-configuration tables shared by all trials.
pub(crate) struct Tables {
    pub k: usize,
    pub n: usize,
    pub size_y: usize,
    pub sequences: u64,
    /// ln P(x,y), indexed [x * |Y| + y].
    pub ln_joint: Vec<f64>,
    pub sampler: WeightedIndex<f64>,
    /// Per-letter rates in variable mode.
    pub letter_rates: Option<Vec<f64>>,
    pub bins: u64,
}

impl Tables {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let src = &cfg.source;
        let flat: Vec<f64> = src.pmf().iter().flatten().copied().collect();
        let ln_joint = flat.iter().map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY }).collect();
        let sampler = WeightedIndex::new(&flat).map_err(|e| Error::InvalidSource(e.to_string()))?;
        let letter_rates = match &cfg.mode {
            Mode::FixedRate => None,
            Mode::VariableRate { rates } => Some(rates.clone()),
        };
        Ok(Self {
            k: src.size_x(),
            n: cfg.n,
            size_y: src.size_y(),
            sequences: cfg.sequences()?,
            ln_joint,
            sampler,
            letter_rates,
            bins: cfg.bins(),
        })
    }

    /// ln P(x', y) from joint type counts, summed in a fixed order so that
    /// sequences of the same joint type get bit-identical values.
    pub fn log_prob(&self, index: u64, y: &[usize], counts: &mut [u32]) -> f64 {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut rest = index;
        for &yi in y {
            let xi = (rest % self.k as u64) as usize;
            rest /= self.k as u64;
            counts[xi * self.size_y + yi] += 1;
        }
        let mut total = 0.0;
        for (&c, &l) in counts.iter().zip(&self.ln_joint) {
            if c > 0 {
                total += c as f64 * l;
            }
        }
        total
    }

    /// Number of bins of sequence `index` (variable mode).
    pub fn bins_of(&self, index: u64) -> u64 {
        match &self.letter_rates {
            None => self.bins,
            Some(r) => {
                let mut rest = index;
                let mut total = 0.0;
                for _ in 0..self.n {
                    total += r[(rest % self.k as u64) as usize];
                    rest /= self.k as u64;
                }
                bins_for(total)
            }
        }
    }

    /// Smallest per-sequence bin count (variable mode).
    fn min_bins(&self) -> u64 {
        match &self.letter_rates {
            None => self.bins,
            Some(r) => bins_for(self.n as f64 * r.iter().copied().fold(f64::INFINITY, f64::min)),
        }
    }
}

/// The random draws of one trial: the source pair and the other members of
/// the true sequence's bin, as sequence indices (digit i is letter i).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialDraw {
    pub x: u64,
    pub y: Vec<usize>,
    pub bin_mates: Vec<u64>,
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn draw(t: &Tables, rng: &mut ChaCha8Rng) -> TrialDraw {
    let mut x = 0u64;
    let mut y = Vec::with_capacity(t.n);
    let mut place = 1u64;
    for _ in 0..t.n {
        let cell = t.sampler.sample(rng);
        x += (cell / t.size_y) as u64 * place;
        y.push(cell % t.size_y);
        place *= t.k as u64;
    }
    let others = t.sequences - 1;
    let (p_max, own_bin) = match t.letter_rates {
        None => (1.0 / t.bins as f64, 0),
        Some(_) => {
            let own_bin = rng.random_range(0..t.bins_of(x));
            (1.0 / t.min_bins() as f64, own_bin)
        }
    };
    let count = if p_max >= 1.0 {
        others
    } else {
        Binomial::new(others, p_max).expect("valid binomial parameters").sample(rng)
    };
    let mut bin_mates: Vec<u64> = index::sample(rng, others as usize, count as usize)
        .iter()
        .map(|j| if (j as u64) < x { j as u64 } else { j as u64 + 1 })
        .collect();
    if t.letter_rates.is_some() {
        // thin to Pr{f(x') = f(x)} = 1{b < M(x')}/M(x')
        bin_mates.retain(|&m| {
            let bins = t.bins_of(m);
            let keep = if own_bin < bins { 1.0 / (bins as f64 * p_max) } else { 0.0 };
            rng.random::<f64>() < keep
        });
    }
    TrialDraw { x, y, bin_mates }
}

/// Re-creates the draws of trial `trial`.
pub fn replay_trial(cfg: &SimConfig, trial: u64) -> Result<TrialDraw> {
    let tables = Tables::new(cfg)?;
    Ok(draw(&tables, &mut trial_rng(cfg.master_seed, trial)))
}

fn run_one(t: &Tables, cfg: &SimConfig, trial: u64, lp: &mut Vec<f64>, counts: &mut [u32]) -> Outcome {
    let d = draw(t, &mut trial_rng(cfg.master_seed, trial));
    lp.clear();
    lp.push(t.log_prob(d.x, &d.y, counts));
    for &m in &d.bin_mates {
        lp.push(t.log_prob(m, &d.y, counts));
    }
    evaluate(lp, cfg.n as f64 * cfg.threshold)
}

/// Runs `cfg.trials` independent trials in parallel.
pub fn run_trials(cfg: &SimConfig) -> Result<TrialBatch> {
    let tables = Tables::new(cfg)?;
    let cells = tables.k * tables.size_y;
    let batch = (0..cfg.trials)
        .into_par_iter()
        .fold(
            || (TrialBatch::default(), Vec::new(), vec![0u32; cells]),
            |(mut b, mut lp, mut counts), trial| {
                let o = run_one(&tables, cfg, trial, &mut lp, &mut counts);
                b.record(&o);
                (b, lp, counts)
            },
        )
        .map(|(b, _, _)| b)
        .reduce(TrialBatch::default, TrialBatch::merge);
    Ok(TrialBatch { seed: cfg.master_seed, ..batch })
}

/// [`run_trials`] on a dedicated pool of `threads` workers.
pub fn run_trials_with_threads(cfg: &SimConfig, threads: usize) -> Result<TrialBatch> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Resource(e.to_string()))?;
    pool.install(|| run_trials(cfg))
}

pub fn write_csv_header(mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")
}

pub fn write_csv_row(mut w: impl Write, cfg: &SimConfig, b: &TrialBatch) -> std::io::Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{}",
        cfg.n,
        cfg.rate,
        cfg.actual_rate(),
        cfg.threshold,
        b.trials,
        b.seed,
        b.e1_count,
        b.e2_count,
        b.erasures,
        b.mean_list_size()
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bss_cfg(n: usize, rate: f64, t: f64, trials: u64, seed: u64) -> SimConfig {
        SimConfig::new(JointSource::bss(0.1).unwrap(), n, rate, t, trials, seed)
    }

    /// Direct probability of a sequence pair, independent of the type-count path.
    fn direct_lp(src: &JointSource, idx: u64, y: &[usize]) -> f64 {
        let k = src.size_x() as u64;
        let mut rest = idx;
        let mut p = 1.0;
        for &yi in y {
            p *= src.prob((rest % k) as usize, yi);
            rest /= k;
        }
        p.ln()
    }

    #[test]
    fn evaluate_basic_cases() {
        let o = evaluate(&[-1.0], 0.0);
        assert_eq!((o.candidates, o.true_is_candidate), (1, true));
        let o = evaluate(&[-1.0, -3.0, -3.0], 0.0);
        assert_eq!((o.candidates, o.true_is_candidate), (1, true));
        let o = evaluate(&[-3.0, -1.0], 0.0);
        assert_eq!((o.candidates, o.true_is_candidate), (1, false));
        let o = evaluate(&[-2.0, -2.0], 0.0);
        assert_eq!((o.candidates, o.tied), (2, true));
        let o = evaluate(&[-2.0, -2.0], 1e-12);
        assert_eq!(o.candidates, 0);
        let o = evaluate(&[-2.0, -2.1, -2.2], -5.0);
        assert_eq!(o.candidates, 3);
        let o = evaluate(&[-1.0, f64::NEG_INFINITY], 3.0);
        assert_eq!(o.candidates, 1);
    }

    #[test]
    fn reproducible_across_thread_counts() {
        let cfg = bss_cfg(8, 0.5, -0.05, 20_000, 99);
        let a = run_trials_with_threads(&cfg, 1).unwrap();
        let b = run_trials_with_threads(&cfg, 4).unwrap();
        let c = run_trials(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.seed, 99);
        assert_eq!(a.correct_unique + a.wrong_unique + a.erasures + a.lists, a.trials);
        assert_eq!(a.incorrect_histogram.iter().sum::<u64>(), a.trials);
    }

    #[test]
    fn recorded_e1_matches_recomputation() {
        let cfg = bss_cfg(8, 0.5, 0.02, 5_000, 5);
        let tables = Tables::new(&cfg).unwrap();
        let mut counts = vec![0u32; 4];
        let mut lp = Vec::new();
        for trial in (0..cfg.trials).step_by(100) {
            let o = run_one(&tables, &cfg, trial, &mut lp, &mut counts);
            let d = replay_trial(&cfg, trial).unwrap();
            let own = direct_lp(&cfg.source, d.x, &d.y);
            let rest: f64 = d.bin_mates.iter().map(|&m| direct_lp(&cfg.source, m, &d.y).exp()).sum();
            let is_candidate = rest == 0.0 || own.exp() / rest >= (cfg.n as f64 * cfg.threshold).exp();
            assert_eq!(!o.true_is_candidate, !is_candidate, "trial {trial}");
            assert!(d.bin_mates.iter().all(|&m| m != d.x && m < 256));
        }
    }

    #[test]
    fn bin_occupancy_matches_binomial_mean() {
        let cfg = bss_cfg(10, 0.4, 0.0, 4_000, 1);
        let total: usize = (0..cfg.trials).map(|t| replay_trial(&cfg, t).unwrap().bin_mates.len()).sum();
        let mean = total as f64 / cfg.trials as f64;
        let want = 1023.0 / cfg.bins() as f64;
        let sd = (want / cfg.trials as f64).sqrt();
        assert!((mean - want).abs() < 4.0 * sd, "{mean} vs {want}");
    }

    #[test]
    fn huge_threshold_erases() {
        let b = run_trials(&bss_cfg(8, 0.5, 10.0, 5_000, 3)).unwrap();
        // only trials whose bin holds nothing but x escape an erasure
        let alone = (1.0 - 1.0 / 55.0f64).powi(255);
        assert!(b.e1_rate() > 1.0 - alone - 0.02, "{}", b.e1_rate());
        assert_eq!(b.e1_count + b.correct_unique, b.trials);
    }

    #[test]
    fn strictly_positive_threshold_never_lists() {
        for &t in &[1e-9, 0.01, 0.2] {
            let b = run_trials(&bss_cfg(6, 0.3, t, 20_000, 11)).unwrap();
            assert!(b.max_candidates <= 1);
        }
        let b = run_trials(&bss_cfg(6, 0.3, 0.0, 20_000, 11)).unwrap();
        assert_eq!(b.lists, b.exact_tie_lists);
    }

    #[test]
    fn e1_frequency_monotone_in_threshold() {
        let mut last = 0;
        for k in 0..6 {
            let t = -0.3 + 0.1 * k as f64;
            let b = run_trials(&bss_cfg(8, 0.5, t, 10_000, 17)).unwrap();
            assert!(b.e1_count >= last);
            last = b.e1_count;
        }
    }

    #[test]
    fn resource_cap() {
        let cfg = SimConfig::new(JointSource::symmetric(4, 0.1).unwrap(), 40, 0.5, 0.0, 10, 1);
        assert!(matches!(run_trials(&cfg), Err(Error::Resource(_))));
    }

    #[test]
    fn variable_rate_constant_assignment_matches_fixed_rate_law() {
        // r ≡ R gives every sequence round(e^{nR}) bins
        let rate = 0.5;
        let fixed = bss_cfg(8, rate, 0.0, 40_000, 21);
        let var = fixed.clone().with_mode(Mode::VariableRate { rates: vec![rate, rate] });
        let a = run_trials(&fixed).unwrap().e1_rate();
        let b = run_trials(&var).unwrap().e1_rate();
        let sd = (a * (1.0 - a) / 40_000.0).sqrt();
        assert!((a - b).abs() < 5.0 * sd, "{a} vs {b}");
    }

    #[test]
    fn csv_row_format() {
        let cfg = bss_cfg(4, 0.5, 0.0, 100, 7);
        let b = run_trials(&cfg).unwrap();
        let mut out = Vec::new();
        write_csv_header(&mut out).unwrap();
        write_csv_row(&mut out, &cfg, &b).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1].split(',').count(), 10);
        assert!(lines[1].starts_with("4,0.5,"));
    }
}
