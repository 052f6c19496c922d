//! Hypothesis-generation timing on synthetic data-association matrices.

use crate::report::TimingRow;
use nalgebra::DMatrix;
use rand::Rng;
use rfisst::association::{
    columns_logscore, count_associations, mcmc_sample_with_rng, AssignmentIter, DataAssociationMatrix, SamplerConfig,
    DEFAULT_ENUMERATION_CAP,
};
use rfisst::engine::{prior_table, PriorNormalization};
use rfisst::homht::MhtWeighting;
use rfisst::mtt::{log_sum_exp, TrackLabel};
use rfisst::rng::{stream, substream};
use rfisst::scenario::Method;
use std::hint::black_box;
use std::time::Instant;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    /// `(M, m)` pairs.
    pub sizes: Vec<(usize, usize)>,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub mcmc_steps: u64,
    pub max_children: usize,
    pub enumeration_cap: u64,
    pub pd: f64,
    /// Each timing is the best of this many runs.
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: default_sizes(),
            methods: vec![Method::Homht, Method::Rfisst],
            seed: 0,
            mcmc_steps: 100_000,
            max_children: 10,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            pd: 0.9,
            repeats: 3,
        }
    }
}

/// Square problems from `A_M` ≈ 2·10² up to ≈ 10³⁴.
pub fn default_sizes() -> Vec<(usize, usize)> {
    [4, 5, 6, 7, 8, 9, 10, 12, 16, 20, 30].iter().map(|&n| (n, n)).collect()
}

/// Random log-likelihoods: every track plausible for every measurement,
/// clutter somewhat less likely.
pub fn synthetic_matrix<R: Rng + ?Sized>(n_tracks: usize, m: usize, rng: &mut R) -> DataAssociationMatrix {
    let ll = DMatrix::from_fn(m, n_tracks + 1, |_, c| {
        if c == n_tracks {
            -9.0
        } else {
            rng.random_range(-8.0..-2.0)
        }
    });
    let labels = (0..n_tracks).map(|i| TrackLabel::new(0, i as u32)).collect();
    DataAssociationMatrix::from_loglik(ll, labels)
}

/// Exhaustive scoring of every association, keeping the best `keep` and the
/// log normalizer. Returns `None` when the count exceeds `cap`.
fn enumerate_and_score(da: &DataAssociationMatrix, pd: f64, keep: usize, cap: u64) -> Option<(f64, usize)> {
    let (m, n) = (da.n_measurements(), da.n_tracks());
    if count_associations(m, n) > cap.into() {
        return None;
    }
    let prior = prior_table(0.0, m, n, pd, MhtWeighting::Mht, PriorNormalization::PerBranch);
    let mut best: Vec<f64> = Vec::with_capacity(2 * keep + 1);
    let mut lse = f64::NEG_INFINITY;
    let mut iter = AssignmentIter::new(m, n);
    while let Some(cols) = iter.next_columns() {
        let s = columns_logscore(cols, da, &prior);
        lse = log_sum_exp(&[lse, s]);
        best.push(s);
        if best.len() > 2 * keep {
            best.sort_by(|x, y| y.total_cmp(x));
            best.truncate(keep);
        }
    }
    best.sort_by(|x, y| y.total_cmp(x));
    best.truncate(keep);
    Some((lse, best.len()))
}

/// Times child generation per size and method. Sizes whose association count
/// exceeds the cap are reported as HOMHT breaks.
pub fn timing_benchmark(cfg: &BenchConfig) -> Vec<TimingRow> {
    let mut rows = Vec::new();
    for (i, &(n, m)) in cfg.sizes.iter().enumerate() {
        let mut rng = substream(cfg.seed, &[stream::BENCH, i as u64]);
        let da = synthetic_matrix(n, m, &mut rng);
        let a_m = count_associations(m, n);
        for &method in &cfg.methods {
            let row = match method {
                Method::Homht => {
                    // best of at least `repeats` runs; short problems are
                    // repeated for up to 0.2 s, and no size gets more than ~1 s
                    let mut ns = u64::MAX;
                    let (mut spent, mut runs) = (0u64, 0);
                    let out = loop {
                        let start = Instant::now();
                        let out = black_box(enumerate_and_score(&da, cfg.pd, cfg.max_children, cfg.enumeration_cap));
                        let t = start.elapsed().as_nanos() as u64;
                        ns = ns.min(t);
                        spent += t;
                        runs += 1;
                        let enough = runs >= cfg.repeats.max(1) && spent > 200_000_000;
                        if out.is_none() || enough || spent > 1_000_000_000 || runs >= 10_000 {
                            break out;
                        }
                    };
                    TimingRow {
                        n_tracks: n,
                        m,
                        a_m: a_m.clone(),
                        method,
                        nanoseconds: out.is_some().then_some(ns),
                        steps: None,
                        broke: out.is_none(),
                    }
                }
                Method::Rfisst => {
                    let prior = prior_table(0.0, m, n, cfg.pd, MhtWeighting::Hfisst, PriorNormalization::PerBranch);
                    let sc = SamplerConfig::with_total_steps(cfg.mcmc_steps, cfg.max_children, cfg.seed);
                    let chain = substream(cfg.seed, &[stream::BENCH, i as u64, 1]);
                    let mut ns = u64::MAX;
                    let mut steps = 0;
                    for _ in 0..cfg.repeats.max(1) {
                        let mut chain = chain.clone();
                        let start = Instant::now();
                        let out = black_box(mcmc_sample_with_rng(&da, &prior, &sc, &mut chain));
                        ns = ns.min(start.elapsed().as_nanos() as u64);
                        steps = out.steps;
                    }
                    TimingRow {
                        n_tracks: n,
                        m,
                        a_m: a_m.clone(),
                        method,
                        nanoseconds: Some(ns),
                        steps: Some(steps),
                        broke: false,
                    }
                }
            };
            rows.push(row);
        }
    }
    rows
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
