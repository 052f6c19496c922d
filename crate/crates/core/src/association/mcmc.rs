//! Metropolis sampling of children over the data-association matrix.
//!
//! A proposal picks a measurement row uniformly and a column uniformly among
//! the `M` tracks and clutter. If the chosen track already owns another
//! measurement, that measurement is moved to clutter. Proposals are accepted
//! with probability `min(1, p'/p)` where `p` is the unnormalized child score.

use super::{Assignment, AssociationError, DataAssociationMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SamplerConfig {
    pub burn_in: u64,
    pub post_burn_steps: u64,
    /// Children kept per parent branch (`C`).
    pub max_distinct: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            burn_in: 10_000,
            post_burn_steps: 90_000,
            max_distinct: 10,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    /// Splits `total` steps into a tenth of burn-in and the rest recorded.
    pub fn with_total_steps(total: u64, max_distinct: usize, seed: u64) -> Self {
        let burn_in = total / 10;
        Self {
            burn_in,
            post_burn_steps: (total - burn_in).max(1),
            max_distinct,
            seed,
        }
    }

    pub fn total_steps(&self) -> u64 {
        self.burn_in + self.post_burn_steps
    }

    pub fn validate(&self) -> Result<(), AssociationError> {
        if self.post_burn_steps == 0 {
            return Err(AssociationError::InvalidConfig(
                "post_burn_steps must be at least 1".into(),
            ));
        }
        if self.max_distinct == 0 {
            return Err(AssociationError::InvalidConfig(
                "max_distinct must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Log association prior indexed by the number `k` of measurements assigned
/// to tracks; entries beyond the table are `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationPrior {
    log_by_k: Vec<f64>,
}

impl AssociationPrior {
    pub fn new(log_by_k: Vec<f64>) -> Self {
        Self { log_by_k }
    }

    /// Flat prior over `0..=max_k`.
    pub fn flat(max_k: usize) -> Self {
        Self::new(vec![0.0; max_k + 1])
    }

    #[inline]
    pub fn log_prior(&self, k: usize) -> f64 {
        self.log_by_k.get(k).copied().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn table(&self) -> &[f64] {
        &self.log_by_k
    }
}

/// `log p_ij + Σ_i da[i, a(i)]`: the unnormalized log weight of a child,
/// up to the parent's own log weight.
pub fn association_logscore(a: &Assignment, da: &DataAssociationMatrix, prior: &AssociationPrior) -> f64 {
    debug_assert_eq!(a.len(), da.n_measurements());
    debug_assert_eq!(a.n_tracks(), da.n_tracks());
    columns_logscore(a.columns(), da, prior)
}

/// [`association_logscore`] of a bare column vector.
pub fn columns_logscore(columns: &[usize], da: &DataAssociationMatrix, prior: &AssociationPrior) -> f64 {
    let clutter = da.clutter_column();
    let k = columns.iter().filter(|&&c| c < clutter).count();
    let mut sum = prior.log_prior(k);
    for (row, &col) in columns.iter().enumerate() {
        sum += da.entry(row, col);
    }
    if sum.is_nan() {
        f64::NEG_INFINITY
    } else {
        sum
    }
}

/// Sets measurement `row` to column `col`. A track already owned by another
/// row is taken over and that row falls back to clutter.
pub fn apply_move(a: &Assignment, row: usize, col: usize) -> Assignment {
    let mut next = a.clone();
    let clutter = a.clutter_column();
    if col < clutter {
        if let Some(other) = next.columns().iter().position(|&c| c == col).filter(|&o| o != row) {
            next.columns_mut()[other] = clutter;
        }
    }
    next.columns_mut()[row] = col;
    next
}

/// Uniform row, uniform column over tracks and clutter.
pub fn propose<R: Rng + ?Sized>(a: &Assignment, rng: &mut R) -> Assignment {
    assert!(!a.is_empty(), "proposal needs at least one measurement");
    let row = rng.random_range(0..a.len());
    let col = rng.random_range(0..=a.n_tracks());
    apply_move(a, row, col)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredAssignment {
    pub assignment: Assignment,
    pub logscore: f64,
}

#[derive(Debug, Clone)]
pub struct McmcOutcome {
    /// Up to `max_distinct` best distinct finite-score maps, best first.
    pub children: Vec<ScoredAssignment>,
    /// Every distinct map visited after burn-in with its visit count, best first.
    pub visits: Vec<(ScoredAssignment, u64)>,
    pub steps: u64,
    pub accepted: u64,
}

/// Greedy start: each row in turn takes its best still-free column.
fn greedy_start(da: &DataAssociationMatrix) -> Assignment {
    let n = da.n_tracks();
    let mut a = Assignment::all_clutter(da.n_measurements(), n);
    let mut used = vec![false; n];
    for row in 0..da.n_measurements() {
        let mut best = (n, da.entry(row, n));
        for (col, &taken) in used.iter().enumerate() {
            let v = da.entry(row, col);
            if !taken && v > best.1 {
                best = (col, v);
            }
        }
        if best.0 < n {
            used[best.0] = true;
        }
        a.columns_mut()[row] = best.0;
    }
    a
}

fn sort_best_first(v: &mut [ScoredAssignment]) {
    v.sort_by(|x, y| {
        y.logscore
            .total_cmp(&x.logscore)
            .then_with(|| x.assignment.cmp(&y.assignment))
    });
}

/// Runs the chain with a fresh generator seeded from `cfg.seed`.
pub fn mcmc_sample(da: &DataAssociationMatrix, prior: &AssociationPrior, cfg: &SamplerConfig) -> Vec<ScoredAssignment> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    mcmc_sample_with_rng(da, prior, cfg, &mut rng).children
}

pub fn mcmc_sample_with_rng<R: Rng + ?Sized>(
    da: &DataAssociationMatrix,
    prior: &AssociationPrior,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> McmcOutcome {
    let (m, n) = (da.n_measurements(), da.n_tracks());
    let clutter = n;
    if m == 0 {
        let a = Assignment::all_clutter(0, n);
        let s = ScoredAssignment {
            logscore: association_logscore(&a, da, prior),
            assignment: a,
        };
        return McmcOutcome {
            children: vec![s.clone()],
            visits: vec![(s, 1)],
            steps: 0,
            accepted: 0,
        };
    }

    let mut state = greedy_start(da);
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (row, &c) in state.columns().iter().enumerate() {
        if c < n {
            owner[c] = Some(row);
        }
    }
    let mut k = state.associated_count();
    let mut entry_sum: f64 = (0..m).map(|r| da.entry(r, state.columns()[r])).sum();
    let mut score = prior.log_prior(k) + entry_sum;

    let mut table: HashMap<Vec<usize>, (f64, u64)> = HashMap::new();
    let mut pending_visits = 0u64;
    let flush = |table: &mut HashMap<Vec<usize>, (f64, u64)>, state: &Assignment, visits: u64| {
        if visits > 0 {
            table
                .entry(state.columns().to_vec())
                .or_insert_with(|| (association_logscore(state, da, prior), 0))
                .1 += visits;
        }
    };

    let total = cfg.burn_in + cfg.post_burn_steps.max(1);
    let mut accepted = 0u64;
    for step in 0..total {
        let row = rng.random_range(0..m);
        let col = rng.random_range(0..=n);
        let old = state.columns()[row];
        if col != old {
            let conflict = if col < n { owner[col] } else { None };
            let new_k = k + usize::from(col < n) - usize::from(old < n) - usize::from(conflict.is_some());
            let new_sum = if entry_sum.is_finite() {
                let mut s = entry_sum - da.entry(row, old) + da.entry(row, col);
                if let Some(o) = conflict {
                    s += da.entry(o, clutter) - da.entry(o, col);
                }
                s
            } else {
                // recompute from scratch; the running sum carries -inf
                (0..m)
                    .map(|r| {
                        let c = if r == row {
                            col
                        } else if Some(r) == conflict {
                            clutter
                        } else {
                            state.columns()[r]
                        };
                        da.entry(r, c)
                    })
                    .sum()
            };
            let new_score = prior.log_prior(new_k) + new_sum;
            let accept = if score == f64::NEG_INFINITY || new_score >= score {
                true
            } else if new_score == f64::NEG_INFINITY || new_score.is_nan() {
                false
            } else {
                rng.random::<f64>() < (new_score - score).exp()
            };
            if accept {
                if step >= cfg.burn_in {
                    flush(&mut table, &state, pending_visits);
                    pending_visits = 0;
                }
                let cols = state.columns_mut();
                if let Some(o) = conflict {
                    cols[o] = clutter;
                }
                cols[row] = col;
                if old < n {
                    owner[old] = None;
                }
                if col < n {
                    owner[col] = Some(row);
                }
                k = new_k;
                entry_sum = (0..m).map(|r| da.entry(r, state.columns()[r])).sum();
                score = prior.log_prior(k) + entry_sum;
                if score.is_nan() {
                    score = f64::NEG_INFINITY;
                }
                accepted += 1;
            }
        }
        if step >= cfg.burn_in {
            pending_visits += 1;
        }
    }
    flush(&mut table, &state, pending_visits);

    let mut visits: Vec<(ScoredAssignment, u64)> = table
        .into_iter()
        .map(|(cols, (logscore, v))| {
            (
                ScoredAssignment {
                    assignment: Assignment {
                        columns: cols,
                        n_tracks: n,
                    },
                    logscore,
                },
                v,
            )
        })
        .collect();
    visits.sort_by(|x, y| {
        y.0.logscore
            .total_cmp(&x.0.logscore)
            .then_with(|| x.0.assignment.cmp(&y.0.assignment))
    });
    let mut children: Vec<ScoredAssignment> = visits
        .iter()
        .filter(|(s, _)| s.logscore > f64::NEG_INFINITY)
        .take(cfg.max_distinct.max(1))
        .map(|(s, _)| s.clone())
        .collect();
    if children.is_empty() {
        let logscore = association_logscore(&state, da, prior);
        children.push(ScoredAssignment {
            assignment: state,
            logscore,
        });
    }
    sort_best_first(&mut children);
    McmcOutcome {
        children,
        visits,
        steps: total,
        accepted,
    }
}
