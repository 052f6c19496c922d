//! Data associations: counting, the data-association matrix, exhaustive
//! enumeration and the Metropolis sampler over the matrix.

mod count;
mod enumerate;
mod matrix;
mod mcmc;

pub use count::{count_associations, count_associations_f64};
pub use enumerate::{enumerate_associations, enumerate_feasible, AssignmentIter, DEFAULT_ENUMERATION_CAP};
pub use matrix::{DataAssociationMatrix, LikelihoodForm, DEFAULT_GATE};
pub use mcmc::{
    apply_move, association_logscore, columns_logscore, mcmc_sample, mcmc_sample_with_rng, propose, AssociationPrior,
    McmcOutcome, SamplerConfig, ScoredAssignment,
};

use crate::mtt::{Assoc, AssociationMap};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssociationError {
    #[error("exhaustive enumeration infeasible: {count} associations exceed the cap of {cap}")]
    EnumerationInfeasible { count: String, cap: u64 },
    #[error("assignment of length {got} does not match {expected} measurements")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
}

/// Measurement-to-column assignment over a data-association matrix.
///
/// `columns[i]` is the matrix column of measurement `i`; column `n_tracks`
/// is clutter. Ordering is lexicographic on the column vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    columns: Vec<usize>,
    n_tracks: usize,
}

impl Assignment {
    pub fn all_clutter(m: usize, n_tracks: usize) -> Self {
        Self {
            columns: vec![n_tracks; m],
            n_tracks,
        }
    }

    /// Builds an assignment, checking one-to-one use of track columns.
    pub fn from_columns(columns: Vec<usize>, n_tracks: usize) -> Option<Self> {
        let a = Self { columns, n_tracks };
        a.is_valid().then_some(a)
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn n_tracks(&self) -> usize {
        self.n_tracks
    }

    pub fn clutter_column(&self) -> usize {
        self.n_tracks
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn is_clutter(&self, row: usize) -> bool {
        self.columns[row] == self.n_tracks
    }

    /// Number of measurements assigned to tracks.
    pub fn associated_count(&self) -> usize {
        self.columns.iter().filter(|&&c| c != self.n_tracks).count()
    }

    pub fn is_valid(&self) -> bool {
        let mut used = vec![false; self.n_tracks];
        for &c in &self.columns {
            if c > self.n_tracks {
                return false;
            }
            if c < self.n_tracks {
                if used[c] {
                    return false;
                }
                used[c] = true;
            }
        }
        true
    }

    /// Converts matrix columns to labels; `birth` maps a column to its birth
    /// partition when the column holds a birthed track.
    pub fn to_map(&self, da: &DataAssociationMatrix, birth: impl Fn(usize) -> Option<u32>) -> AssociationMap {
        AssociationMap::new(
            self.columns
                .iter()
                .map(|&c| {
                    if c == self.n_tracks {
                        Assoc::Clutter
                    } else if let Some(l) = birth(c) {
                        Assoc::Birth(l)
                    } else {
                        Assoc::Track(da.track_labels()[c])
                    }
                })
                .collect(),
        )
    }

    pub(crate) fn columns_mut(&mut self) -> &mut Vec<usize> {
        &mut self.columns
    }
}
