//! Domain types shared by every other module: tracks, hypotheses, the
//! hypothesis forest and log-space weight bookkeeping.

use nalgebra::{Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Planar state `[x km, y km, vx km/s, vy km/s]`.
pub type StateVector = Vector4<f64>;
pub type StateCovariance = Matrix4<f64>;
/// Position measurement `[x km, y km]`.
pub type Measurement = Vector2<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MttError {
    #[error("degenerate forest: every hypothesis has zero weight")]
    DegenerateForest,
    #[error("forest has no hypotheses")]
    EmptyForest,
}

/// Stable track identifier.
///
/// Tracks present in the initial hypothesis use `scan = 0` and their position
/// in that hypothesis; a birthed track uses the scan it was born on and the
/// birth partition index. At most one birth happens per scan along a lineage,
/// so labels never collide inside one hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrackLabel {
    pub scan: u32,
    pub index: u32,
}

impl TrackLabel {
    pub fn new(scan: u32, index: u32) -> Self {
        Self { scan, index }
    }
}

impl fmt::Display for TrackLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}.{}", self.scan, self.index)
    }
}

/// A labeled single-object Gaussian belief.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub label: TrackLabel,
    pub mean: StateVector,
    pub covariance: StateCovariance,
}

impl Track {
    pub fn new(label: TrackLabel, mean: StateVector, covariance: StateCovariance) -> Self {
        Self {
            label,
            mean,
            covariance,
        }
    }

    pub fn position(&self) -> Measurement {
        Vector2::new(self.mean[0], self.mean[1])
    }
}

/// Where one measurement of a scan is assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Assoc {
    /// Updates an existing track.
    Track(TrackLabel),
    /// Updates the track birthed in partition `l` on this branch.
    Birth(u32),
    Clutter,
}

/// Assignment of each measurement slot (in measurement order) to a track,
/// a birthed track or clutter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct AssociationMap {
    pub assignments: Vec<Assoc>,
}

impl AssociationMap {
    pub fn new(assignments: Vec<Assoc>) -> Self {
        Self { assignments }
    }

    pub fn all_clutter(m: usize) -> Self {
        Self {
            assignments: vec![Assoc::Clutter; m],
        }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Number of measurements that update a track (birthed ones included).
    pub fn associated_count(&self) -> usize {
        self.assignments.iter().filter(|a| !matches!(a, Assoc::Clutter)).count()
    }

    /// True when no track (or birth) receives two measurements.
    pub fn is_one_to_one(&self) -> bool {
        let mut seen: Vec<&Assoc> = self
            .assignments
            .iter()
            .filter(|a| !matches!(a, Assoc::Clutter))
            .collect();
        seen.sort();
        seen.windows(2).all(|w| w[0] != w[1])
    }
}

/// Birth/death branch a child hypothesis was generated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BranchTag {
    NoBirthDeath,
    Birth(u32),
    Death(TrackLabel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HypothesisId(pub u64);

impl HypothesisId {
    /// Identifier of the `rank`-th hypothesis kept after scan `scan`.
    pub fn for_scan(scan: u32, rank: u32) -> Self {
        Self(((scan as u64) << 32) | rank as u64)
    }
}

impl fmt::Display for HypothesisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.0 >> 32, self.0 & 0xffff_ffff)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub parent: HypothesisId,
    pub branch: BranchTag,
    pub association: AssociationMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub id: HypothesisId,
    pub tracks: Vec<Track>,
    /// Natural log of the hypothesis probability.
    pub log_weight: f64,
    pub lineage: Option<Lineage>,
}

impl Hypothesis {
    pub fn root(id: HypothesisId, tracks: Vec<Track>, log_weight: f64) -> Self {
        Self {
            id,
            tracks,
            log_weight,
            lineage: None,
        }
    }

    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }

    pub fn track(&self, label: TrackLabel) -> Option<&Track> {
        self.tracks.iter().find(|t| t.label == label)
    }

    pub fn labels_distinct(&self) -> bool {
        let mut labels: Vec<_> = self.tracks.iter().map(|t| t.label).collect();
        labels.sort();
        labels.windows(2).all(|w| w[0] != w[1])
    }
}

/// Duplicate-detection key. Roots are keyed by id, children by their lineage.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HypothesisKey {
    Root(HypothesisId),
    Child {
        parent: HypothesisId,
        branch: BranchTag,
        association: Vec<Assoc>,
    },
}

pub fn canonical_key(h: &Hypothesis) -> HypothesisKey {
    match &h.lineage {
        None => HypothesisKey::Root(h.id),
        Some(l) => HypothesisKey::Child {
            parent: l.parent,
            branch: l.branch,
            association: l.association.assignments.clone(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisForest {
    pub hypotheses: Vec<Hypothesis>,
    pub scan_index: u32,
}

impl HypothesisForest {
    /// A forest holding one certain hypothesis.
    pub fn single(tracks: Vec<Track>) -> Self {
        Self {
            hypotheses: vec![Hypothesis::root(HypothesisId::for_scan(0, 0), tracks, 0.0)],
            scan_index: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.hypotheses.iter().map(Hypothesis::weight).collect()
    }

    /// Highest-weight hypothesis; ties go to the smaller canonical key.
    pub fn top(&self) -> Option<&Hypothesis> {
        self.hypotheses.iter().min_by(|a, b| {
            b.log_weight
                .total_cmp(&a.log_weight)
                .then_with(|| canonical_key(a).cmp(&canonical_key(b)))
        })
    }
}

/// Log-sum-exp of finite entries; `-inf` when none are finite.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values
        .iter()
        .copied()
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    let sum: f64 = values.iter().filter(|v| !v.is_nan()).map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Normalizes natural-log weights in place so that their exponentials sum to one.
pub fn normalize_log_weights(log_weights: &mut [f64]) -> Result<(), MttError> {
    if log_weights.is_empty() {
        return Err(MttError::EmptyForest);
    }
    let lse = log_sum_exp(log_weights);
    if !lse.is_finite() {
        return Err(MttError::DegenerateForest);
    }
    for w in log_weights.iter_mut() {
        *w = if w.is_nan() { f64::NEG_INFINITY } else { *w - lse };
    }
    Ok(())
}

pub fn normalize_weights(mut forest: HypothesisForest) -> Result<HypothesisForest, MttError> {
    let mut lw: Vec<f64> = forest.hypotheses.iter().map(|h| h.log_weight).collect();
    normalize_log_weights(&mut lw)?;
    for (h, w) in forest.hypotheses.iter_mut().zip(lw) {
        h.log_weight = w;
    }
    Ok(forest)
}
