//! The hypothesis-level recursion: birth/death branches, child generation,
//! weight update over all children of all parents, pruning and cardinality.

mod prior;
mod scan;

pub use prior::{
    association_prior, branch_factor, ln_association_prior, ln_detection_mass, ln_detection_term, ln_falling_factorial,
    prior_table, spawn_children, PriorNormalization,
};
pub use scan::scan;

use crate::association::{AssociationError, LikelihoodForm, SamplerConfig, DEFAULT_ENUMERATION_CAP};
use crate::gaussian::{predict_track, update_track, DynamicsModel, FilterError, MeasurementModel};
use crate::homht::MhtWeighting;
use crate::mtt::{
    canonical_key, normalize_log_weights, Assoc, AssociationMap, BranchTag, Hypothesis, HypothesisForest, HypothesisId,
    Measurement, MttError, StateCovariance, StateVector, Track, TrackLabel,
};
use crate::rng::{stream, substream};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("birth/death rates too large for one-event model (M_b α + M_d β = {total})")]
    BirthDeathRates { total: f64 },
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Association(#[from] AssociationError),
    #[error(transparent)]
    Forest(#[from] MttError),
    #[error("association {map:?} does not fit the predicted hypothesis")]
    InconsistentAssociation { map: AssociationMap },
}

/// Detection and clutter side of the sensor.
pub trait SensorModel: Send + Sync {
    /// `pD` for an object the sensor observes.
    fn detection_probability(&self) -> f64;
    /// Whether an object at `position` can be detected at all.
    fn observes(&self, position: &Measurement) -> bool;
    /// `ln g(z)`.
    fn clutter_log_density(&self, z: &Measurement) -> f64;
}

/// Sees everything with the same `pD` and a constant clutter density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformSensor {
    pub pd: f64,
    pub clutter_log_density: f64,
}

impl UniformSensor {
    pub fn new(pd: f64, clutter_log_density: f64) -> Self {
        Self {
            pd,
            clutter_log_density,
        }
    }
}

impl SensorModel for UniformSensor {
    fn detection_probability(&self) -> f64 {
        self.pd
    }
    fn observes(&self, _: &Measurement) -> bool {
        true
    }
    fn clutter_log_density(&self, _: &Measurement) -> f64 {
        self.clutter_log_density
    }
}

#[derive(Clone, Copy)]
pub struct Models<'a> {
    pub dynamics: &'a dyn DynamicsModel,
    pub measurement: &'a dyn MeasurementModel,
    pub sensor: &'a dyn SensorModel,
}

/// Gaussian pdf of an object born in one partition of the field of view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirthPdf {
    pub mean: StateVector,
    pub covariance: StateCovariance,
}

/// Which predicted tracks may die this scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeathCandidates {
    /// Tracks whose predicted mean is inside the field of view.
    #[default]
    Observable,
    All,
}

impl DeathCandidates {
    pub fn admits(&self, track: &Track, sensor: &dyn SensorModel) -> bool {
        match self {
            DeathCandidates::Observable => sensor.observes(&track.position()),
            DeathCandidates::All => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BirthDeathConfig {
    pub alpha: f64,
    pub beta: f64,
    pub birth_pdfs: Vec<BirthPdf>,
    #[serde(default)]
    pub death_candidates: DeathCandidates,
}

impl BirthDeathConfig {
    /// No births and no deaths.
    pub fn none() -> Self {
        Self::default()
    }

    pub fn birth_count(&self) -> usize {
        self.birth_pdfs.len()
    }
}

/// How children of one parent branch are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChildGenerator {
    Mcmc(SamplerConfig),
    /// Every association; more than `cap` feasible ones is an error.
    Exhaustive {
        cap: u64,
    },
}

impl Default for ChildGenerator {
    fn default() -> Self {
        ChildGenerator::Mcmc(SamplerConfig::default())
    }
}

impl ChildGenerator {
    pub fn exhaustive() -> Self {
        ChildGenerator::Exhaustive {
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pruning {
    /// Keep the `H_inf` heaviest.
    #[default]
    TopK,
    /// Weighted sampling of `H_inf` without replacement.
    Resample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Seconds since the previous scan.
    pub dt: f64,
    pub h_inf: usize,
    pub generator: ChildGenerator,
    pub weighting: MhtWeighting,
    pub normalization: PriorNormalization,
    /// Squared Mahalanobis gate, `None` for no gating.
    pub gate: Option<f64>,
    pub likelihood: LikelihoodForm,
    /// Master seed of the per-parent, per-branch streams.
    pub seed: u64,
    /// Children below this normalized weight are dropped before pruning.
    pub weight_floor: f64,
    pub pruning: Pruning,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            dt: 30.0,
            h_inf: 100,
            generator: ChildGenerator::default(),
            weighting: MhtWeighting::Hfisst,
            normalization: PriorNormalization::PerBranch,
            gate: None,
            likelihood: LikelihoodForm::Marginal,
            seed: 0,
            weight_floor: 1e-12,
            pruning: Pruning::TopK,
        }
    }
}

impl ScanOptions {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.h_inf == 0 {
            return Err(EngineError::InvalidConfig("H_inf must be at least 1".into()));
        }
        if !(self.dt >= 0.0) || !self.dt.is_finite() {
            return Err(EngineError::InvalidConfig(format!("scan interval {}", self.dt)));
        }
        if let ChildGenerator::Mcmc(cfg) = &self.generator {
            cfg.validate()?;
        }
        Ok(())
    }
}

/// Distribution of the number of objects over the forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cardinality {
    pub distribution: BTreeMap<usize, f64>,
    pub mean: f64,
    pub mode: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub scan: u32,
    pub hypothesis_count: usize,
    pub weights: Vec<(HypothesisId, f64)>,
    pub cardinality: Cardinality,
    /// Wall-clock nanoseconds spent generating and scoring children.
    pub generation_ns: u64,
    pub mcmc_steps: u64,
    pub distinct_children: usize,
    /// Largest `(M, m)` data-association problem of the scan.
    pub largest_problem: (usize, usize),
    pub warnings: Vec<String>,
}

fn birth_label(scan: u32, l: u32) -> TrackLabel {
    TrackLabel::new(scan, l)
}

/// Applies a branch to already predicted tracks. A birth appends the
/// partition pdf labeled for `new_scan`; a death removes the track.
pub fn apply_branch(
    predicted: &[Track],
    tag: BranchTag,
    bd: &BirthDeathConfig,
    new_scan: u32,
) -> Result<Vec<Track>, EngineError> {
    match tag {
        BranchTag::NoBirthDeath => Ok(predicted.to_vec()),
        BranchTag::Death(label) => {
            if !predicted.iter().any(|t| t.label == label) {
                return Err(EngineError::InvalidConfig(format!("no track {label} to kill")));
            }
            Ok(predicted.iter().filter(|t| t.label != label).cloned().collect())
        }
        BranchTag::Birth(l) => {
            let pdf = bd
                .birth_pdfs
                .get(l as usize)
                .ok_or_else(|| EngineError::InvalidConfig(format!("birth partition {l} out of range")))?;
            let mut tracks = predicted.to_vec();
            tracks.push(Track::new(birth_label(new_scan, l), pdf.mean, pdf.covariance));
            Ok(tracks)
        }
    }
}

/// Predicts every track of `parent` and applies `tag`. The result carries no
/// meaningful weight.
pub fn predict_hypothesis(
    parent: &Hypothesis,
    tag: BranchTag,
    dynamics: &dyn DynamicsModel,
    dt: f64,
    bd: &BirthDeathConfig,
    new_scan: u32,
) -> Result<Hypothesis, EngineError> {
    let predicted = parent
        .tracks
        .iter()
        .map(|t| predict_track(t, dynamics, dt))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Hypothesis {
        id: parent.id,
        tracks: apply_branch(&predicted, tag, bd, new_scan)?,
        log_weight: 0.0,
        lineage: None,
    })
}

/// Kalman-updates the tracks named in `map`. `Assoc::Birth` refers to the
/// birthed track, which is the last one of a birth branch. Returns the child
/// and `ln l_ij`.
pub fn update_child(
    pred: &Hypothesis,
    map: &AssociationMap,
    measurements: &[Measurement],
    meas: &dyn MeasurementModel,
    clutter_log_density: &dyn Fn(&Measurement) -> f64,
) -> Result<(Hypothesis, f64), EngineError> {
    if map.len() != measurements.len() || !map.is_one_to_one() {
        return Err(EngineError::InconsistentAssociation { map: map.clone() });
    }
    let mut child = pred.clone();
    let mut loglik = 0.0;
    for (a, z) in map.assignments.iter().zip(measurements) {
        let idx = match a {
            Assoc::Clutter => {
                loglik += clutter_log_density(z);
                continue;
            }
            Assoc::Track(label) => child.tracks.iter().position(|t| t.label == *label),
            Assoc::Birth(_) => child.tracks.len().checked_sub(1),
        }
        .ok_or_else(|| EngineError::InconsistentAssociation { map: map.clone() })?;
        let (updated, ll) = update_track(&child.tracks[idx], z, meas)?;
        child.tracks[idx] = updated;
        loglik += ll;
    }
    Ok((child, loglik))
}

/// Prediction without a sensor report: every track is propagated, weights
/// and hypothesis structure are kept.
pub fn time_update(
    forest: &HypothesisForest,
    dynamics: &dyn DynamicsModel,
    dt: f64,
) -> Result<HypothesisForest, EngineError> {
    let hypotheses = forest
        .hypotheses
        .iter()
        .map(|h| {
            Ok(Hypothesis {
                tracks: h
                    .tracks
                    .iter()
                    .map(|t| predict_track(t, dynamics, dt))
                    .collect::<Result<Vec<_>, FilterError>>()?,
                ..h.clone()
            })
        })
        .collect::<Result<Vec<_>, EngineError>>()?;
    Ok(HypothesisForest {
        hypotheses,
        scan_index: forest.scan_index + 1,
    })
}

fn order_best_first(hyps: &mut [Hypothesis]) {
    hyps.sort_by(|a, b| {
        b.log_weight
            .total_cmp(&a.log_weight)
            .then_with(|| canonical_key(a).cmp(&canonical_key(b)))
    });
}

/// Keeps the `h_inf` heaviest hypotheses, ties broken by canonical key, and
/// renormalizes.
pub fn prune(forest: HypothesisForest, h_inf: usize) -> Result<HypothesisForest, EngineError> {
    prune_with(forest, h_inf, Pruning::TopK, 0)
}

pub(crate) fn prune_with(
    mut forest: HypothesisForest,
    h_inf: usize,
    pruning: Pruning,
    seed: u64,
) -> Result<HypothesisForest, EngineError> {
    if h_inf == 0 {
        return Err(EngineError::InvalidConfig("H_inf must be at least 1".into()));
    }
    order_best_first(&mut forest.hypotheses);
    if forest.hypotheses.len() > h_inf {
        match pruning {
            Pruning::TopK => forest.hypotheses.truncate(h_inf),
            Pruning::Resample => {
                // Efraimidis–Spirakis keys: u^(1/w), largest keys win
                let mut rng = substream(seed, &[stream::PRUNE, forest.scan_index as u64]);
                let mut keyed: Vec<(f64, Hypothesis)> = forest
                    .hypotheses
                    .drain(..)
                    .map(|h| {
                        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                        (u.ln() / h.weight(), h)
                    })
                    .collect();
                keyed.sort_by(|a, b| b.0.total_cmp(&a.0));
                forest.hypotheses = keyed.into_iter().take(h_inf).map(|(_, h)| h).collect();
                order_best_first(&mut forest.hypotheses);
            }
        }
    }
    let mut lw: Vec<f64> = forest.hypotheses.iter().map(|h| h.log_weight).collect();
    normalize_log_weights(&mut lw)?;
    for (h, w) in forest.hypotheses.iter_mut().zip(lw) {
        h.log_weight = w;
    }
    Ok(forest)
}

/// Weight mass per number of tracks, its mean and its mode (ties go to the
/// larger count).
pub fn expected_object_count(forest: &HypothesisForest) -> Cardinality {
    let mut distribution = BTreeMap::new();
    for h in &forest.hypotheses {
        *distribution.entry(h.tracks.len()).or_insert(0.0) += h.weight();
    }
    let mean = distribution.iter().map(|(&n, &p)| n as f64 * p).sum();
    let mode = distribution
        .iter()
        .fold(
            (0usize, f64::NEG_INFINITY),
            |best, (&n, &p)| {
                if p >= best.1 {
                    (n, p)
                } else {
                    best
                }
            },
        )
        .0;
    Cardinality {
        distribution,
        mean,
        mode,
    }
}
