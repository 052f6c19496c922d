//! Hypothesis-level multi-object tracking.
//!
//! The multi-object posterior is carried as a weighted forest of discrete
//! hypotheses, each holding an independent Gaussian belief per object. Every
//! scan a parent splits into birth/death branches and data-association
//! children; child weights are the parent weight times the association prior
//! times the association likelihood, normalized over all children of all
//! parents. Children are either enumerated exhaustively or sampled with a
//! Metropolis chain over the data-association matrix, which keeps the
//! recursion tractable when the number of possible associations explodes.
//!
//! Module map:
//!
//! * [`mtt`]: tracks, hypotheses, forests and weight bookkeeping.
//! * [`gaussian`]: single-object extended Kalman filter and marginal likelihood.
//! * [`association`]: association counting, the data-association matrix,
//!   exhaustive enumeration and the MCMC sampler.
//! * [`engine`]: the per-scan recursion with birth/death branches and pruning.
//! * [`homht`]: the hypothesis-oriented MHT weighting on top of the same engine.
//! * [`ssa`]: planar two-body dynamics, the angular field-of-view sensor and
//!   birth partitions.
//! * [`scenario`]: ground truth and measurement generation, estimate scoring.
//! * [`oracle`]: independent brute-force implementations used for verification.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod association;
pub mod engine;
pub mod gaussian;
pub mod homht;
pub mod mtt;
pub mod oracle;
pub mod rng;
pub mod scenario;
pub mod ssa;

pub use association::{count_associations, Assignment, AssociationPrior, DataAssociationMatrix, SamplerConfig};
pub use engine::{BirthDeathConfig, ChildGenerator, Models, ScanOptions, ScanReport, SensorModel};
pub use gaussian::{DynamicsModel, MeasurementModel};
pub use mtt::{Assoc, AssociationMap, BranchTag, Hypothesis, HypothesisForest, HypothesisId, Track, TrackLabel};
