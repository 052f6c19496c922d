//! Hypothesis-oriented MHT on top of the same engine.
//!
//! HOMHT enumerates every association exhaustively and weights a child by
//! `pD^k (1-pD)^(M-k)` times the association likelihood, without the
//! `1 / (C(m,k) k!)` factor of the hypothesis-level FISST prior. Track pdfs
//! are produced by the same filter, so the two methods differ only in weights.

use crate::association::AssociationError;
use crate::association::{LikelihoodForm, DEFAULT_ENUMERATION_CAP, DEFAULT_GATE};
use crate::engine::{
    ln_detection_term, ln_falling_factorial, scan, BirthDeathConfig, ChildGenerator, EngineError, Models, ScanOptions,
    ScanReport,
};
use crate::mtt::{HypothesisForest, Measurement};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Child weighting rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MhtWeighting {
    Mht,
    #[default]
    Hfisst,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomhtError {
    /// Exhaustive generation exceeded its cap.
    #[error("HOMHT break at scan {scan}: {reason}")]
    Break { scan: u32, reason: String },
    #[error(transparent)]
    Engine(EngineError),
}

/// `ln η^MHT = k ln pD + (M-k) ln(1-pD) + assoc_loglik`.
pub fn mht_child_logscore(k: usize, m: usize, n_objects: usize, pd: f64, assoc_loglik: f64) -> f64 {
    if k > m.min(n_objects) {
        return f64::NEG_INFINITY;
    }
    ln_detection_term(k, n_objects, pd) + assoc_loglik
}

/// `ln η^HFISST`, the same child with the `1 / (C(m,k) k!)` factor.
pub fn hfisst_child_logscore(k: usize, m: usize, n_objects: usize, pd: f64, assoc_loglik: f64) -> f64 {
    mht_child_logscore(k, m, n_objects, pd, assoc_loglik) - ln_falling_factorial(m, k)
}

/// Total MHT prior mass over all associations of `m` measurements to
/// `n_objects` objects, each weighted by the likelihood's integral over the
/// measurement space (one per assigned measurement). The H-FISST counterpart
/// is 1 when `m >= M`.
pub fn mht_prior_mass(m: usize, n_objects: usize, pd: f64) -> f64 {
    (0..=m.min(n_objects))
        .map(|k| {
            let ways = ln_falling_factorial(n_objects, k) - ln_falling_factorial(k, k) + ln_falling_factorial(m, k);
            (ways + ln_detection_term(k, n_objects, pd)).exp()
        })
        .sum()
}

/// Scan options for HOMHT: exhaustive generation, MHT weights and the
/// default gate.
pub fn homht_options(base: &ScanOptions) -> ScanOptions {
    let cap = match base.generator {
        ChildGenerator::Exhaustive { cap } => cap,
        ChildGenerator::Mcmc(_) => DEFAULT_ENUMERATION_CAP,
    };
    ScanOptions {
        generator: ChildGenerator::Exhaustive { cap },
        weighting: MhtWeighting::Mht,
        ..*base
    }
}

/// Default HOMHT options: gated at `DEFAULT_GATE`, marginal likelihood.
pub fn default_homht_options(dt: f64, h_inf: usize, seed: u64) -> ScanOptions {
    ScanOptions {
        dt,
        h_inf,
        generator: ChildGenerator::exhaustive(),
        weighting: MhtWeighting::Mht,
        gate: Some(DEFAULT_GATE),
        likelihood: LikelihoodForm::Marginal,
        seed,
        ..ScanOptions::default()
    }
}

/// One HOMHT scan. Generation is always exhaustive with MHT weighting;
/// exceeding the enumeration cap is reported as a break.
pub fn homht_scan(
    forest: &HypothesisForest,
    measurements: &[Measurement],
    models: Models<'_>,
    bd: &BirthDeathConfig,
    opts: &ScanOptions,
) -> Result<(HypothesisForest, ScanReport), HomhtError> {
    let opts = homht_options(opts);
    scan(forest, measurements, models, bd, &opts).map_err(|e| match e {
        EngineError::Association(AssociationError::EnumerationInfeasible { count, cap }) => HomhtError::Break {
            scan: forest.scan_index + 1,
            reason: format!("{count} associations exceed the enumeration cap of {cap}"),
        },
        other => HomhtError::Engine(other),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::UniformSensor;
    use crate::gaussian::{measurement_loglik, FixedLinear, PositionMeasurement};
    use crate::mtt::{StateVector, Track, TrackLabel};
    use nalgebra::{Matrix4, Vector2};

    #[test]
    fn no_detection_term() {
        let g = [-3.0, -4.5];
        let got = mht_child_logscore(0, 2, 3, 0.8, g.iter().sum());
        assert!((got - (3.0 * 0.2f64.ln() - 7.5)).abs() < 1e-12);
    }

    #[test]
    fn ratio_is_the_combinatorial_factor() {
        for m in 0..6 {
            for n in 0..6 {
                for k in 0..=m.min(n) {
                    let ratio =
                        (hfisst_child_logscore(k, m, n, 0.7, -2.0) - mht_child_logscore(k, m, n, 0.7, -2.0)).exp();
                    let falling: f64 = (0..k).map(|i| (m - i) as f64).product();
                    assert!((ratio - 1.0 / falling).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_object_full_detection() {
        let meas = PositionMeasurement::isotropic(1.0);
        let t = Track::new(
            TrackLabel::new(0, 0),
            StateVector::new(1.0, 2.0, 0.0, 0.0),
            Matrix4::identity(),
        );
        let z = Vector2::new(1.5, 1.0);
        let ll = measurement_loglik(&t, &z, &meas).unwrap();
        assert_eq!(mht_child_logscore(1, 1, 1, 1.0, ll).exp(), ll.exp());
    }

    #[test]
    fn mht_mass_is_not_one() {
        assert!((mht_prior_mass(2, 2, 0.9) - 1.0).abs() > 0.1);
        // 2x2 by hand: 0.01 + 4*0.09 + 2*0.81
        assert!((mht_prior_mass(2, 2, 0.9) - 1.99).abs() < 1e-12);
    }

    fn setup() -> (FixedLinear, PositionMeasurement, HypothesisForest) {
        (
            FixedLinear::identity(Matrix4::identity() * 0.05),
            PositionMeasurement::isotropic(1.0),
            HypothesisForest::single(vec![
                Track::new(
                    TrackLabel::new(0, 0),
                    StateVector::new(0.0, 0.0, 0.0, 0.0),
                    Matrix4::identity(),
                ),
                Track::new(
                    TrackLabel::new(0, 1),
                    StateVector::new(2.0, 0.0, 0.0, 0.0),
                    Matrix4::identity(),
                ),
            ]),
        )
    }

    fn hfisst_exhaustive() -> ScanOptions {
        ScanOptions {
            dt: 1.0,
            h_inf: 50,
            generator: ChildGenerator::exhaustive(),
            ..ScanOptions::default()
        }
    }

    #[test]
    fn equal_k_children_share_weights() {
        let (dynamics, meas, forest) = setup();
        // clutter impossible: only full assignments survive
        let sensor = UniformSensor::new(0.9, f64::NEG_INFINITY);
        let models = Models {
            dynamics: &dynamics,
            measurement: &meas,
            sensor: &sensor,
        };
        let zs = [Vector2::new(0.3, 0.1), Vector2::new(1.6, -0.2)];
        let (h, _) = scan(&forest, &zs, models, &BirthDeathConfig::none(), &hfisst_exhaustive()).unwrap();
        let (m, _) = homht_scan(&forest, &zs, models, &BirthDeathConfig::none(), &hfisst_exhaustive()).unwrap();
        assert_eq!(h.len(), 2);
        for (a, b) in h.hypotheses.iter().zip(&m.hypotheses) {
            assert!((a.weight() - b.weight()).abs() < 1e-12);
            assert_eq!(a.tracks, b.tracks);
        }
    }

    #[test]
    fn mixed_k_weights_differ_but_pdfs_match() {
        let (dynamics, meas, forest) = setup();
        let sensor = UniformSensor::new(0.8, -4.0);
        let models = Models {
            dynamics: &dynamics,
            measurement: &meas,
            sensor: &sensor,
        };
        let zs = [Vector2::new(0.3, 0.1), Vector2::new(1.6, -0.2)];
        let ungated = ScanOptions {
            gate: None,
            ..hfisst_exhaustive()
        };
        let (h, _) = scan(&forest, &zs, models, &BirthDeathConfig::none(), &ungated).unwrap();
        let (m, _) = homht_scan(&forest, &zs, models, &BirthDeathConfig::none(), &ungated).unwrap();
        assert_eq!(h.len(), 7);
        assert_eq!(m.len(), 7);
        let mut differs = false;
        for a in &h.hypotheses {
            let b = m
                .hypotheses
                .iter()
                .find(|b| b.lineage == a.lineage)
                .expect("same child set");
            assert_eq!(a.tracks, b.tracks);
            differs |= (a.weight() - b.weight()).abs() > 1e-6;
        }
        assert!(differs);
    }

    #[test]
    fn cap_overflow_is_a_break() {
        let (dynamics, meas, forest) = setup();
        let sensor = UniformSensor::new(0.8, -4.0);
        let models = Models {
            dynamics: &dynamics,
            measurement: &meas,
            sensor: &sensor,
        };
        let zs = [Vector2::new(0.3, 0.1), Vector2::new(1.6, -0.2)];
        let opts = ScanOptions {
            generator: ChildGenerator::Exhaustive { cap: 6 },
            gate: None,
            ..hfisst_exhaustive()
        };
        assert!(matches!(
            homht_scan(&forest, &zs, models, &BirthDeathConfig::none(), &opts),
            Err(HomhtError::Break { scan: 1, .. })
        ));
    }
}
