//! Association priors and birth/death branch factors.

use super::{BirthDeathConfig, EngineError, SensorModel};
use crate::association::AssociationPrior;
use crate::homht::MhtWeighting;
use crate::mtt::{BranchTag, Track, TrackLabel};
use serde::{Deserialize, Serialize};

/// How the detection prior of one branch is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorNormalization {
    /// Divide by the probability that at most `m` of the `M` detectable
    /// objects were detected, so the children of one branch sum to one even
    /// when `m < M`.
    #[default]
    PerBranch,
    /// `pD^k (1-pD)^(M-k) / (C(m,k) k!)` as is.
    Literal,
}

#[inline]
fn xlogy(x: usize, y: f64) -> f64 {
    if x == 0 {
        0.0
    } else {
        x as f64 * y.ln()
    }
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// `ln(C(m,k) k!) = ln(m! / (m-k)!)`.
pub fn ln_falling_factorial(m: usize, k: usize) -> f64 {
    (0..k).map(|i| ((m - i) as f64).ln()).sum()
}

/// `ln pD^k (1-pD)^(M-k)`, with `0^0 = 1`.
pub fn ln_detection_term(k: usize, m_objects: usize, pd: f64) -> f64 {
    xlogy(k, pd) + xlogy(m_objects - k, 1.0 - pd)
}

/// `ln Σ_{n ≤ min(m,M)} C(M,n) pD^n (1-pD)^(M-n)`.
pub fn ln_detection_mass(m: usize, m_objects: usize, pd: f64) -> f64 {
    if m >= m_objects {
        return 0.0;
    }
    let terms: Vec<f64> = (0..=m)
        .map(|n| ln_binomial(m_objects, n) + ln_detection_term(n, m_objects, pd))
        .collect();
    crate::mtt::log_sum_exp(&terms)
}

fn check_pd(pd: f64) -> Result<(), EngineError> {
    if (0.0..=1.0).contains(&pd) {
        Ok(())
    } else {
        Err(EngineError::InvalidConfig(format!(
            "detection probability {pd} outside [0, 1]"
        )))
    }
}

/// Weight of a branch: `α` per birth, `β` per death, the rest on no event.
pub fn branch_factor(tag: BranchTag, bd: &BirthDeathConfig, death_candidates: usize) -> f64 {
    match tag {
        BranchTag::Birth(_) => bd.alpha,
        BranchTag::Death(_) => bd.beta,
        BranchTag::NoBirthDeath => 1.0 - bd.birth_count() as f64 * bd.alpha - death_candidates as f64 * bd.beta,
    }
}

/// Log prior of one association with `k` of `m` measurements assigned among
/// `m_objects` detectable objects, without the branch factor.
pub fn ln_association_prior(
    k: usize,
    m: usize,
    m_objects: usize,
    pd: f64,
    weighting: MhtWeighting,
    normalization: PriorNormalization,
) -> f64 {
    if k > m.min(m_objects) {
        return f64::NEG_INFINITY;
    }
    let det = ln_detection_term(k, m_objects, pd);
    match weighting {
        MhtWeighting::Mht => det,
        MhtWeighting::Hfisst => {
            let base = det - ln_falling_factorial(m, k);
            match normalization {
                PriorNormalization::Literal => base,
                PriorNormalization::PerBranch => {
                    let z = ln_detection_mass(m, m_objects, pd);
                    if z == f64::NEG_INFINITY {
                        f64::NEG_INFINITY
                    } else {
                        base - z
                    }
                }
            }
        }
    }
}

/// `p_ij` of a child on branch `tag` (not logged).
#[allow(clippy::too_many_arguments)]
pub fn association_prior(
    k: usize,
    m: usize,
    m_child: usize,
    tag: BranchTag,
    bd: &BirthDeathConfig,
    death_candidates: usize,
    pd: f64,
    normalization: PriorNormalization,
) -> Result<f64, EngineError> {
    check_pd(pd)?;
    let factor = branch_factor(tag, bd, death_candidates);
    let p = ln_association_prior(k, m, m_child, pd, MhtWeighting::Hfisst, normalization).exp();
    Ok(factor * p)
}

/// Log prior table by `k` for one branch, branch factor included.
pub fn prior_table(
    log_factor: f64,
    m: usize,
    m_objects: usize,
    pd: f64,
    weighting: MhtWeighting,
    normalization: PriorNormalization,
) -> AssociationPrior {
    AssociationPrior::new(
        (0..=m.min(m_objects))
            .map(|k| log_factor + ln_association_prior(k, m, m_objects, pd, weighting, normalization))
            .collect(),
    )
}

/// Branches of a parent whose predicted tracks are `predicted`: no event,
/// one birth per partition when `α > 0`, one death per candidate when `β > 0`.
pub fn spawn_children(
    predicted: &[Track],
    bd: &BirthDeathConfig,
    sensor: &dyn SensorModel,
) -> Result<Vec<(BranchTag, f64)>, EngineError> {
    let candidates: Vec<TrackLabel> = predicted
        .iter()
        .filter(|t| bd.death_candidates.admits(t, sensor))
        .map(|t| t.label)
        .collect();
    let md = candidates.len();
    let mb = bd.birth_count();
    let total = mb as f64 * bd.alpha + md as f64 * bd.beta;
    if !(bd.alpha >= 0.0 && bd.beta >= 0.0) || total >= 1.0 {
        return Err(EngineError::BirthDeathRates { total });
    }
    let mut tags = vec![(BranchTag::NoBirthDeath, 1.0 - total)];
    if bd.alpha > 0.0 {
        tags.extend((0..mb as u32).map(|l| (BranchTag::Birth(l), bd.alpha)));
    }
    if bd.beta > 0.0 {
        tags.extend(candidates.into_iter().map(|l| (BranchTag::Death(l), bd.beta)));
    }
    Ok(tags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::count_associations;
    use crate::engine::{BirthPdf, DeathCandidates, UniformSensor};
    use crate::mtt::StateVector;
    use nalgebra::Matrix4;
    use num_traits::ToPrimitive;

    fn tracks(n: u32) -> Vec<Track> {
        (0..n)
            .map(|i| {
                Track::new(
                    TrackLabel::new(0, i),
                    StateVector::new(i as f64, 0.0, 0.0, 0.0),
                    Matrix4::identity(),
                )
            })
            .collect()
    }

    fn bd(alpha: f64, beta: f64, mb: usize) -> BirthDeathConfig {
        BirthDeathConfig {
            alpha,
            beta,
            birth_pdfs: vec![
                BirthPdf {
                    mean: StateVector::zeros(),
                    covariance: Matrix4::identity()
                };
                mb
            ],
            death_candidates: DeathCandidates::Observable,
        }
    }

    #[test]
    fn full_detection_example() {
        let p = association_prior(
            2,
            2,
            2,
            BranchTag::NoBirthDeath,
            &bd(0.0, 0.0, 0),
            0,
            0.9,
            PriorNormalization::Literal,
        )
        .unwrap();
        assert!((p - 0.405).abs() < 1e-15);
    }

    #[test]
    fn empty_scan_literal_prior() {
        for pd in [0.0, 0.3, 0.9, 1.0] {
            let p = association_prior(
                0,
                0,
                3,
                BranchTag::NoBirthDeath,
                &bd(0.0, 0.0, 0),
                0,
                pd,
                PriorNormalization::Literal,
            )
            .unwrap();
            assert!((p - (1.0 - pd).powi(3)).abs() < 1e-15);
        }
    }

    #[test]
    fn pd_out_of_range_is_rejected() {
        assert!(association_prior(
            0,
            0,
            0,
            BranchTag::NoBirthDeath,
            &bd(0.0, 0.0, 0),
            0,
            1.5,
            PriorNormalization::Literal
        )
        .is_err());
    }

    #[test]
    fn branch_counts() {
        let s = UniformSensor::new(0.9, -10.0);
        assert_eq!(spawn_children(&tracks(2), &bd(0.0, 0.0, 1), &s).unwrap().len(), 1);
        assert_eq!(spawn_children(&tracks(2), &bd(0.01, 0.01, 1), &s).unwrap().len(), 4);
        assert!(matches!(
            spawn_children(&tracks(2), &bd(0.4, 0.3, 1), &s),
            Err(EngineError::BirthDeathRates { .. })
        ));
    }

    struct LeftOfHalf;

    impl SensorModel for LeftOfHalf {
        fn detection_probability(&self) -> f64 {
            0.9
        }
        fn observes(&self, position: &crate::mtt::Measurement) -> bool {
            position.x < 0.5
        }
        fn clutter_log_density(&self, _: &crate::mtt::Measurement) -> f64 {
            -10.0
        }
    }

    #[test]
    fn twenty_three_children() {
        let tags = spawn_children(&tracks(2), &bd(0.01, 0.01, 1), &LeftOfHalf).unwrap();
        assert_eq!(tags.len(), 3);
        let total: u64 = tags
            .iter()
            .map(|(tag, _)| {
                let n = match tag {
                    BranchTag::NoBirthDeath => 2,
                    BranchTag::Birth(_) => 3,
                    BranchTag::Death(_) => 1,
                };
                count_associations(2, n).to_u64().unwrap()
            })
            .sum();
        assert_eq!(total, 23);
    }

    /// Σ over every branch and every enumerated association of `p_ij`.
    fn total_prior_mass(n: usize, m: usize, mb: usize, alpha: f64, beta: f64, pd: f64) -> f64 {
        let cfg = bd(alpha, beta, mb);
        let s = UniformSensor::new(pd, -10.0);
        let parent = tracks(n as u32);
        let mut total = 0.0;
        for (tag, _) in spawn_children(&parent, &cfg, &s).unwrap() {
            let m_child = match tag {
                BranchTag::NoBirthDeath => n,
                BranchTag::Birth(_) => n + 1,
                BranchTag::Death(_) => n - 1,
            };
            for a in crate::association::enumerate_associations(m, m_child, 1 << 20).unwrap() {
                total += association_prior(
                    a.associated_count(),
                    m,
                    m_child,
                    tag,
                    &cfg,
                    n,
                    pd,
                    PriorNormalization::PerBranch,
                )
                .unwrap();
            }
        }
        total
    }

    #[test]
    fn branch_and_association_priors_sum_to_one() {
        assert!((total_prior_mass(2, 2, 1, 0.01, 0.01, 0.9) - 1.0).abs() < 1e-12);
        for n in 0..=4 {
            for m in 0..=4 {
                for &(a, b) in &[(0.0, 0.0), (0.05, 0.0), (0.0, 0.05), (0.01, 0.05)] {
                    let s = total_prior_mass(n, m, 2, a, b, 0.7);
                    assert!((s - 1.0).abs() < 1e-12, "M={n} m={m} α={a} β={b}: {s}");
                }
            }
        }
    }

    #[test]
    fn literal_prior_loses_mass_when_m_below_objects() {
        let mut lit = 0.0;
        for a in crate::association::enumerate_associations(1, 3, 100).unwrap() {
            lit += ln_association_prior(
                a.associated_count(),
                1,
                3,
                0.9,
                MhtWeighting::Hfisst,
                PriorNormalization::Literal,
            )
            .exp();
        }
        assert!((lit - (1.0 - 0.9f64.powi(3) - 3.0 * 0.81 * 0.1)).abs() < 1e-12);
    }
}
