use super::prior::{prior_table, spawn_children};
use super::{
    apply_branch, expected_object_count, prune_with, update_child, BirthDeathConfig, ChildGenerator, EngineError,
    Models, ScanOptions, ScanReport,
};
use crate::association::{
    association_logscore, columns_logscore, mcmc_sample_with_rng, Assignment, AssignmentIter, AssociationError,
    DataAssociationMatrix,
};
use crate::gaussian::predict_track;
use crate::mtt::{
    Assoc, AssociationMap, BranchTag, Hypothesis, HypothesisForest, HypothesisId, Lineage, Measurement, Track,
};
use crate::rng::{stream, substream};
use rayon::prelude::*;
use std::time::Instant;

/// One branch of one parent: its tracks and the matrix over the detectable ones.
struct Branch {
    tag: BranchTag,
    tracks: Vec<Track>,
    /// `detectable[i]` is the index into `tracks` of the matrix's input track `i`.
    detectable: Vec<usize>,
    da: DataAssociationMatrix,
}

impl Branch {
    fn to_map(&self, a: &Assignment) -> AssociationMap {
        let birth_idx = matches!(self.tag, BranchTag::Birth(_)).then(|| self.tracks.len() - 1);
        AssociationMap::new(
            a.columns()
                .iter()
                .map(|&c| {
                    if c == a.clutter_column() {
                        return Assoc::Clutter;
                    }
                    let ti = self.detectable[self.da.source_indices()[c]];
                    match (self.tag, birth_idx) {
                        (BranchTag::Birth(l), Some(b)) if b == ti => Assoc::Birth(l),
                        _ => Assoc::Track(self.tracks[ti].label),
                    }
                })
                .collect(),
        )
    }
}

struct Candidate {
    branch: usize,
    assignment: Assignment,
    log_weight: f64,
}

struct ParentOutput {
    parent: HypothesisId,
    branches: Vec<Branch>,
    candidates: Vec<Candidate>,
    steps: u64,
    largest: (usize, usize),
}

/// Streaming log-sum-exp.
#[derive(Clone, Copy)]
struct Lse {
    max: f64,
    sum: f64,
}

impl Lse {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY || v.is_nan() {
            return;
        }
        if v > self.max {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        } else {
            self.sum += (v - self.max).exp();
        }
    }

    fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

fn keep_best(cands: &mut Vec<(Assignment, f64)>, keep: usize) {
    cands.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    cands.truncate(keep);
}

fn expand_parent(
    parent: &Hypothesis,
    measurements: &[Measurement],
    models: Models<'_>,
    bd: &BirthDeathConfig,
    opts: &ScanOptions,
    new_scan: u32,
    total: &mut Lse,
) -> Result<ParentOutput, EngineError> {
    let predicted = parent
        .tracks
        .iter()
        .map(|t| predict_track(t, models.dynamics, opts.dt))
        .collect::<Result<Vec<_>, _>>()?;
    let tags = spawn_children(&predicted, bd, models.sensor)?;
    let pd = models.sensor.detection_probability();
    let m = measurements.len();
    let clutter = |z: &Measurement| models.sensor.clutter_log_density(z);

    let mut out = ParentOutput {
        parent: parent.id,
        branches: Vec::with_capacity(tags.len()),
        candidates: Vec::new(),
        steps: 0,
        largest: (0, m),
    };
    for (b, (tag, factor)) in tags.into_iter().enumerate() {
        let tracks = apply_branch(&predicted, tag, bd, new_scan)?;
        let detectable: Vec<usize> = (0..tracks.len())
            .filter(|&i| models.sensor.observes(&tracks[i].position()))
            .collect();
        let det_tracks: Vec<Track> = detectable.iter().map(|&i| tracks[i].clone()).collect();
        let mut rng = substream(opts.seed, &[stream::ENGINE, new_scan as u64, parent.id.0, b as u64]);
        let da = DataAssociationMatrix::build(
            &det_tracks,
            measurements,
            clutter,
            models.measurement,
            opts.gate,
            opts.likelihood,
        )
        .shuffle_columns(&mut rng);
        let n = da.n_tracks();
        out.largest = out.largest.max((n, m));
        let prior = prior_table(factor.ln(), m, n, pd, opts.weighting, opts.normalization);

        let scored: Vec<(Assignment, f64)> = match opts.generator {
            ChildGenerator::Mcmc(cfg) => {
                let res = mcmc_sample_with_rng(&da, &prior, &cfg, &mut rng);
                out.steps += res.steps;
                res.children.into_iter().map(|s| (s.assignment, s.logscore)).collect()
            }
            ChildGenerator::Exhaustive { cap } => {
                let mut best = Vec::new();
                // nothing scoring below the current h_inf-th best can be kept
                let mut floor = f64::NEG_INFINITY;
                let mut count = 0u64;
                let mut iter = AssignmentIter::feasible(&da);
                while let Some(cols) = iter.next_columns() {
                    count += 1;
                    if count > cap {
                        return Err(AssociationError::EnumerationInfeasible {
                            count: format!(">{cap} (M={n}, m={m})"),
                            cap,
                        }
                        .into());
                    }
                    let s = columns_logscore(cols, &da, &prior);
                    total.push(parent.log_weight + s);
                    if s >= floor {
                        let a = Assignment::from_columns(cols.to_vec(), n).expect("enumerated assignments are valid");
                        best.push((a, s));
                        if best.len() >= opts.h_inf.max(16).saturating_mul(2) {
                            keep_best(&mut best, opts.h_inf);
                            if best.len() == opts.h_inf {
                                floor = best[best.len() - 1].1;
                            }
                        }
                    }
                }
                if best.is_empty() {
                    let a = Assignment::all_clutter(m, n);
                    let s = association_logscore(&a, &da, &prior);
                    best.push((a, s));
                }
                keep_best(&mut best, opts.h_inf);
                best
            }
        };
        for (assignment, s) in scored {
            out.candidates.push(Candidate {
                branch: b,
                assignment,
                log_weight: parent.log_weight + s,
            });
        }
        out.branches.push(Branch {
            tag,
            tracks,
            detectable,
            da,
        });
    }
    Ok(out)
}

/// One step of the recursion: branches and children of every parent, weights
/// normalized over all children of all parents, the lightest dropped, the
/// `H_inf` heaviest kept and Kalman-updated into the next generation.
pub fn scan(
    forest: &HypothesisForest,
    measurements: &[Measurement],
    models: Models<'_>,
    bd: &BirthDeathConfig,
    opts: &ScanOptions,
) -> Result<(HypothesisForest, ScanReport), EngineError> {
    opts.validate()?;
    if forest.is_empty() {
        return Err(crate::mtt::MttError::EmptyForest.into());
    }
    let pd = models.sensor.detection_probability();
    if !(0.0..=1.0).contains(&pd) {
        return Err(EngineError::InvalidConfig(format!(
            "detection probability {pd} outside [0, 1]"
        )));
    }
    let new_scan = forest.scan_index + 1;
    let started = Instant::now();

    let results: Vec<Result<(ParentOutput, Lse), EngineError>> = forest
        .hypotheses
        .par_iter()
        .map(|parent| {
            let mut lse = Lse::new();
            expand_parent(parent, measurements, models, bd, opts, new_scan, &mut lse).map(|o| (o, lse))
        })
        .collect();

    // A parent whose tracks cannot be propagated (e.g. an orbit through the
    // Earth) is dropped; any other error aborts the scan.
    let mut warnings = Vec::new();
    let mut outputs: Vec<(ParentOutput, Lse)> = Vec::with_capacity(results.len());
    let mut first_filter_error = None;
    for (parent, r) in forest.hypotheses.iter().zip(results) {
        match r {
            Ok(o) => outputs.push(o),
            Err(EngineError::Filter(e)) => {
                warnings.push(format!("scan {new_scan}: parent {} dropped: {e}", parent.id));
                first_filter_error.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    if outputs.is_empty() {
        if let Some(e) = first_filter_error {
            return Err(e.into());
        }
    }
    let mut total = Lse::new();
    let exhaustive = matches!(opts.generator, ChildGenerator::Exhaustive { .. });
    for (out, lse) in &outputs {
        if exhaustive {
            // every enumerated child enters the normalizer, not just the kept ones
            total.push(lse.value());
        } else {
            for c in &out.candidates {
                total.push(c.log_weight);
            }
        }
    }
    let log_norm = total.value();
    let degenerate = !log_norm.is_finite();
    if degenerate {
        warnings.push(format!(
            "scan {new_scan}: every child has zero weight; falling back to uniform weights"
        ));
    }

    // Weightless stand-ins carrying the lineage; the id indexes the candidate.
    let mut index = Vec::new();
    let mut standins = Vec::new();
    let (mut steps, mut largest) = (0u64, (0usize, measurements.len()));
    for (p, (out, _)) in outputs.iter().enumerate() {
        steps += out.steps;
        largest = largest.max(out.largest);
        for (c, cand) in out.candidates.iter().enumerate() {
            let lw = if degenerate { 0.0 } else { cand.log_weight - log_norm };
            if !degenerate && !(lw >= opts.weight_floor.ln()) {
                continue;
            }
            let branch = &out.branches[cand.branch];
            standins.push(Hypothesis {
                id: HypothesisId(index.len() as u64),
                tracks: Vec::new(),
                log_weight: lw,
                lineage: Some(Lineage {
                    parent: out.parent,
                    branch: branch.tag,
                    association: branch.to_map(&cand.assignment),
                }),
            });
            index.push((p, c));
        }
    }
    let distinct_children: usize = outputs.iter().map(|(o, _)| o.candidates.len()).sum();
    let kept = prune_with(
        HypothesisForest {
            hypotheses: standins,
            scan_index: new_scan,
        },
        opts.h_inf,
        opts.pruning,
        opts.seed,
    )?;
    let generation_ns = u64::try_from(started.elapsed().as_nanos()).unwrap_or(u64::MAX);

    let clutter = |z: &Measurement| models.sensor.clutter_log_density(z);
    let mut next = Vec::with_capacity(kept.len());
    for standin in kept.hypotheses {
        let (p, c) = index[standin.id.0 as usize];
        let out = &outputs[p].0;
        let branch = &out.branches[out.candidates[c].branch];
        let lineage = standin.lineage.expect("stand-ins carry lineage");
        let pred = Hypothesis {
            id: out.parent,
            tracks: branch.tracks.clone(),
            log_weight: 0.0,
            lineage: None,
        };
        match update_child(&pred, &lineage.association, measurements, models.measurement, &clutter) {
            Ok((child, _)) => next.push(Hypothesis {
                id: HypothesisId::for_scan(new_scan, next.len() as u32),
                tracks: child.tracks,
                log_weight: standin.log_weight,
                lineage: Some(lineage),
            }),
            Err(e) => warnings.push(format!("scan {new_scan}: child dropped: {e}")),
        }
    }
    let mut forest = HypothesisForest {
        hypotheses: next,
        scan_index: new_scan,
    };
    forest = crate::mtt::normalize_weights(forest)?;

    let report = ScanReport {
        scan: new_scan,
        hypothesis_count: forest.len(),
        weights: forest.hypotheses.iter().map(|h| (h.id, h.weight())).collect(),
        cardinality: expected_object_count(&forest),
        generation_ns,
        mcmc_steps: steps,
        distinct_children,
        largest_problem: largest,
        warnings,
    };
    Ok((forest, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::SamplerConfig;
    use crate::engine::UniformSensor;
    use crate::gaussian::{FixedLinear, PositionMeasurement};
    use crate::homht::MhtWeighting;
    use crate::mtt::{StateVector, TrackLabel};
    use nalgebra::{Matrix4, Vector2};

    fn two_tracks() -> HypothesisForest {
        HypothesisForest::single(vec![
            Track::new(
                TrackLabel::new(0, 0),
                StateVector::new(0.0, 0.0, 0.0, 0.0),
                Matrix4::identity(),
            ),
            Track::new(
                TrackLabel::new(0, 1),
                StateVector::new(3.0, 0.0, 0.0, 0.0),
                Matrix4::identity(),
            ),
        ])
    }

    fn exhaustive(h_inf: usize) -> ScanOptions {
        ScanOptions {
            dt: 1.0,
            h_inf,
            generator: ChildGenerator::exhaustive(),
            ..ScanOptions::default()
        }
    }

    #[test]
    fn empty_report_is_pure_prediction() {
        let dynamics = FixedLinear::identity(Matrix4::identity() * 0.1);
        let meas = PositionMeasurement::isotropic(1.0);
        let sensor = UniformSensor::new(0.9, -5.0);
        let models = Models {
            dynamics: &dynamics,
            measurement: &meas,
            sensor: &sensor,
        };
        let forest = two_tracks();
        let (next, report) = scan(&forest, &[], models, &BirthDeathConfig::none(), &exhaustive(10)).unwrap();
        assert_eq!(next.len(), 1);
        assert!((next.hypotheses[0].weight() - 1.0).abs() < 1e-15);
        for (a, b) in next.hypotheses[0].tracks.iter().zip(&forest.hypotheses[0].tracks) {
            assert_eq!(a, &predict_track(b, &dynamics, 1.0).unwrap());
        }
        assert_eq!(report.scan, 1);
    }

    #[test]
    fn seven_children_for_two_by_two() {
        let dynamics = FixedLinear::identity(Matrix4::zeros());
        let meas = PositionMeasurement::isotropic(1.0);
        let sensor = UniformSensor::new(0.9, -5.0);
        let models = Models {
            dynamics: &dynamics,
            measurement: &meas,
            sensor: &sensor,
        };
        let zs = [Vector2::new(0.1, 0.0), Vector2::new(2.5, 0.3)];
        let (next, report) = scan(&two_tracks(), &zs, models, &BirthDeathConfig::none(), &exhaustive(10)).unwrap();
        assert_eq!(next.len(), 7);
        assert_eq!(report.distinct_children, 7);
        assert!((next.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let top = next.top().unwrap();
        assert_eq!(
            top.lineage.as_ref().unwrap().association.assignments,
            vec![Assoc::Track(TrackLabel::new(0, 0)), Assoc::Track(TrackLabel::new(0, 1))]
        );
    }

    #[test]
    fn repeated_scans_agree() {
        let dynamics = FixedLinear::identity(Matrix4::zeros());
        let meas = PositionMeasurement::isotropic(1.0);
        let zs = [Vector2::new(0.1, 0.0), Vector2::new(2.5, 0.3)];
        let run = |g: f64, zs: &[Measurement]| {
            let sensor = UniformSensor::new(0.8, g);
            let models = Models {
                dynamics: &dynamics,
                measurement: &meas,
                sensor: &sensor,
            };
            scan(&two_tracks(), zs, models, &BirthDeathConfig::none(), &exhaustive(10))
                .unwrap()
                .0
        };
        let a = run(-5.0, &zs);
        let b = run(-5.0, &zs);
        assert_eq!(a, b);
        // a different clutter density moves weight between children
        assert_ne!(a.weights(), run(-3.0, &zs).weights());
    }

    #[test]
    fn mcmc_and_exhaustive_agree_on_small_case() {
        let dynamics = FixedLinear::identity(Matrix4::zeros());
        let meas = PositionMeasurement::isotropic(1.0);
        let sensor = UniformSensor::new(0.9, -5.0);
        let models = Models {
            dynamics: &dynamics,
            measurement: &meas,
            sensor: &sensor,
        };
        let zs = [Vector2::new(0.1, 0.0), Vector2::new(2.5, 0.3)];
        let (ex, _) = scan(&two_tracks(), &zs, models, &BirthDeathConfig::none(), &exhaustive(7)).unwrap();
        let mc_opts = ScanOptions {
            generator: ChildGenerator::Mcmc(SamplerConfig {
                max_distinct: 7,
                ..SamplerConfig::default()
            }),
            ..exhaustive(7)
        };
        let (mc, _) = scan(&two_tracks(), &zs, models, &BirthDeathConfig::none(), &mc_opts).unwrap();
        assert_eq!(ex.len(), mc.len());
        for (a, b) in ex.hypotheses.iter().zip(&mc.hypotheses) {
            assert_eq!(a.lineage, b.lineage);
            assert!((a.weight() - b.weight()).abs() < 1e-9);
            assert_eq!(a.tracks, b.tracks);
        }
    }

    #[test]
    fn track_count_changes_by_at_most_one() {
        let dynamics = FixedLinear::identity(Matrix4::identity() * 0.01);
        let meas = PositionMeasurement::isotropic(1.0);
        let sensor = UniformSensor::new(0.9, -5.0);
        let models = Models {
            dynamics: &dynamics,
            measurement: &meas,
            sensor: &sensor,
        };
        let bd = BirthDeathConfig {
            alpha: 0.05,
            beta: 0.05,
            birth_pdfs: vec![crate::engine::BirthPdf {
                mean: StateVector::new(10.0, 0.0, 0.0, 0.0),
                covariance: Matrix4::identity() * 9.0,
            }],
            death_candidates: crate::engine::DeathCandidates::Observable,
        };
        let zs = [Vector2::new(0.1, 0.0), Vector2::new(9.0, 0.3)];
        let opts = ScanOptions {
            weighting: MhtWeighting::Hfisst,
            ..exhaustive(1000)
        };
        let (next, _) = scan(&two_tracks(), &zs, models, &bd, &opts).unwrap();
        assert_eq!(next.len(), 7 + 13 + 3 + 3);
        for h in &next.hypotheses {
            assert!((1..=3).contains(&h.tracks.len()));
            assert!(h.labels_distinct());
        }
    }
}
