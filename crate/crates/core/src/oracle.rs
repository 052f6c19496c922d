//! Brute-force reference implementations for verification.
//!
//! Everything here is linear-Gaussian and computed in information form,
//! independently of the filter in [`crate::gaussian`]: the set-theoretic
//! two-target FISST update expanded term by term, and exact enumeration of
//! every child of a forest.

use crate::engine::{
    scan, BirthDeathConfig, BirthPdf, ChildGenerator, DeathCandidates, Models, ScanOptions, UniformSensor,
};
use crate::gaussian::{FixedLinear, PositionMeasurement};
use crate::mtt::{
    normalize_weights, Assoc, BranchTag, Hypothesis, HypothesisForest, HypothesisId, Measurement, StateCovariance,
    StateVector, Track, TrackLabel,
};
use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2};
use rand::Rng;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("oracle size cap exceeded: {0} children")]
    TooLarge(usize),
    #[error("covariance not positive definite")]
    NotPositiveDefinite,
    #[error("engine failed: {0}")]
    Engine(String),
    #[error("expected {expected}, got {got}")]
    Shape { expected: &'static str, got: String },
}

/// `x' = F x + w`, `w ~ N(0, Q)`; `z = H x + v`, `v ~ N(0, R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModels {
    pub f: Matrix4<f64>,
    pub q: Matrix4<f64>,
    pub h: Matrix2x4<f64>,
    pub r: Matrix2<f64>,
}

impl LinearModels {
    /// Identity dynamics, position measurement with isotropic noise.
    pub fn static_position(q: Matrix4<f64>, noise_var: f64) -> Self {
        Self {
            f: Matrix4::identity(),
            q,
            h: Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0),
            r: Matrix2::identity() * noise_var,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub mean: StateVector,
    pub cov: StateCovariance,
}

impl Gaussian {
    fn predict(&self, m: &LinearModels) -> Gaussian {
        Gaussian {
            mean: m.f * self.mean,
            cov: m.f * self.cov * m.f.transpose() + m.q,
        }
    }
}

/// `(ln ∫ N(z; Hx, R) N(x; μ, P) dx, posterior)` through the information
/// form: `Λ = P⁻¹ + HᵀR⁻¹H`, `η = P⁻¹μ + HᵀR⁻¹z`.
pub fn information_update(prior: &Gaussian, z: &Measurement, m: &LinearModels) -> Result<(f64, Gaussian), OracleError> {
    let p_inv = prior.cov.try_inverse().ok_or(OracleError::NotPositiveDefinite)?;
    let r_inv = m.r.try_inverse().ok_or(OracleError::NotPositiveDefinite)?;
    let lambda = p_inv + m.h.transpose() * r_inv * m.h;
    let eta = p_inv * prior.mean + m.h.transpose() * r_inv * z;
    let lambda_inv = lambda.try_inverse().ok_or(OracleError::NotPositiveDefinite)?;
    let quad = (z.transpose() * r_inv * z)[(0, 0)] + (prior.mean.transpose() * p_inv * prior.mean)[(0, 0)]
        - (eta.transpose() * lambda_inv * eta)[(0, 0)];
    let (dr, dp, dl) = (m.r.determinant(), prior.cov.determinant(), lambda.determinant());
    if !(dr > 0.0 && dp > 0.0 && dl > 0.0) {
        return Err(OracleError::NotPositiveDefinite);
    }
    let log_int = -0.5 * quad - (2.0 * PI).ln() - 0.5 * dr.ln() - 0.5 * dp.ln() - 0.5 * dl.ln();
    let cov = (lambda_inv + lambda_inv.transpose()) * 0.5;
    Ok((
        log_int,
        Gaussian {
            mean: lambda_inv * eta,
            cov,
        },
    ))
}

/// One term of a multi-object density: a weight and an unordered set of
/// single-object Gaussians, stored sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct FisstComponent {
    pub weight: f64,
    pub pdfs: Vec<Gaussian>,
}

fn canonical(mut pdfs: Vec<Gaussian>) -> Vec<Gaussian> {
    pdfs.sort_by(|a, b| {
        a.mean
            .iter()
            .chain(a.cov.iter())
            .zip(b.mean.iter().chain(b.cov.iter()))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    pdfs
}

fn same_pdfs(a: &[Gaussian], b: &[Gaussian], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            (x.mean - y.mean).amax() <= tol * (1.0 + x.mean.amax())
                && (x.cov - y.cov).amax() <= tol * (1.0 + x.cov.amax())
        })
}

/// One term of the two-object likelihood: which measurement each ordered
/// slot explains (`None` for a miss).
type SlotAssociation = [Option<usize>; 2];

/// The seven associations of two measurements to two slots.
fn seven_associations() -> Vec<SlotAssociation> {
    let mut out = Vec::new();
    for a in [None, Some(0), Some(1)] {
        for b in [None, Some(0), Some(1)] {
            if a.is_none() || a != b {
                out.push([a, b]);
            }
        }
    }
    out
}

/// Result of the two-object expansion of one input component.
#[derive(Debug, Clone, PartialEq)]
pub struct FisstExpansion {
    pub components: Vec<FisstComponent>,
    /// Ordered product terms before collecting (2 permutations × 7).
    pub product_terms: usize,
    pub associations: Vec<SlotAssociation>,
}

/// Bayes update of a two-object density `Σ ω_i p_i({X})` with measurement
/// set `{z1, z2}`.
///
/// The permutation-symmetric prior `p1(x1)p2(x2) + p1(x2)p2(x1)` is
/// multiplied by the seven-term likelihood, each term carrying
/// `pD^k (1-pD)^(2-k) / (C(2,k) k!)` and a clutter density per unexplained
/// measurement. All fourteen products are integrated, the set integral's
/// `1/2!` is applied, and terms with the same posterior pdf set are
/// collected.
pub fn fisst_two_target_update(
    components: &[FisstComponent],
    zs: [Measurement; 2],
    pd: f64,
    clutter_density: f64,
    models: &LinearModels,
) -> Result<FisstExpansion, OracleError> {
    let coeff = |k: usize| -> f64 {
        let norm = [1.0, 2.0, 2.0][k];
        pd.powi(k as i32) * (1.0 - pd).powi(2 - k as i32) / norm
    };
    let assocs = seven_associations();
    let mut out: Vec<FisstComponent> = Vec::new();
    let mut product_terms = 0;
    for comp in components {
        if comp.pdfs.len() != 2 {
            return Err(OracleError::Shape {
                expected: "two objects per component",
                got: format!("{}", comp.pdfs.len()),
            });
        }
        let pred = [comp.pdfs[0].predict(models), comp.pdfs[1].predict(models)];
        for perm in [[0usize, 1], [1, 0]] {
            for a in &assocs {
                product_terms += 1;
                let k = a.iter().filter(|s| s.is_some()).count();
                let mut w = comp.weight * coeff(k) * 0.5;
                let mut post = Vec::with_capacity(2);
                for slot in 0..2 {
                    let prior = pred[perm[slot]];
                    match a[slot] {
                        Some(j) => {
                            let (li, g) = information_update(&prior, &zs[j], models)?;
                            w *= li.exp();
                            post.push(g);
                        }
                        None => post.push(prior),
                    }
                }
                for j in 0..2 {
                    if !a.contains(&Some(j)) {
                        w *= clutter_density;
                    }
                }
                let post = canonical(post);
                match out.iter_mut().find(|c| same_pdfs(&c.pdfs, &post, 1e-12)) {
                    Some(c) => c.weight += w,
                    None => out.push(FisstComponent { weight: w, pdfs: post }),
                }
            }
        }
    }
    let total: f64 = out.iter().map(|c| c.weight).sum();
    for c in &mut out {
        c.weight /= total;
    }
    Ok(FisstExpansion {
        components: out,
        product_terms,
        associations: assocs,
    })
}

/// A child as enumerated by the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleChild {
    pub parent: HypothesisId,
    pub branch: BranchTag,
    pub association: Vec<Assoc>,
    pub weight: f64,
    /// Posterior pdf of every object in the child.
    pub pdfs: Vec<(TrackLabel, Gaussian)>,
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b
}

/// All injective partial maps of `m` measurements into `n` slots.
fn partial_injections(m: usize, n: usize) -> Vec<Vec<Option<usize>>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        let mut next = Vec::new();
        for prefix in &out {
            next.push({
                let mut p = prefix.clone();
                p.push(None);
                p
            });
            for t in 0..n {
                if !prefix.contains(&Some(t)) {
                    let mut p = prefix.clone();
                    p.push(Some(t));
                    next.push(p);
                }
            }
        }
        out = next;
    }
    out
}

/// Exact child weights of one scan: every branch of every parent times every
/// association, weighted `w_i p_ij l_ij` and normalized. Every object is
/// detectable, clutter density is the constant `exp(log_g)`, and the prior is
/// normalized per branch.
#[allow(clippy::too_many_arguments)]
pub fn brute_force_posterior(
    forest: &HypothesisForest,
    measurements: &[Measurement],
    models: &LinearModels,
    pd: f64,
    log_g: f64,
    bd: &BirthDeathConfig,
    cap: usize,
) -> Result<Vec<OracleChild>, OracleError> {
    let m = measurements.len();
    let g = log_g.exp();
    let new_scan = forest.scan_index + 1;
    let mut children = Vec::new();
    for parent in &forest.hypotheses {
        let pred: Vec<(TrackLabel, Gaussian)> = parent
            .tracks
            .iter()
            .map(|t| {
                (
                    t.label,
                    Gaussian {
                        mean: t.mean,
                        cov: t.covariance,
                    }
                    .predict(models),
                )
            })
            .collect();
        let md = match bd.death_candidates {
            DeathCandidates::Observable | DeathCandidates::All => pred.len(),
        };
        let mb = bd.birth_pdfs.len();
        let mut branches: Vec<(BranchTag, f64)> = vec![(
            BranchTag::NoBirthDeath,
            1.0 - mb as f64 * bd.alpha - md as f64 * bd.beta,
        )];
        if bd.alpha > 0.0 {
            for l in 0..mb {
                branches.push((BranchTag::Birth(l as u32), bd.alpha));
            }
        }
        if bd.beta > 0.0 {
            for (label, _) in &pred {
                branches.push((BranchTag::Death(*label), bd.beta));
            }
        }
        for (tag, factor) in branches {
            // (label, pdf, is birth)
            let mut objects: Vec<(TrackLabel, Gaussian, bool)> = pred.iter().map(|(l, g)| (*l, *g, false)).collect();
            match tag {
                BranchTag::NoBirthDeath => {}
                BranchTag::Death(label) => objects.retain(|(l, _, _)| *l != label),
                BranchTag::Birth(l) => {
                    let pdf = bd.birth_pdfs[l as usize];
                    objects.push((
                        TrackLabel::new(new_scan, l),
                        Gaussian {
                            mean: pdf.mean,
                            cov: pdf.covariance,
                        },
                        true,
                    ));
                }
            }
            let n = objects.len();
            let z_norm: f64 = (0..=m.min(n))
                .map(|j| binomial(n, j) * pd.powi(j as i32) * (1.0 - pd).powi((n - j) as i32))
                .sum();
            for assoc in partial_injections(m, n) {
                if children.len() >= cap {
                    return Err(OracleError::TooLarge(children.len()));
                }
                let k = assoc.iter().filter(|a| a.is_some()).count();
                let falling: f64 = (0..k).map(|i| (m - i) as f64).product();
                let prior = factor * pd.powi(k as i32) * (1.0 - pd).powi((n - k) as i32) / falling / z_norm;
                let mut lik = 1.0;
                let mut pdfs: Vec<(TrackLabel, Gaussian)> = objects.iter().map(|(l, g, _)| (*l, *g)).collect();
                for (i, a) in assoc.iter().enumerate() {
                    lik *= match a {
                        None => g,
                        Some(t) => {
                            let (li, post) = information_update(&objects[*t].1, &measurements[i], models)?;
                            pdfs[*t].1 = post;
                            li.exp()
                        }
                    };
                }
                let association = assoc
                    .iter()
                    .map(|a| match a {
                        None => Assoc::Clutter,
                        Some(t) => match (objects[*t].2, tag) {
                            (true, BranchTag::Birth(l)) => Assoc::Birth(l),
                            _ => Assoc::Track(objects[*t].0),
                        },
                    })
                    .collect();
                children.push(OracleChild {
                    parent: parent.id,
                    branch: tag,
                    association,
                    weight: parent.weight() * prior * lik,
                    pdfs,
                });
            }
        }
    }
    let total: f64 = children.iter().map(|c| c.weight).sum();
    for c in &mut children {
        c.weight /= total;
    }
    Ok(children)
}

/// Total-variation distance between two weight vectors over the same support.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Position-only `H` used by most tests.
pub fn position_h() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
}

/// Measurement at `H x`.
pub fn noiseless(models: &LinearModels, x: &StateVector) -> Vector2<f64> {
    models.h * x
}

/// A small random tracking problem posed to both the oracle and the engine.
#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub forest: HypothesisForest,
    pub measurements: Vec<Measurement>,
    pub models: LinearModels,
    pub pd: f64,
    pub log_g: f64,
    pub bd: BirthDeathConfig,
}

fn random_spd<R: Rng + ?Sized>(rng: &mut R, floor: f64) -> Matrix4<f64> {
    let a = Matrix4::from_fn(|_, _| rng.random_range(-0.5..0.5));
    a * a.transpose() + Matrix4::identity() * floor
}

fn random_state<R: Rng + ?Sized>(rng: &mut R) -> StateVector {
    StateVector::new(
        rng.random_range(-5.0..5.0),
        rng.random_range(-5.0..5.0),
        rng.random_range(-0.5..0.5),
        rng.random_range(-0.5..0.5),
    )
}

/// Random instance with `parents` hypotheses of `n_tracks` tracks each,
/// `m` measurements, constant-velocity dynamics and `births` birth pdfs.
#[allow(clippy::too_many_arguments)]
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    parents: usize,
    n_tracks: usize,
    m: usize,
    alpha: f64,
    beta: f64,
    births: usize,
) -> OracleInstance {
    let mut f = Matrix4::identity();
    f[(0, 2)] = 1.0;
    f[(1, 3)] = 1.0;
    let q = Matrix4::from_diagonal(&nalgebra::Vector4::new(0.05, 0.05, 0.01, 0.01)) * rng.random_range(0.5..2.0);
    let r = Matrix2::new(rng.random_range(0.3..1.5), 0.0, 0.0, rng.random_range(0.3..1.5));
    let models = LinearModels {
        f,
        q,
        h: position_h(),
        r,
    };
    let hypotheses = (0..parents)
        .map(|i| {
            let tracks = (0..n_tracks)
                .map(|t| Track::new(TrackLabel::new(0, t as u32), random_state(rng), random_spd(rng, 0.2)))
                .collect();
            Hypothesis::root(HypothesisId::for_scan(0, i as u32), tracks, rng.random_range(-2.0..0.0))
        })
        .collect();
    let forest = normalize_weights(HypothesisForest {
        hypotheses,
        scan_index: 0,
    })
    .expect("finite weights");
    let measurements = (0..m)
        .map(|_| {
            let x = random_state(rng);
            let z = models.h * (models.f * x);
            z + Vector2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .collect();
    let birth_pdfs = (0..births)
        .map(|_| BirthPdf {
            mean: random_state(rng),
            covariance: random_spd(rng, 1.0) * 4.0,
        })
        .collect();
    OracleInstance {
        forest,
        measurements,
        models,
        pd: rng.random_range(0.5..0.99),
        log_g: rng.random_range(-6.0..-2.0),
        bd: BirthDeathConfig {
            alpha,
            beta,
            birth_pdfs,
            death_candidates: DeathCandidates::All,
        },
    }
}

/// Exhaustive engine scan of an instance, unpruned and unfloored.
pub fn engine_children(inst: &OracleInstance) -> Result<HypothesisForest, OracleError> {
    let dynamics = FixedLinear {
        transition: inst.models.f,
        noise: inst.models.q,
    };
    let measurement = PositionMeasurement { noise: inst.models.r };
    let sensor = UniformSensor::new(inst.pd, inst.log_g);
    let models = Models {
        dynamics: &dynamics,
        measurement: &measurement,
        sensor: &sensor,
    };
    let opts = ScanOptions {
        dt: 1.0,
        h_inf: usize::MAX,
        generator: ChildGenerator::exhaustive(),
        gate: None,
        weight_floor: 0.0,
        ..ScanOptions::default()
    };
    scan(&inst.forest, &inst.measurements, models, &inst.bd, &opts)
        .map(|(f, _)| f)
        .map_err(|e| OracleError::Engine(e.to_string()))
}

/// How closely the engine reproduced an oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agreement {
    pub children: usize,
    pub total_variation: f64,
    pub max_pdf_error: f64,
}

fn gaussian_error(a: &Gaussian, mean: &StateVector, cov: &StateCovariance) -> f64 {
    let dm = (a.mean - mean).amax() / (1.0 + a.mean.amax());
    let dc = (a.cov - cov).amax() / (1.0 + a.cov.amax());
    dm.max(dc)
}

/// Engine child weights and pdfs against [`brute_force_posterior`].
pub fn engine_vs_brute_force(inst: &OracleInstance) -> Result<Agreement, OracleError> {
    let oracle = brute_force_posterior(
        &inst.forest,
        &inst.measurements,
        &inst.models,
        inst.pd,
        inst.log_g,
        &inst.bd,
        1_000_000,
    )?;
    let engine = engine_children(inst)?;
    let mut tv = 0.0;
    let mut pdf_err: f64 = 0.0;
    let mut matched = 0;
    for child in &oracle {
        let found = engine.hypotheses.iter().find(|h| {
            h.lineage.as_ref().is_some_and(|l| {
                l.parent == child.parent && l.branch == child.branch && l.association.assignments == child.association
            })
        });
        match found {
            Some(h) => {
                matched += 1;
                tv += (h.weight() - child.weight).abs();
                if h.tracks.len() != child.pdfs.len() {
                    pdf_err = f64::INFINITY;
                }
                for (label, g) in &child.pdfs {
                    pdf_err = pdf_err.max(match h.track(*label) {
                        Some(t) => gaussian_error(g, &t.mean, &t.covariance),
                        None => f64::INFINITY,
                    });
                }
            }
            None => tv += child.weight,
        }
    }
    // engine children the oracle never produced
    let unmatched: f64 = if matched == engine.len() { 0.0 } else { f64::INFINITY };
    Ok(Agreement {
        children: oracle.len(),
        total_variation: 0.5 * tv + unmatched,
        max_pdf_error: pdf_err,
    })
}

/// Engine children of a one-parent, two-track, two-measurement instance
/// without births or deaths against [`fisst_two_target_update`]. Children
/// are matched to components through their pdf pairs.
pub fn engine_vs_fisst(inst: &OracleInstance) -> Result<(Agreement, FisstExpansion), OracleError> {
    let parent = match inst.forest.hypotheses.as_slice() {
        [p] if p.tracks.len() == 2 => p,
        _ => {
            return Err(OracleError::Shape {
                expected: "one parent with two tracks",
                got: format!("{} parents", inst.forest.len()),
            })
        }
    };
    let zs: [Measurement; 2] = inst
        .measurements
        .as_slice()
        .try_into()
        .map_err(|_| OracleError::Shape {
            expected: "two measurements",
            got: format!("{}", inst.measurements.len()),
        })?;
    if inst.bd.alpha != 0.0 || inst.bd.beta != 0.0 {
        return Err(OracleError::Shape {
            expected: "no births or deaths",
            got: format!("alpha {}, beta {}", inst.bd.alpha, inst.bd.beta),
        });
    }
    let comps = [FisstComponent {
        weight: 1.0,
        pdfs: parent
            .tracks
            .iter()
            .map(|t| Gaussian {
                mean: t.mean,
                cov: t.covariance,
            })
            .collect(),
    }];
    let fisst = fisst_two_target_update(&comps, zs, inst.pd, inst.log_g.exp(), &inst.models)?;
    let engine = engine_children(inst)?;
    let mut used = vec![false; fisst.components.len()];
    let mut tv = 0.0;
    let mut pdf_err: f64 = 0.0;
    for h in &engine.hypotheses {
        let pdfs = canonical(
            h.tracks
                .iter()
                .map(|t| Gaussian {
                    mean: t.mean,
                    cov: t.covariance,
                })
                .collect(),
        );
        let best = fisst
            .components
            .iter()
            .enumerate()
            .filter(|(i, c)| !used[*i] && c.pdfs.len() == pdfs.len())
            .map(|(i, c)| {
                let err = c
                    .pdfs
                    .iter()
                    .zip(&pdfs)
                    .map(|(a, b)| gaussian_error(a, &b.mean, &b.cov))
                    .fold(0.0, f64::max);
                (i, err)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, err)) => {
                used[i] = true;
                pdf_err = pdf_err.max(err);
                tv += (h.weight() - fisst.components[i].weight).abs();
            }
            None => tv += f64::INFINITY,
        }
    }
    for (i, c) in fisst.components.iter().enumerate() {
        if !used[i] {
            tv += c.weight;
        }
    }
    Ok((
        Agreement {
            children: engine.len(),
            total_variation: 0.5 * tv,
            max_pdf_error: pdf_err,
        },
        fisst,
    ))
}
