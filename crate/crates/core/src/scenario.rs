//! Scenario configuration, ground truth, measurement streams, the tracking
//! loop and estimate scoring.

use crate::association::{LikelihoodForm, SamplerConfig, DEFAULT_ENUMERATION_CAP, DEFAULT_GATE};
use crate::engine::{
    expected_object_count, scan, BirthDeathConfig, BirthPdf, Cardinality, ChildGenerator, DeathCandidates, EngineError,
    Models, PriorNormalization, ScanOptions, ScanReport,
};
use crate::gaussian::PositionMeasurement;
use crate::homht::{homht_scan, HomhtError, MhtWeighting};
use crate::mtt::{Hypothesis, HypothesisForest, Measurement, StateVector, Track, TrackLabel};
use crate::rng::{stream, substream};
use crate::ssa::{
    birth_partitions, circular_state, observe_labeled, orbital_period, propagate_two_body, Sensor, TwoBody,
    EARTH_RADIUS_KM, MU_EARTH,
};
use nalgebra::{Matrix2, Matrix4, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("scenario JSON: {0}")]
    Parse(String),
    #[error("truth propagation failed for object {object}: {reason}")]
    Truth { object: usize, reason: String },
}

fn default_scan_interval() -> f64 {
    30.0
}
fn default_hit_sigmas() -> f64 {
    3.0
}
fn default_pd() -> f64 {
    0.9
}
fn default_look() -> f64 {
    15.0
}
fn default_half_angle() -> f64 {
    15.0
}
fn default_noise_std() -> f64 {
    1.0
}
fn default_accel_std() -> f64 {
    1e-6
}
fn default_position_std() -> f64 {
    1.0
}
fn default_velocity_std() -> f64 {
    0.01
}
fn default_partitions() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    #[serde(default = "default_look")]
    pub look_direction_deg: f64,
    #[serde(default = "default_half_angle")]
    pub fov_half_angle_deg: f64,
    /// Per-axis position noise std, km.
    #[serde(default = "default_noise_std")]
    pub noise_std_km: f64,
    #[serde(default = "default_pd")]
    pub pd: f64,
    #[serde(default)]
    pub clutter_rate: f64,
    /// Observed range interval; defaults to the Earth's surface up to 10%
    /// beyond the largest orbit radius.
    #[serde(default)]
    pub range_km: Option<[f64; 2]>,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            look_direction_deg: default_look(),
            fov_half_angle_deg: default_half_angle(),
            noise_std_km: default_noise_std(),
            pd: default_pd(),
            clutter_rate: 0.0,
            range_km: None,
        }
    }
}

/// Where a scheduled object enters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BirthState {
    /// `[x, y, vx, vy]` in km and km/s.
    Explicit([f64; 4]),
    /// `"random_in_fov"`: a near-circular prograde orbit entering the field of view.
    Named(BirthStateName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BirthStateName {
    RandomInFov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledBirth {
    pub scan: u32,
    pub state: BirthState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    /// Objects `0..known` are in the initial hypothesis.
    pub known: usize,
    #[serde(default = "default_position_std")]
    pub position_std_km: f64,
    #[serde(default = "default_velocity_std")]
    pub velocity_std_km_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirthDeathSpec {
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "default_partitions")]
    pub partitions: usize,
    /// Per-axis velocity std of the birth pdfs about circular motion;
    /// defaults to the larger of a tenth of the circular speed at the middle
    /// of the orbit range and half the spread of circular speeds across it.
    #[serde(default)]
    pub velocity_std_km_s: Option<f64>,
    #[serde(default)]
    pub death_candidates: DeathCandidates,
}

impl Default for BirthDeathSpec {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            partitions: default_partitions(),
            velocity_std_km_s: None,
            death_candidates: DeathCandidates::Observable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub object_count: usize,
    #[serde(default)]
    pub birth_schedule: Vec<ScheduledBirth>,
    /// Orbit radius interval of the random objects, km.
    pub orbit_radius_km: [f64; 2],
    #[serde(default = "default_scan_interval")]
    pub scan_interval_s: f64,
    /// Defaults to enough scans to cover the longest orbital period.
    #[serde(default)]
    pub total_scans: Option<u32>,
    #[serde(default)]
    pub sensor: SensorConfig,
    pub initial: InitialSpec,
    #[serde(default)]
    pub birth_death: BirthDeathSpec,
    #[serde(default = "default_accel_std")]
    pub process_noise_km_s2: f64,
    /// Fixed hit bound, km. Without it an estimate hits when it lies within
    /// `hit_sigmas` standard deviations of its own predicted measurement
    /// spread along the worst axis.
    #[serde(default)]
    pub hit_bound_km: Option<f64>,
    #[serde(default = "default_hit_sigmas")]
    pub hit_sigmas: f64,
    /// Start the known objects inside the field of view.
    #[serde(default)]
    pub start_in_fov: bool,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sensor(&self) -> Sensor {
        let s = &self.sensor;
        let [r1, r2] = s.range_km.unwrap_or([EARTH_RADIUS_KM, 1.1 * self.orbit_radius_km[1]]);
        Sensor {
            position: Vector2::zeros(),
            look_direction: s.look_direction_deg.to_radians(),
            fov_half_angle: s.fov_half_angle_deg.to_radians(),
            r: Matrix2::identity() * s.noise_std_km * s.noise_std_km,
            pd: s.pd,
            clutter_rate: s.clutter_rate,
            range_min: r1,
            range_max: r2,
        }
    }

    /// Fewest scans that cover one period of the largest allowed orbit.
    pub fn minimum_scans(&self) -> u32 {
        let longest = orbital_period(self.orbit_radius_km[1], MU_EARTH);
        (longest / self.scan_interval_s).ceil() as u32 + 1
    }

    pub fn total_scans(&self) -> u32 {
        self.total_scans.unwrap_or_else(|| self.minimum_scans())
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Invalid(m));
        let [r1, r2] = self.orbit_radius_km;
        if !(r1 > EARTH_RADIUS_KM && r2 >= r1 && r2.is_finite()) {
            return bad(format!(
                "orbit radius interval [{r1}, {r2}] must lie above {EARTH_RADIUS_KM} km"
            ));
        }
        if !(self.scan_interval_s > 0.0) || !self.scan_interval_s.is_finite() {
            return bad(format!("scan interval {} must be positive", self.scan_interval_s));
        }
        if self.object_count > 10_000 {
            return bad(format!("object count {} is unreasonably large", self.object_count));
        }
        if self.initial.known + self.birth_schedule.len() != self.object_count {
            return bad(format!(
                "known objects ({}) plus scheduled births ({}) must equal object_count ({})",
                self.initial.known,
                self.birth_schedule.len(),
                self.object_count
            ));
        }
        if let Some(n) = self.total_scans {
            if n < self.minimum_scans() {
                return bad(format!(
                    "total_scans {n} is shorter than the longest orbital period ({} scans)",
                    self.minimum_scans()
                ));
            }
            if n > 1_000_000 {
                return bad(format!("total_scans {n} is unreasonably large"));
            }
        } else if self.minimum_scans() > 1_000_000 {
            return bad("orbit range needs an unreasonably long simulation".into());
        }
        let total = self.total_scans();
        for b in &self.birth_schedule {
            if b.scan == 0 || b.scan > total {
                return bad(format!("birth at scan {} outside 1..={total}", b.scan));
            }
            if let BirthState::Explicit(s) = &b.state {
                if !s.iter().all(|v| v.is_finite()) || s[0].hypot(s[1]) <= EARTH_RADIUS_KM {
                    return bad(format!("birth state {s:?} must be finite and above the surface"));
                }
            }
        }
        for (name, v) in [
            ("initial position std", self.initial.position_std_km),
            ("initial velocity std", self.initial.velocity_std_km_s),
            ("process noise", self.process_noise_km_s2),
            ("sensor noise std", self.sensor.noise_std_km),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} {v} must be finite and non-negative"));
            }
        }
        if !(self.sensor.noise_std_km > 0.0) {
            return bad("sensor noise std must be positive".into());
        }
        if let Some(b) = self.hit_bound_km {
            if !(b > 0.0) || !b.is_finite() {
                return bad(format!("hit bound {b} must be positive"));
            }
        }
        if !(self.hit_sigmas > 0.0) || !self.hit_sigmas.is_finite() {
            return bad(format!("hit sigmas {} must be positive", self.hit_sigmas));
        }
        let bd = &self.birth_death;
        if bd.partitions == 0 || bd.partitions > 1000 {
            return bad(format!("birth partitions {} outside 1..=1000", bd.partitions));
        }
        if !(bd.alpha >= 0.0 && bd.beta >= 0.0 && bd.alpha < 1.0 && bd.beta < 1.0) {
            return bad(format!(
                "birth/death probabilities ({}, {}) outside [0, 1)",
                bd.alpha, bd.beta
            ));
        }
        if bd.partitions as f64 * bd.alpha >= 1.0 {
            return bad("partitions × alpha must stay below one".into());
        }
        if let Some(v) = bd.velocity_std_km_s {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("birth velocity std {v} must be positive"));
            }
        }
        self.sensor().validate().map_err(ScenarioError::Invalid)
    }

    pub fn birth_death_config(&self) -> BirthDeathConfig {
        let bd = &self.birth_death;
        let [r1, r2] = self.orbit_radius_km;
        let vstd = bd.velocity_std_km_s.unwrap_or_else(|| {
            let v = |r: f64| (MU_EARTH / r).sqrt();
            (0.1 * v(0.5 * (r1 + r2))).max(0.5 * (v(r1) - v(r2)))
        });
        let birth_pdfs = if bd.alpha > 0.0 {
            birth_partitions(&self.sensor(), bd.partitions, r1, r2, MU_EARTH, vstd)
                .into_iter()
                .map(|p| p.pdf)
                .collect()
        } else {
            Vec::<BirthPdf>::new()
        };
        BirthDeathConfig {
            alpha: bd.alpha,
            beta: bd.beta,
            birth_pdfs,
            death_candidates: bd.death_candidates,
        }
    }

    pub fn dynamics(&self) -> TwoBody {
        TwoBody {
            mu: MU_EARTH,
            accel_std: self.process_noise_km_s2,
        }
    }

    pub fn hit_bound(&self) -> HitBound {
        match self.hit_bound_km {
            Some(km) => HitBound::Fixed(km),
            None => HitBound::Innovation {
                sigmas: self.hit_sigmas,
                noise: self.sensor().r,
            },
        }
    }

    pub fn measurement_model(&self) -> PositionMeasurement {
        PositionMeasurement::isotropic(self.sensor.noise_std_km)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AliveInterval {
    pub object: usize,
    pub first_scan: u32,
    pub last_scan: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthLog {
    /// `states[k]` lists `(object, state)` for every object alive at scan `k`.
    pub states: Vec<Vec<(usize, StateVector)>>,
    pub alive: Vec<AliveInterval>,
}

impl TruthLog {
    pub fn at(&self, scan: u32) -> &[(usize, StateVector)] {
        &self.states[scan as usize]
    }
}

/// A generated scenario: truth, one measurement set per scan `1..=N` and
/// the initial forest.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub truth: TruthLog,
    /// `measurements[k - 1]` is the set of scan `k`, with truth origins.
    pub measurements: Vec<Vec<(Measurement, Option<usize>)>>,
    pub initial: HypothesisForest,
    pub sensor: Sensor,
    pub birth_death: BirthDeathConfig,
    pub dynamics: TwoBody,
    pub measurement_model: PositionMeasurement,
}

impl Scenario {
    pub fn total_scans(&self) -> u32 {
        self.measurements.len() as u32
    }

    pub fn scan_measurements(&self, scan: u32) -> Vec<Measurement> {
        self.measurements[scan as usize - 1].iter().map(|(z, _)| *z).collect()
    }

    pub fn models(&self) -> Models<'_> {
        Models {
            dynamics: &self.dynamics,
            measurement: &self.measurement_model,
            sensor: &self.sensor,
        }
    }
}

fn random_orbit<R: Rng + ?Sized>(cfg: &ScenarioConfig, bearing: f64, rng: &mut R) -> StateVector {
    let [r1, r2] = cfg.orbit_radius_km;
    let r = if r2 > r1 { rng.random_range(r1..=r2) } else { r1 };
    let mut s = circular_state(r, bearing, MU_EARTH);
    let ecc: f64 = rng.random_range(-0.005..=0.005);
    s[2] *= 1.0 + ecc;
    s[3] *= 1.0 + ecc;
    s
}

pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario, ScenarioError> {
    cfg.validate()?;
    let sensor = cfg.sensor();
    let total = cfg.total_scans();
    let dt = cfg.scan_interval_s;
    let (lo, hi) = (
        sensor.look_direction - sensor.fov_half_angle,
        sensor.look_direction + sensor.fov_half_angle,
    );
    let mut orbit_rng = substream(cfg.seed, &[stream::SCENARIO, 0]);

    // (first scan, state at first scan) per object
    let mut starts = Vec::with_capacity(cfg.object_count);
    for _ in 0..cfg.initial.known {
        let bearing = if cfg.start_in_fov {
            orbit_rng.random_range(lo..=hi)
        } else {
            orbit_rng.random_range(0.0..2.0 * PI)
        };
        starts.push((0u32, random_orbit(cfg, bearing, &mut orbit_rng)));
    }
    for b in &cfg.birth_schedule {
        let state = match &b.state {
            BirthState::Explicit(s) => StateVector::from(*s),
            BirthState::Named(BirthStateName::RandomInFov) => {
                // lower half of the field of view, so the object crosses it
                let bearing = orbit_rng.random_range(lo..=sensor.look_direction);
                random_orbit(cfg, bearing, &mut orbit_rng)
            }
        };
        starts.push((b.scan, state));
    }

    let mut states = vec![Vec::new(); total as usize + 1];
    let mut alive = Vec::with_capacity(starts.len());
    for (object, &(first, s0)) in starts.iter().enumerate() {
        let mut s = s0;
        for k in first..=total {
            if k > first {
                s = propagate_two_body(&s, dt, MU_EARTH).map_err(|e| ScenarioError::Truth {
                    object,
                    reason: e.to_string(),
                })?;
            }
            states[k as usize].push((object, s));
        }
        alive.push(AliveInterval {
            object,
            first_scan: first,
            last_scan: total,
        });
    }
    let truth = TruthLog { states, alive };

    let measurements = (1..=total)
        .map(|k| {
            let mut rng = substream(cfg.seed, &[stream::OBSERVE, k as u64]);
            let (ids, xs): (Vec<usize>, Vec<StateVector>) = truth.at(k).iter().copied().unzip();
            observe_labeled(&xs, &sensor, &mut rng)
                .into_iter()
                .map(|(z, o)| (z, o.map(|i| ids[i])))
                .collect()
        })
        .collect();

    let mut init_rng = substream(cfg.seed, &[stream::SCENARIO, 1]);
    let (ps, vs) = (cfg.initial.position_std_km, cfg.initial.velocity_std_km_s);
    let cov = Matrix4::from_diagonal(&nalgebra::Vector4::new(ps * ps, ps * ps, vs * vs, vs * vs));
    let tracks = (0..cfg.initial.known)
        .map(|i| {
            let mut noise = StateVector::zeros();
            for (j, std) in [ps, ps, vs, vs].into_iter().enumerate() {
                noise[j] = std * init_rng.sample::<f64, _>(StandardNormal);
            }
            Track::new(TrackLabel::new(0, i as u32), truth.at(0)[i].1 + noise, cov)
        })
        .collect();

    Ok(Scenario {
        config: cfg.clone(),
        truth,
        measurements,
        initial: HypothesisForest::single(tracks),
        sensor,
        birth_death: cfg.birth_death_config(),
        dynamics: cfg.dynamics(),
        measurement_model: cfg.measurement_model(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectScore {
    pub object: usize,
    /// Distance to the matched estimate, km; `None` when nothing was matched.
    pub distance_km: Option<f64>,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub objects: Vec<ObjectScore>,
    pub unmatched_tracks: usize,
}

impl Classification {
    pub fn all_hit(&self) -> bool {
        self.objects.iter().all(|o| o.hit)
    }
}

/// Largest estimate-to-truth distance counted as a hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HitBound {
    Fixed(f64),
    /// `sigmas · sqrt(λ_max(H P Hᵀ + R))` of the matched estimate.
    Innovation {
        sigmas: f64,
        noise: Matrix2<f64>,
    },
}

impl HitBound {
    pub fn for_track(&self, t: &Track) -> f64 {
        match *self {
            HitBound::Fixed(km) => km,
            HitBound::Innovation { sigmas, noise } => {
                let s = t.covariance.fixed_view::<2, 2>(0, 0) + noise;
                let lmax = s.symmetric_eigenvalues().max();
                sigmas * lmax.max(0.0).sqrt()
            }
        }
    }
}

impl From<f64> for HitBound {
    fn from(km: f64) -> Self {
        HitBound::Fixed(km)
    }
}

/// Greedy global nearest-neighbour matching of estimated positions to truths:
/// the closest remaining pair is matched first. Objects come back sorted.
pub fn classify_estimates(
    estimates: &[Track],
    truth: &[(usize, StateVector)],
    bound: impl Into<HitBound>,
) -> Classification {
    let bound = bound.into();
    let mut pairs = Vec::with_capacity(estimates.len() * truth.len());
    for (ti, (_, x)) in truth.iter().enumerate() {
        for (ei, e) in estimates.iter().enumerate() {
            let d = (e.position() - Vector2::new(x[0], x[1])).norm();
            pairs.push((d, ti, ei));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut truth_match = vec![None; truth.len()];
    let mut est_used = vec![false; estimates.len()];
    for (d, ti, ei) in pairs {
        if truth_match[ti].is_none() && !est_used[ei] {
            truth_match[ti] = Some((d, bound.for_track(&estimates[ei])));
            est_used[ei] = true;
        }
    }
    let mut objects: Vec<ObjectScore> = truth
        .iter()
        .zip(truth_match)
        .map(|(&(object, _), m)| ObjectScore {
            object,
            distance_km: m.map(|(d, _)| d),
            hit: m.is_some_and(|(d, b)| d <= b),
        })
        .collect();
    objects.sort_by_key(|o| o.object);
    Classification {
        objects,
        unmatched_tracks: est_used.iter().filter(|u| !**u).count(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rfisst,
    Homht,
}

/// Tracker settings for a scenario run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub method: Method,
    pub seed: u64,
    pub mcmc_steps: u64,
    pub burn_in: Option<u64>,
    pub max_children: usize,
    pub h_inf: usize,
    pub gate: Option<f64>,
    pub enumeration_cap: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            method: Method::Rfisst,
            seed: 0,
            mcmc_steps: 100_000,
            burn_in: None,
            max_children: 10,
            h_inf: 10,
            gate: None,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

impl RunOptions {
    /// RFISST ungated, HOMHT at the default gate.
    pub fn for_method(method: Method) -> Self {
        Self {
            method,
            gate: match method {
                Method::Rfisst => None,
                Method::Homht => Some(DEFAULT_GATE),
            },
            ..Self::default()
        }
    }

    pub fn scan_options(&self, dt: f64) -> Result<ScanOptions, EngineError> {
        let burn_in = self.burn_in.unwrap_or(self.mcmc_steps / 10);
        if burn_in >= self.mcmc_steps {
            return Err(EngineError::InvalidConfig(format!(
                "burn-in {burn_in} must be below the step count {}",
                self.mcmc_steps
            )));
        }
        let (generator, weighting) = match self.method {
            Method::Rfisst => (
                ChildGenerator::Mcmc(SamplerConfig {
                    burn_in,
                    post_burn_steps: self.mcmc_steps - burn_in,
                    max_distinct: self.max_children,
                    seed: self.seed,
                }),
                MhtWeighting::Hfisst,
            ),
            Method::Homht => (
                ChildGenerator::Exhaustive {
                    cap: self.enumeration_cap,
                },
                MhtWeighting::Mht,
            ),
        };
        let opts = ScanOptions {
            dt,
            h_inf: self.h_inf,
            generator,
            weighting,
            normalization: PriorNormalization::PerBranch,
            gate: self.gate,
            likelihood: LikelihoodForm::Marginal,
            seed: self.seed,
            weight_floor: 1e-12,
            pruning: crate::engine::Pruning::TopK,
        };
        opts.validate()?;
        Ok(opts)
    }
}

/// Everything recorded about one scan of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub report: ScanReport,
    pub top: Hypothesis,
    pub classification: Classification,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("HOMHT break at scan {scan}: {reason}")]
    HomhtBreak { scan: u32, reason: String },
    #[error("scan {scan}: {source}")]
    Engine { scan: u32, source: EngineError },
}

/// Runs the tracker over every scan, handing each record to `on_scan` as
/// soon as it is available.
pub fn run_scenario(
    scn: &Scenario,
    run: &RunOptions,
    mut on_scan: impl FnMut(&ScanRecord),
) -> Result<HypothesisForest, RunError> {
    let opts = run
        .scan_options(scn.config.scan_interval_s)
        .map_err(|source| RunError::Engine { scan: 0, source })?;
    let mut forest = scn.initial.clone();
    for k in 1..=scn.total_scans() {
        let zs = scn.scan_measurements(k);
        let (next, report) = match run.method {
            Method::Rfisst => scan(&forest, &zs, scn.models(), &scn.birth_death, &opts)
                .map_err(|source| RunError::Engine { scan: k, source })?,
            Method::Homht => homht_scan(&forest, &zs, scn.models(), &scn.birth_death, &opts).map_err(|e| match e {
                HomhtError::Break { scan, reason } => RunError::HomhtBreak { scan, reason },
                HomhtError::Engine(source) => RunError::Engine { scan: k, source },
            })?,
        };
        forest = next;
        let top = forest.top().expect("non-empty forest").clone();
        let classification = classify_estimates(&top.tracks, scn.truth.at(k), scn.config.hit_bound());
        on_scan(&ScanRecord {
            report,
            top,
            classification,
        });
    }
    Ok(forest)
}

/// Cardinality summary of a forest (re-exported for report writers).
pub fn cardinality(forest: &HypothesisForest) -> Cardinality {
    expected_object_count(forest)
}
