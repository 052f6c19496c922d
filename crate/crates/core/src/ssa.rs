//! Planar orbits seen by a fixed angular-field-of-view position sensor.

use crate::engine::{BirthPdf, SensorModel};
use crate::gaussian::{white_acceleration_noise, DynamicsModel, FilterError};
use crate::mtt::{Measurement, StateVector};
use nalgebra::{Matrix2, Matrix4, Vector2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Earth's gravitational parameter, km³/s².
pub const MU_EARTH: f64 = 398_600.441_8;
/// Radius below which a trajectory counts as an impact, km.
pub const EARTH_RADIUS_KM: f64 = 6378.0;
/// Longest RK4 substep, s.
pub const MAX_SUBSTEP_S: f64 = 10.0;

fn two_body_rate(s: &StateVector, mu: f64) -> StateVector {
    let r2 = s[0] * s[0] + s[1] * s[1];
    let k = -mu / (r2 * r2.sqrt());
    StateVector::new(s[2], s[3], k * s[0], k * s[1])
}

/// Fixed-step RK4 of `ẍ = -μ x / r³` with substeps of at most `max_step`.
pub fn propagate_two_body_with_step(
    state: &StateVector,
    dt: f64,
    mu: f64,
    max_step: f64,
) -> Result<StateVector, FilterError> {
    if !dt.is_finite() || dt < 0.0 {
        return Err(FilterError::InvalidInterval(dt));
    }
    let radius = |s: &StateVector| s[0].hypot(s[1]);
    if !(radius(state) >= EARTH_RADIUS_KM) {
        return Err(FilterError::PropagationDiverged(format!(
            "radius {:.3} km below the Earth's surface",
            radius(state)
        )));
    }
    if dt == 0.0 {
        return Ok(*state);
    }
    let steps = (dt / max_step).ceil().max(1.0) as usize;
    let h = dt / steps as f64;
    let mut s = *state;
    for _ in 0..steps {
        let k1 = two_body_rate(&s, mu);
        let k2 = two_body_rate(&(s + k1 * (h / 2.0)), mu);
        let k3 = two_body_rate(&(s + k2 * (h / 2.0)), mu);
        let k4 = two_body_rate(&(s + k3 * h), mu);
        s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if !(radius(&s) >= EARTH_RADIUS_KM) {
            return Err(FilterError::PropagationDiverged(format!(
                "Earth impact (radius {:.3} km)",
                radius(&s)
            )));
        }
    }
    Ok(s)
}

pub fn propagate_two_body(state: &StateVector, dt: f64, mu: f64) -> Result<StateVector, FilterError> {
    propagate_two_body_with_step(state, dt, mu, MAX_SUBSTEP_S)
}

fn gravity_gradient(s: &StateVector, mu: f64) -> Matrix4<f64> {
    let (x, y) = (s[0], s[1]);
    let r2 = x * x + y * y;
    let r5 = r2 * r2 * r2.sqrt();
    let g = Matrix2::new(
        mu * (3.0 * x * x - r2) / r5,
        3.0 * mu * x * y / r5,
        3.0 * mu * x * y / r5,
        mu * (3.0 * y * y - r2) / r5,
    );
    let mut a = Matrix4::zeros();
    a[(0, 2)] = 1.0;
    a[(1, 3)] = 1.0;
    a.fixed_view_mut::<2, 2>(2, 0).copy_from(&g);
    a
}

/// State and state transition matrix, from the variational equations
/// integrated with the same RK4 substeps as the state.
pub fn propagate_two_body_stm(
    state: &StateVector,
    dt: f64,
    mu: f64,
) -> Result<(StateVector, Matrix4<f64>), FilterError> {
    if !dt.is_finite() || dt < 0.0 {
        return Err(FilterError::InvalidInterval(dt));
    }
    let radius = |s: &StateVector| s[0].hypot(s[1]);
    if !(radius(state) >= EARTH_RADIUS_KM) {
        return Err(FilterError::PropagationDiverged(format!(
            "radius {:.3} km below the Earth's surface",
            radius(state)
        )));
    }
    let steps = (dt / MAX_SUBSTEP_S).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { dt / steps as f64 };
    let rate = |s: &StateVector, phi: &Matrix4<f64>| (two_body_rate(s, mu), gravity_gradient(s, mu) * phi);
    let (mut s, mut phi) = (*state, Matrix4::identity());
    for _ in 0..steps {
        let (k1, p1) = rate(&s, &phi);
        let (k2, p2) = rate(&(s + k1 * (h / 2.0)), &(phi + p1 * (h / 2.0)));
        let (k3, p3) = rate(&(s + k2 * (h / 2.0)), &(phi + p2 * (h / 2.0)));
        let (k4, p4) = rate(&(s + k3 * h), &(phi + p3 * h));
        s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        phi += (p1 + p2 * 2.0 + p3 * 2.0 + p4) * (h / 6.0);
        if !(radius(&s) >= EARTH_RADIUS_KM) {
            return Err(FilterError::PropagationDiverged(format!(
                "Earth impact (radius {:.3} km)",
                radius(&s)
            )));
        }
    }
    Ok((s, phi))
}

/// `v²/2 - μ/r`.
pub fn specific_energy(s: &StateVector, mu: f64) -> f64 {
    0.5 * (s[2] * s[2] + s[3] * s[3]) - mu / s[0].hypot(s[1])
}

/// `x vy - y vx`.
pub fn angular_momentum(s: &StateVector) -> f64 {
    s[0] * s[3] - s[1] * s[2]
}

pub fn orbital_period(radius_km: f64, mu: f64) -> f64 {
    2.0 * PI * (radius_km.powi(3) / mu).sqrt()
}

/// Counter-clockwise circular orbit state at `radius` and polar angle `bearing`.
pub fn circular_state(radius: f64, bearing: f64, mu: f64) -> StateVector {
    let v = (mu / radius).sqrt();
    let (s, c) = bearing.sin_cos();
    StateVector::new(radius * c, radius * s, -v * s, v * c)
}

/// Two-body dynamics with white-acceleration process noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBody {
    pub mu: f64,
    /// Process noise acceleration std, km/s².
    pub accel_std: f64,
}

impl Default for TwoBody {
    fn default() -> Self {
        Self {
            mu: MU_EARTH,
            accel_std: 1e-6,
        }
    }
}

impl DynamicsModel for TwoBody {
    fn propagate(&self, state: &StateVector, dt: f64) -> Result<StateVector, FilterError> {
        propagate_two_body(state, dt, self.mu)
    }

    fn jacobian(&self, state: &StateVector, dt: f64) -> Result<Matrix4<f64>, FilterError> {
        propagate_two_body_stm(state, dt, self.mu).map(|(_, phi)| phi)
    }

    fn process_noise(&self, dt: f64) -> Matrix4<f64> {
        white_acceleration_noise(self.accel_std, dt)
    }
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Bearings within this many radians of the edge count as inside.
const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sensor {
    pub position: Vector2<f64>,
    /// Boresight bearing, rad.
    pub look_direction: f64,
    pub fov_half_angle: f64,
    /// Position noise covariance, km².
    pub r: Matrix2<f64>,
    pub pd: f64,
    /// Expected clutter points per scan.
    pub clutter_rate: f64,
    /// Range interval of the observed region, km.
    pub range_min: f64,
    pub range_max: f64,
}

impl Default for Sensor {
    fn default() -> Self {
        Self {
            position: Vector2::zeros(),
            look_direction: 15f64.to_radians(),
            fov_half_angle: 15f64.to_radians(),
            r: Matrix2::identity(),
            pd: 0.9,
            clutter_rate: 1.0,
            range_min: EARTH_RADIUS_KM,
            range_max: 30_000.0,
        }
    }
}

impl Sensor {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.fov_half_angle > 0.0 && self.fov_half_angle < PI) {
            return Err(format!(
                "field-of-view half angle {} outside (0, π)",
                self.fov_half_angle
            ));
        }
        if !(0.0..=1.0).contains(&self.pd) {
            return Err(format!("detection probability {} outside [0, 1]", self.pd));
        }
        if !(self.clutter_rate >= 0.0) || !self.clutter_rate.is_finite() {
            return Err(format!(
                "clutter rate {} must be finite and non-negative",
                self.clutter_rate
            ));
        }
        if !(self.range_min >= 0.0 && self.range_max > self.range_min) || !self.range_max.is_finite() {
            return Err(format!(
                "range interval [{}, {}] is empty",
                self.range_min, self.range_max
            ));
        }
        if self.r.cholesky().is_none() {
            return Err("measurement noise covariance is not positive definite".into());
        }
        Ok(())
    }

    /// Area of the observed wedge-annulus, km².
    pub fn region_area(&self) -> f64 {
        self.fov_half_angle * (self.range_max.powi(2) - self.range_min.powi(2))
    }

    /// Inside the field of view and the range interval.
    pub fn in_region(&self, z: &Vector2<f64>) -> bool {
        let range = (z - self.position).norm();
        in_fov(z, self) && range >= self.range_min && range <= self.range_max
    }
}

/// Bearing test, boundary inclusive.
pub fn in_fov(position: &Vector2<f64>, s: &Sensor) -> bool {
    let d = position - s.position;
    let off = wrap_angle(d.y.atan2(d.x) - s.look_direction);
    off.abs() <= s.fov_half_angle + BOUNDARY_TOL
}

/// `ln(1/A)` inside the observed region, `-inf` outside.
pub fn clutter_logdensity(z: &Measurement, s: &Sensor) -> f64 {
    if s.in_region(z) {
        -s.region_area().ln()
    } else {
        f64::NEG_INFINITY
    }
}

impl SensorModel for Sensor {
    fn detection_probability(&self) -> f64 {
        self.pd
    }

    fn observes(&self, position: &Measurement) -> bool {
        self.in_region(position)
    }

    fn clutter_log_density(&self, z: &Measurement) -> f64 {
        clutter_logdensity(z, self)
    }
}

/// Uniform point in the wedge-annulus between bearings `[a, b]` and ranges
/// `[r1, r2]` around the sensor.
fn sample_wedge<R: Rng + ?Sized>(s: &Sensor, a: f64, b: f64, r1: f64, r2: f64, rng: &mut R) -> Vector2<f64> {
    let theta = rng.random_range(a..=b);
    let r = rng.random_range(r1 * r1..=r2 * r2).sqrt();
    s.position + Vector2::new(r * theta.cos(), r * theta.sin())
}

/// Measurement and the index of the truth that produced it (`None` for clutter).
pub type LabeledMeasurement = (Measurement, Option<usize>);

/// Detects each observed truth with probability `pD`, adds Gaussian noise,
/// adds Poisson clutter over the observed region, and shuffles.
pub fn observe_labeled<R: Rng + ?Sized>(truths: &[StateVector], s: &Sensor, rng: &mut R) -> Vec<LabeledMeasurement> {
    let chol = s.r.cholesky().expect("R is positive definite").l();
    let mut out = Vec::new();
    for (i, x) in truths.iter().enumerate() {
        let p = Vector2::new(x[0], x[1]);
        if !s.in_region(&p) {
            continue;
        }
        if rng.random::<f64>() < s.pd {
            let w = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            out.push((p + chol * w, Some(i)));
        }
    }
    let n_clutter = if s.clutter_rate > 0.0 {
        Poisson::new(s.clutter_rate).map_or(0, |d| d.sample(rng) as usize)
    } else {
        0
    };
    let (a, b) = (s.look_direction - s.fov_half_angle, s.look_direction + s.fov_half_angle);
    for _ in 0..n_clutter {
        out.push((sample_wedge(s, a, b, s.range_min, s.range_max, rng), None));
    }
    out.shuffle(rng);
    out
}

pub fn observe<R: Rng + ?Sized>(truths: &[StateVector], s: &Sensor, rng: &mut R) -> Vec<Measurement> {
    observe_labeled(truths, s, rng).into_iter().map(|(z, _)| z).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthPartition {
    pub index: u32,
    pub bearing_min: f64,
    pub bearing_max: f64,
    pub range_min: f64,
    pub range_max: f64,
    pub pdf: BirthPdf,
}

/// Moments of the uniform distribution over a wedge-annulus about the origin.
fn wedge_moments(a: f64, b: f64, r1: f64, r2: f64) -> (Vector2<f64>, Matrix2<f64>) {
    let w = b - a;
    let area2 = r2 * r2 - r1 * r1;
    let er = 2.0 / 3.0 * (r2.powi(3) - r1.powi(3)) / area2;
    let er2 = 0.5 * (r2.powi(4) - r1.powi(4)) / area2;
    let ec = (b.sin() - a.sin()) / w;
    let es = (a.cos() - b.cos()) / w;
    let ecc = 0.5 + ((2.0 * b).sin() - (2.0 * a).sin()) / (4.0 * w);
    let ess = 1.0 - ecc;
    let ecs = ((2.0 * a).cos() - (2.0 * b).cos()) / (4.0 * w);
    let mean = Vector2::new(er * ec, er * es);
    let second = Matrix2::new(er2 * ecc, er2 * ecs, er2 * ecs, er2 * ess);
    (mean, second - mean * mean.transpose())
}

/// Splits the field of view into `count` equal wedges between `range_min`
/// and `range_max`. Each pdf matches the position moments of the wedge; the
/// velocity is that of a prograde circular orbit through the centroid, with
/// std `velocity_std` per axis.
pub fn birth_partitions(
    s: &Sensor,
    count: usize,
    range_min: f64,
    range_max: f64,
    mu: f64,
    velocity_std: f64,
) -> Vec<BirthPartition> {
    assert!(count >= 1, "at least one birth partition");
    let start = s.look_direction - s.fov_half_angle;
    let width = 2.0 * s.fov_half_angle / count as f64;
    (0..count)
        .map(|l| {
            let a = start + width * l as f64;
            let b = if l + 1 == count {
                s.look_direction + s.fov_half_angle
            } else {
                a + width
            };
            let (mean, cov) = wedge_moments(a, b, range_min, range_max);
            let mut covariance = Matrix4::zeros();
            covariance.fixed_view_mut::<2, 2>(0, 0).copy_from(&cov);
            covariance[(2, 2)] = velocity_std * velocity_std;
            covariance[(3, 3)] = velocity_std * velocity_std;
            let p = s.position + mean;
            let v = circular_state(p.norm(), p.y.atan2(p.x), mu);
            BirthPartition {
                index: l as u32,
                bearing_min: a,
                bearing_max: b,
                range_min,
                range_max,
                pdf: BirthPdf {
                    mean: StateVector::new(p.x, p.y, v[2], v[3]),
                    covariance,
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::central_difference_jacobian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn circular_orbit_closes_after_one_period() {
        for a in [7000.0, 12_000.0, 26_000.0] {
            let s0 = circular_state(a, 0.3, MU_EARTH);
            let s1 = propagate_two_body(&s0, orbital_period(a, MU_EARTH), MU_EARTH).unwrap();
            let err = (s1 - s0).fixed_rows::<2>(0).norm() / a;
            assert!(err < 1e-6, "a={a}: relative error {err}");
        }
    }

    #[test]
    fn matches_a_finer_integrator() {
        let s0 = StateVector::new(8000.0, 500.0, -0.5, 7.2);
        let coarse = propagate_two_body(&s0, 3000.0, MU_EARTH).unwrap();
        let fine = propagate_two_body_with_step(&s0, 3000.0, MU_EARTH, 1.0).unwrap();
        assert!((coarse - fine).fixed_rows::<2>(0).norm() / 8000.0 < 1e-6);
    }

    #[test]
    fn zero_interval_is_identity() {
        let s0 = circular_state(9000.0, 1.0, MU_EARTH);
        assert_eq!(propagate_two_body(&s0, 0.0, MU_EARTH).unwrap(), s0);
    }

    #[test]
    fn conserves_energy_and_angular_momentum() {
        for (a, e) in [(7000.0, 0.0), (12_000.0, 0.02), (20_000.0, 0.05)] {
            let mut s0 = circular_state(a, 0.0, MU_EARTH);
            s0[3] *= 1.0 + e;
            let t = orbital_period(a, MU_EARTH);
            let s1 = propagate_two_body(&s0, t, MU_EARTH).unwrap();
            let de = rel(specific_energy(&s1, MU_EARTH), specific_energy(&s0, MU_EARTH));
            let dh = rel(angular_momentum(&s1), angular_momentum(&s0));
            assert!(de < 1e-9, "a={a}: energy drift {de}");
            assert!(dh < 1e-9, "a={a}: angular momentum drift {dh}");
        }
    }

    #[test]
    fn impact_is_flagged() {
        let falling = StateVector::new(7000.0, 0.0, -1.0, 0.5);
        assert!(matches!(
            propagate_two_body(&falling, 3000.0, MU_EARTH),
            Err(FilterError::PropagationDiverged(_))
        ));
        assert!(propagate_two_body(&StateVector::new(10.0, 0.0, 0.0, 0.0), 1.0, MU_EARTH).is_err());
    }

    /// Variational equations at a much finer step.
    fn stm_oracle(s0: &StateVector, dt: f64) -> Matrix4<f64> {
        let steps = (dt / 0.5).ceil() as usize;
        let h = dt / steps as f64;
        let rate =
            |s: &StateVector, phi: &Matrix4<f64>| (two_body_rate(s, MU_EARTH), gravity_gradient(s, MU_EARTH) * phi);
        let (mut s, mut phi) = (*s0, Matrix4::identity());
        for _ in 0..steps {
            let (k1, p1) = rate(&s, &phi);
            let (k2, p2) = rate(&(s + k1 * (h / 2.0)), &(phi + p1 * (h / 2.0)));
            let (k3, p3) = rate(&(s + k2 * (h / 2.0)), &(phi + p2 * (h / 2.0)));
            let (k4, p4) = rate(&(s + k3 * h), &(phi + p3 * h));
            s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            phi += (p1 + p2 * 2.0 + p3 * 2.0 + p4) * (h / 6.0);
        }
        phi
    }

    #[test]
    fn jacobian_matches_state_transition_matrix() {
        let model = TwoBody::default();
        for s0 in [
            circular_state(7000.0, 0.2, MU_EARTH),
            StateVector::new(9000.0, -3000.0, 2.0, 6.0),
        ] {
            let jac = model.jacobian(&s0, 30.0).unwrap();
            let fd = central_difference_jacobian(|x| model.propagate(x, 30.0), &s0).unwrap();
            let stm = stm_oracle(&s0, 30.0);
            let (x, _) = propagate_two_body_stm(&s0, 30.0, MU_EARTH).unwrap();
            assert_eq!(x, model.propagate(&s0, 30.0).unwrap());
            let scale = stm.norm();
            assert!((jac - stm).norm() / scale < 1e-4);
            assert!((jac - fd).norm() / scale < 1e-4);
        }
    }

    #[test]
    fn fov_decisions() {
        let s = Sensor::default();
        let at = |deg: f64| {
            let t = f64::to_radians(deg);
            Vector2::new(10_000.0 * t.cos(), 10_000.0 * t.sin())
        };
        assert!(in_fov(&at(15.0), &s));
        assert!(!in_fov(&at(45.1), &s));
        assert!(in_fov(&at(30.0), &s));
        assert!(in_fov(&at(0.0), &s));
        assert!(!in_fov(&at(-0.01), &s));
        assert!(!in_fov(&at(195.0), &s));
    }

    #[test]
    fn clutter_density_is_uniform_and_normalized() {
        let s = Sensor {
            range_min: 7000.0,
            range_max: 12_000.0,
            ..Sensor::default()
        };
        let a = s.region_area();
        assert!(rel(a, PI / 12.0 * (12_000f64.powi(2) - 7000f64.powi(2))) < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v0 = clutter_logdensity(&Vector2::new(9000.0, 2000.0), &s);
        for _ in 0..100 {
            let z = sample_wedge(&s, 0.0, 30f64.to_radians(), 7000.0, 12_000.0, &mut rng);
            assert_eq!(clutter_logdensity(&z, &s), v0);
        }
        assert!((v0.exp() * a - 1.0).abs() < 1e-12);
        assert_eq!(clutter_logdensity(&Vector2::new(-9000.0, 0.0), &s), f64::NEG_INFINITY);

        // midpoint quadrature of the region's area in polar coordinates
        let n = 2000;
        let (dr, dt) = (5000.0 / n as f64, 30f64.to_radians() / n as f64);
        let mut area = 0.0;
        for i in 0..n {
            let r = 7000.0 + (i as f64 + 0.5) * dr;
            area += r * dr * dt * n as f64;
        }
        assert!(rel(area, a) < 1e-9);
    }

    #[test]
    fn observe_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let truths: Vec<_> = (0..5)
            .map(|i| {
                circular_state(
                    8000.0 + 500.0 * i as f64,
                    f64::to_radians(5.0 + 5.0 * i as f64),
                    MU_EARTH,
                )
            })
            .collect();
        let all = Sensor {
            pd: 1.0,
            clutter_rate: 0.0,
            ..Sensor::default()
        };
        assert_eq!(observe(&truths, &all, &mut rng).len(), 5);
        let none = Sensor { pd: 0.0, ..all.clone() };
        assert!(observe(&truths, &none, &mut rng).is_empty());

        let s = Sensor {
            pd: 0.7,
            clutter_rate: 0.0,
            ..Sensor::default()
        };
        let scans = 10_000;
        let hits: usize = (0..scans).map(|_| observe(&truths[..1], &s, &mut rng).len()).sum();
        assert!((hits as f64 / scans as f64 - 0.7).abs() < 0.01);
    }

    #[test]
    fn observe_is_reproducible() {
        let truths = [circular_state(8000.0, 0.2, MU_EARTH)];
        let s = Sensor::default();
        let a = observe(&truths, &s, &mut ChaCha8Rng::seed_from_u64(3));
        let b = observe(&truths, &s, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn partitions_tile_the_fov() {
        let s = Sensor::default();
        let one = birth_partitions(&s, 1, 7000.0, 12_000.0, MU_EARTH, 0.5);
        assert_eq!(one.len(), 1);
        assert!((one[0].bearing_min - 0.0).abs() < 1e-15);
        assert!((one[0].bearing_max - 30f64.to_radians()).abs() < 1e-15);
        let parts = birth_partitions(&s, 4, 7000.0, 12_000.0, MU_EARTH, 0.5);
        for w in parts.windows(2) {
            assert_eq!(w[0].bearing_max, w[1].bearing_min);
        }
        for p in &parts {
            assert!(((p.bearing_max - p.bearing_min) - 30f64.to_radians() / 4.0).abs() < 1e-12);
            assert!(p.pdf.covariance.cholesky().is_some());
            let r = p.pdf.mean.fixed_rows::<2>(0).into_owned();
            let v = p.pdf.mean.fixed_rows::<2>(2).into_owned();
            assert!(r.dot(&v).abs() < 1e-9 * r.norm() * v.norm());
            assert!((v.norm() - (MU_EARTH / r.norm()).sqrt()).abs() < 1e-12);
            assert!(r.x * v.y - r.y * v.x > 0.0);
        }
    }

    #[test]
    fn partition_centroid_matches_sampling() {
        let s = Sensor::default();
        let parts = birth_partitions(&s, 3, 7000.0, 12_000.0, MU_EARTH, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for p in &parts {
            let n = 1_000_000;
            let mut sum = Vector2::zeros();
            for _ in 0..n {
                sum += sample_wedge(&s, p.bearing_min, p.bearing_max, 7000.0, 12_000.0, &mut rng);
            }
            let mc = sum / n as f64;
            let mean = Vector2::new(p.pdf.mean[0], p.pdf.mean[1]);
            assert!((mc - mean).norm() / mean.norm() < 0.005);
        }
    }
}
