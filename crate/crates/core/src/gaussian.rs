//! Single-object extended Kalman filter.
//!
//! The association likelihood of a measurement against a track is the exact
//! Gaussian marginal `N(z; h(mean), S)` with innovation covariance
//! `S = H P H^T + R`, shared by the update and the data-association matrix.

use crate::mtt::{Measurement, StateCovariance, StateVector, Track};
use nalgebra::{Matrix2, Matrix2x4, Matrix4, SymmetricEigen, Vector2};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("propagation diverged: {0}")]
    PropagationDiverged(String),
    #[error("singular innovation covariance")]
    SingularInnovation,
    #[error("invalid propagation interval {0} s")]
    InvalidInterval(f64),
}

/// State transition `p(x | x')` linearized for the EKF.
pub trait DynamicsModel: Send + Sync {
    fn propagate(&self, state: &StateVector, dt: f64) -> Result<StateVector, FilterError>;

    /// Linearization of the flow at `state`. Defaults to central differences.
    fn jacobian(&self, state: &StateVector, dt: f64) -> Result<Matrix4<f64>, FilterError> {
        central_difference_jacobian(|x| self.propagate(x, dt), state)
    }

    /// Process noise added once per propagation interval.
    fn process_noise(&self, dt: f64) -> Matrix4<f64>;
}

/// Measurement function `z = h(x) + v`, `v ~ N(0, R)`.
pub trait MeasurementModel: Send + Sync {
    fn predict(&self, state: &StateVector) -> Measurement;
    fn jacobian(&self, state: &StateVector) -> Matrix2x4<f64>;
    fn noise(&self) -> Matrix2<f64>;
}

/// Relative step of the central-difference Jacobian.
pub const JACOBIAN_REL_STEP: f64 = 1e-6;

pub fn central_difference_jacobian<F>(f: F, state: &StateVector) -> Result<Matrix4<f64>, FilterError>
where
    F: Fn(&StateVector) -> Result<StateVector, FilterError>,
{
    let mut jac = Matrix4::zeros();
    for j in 0..4 {
        let h = JACOBIAN_REL_STEP * state[j].abs().max(1.0);
        let mut plus = *state;
        let mut minus = *state;
        plus[j] += h;
        minus[j] -= h;
        let col = (f(&plus)? - f(&minus)?) / (2.0 * h);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

/// Linear dynamics with a fixed transition and process noise, whatever `dt` is.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedLinear {
    pub transition: Matrix4<f64>,
    pub noise: Matrix4<f64>,
}

impl FixedLinear {
    pub fn identity(noise: Matrix4<f64>) -> Self {
        Self {
            transition: Matrix4::identity(),
            noise,
        }
    }
}

impl DynamicsModel for FixedLinear {
    fn propagate(&self, state: &StateVector, _dt: f64) -> Result<StateVector, FilterError> {
        Ok(self.transition * state)
    }

    fn jacobian(&self, _state: &StateVector, _dt: f64) -> Result<Matrix4<f64>, FilterError> {
        Ok(self.transition)
    }

    fn process_noise(&self, _dt: f64) -> Matrix4<f64> {
        self.noise
    }
}

/// Constant-velocity motion with piecewise-constant white acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantVelocity {
    pub accel_std: f64,
}

impl DynamicsModel for ConstantVelocity {
    fn propagate(&self, s: &StateVector, dt: f64) -> Result<StateVector, FilterError> {
        Ok(StateVector::new(s[0] + dt * s[2], s[1] + dt * s[3], s[2], s[3]))
    }

    fn jacobian(&self, _state: &StateVector, dt: f64) -> Result<Matrix4<f64>, FilterError> {
        let mut f = Matrix4::identity();
        f[(0, 2)] = dt;
        f[(1, 3)] = dt;
        Ok(f)
    }

    fn process_noise(&self, dt: f64) -> Matrix4<f64> {
        white_acceleration_noise(self.accel_std, dt)
    }
}

/// Discrete white-acceleration noise for a planar position/velocity state.
pub fn white_acceleration_noise(accel_std: f64, dt: f64) -> Matrix4<f64> {
    let q = accel_std * accel_std;
    let (a, b, c) = (dt.powi(4) / 4.0 * q, dt.powi(3) / 2.0 * q, dt * dt * q);
    Matrix4::new(
        a, 0.0, b, 0.0, //
        0.0, a, 0.0, b, //
        b, 0.0, c, 0.0, //
        0.0, b, 0.0, c,
    )
}

/// Direct position measurement with additive Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionMeasurement {
    pub noise: Matrix2<f64>,
}

impl PositionMeasurement {
    pub fn isotropic(std_km: f64) -> Self {
        Self {
            noise: Matrix2::identity() * std_km * std_km,
        }
    }
}

impl MeasurementModel for PositionMeasurement {
    fn predict(&self, state: &StateVector) -> Measurement {
        Vector2::new(state[0], state[1])
    }

    fn jacobian(&self, _state: &StateVector) -> Matrix2x4<f64> {
        Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
    }

    fn noise(&self) -> Matrix2<f64> {
        self.noise
    }
}

/// Symmetrizes and clamps negative eigenvalues to zero.
pub fn enforce_psd(p: &StateCovariance) -> StateCovariance {
    let sym = (p + p.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return sym;
    }
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    let rebuilt = eig.eigenvectors * Matrix4::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    (rebuilt + rebuilt.transpose()) * 0.5
}

pub fn predict_track(track: &Track, dynamics: &dyn DynamicsModel, dt: f64) -> Result<Track, FilterError> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(FilterError::InvalidInterval(dt));
    }
    let mean = dynamics.propagate(&track.mean, dt)?;
    if !mean.iter().all(|v| v.is_finite()) {
        return Err(FilterError::PropagationDiverged("non-finite state".to_string()));
    }
    let f = dynamics.jacobian(&track.mean, dt)?;
    let cov = f * track.covariance * f.transpose() + dynamics.process_noise(dt);
    if !cov.iter().all(|v| v.is_finite()) {
        return Err(FilterError::PropagationDiverged("non-finite covariance".to_string()));
    }
    Ok(Track::new(track.label, mean, enforce_psd(&cov)))
}

/// Predicted measurement, innovation covariance and measurement Jacobian.
struct Innovation {
    residual: Vector2<f64>,
    s: Matrix2<f64>,
    s_inv: Matrix2<f64>,
    h: Matrix2x4<f64>,
}

fn innovation(track: &Track, z: &Measurement, meas: &dyn MeasurementModel) -> Result<Innovation, FilterError> {
    let h = meas.jacobian(&track.mean);
    let s = h * track.covariance * h.transpose() + meas.noise();
    let s = (s + s.transpose()) * 0.5;
    let det = s.determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(FilterError::SingularInnovation);
    }
    let s_inv = s.try_inverse().ok_or(FilterError::SingularInnovation)?;
    Ok(Innovation {
        residual: z - meas.predict(&track.mean),
        s,
        s_inv,
        h,
    })
}

fn gaussian_log_density(residual: &Vector2<f64>, s: &Matrix2<f64>, s_inv: &Matrix2<f64>) -> f64 {
    let maha = (residual.transpose() * s_inv * residual)[(0, 0)];
    -0.5 * maha - 0.5 * s.determinant().ln() - (2.0 * PI).ln()
}

/// Kalman update; returns the posterior track and `log N(z; h(mean), S)`.
pub fn update_track(track: &Track, z: &Measurement, meas: &dyn MeasurementModel) -> Result<(Track, f64), FilterError> {
    let inn = innovation(track, z, meas)?;
    let gain = track.covariance * inn.h.transpose() * inn.s_inv;
    let mean = track.mean + gain * inn.residual;
    // Joseph form
    let ikh = Matrix4::identity() - gain * inn.h;
    let cov = ikh * track.covariance * ikh.transpose() + gain * meas.noise() * gain.transpose();
    let loglik = gaussian_log_density(&inn.residual, &inn.s, &inn.s_inv);
    Ok((Track::new(track.label, mean, enforce_psd(&cov)), loglik))
}

/// `log ∫ p(z|x) p(x) dx` for the track's Gaussian belief.
pub fn measurement_loglik(track: &Track, z: &Measurement, meas: &dyn MeasurementModel) -> Result<f64, FilterError> {
    let inn = innovation(track, z, meas)?;
    Ok(gaussian_log_density(&inn.residual, &inn.s, &inn.s_inv))
}

/// `log N(z; h(mean), R)`: the likelihood evaluated at the track mean,
/// ignoring the track's own uncertainty.
pub fn measurement_loglik_at_mean(
    track: &Track,
    z: &Measurement,
    meas: &dyn MeasurementModel,
) -> Result<f64, FilterError> {
    let r = meas.noise();
    let r_inv = r.try_inverse().ok_or(FilterError::SingularInnovation)?;
    Ok(gaussian_log_density(&(z - meas.predict(&track.mean)), &r, &r_inv))
}

/// Squared Mahalanobis distance of the innovation.
pub fn innovation_distance2(track: &Track, z: &Measurement, meas: &dyn MeasurementModel) -> Result<f64, FilterError> {
    let inn = innovation(track, z, meas)?;
    Ok((inn.residual.transpose() * inn.s_inv * inn.residual)[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mtt::TrackLabel;
    use proptest::prelude::*;

    fn track(mean: [f64; 4], cov: Matrix4<f64>) -> Track {
        Track::new(TrackLabel::new(0, 0), StateVector::from(mean), cov)
    }

    fn min_eig(p: &Matrix4<f64>) -> f64 {
        SymmetricEigen::new(*p).eigenvalues.min()
    }

    #[test]
    fn identity_dynamics_without_noise_is_identity() {
        let t = track([1.0, 2.0, 3.0, 4.0], Matrix4::identity() * 2.0);
        let p = predict_track(&t, &FixedLinear::identity(Matrix4::zeros()), 30.0).unwrap();
        assert_eq!(p, t);
    }

    #[test]
    fn identity_dynamics_with_noise_grows_trace() {
        let t = track([1.0, 2.0, 3.0, 4.0], Matrix4::identity());
        let p = predict_track(&t, &FixedLinear::identity(Matrix4::identity() * 0.1), 1.0).unwrap();
        assert_eq!(p.mean, t.mean);
        assert!(p.covariance.trace() > t.covariance.trace());
    }

    #[test]
    fn negative_interval_is_rejected() {
        let t = track([0.0; 4], Matrix4::identity());
        assert!(matches!(
            predict_track(&t, &ConstantVelocity { accel_std: 0.0 }, -1.0),
            Err(FilterError::InvalidInterval(_))
        ));
    }

    #[test]
    fn zero_innovation_update() {
        let t = track([10.0, -5.0, 0.1, 0.2], Matrix4::identity() * 4.0);
        let meas = PositionMeasurement::isotropic(1.0);
        let (post, ll) = update_track(&t, &Vector2::new(10.0, -5.0), &meas).unwrap();
        assert!((post.mean - t.mean).norm() < 1e-12);
        assert!(post.covariance.trace() < t.covariance.trace());
        let s_det: f64 = 5.0 * 5.0;
        assert!((ll - -(2.0 * PI * s_det.sqrt()).ln()).abs() < 1e-12);
    }

    #[test]
    fn uninformative_measurement_leaves_prior() {
        let t = track([10.0, -5.0, 0.1, 0.2], Matrix4::identity() * 4.0);
        let meas = PositionMeasurement {
            noise: Matrix2::identity() * 1e12,
        };
        let (post, _) = update_track(&t, &Vector2::new(100.0, 300.0), &meas).unwrap();
        assert!((post.mean - t.mean).amax() < 1e-6);
        assert!((post.covariance - t.covariance).amax() < 1e-6);
    }

    #[test]
    fn scalar_closed_form() {
        // x-axis is decoupled from everything else: prior N(0, 1), R = 1, z = 2.
        let t = track([0.0, 0.0, 0.0, 0.0], Matrix4::identity());
        let meas = PositionMeasurement::isotropic(1.0);
        let (post, ll) = update_track(&t, &Vector2::new(2.0, 0.0), &meas).unwrap();
        assert!((post.mean[0] - 1.0).abs() < 1e-14);
        assert!((post.covariance[(0, 0)] - 0.5).abs() < 1e-14);
        // N(2; 0, 2) * N(0; 0, 2)
        let n = |x: f64, v: f64| (-(x * x) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt();
        assert!((ll - (n(2.0, 2.0) * n(0.0, 2.0)).ln()).abs() < 1e-13);
    }

    #[test]
    fn loglik_is_maximal_at_predicted_measurement_and_symmetric() {
        let mut cov = Matrix4::identity() * 3.0;
        cov[(0, 1)] = 1.2;
        cov[(1, 0)] = 1.2;
        let t = track([4.0, 7.0, 0.0, 0.0], cov);
        let meas = PositionMeasurement::isotropic(0.7);
        let center = measurement_loglik(&t, &Vector2::new(4.0, 7.0), &meas).unwrap();
        let s = cov.fixed_view::<2, 2>(0, 0) + meas.noise;
        let eig = SymmetricEigen::new(s.into_owned());
        let v = eig.eigenvectors.column(0).into_owned();
        for d in [0.1, 1.0, 4.0] {
            let a = measurement_loglik(&t, &(Vector2::new(4.0, 7.0) + v * d), &meas).unwrap();
            let b = measurement_loglik(&t, &(Vector2::new(4.0, 7.0) - v * d), &meas).unwrap();
            assert!(a < center);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_innovation_is_reported() {
        let t = track([0.0; 4], Matrix4::zeros());
        let meas = PositionMeasurement {
            noise: Matrix2::zeros(),
        };
        assert_eq!(
            update_track(&t, &Vector2::zeros(), &meas).unwrap_err(),
            FilterError::SingularInnovation
        );
        assert_eq!(
            measurement_loglik(&t, &Vector2::zeros(), &meas).unwrap_err(),
            FilterError::SingularInnovation
        );
    }

    #[test]
    fn enforce_psd_clamps() {
        let mut p = Matrix4::identity();
        p[(3, 3)] = -1e-3;
        let q = enforce_psd(&p);
        assert!(min_eig(&q) >= -1e-15);
        assert_eq!(q, q.transpose());
    }

    #[test]
    fn constant_velocity_jacobian_matches_differences() {
        let cv = ConstantVelocity { accel_std: 0.0 };
        let x = StateVector::new(1.0, 2.0, 3.0, 4.0);
        let analytic = cv.jacobian(&x, 7.0).unwrap();
        let numeric = central_difference_jacobian(|s| cv.propagate(s, 7.0), &x).unwrap();
        assert!((analytic - numeric).amax() < 1e-8);
    }

    /// 2-D midpoint quadrature of `∫ N(z; p, R) N(p; m, Pp) dp` over the position marginal.
    fn quadrature_likelihood(t: &Track, z: &Vector2<f64>, r: &Matrix2<f64>) -> f64 {
        let m = Vector2::new(t.mean[0], t.mean[1]);
        let pp: Matrix2<f64> = t.covariance.fixed_view::<2, 2>(0, 0).into_owned();
        let pdf = |x: Vector2<f64>, mu: Vector2<f64>, c: &Matrix2<f64>| {
            let d = x - mu;
            let q = (d.transpose() * c.try_inverse().unwrap() * d)[(0, 0)];
            (-0.5 * q).exp() / (2.0 * PI * c.determinant().sqrt())
        };
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for a in 0..2 {
            let sp = 6.0 * pp[(a, a)].sqrt();
            let sr = 6.0 * r[(a, a)].sqrt();
            lo[a] = (m[a] - sp).min(z[a] - sr);
            hi[a] = (m[a] + sp).max(z[a] + sr);
        }
        let n = 200;
        let (hx, hy) = ((hi[0] - lo[0]) / n as f64, (hi[1] - lo[1]) / n as f64);
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let p = Vector2::new(lo[0] + (i as f64 + 0.5) * hx, lo[1] + (j as f64 + 0.5) * hy);
                sum += pdf(*z, p, r) * pdf(p, m, &pp);
            }
        }
        sum * hx * hy
    }

    fn random_cov(seed: &[f64]) -> Matrix4<f64> {
        let a = Matrix4::from_iterator(seed.iter().copied());
        a * a.transpose() + Matrix4::identity() * 0.5
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn loglik_matches_quadrature(
            mean in proptest::array::uniform4(-5.0f64..5.0),
            c in proptest::collection::vec(-1.0f64..1.0, 16),
            r_std in 0.5f64..1.5,
            dz in proptest::array::uniform2(-2.0f64..2.0),
        ) {
            let t = track(mean, random_cov(&c));
            let meas = PositionMeasurement::isotropic(r_std);
            let z = Vector2::new(mean[0] + dz[0], mean[1] + dz[1]);
            let ll = measurement_loglik(&t, &z, &meas).unwrap();
            let q = quadrature_likelihood(&t, &z, &meas.noise);
            prop_assert!((ll.exp() - q).abs() <= 1e-6 * q.max(1e-300) + 1e-12,
                "analytic {} quadrature {}", ll.exp(), q);
        }

        #[test]
        fn likelihood_integrates_to_one_over_z(
            c in proptest::collection::vec(-1.0f64..1.0, 16),
            r_std in 0.3f64..2.0,
        ) {
            let t = track([0.0; 4], random_cov(&c));
            let meas = PositionMeasurement::isotropic(r_std);
            let s = t.covariance.fixed_view::<2, 2>(0, 0) + meas.noise;
            let half = [8.0 * s[(0, 0)].sqrt(), 8.0 * s[(1, 1)].sqrt()];
            let n = 300;
            let (hx, hy) = (2.0 * half[0] / n as f64, 2.0 * half[1] / n as f64);
            let mut sum = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let z = Vector2::new(-half[0] + (i as f64 + 0.5) * hx, -half[1] + (j as f64 + 0.5) * hy);
                    sum += measurement_loglik(&t, &z, &meas).unwrap().exp();
                }
            }
            prop_assert!((sum * hx * hy - 1.0).abs() < 1e-4);
        }

        #[test]
        fn update_keeps_psd_and_shrinks_trace(
            mean in proptest::array::uniform4(-100.0f64..100.0),
            c in proptest::collection::vec(-3.0f64..3.0, 16),
            r_std in 0.01f64..10.0,
            z in proptest::array::uniform2(-100.0f64..100.0),
        ) {
            let t = track(mean, random_cov(&c));
            let meas = PositionMeasurement::isotropic(r_std);
            let (post, ll) = update_track(&t, &Vector2::from(z), &meas).unwrap();
            prop_assert!(min_eig(&post.covariance) >= -1e-9 * post.covariance.trace());
            prop_assert!(post.covariance.trace() <= t.covariance.trace() + 1e-9);
            prop_assert_eq!(ll, measurement_loglik(&t, &Vector2::from(z), &meas).unwrap());
        }
    }
}
