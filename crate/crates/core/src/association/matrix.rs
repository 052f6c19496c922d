use crate::gaussian::{innovation_distance2, measurement_loglik, measurement_loglik_at_mean, MeasurementModel};
use crate::mtt::{Measurement, Track, TrackLabel};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

/// Squared Mahalanobis innovation distance beyond which a pair is gated out.
pub const DEFAULT_GATE: f64 = 25.0;

/// Which single-object likelihood fills the track columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LikelihoodForm {
    /// `N(z; h(mean), H P H^T + R)`.
    #[default]
    Marginal,
    /// `N(z; h(mean), R)`.
    AtMean,
}

/// `m × (M+1)` table of log-likelihoods: rows are measurements, columns are
/// tracks followed by one clutter column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataAssociationMatrix {
    loglik: DMatrix<f64>,
    track_labels: Vec<TrackLabel>,
    /// `source[c]` is the index into the input track list held by column `c`.
    source: Vec<usize>,
    singular_pairs: usize,
}

impl DataAssociationMatrix {
    /// Fills the matrix in input track order. Pairs with a singular
    /// innovation, or outside `gate` when one is given, are `-inf`.
    pub fn build(
        tracks: &[Track],
        measurements: &[Measurement],
        clutter_log_density: impl Fn(&Measurement) -> f64,
        meas: &dyn MeasurementModel,
        gate: Option<f64>,
        form: LikelihoodForm,
    ) -> Self {
        let (m, n) = (measurements.len(), tracks.len());
        let mut loglik = DMatrix::from_element(m, n + 1, f64::NEG_INFINITY);
        let mut singular_pairs = 0;
        for (i, z) in measurements.iter().enumerate() {
            for (j, t) in tracks.iter().enumerate() {
                let value = match form {
                    LikelihoodForm::Marginal => measurement_loglik(t, z, meas),
                    LikelihoodForm::AtMean => measurement_loglik_at_mean(t, z, meas),
                };
                let gated_out = match gate {
                    Some(g) => innovation_distance2(t, z, meas).map_or(true, |d2| d2 > g),
                    None => false,
                };
                match value {
                    Ok(v) if !gated_out => loglik[(i, j)] = v,
                    Ok(_) => {}
                    Err(_) => singular_pairs += 1,
                }
            }
            loglik[(i, n)] = clutter_log_density(z);
        }
        Self {
            loglik,
            track_labels: tracks.iter().map(|t| t.label).collect(),
            source: (0..n).collect(),
            singular_pairs,
        }
    }

    /// Wraps a precomputed `m × (M+1)` log-likelihood table.
    pub fn from_loglik(loglik: DMatrix<f64>, track_labels: Vec<TrackLabel>) -> Self {
        assert_eq!(loglik.ncols(), track_labels.len() + 1, "column count");
        let n = track_labels.len();
        Self {
            loglik,
            track_labels,
            source: (0..n).collect(),
            singular_pairs: 0,
        }
    }

    pub fn n_measurements(&self) -> usize {
        self.loglik.nrows()
    }

    pub fn n_tracks(&self) -> usize {
        self.track_labels.len()
    }

    pub fn clutter_column(&self) -> usize {
        self.track_labels.len()
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.loglik[(row, col)]
    }

    pub fn loglik(&self) -> &DMatrix<f64> {
        &self.loglik
    }

    pub fn track_labels(&self) -> &[TrackLabel] {
        &self.track_labels
    }

    /// Input track index held by each column.
    pub fn source_indices(&self) -> &[usize] {
        &self.source
    }

    pub fn singular_pairs(&self) -> usize {
        self.singular_pairs
    }

    /// Reorders the track columns: new column `c` is old column `perm[c]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        let n = self.n_tracks();
        assert_eq!(perm.len(), n, "permutation length");
        let mut loglik = self.loglik.clone();
        for (c, &p) in perm.iter().enumerate() {
            loglik.set_column(c, &self.loglik.column(p));
        }
        Self {
            loglik,
            track_labels: perm.iter().map(|&p| self.track_labels[p]).collect(),
            source: perm.iter().map(|&p| self.source[p]).collect(),
            singular_pairs: self.singular_pairs,
        }
    }

    /// Random column order; the applied permutation stays recorded in
    /// [`Self::source_indices`].
    pub fn shuffle_columns<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let mut perm: Vec<usize> = (0..self.n_tracks()).collect();
        perm.shuffle(rng);
        self.permute_columns(&perm)
    }

    /// Column holding the track with `label`.
    pub fn column_of(&self, label: TrackLabel) -> Option<usize> {
        self.track_labels.iter().position(|&l| l == label)
    }
}
