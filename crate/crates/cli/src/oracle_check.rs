//! Engine-versus-oracle comparison on random small instances.

use rand::Rng;
use rfisst::oracle::{engine_vs_brute_force, engine_vs_fisst, random_instance, OracleError};
use rfisst::rng::{stream, substream};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub instances: usize,
    pub children: usize,
    /// Largest total-variation distance between engine and brute-force
    /// child weights.
    pub max_tv_brute_force: f64,
    pub max_pdf_error_brute_force: f64,
    pub fisst_instances: usize,
    pub max_tv_fisst: f64,
    pub max_pdf_error_fisst: f64,
}

impl OracleSummary {
    pub fn max_deviation(&self) -> f64 {
        self.max_tv_brute_force.max(self.max_tv_fisst)
    }
}

/// `instances` random problems with up to 4 tracks, 3 measurements and
/// birth/death branches, plus as many two-object problems against the
/// set-theoretic expansion.
pub fn oracle_check(instances: usize, seed: u64) -> Result<OracleSummary, OracleError> {
    let mut rng = substream(seed, &[stream::ORACLE]);
    let mut s = OracleSummary {
        instances,
        children: 0,
        max_tv_brute_force: 0.0,
        max_pdf_error_brute_force: 0.0,
        fisst_instances: instances,
        max_tv_fisst: 0.0,
        max_pdf_error_fisst: 0.0,
    };
    let rates = [0.0, 0.01, 0.05];
    for _ in 0..instances {
        let parents = rng.random_range(1..=2);
        let n = rng.random_range(0..=4);
        let m = rng.random_range(0..=3);
        let alpha = rates[rng.random_range(0..3)];
        let beta = rates[rng.random_range(0..3)];
        let births = rng.random_range(1..=2);
        let inst = random_instance(&mut rng, parents, n, m, alpha, beta, births);
        let a = engine_vs_brute_force(&inst)?;
        s.children += a.children;
        s.max_tv_brute_force = s.max_tv_brute_force.max(a.total_variation);
        s.max_pdf_error_brute_force = s.max_pdf_error_brute_force.max(a.max_pdf_error);
    }
    for _ in 0..instances {
        let inst = random_instance(&mut rng, 1, 2, 2, 0.0, 0.0, 0);
        let (a, _) = engine_vs_fisst(&inst)?;
        s.max_tv_fisst = s.max_tv_fisst.max(a.total_variation);
        s.max_pdf_error_fisst = s.max_pdf_error_fisst.max(a.max_pdf_error);
    }
    Ok(s)
}
