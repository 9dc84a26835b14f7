//! Trajectory configuration and the deterministic parallel driver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::flags::Rates;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    #[default]
    Zero,
    Plus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub l: usize,
    pub rates: Rates,
    pub basis: Basis,
    /// Final time (in units of 1/η); the run lasts `ceil(t_final/dt)` sweeps.
    pub t_final: f64,
    pub seed: u64,
    /// Sweeps between recorded rows.
    pub record_stride: usize,
    /// Sweeps between decoder diagnostics; the final sweep is always decoded.
    pub decode_stride: usize,
}

impl TrajectoryConfig {
    pub fn new(l: usize, rates: Rates, t_final: f64) -> TrajectoryConfig {
        TrajectoryConfig { l, rates, basis: Basis::Zero, t_final, seed: 0, record_stride: 1, decode_stride: usize::MAX }
    }

    pub fn validate(&self) -> Result<(), crate::Error> {
        self.rates.validate()?;
        if !(self.t_final > 0.0) || self.record_stride == 0 || self.decode_stride == 0 {
            return Err(crate::Error::BadSchedule);
        }
        Ok(())
    }

    pub fn sweeps(&self) -> usize {
        (self.t_final / self.rates.dt() - 1e-9).ceil().max(1.0) as usize
    }

    /// Whether sweep `k` (1-based) is recorded / decoded.
    pub fn records(&self, k: usize) -> bool {
        k % self.record_stride == 0 || k == self.sweeps()
    }

    pub fn decodes(&self, k: usize) -> bool {
        k % self.decode_stride == 0 || k == self.sweeps()
    }
}

/// Runs `f(i)` for `i in 0..n` on `workers` threads (all available when 0)
/// and returns the results in index order.
pub fn par_map<T: Send>(n: usize, workers: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if workers == 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool");
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

/// Worker count from `HTSIM_WORKERS`, or 0 (all cores).
pub fn default_workers() -> usize {
    std::env::var("HTSIM_WORKERS").ok().and_then(|s| s.parse().ok()).unwrap_or(0)
}
