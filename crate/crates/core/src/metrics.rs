//! Ensemble observables, fits and file output.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::d4::D4Row;
use crate::flags::FlagState;
use crate::lattice::Geometry;
use crate::toric::ToricRow;

/// 1 iff no flag is raised.
pub fn flag_fidelity(f: &FlagState) -> bool {
    f.fidelity()
}

/// One row of an ensemble-averaged time series. Fidelity columns average
/// only over trajectories that were decoded at that time (NaN if none).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    #[serde(rename = "nX")]
    pub nx: f64,
    #[serde(rename = "nZ")]
    pub nz: f64,
    #[serde(rename = "ndB")]
    pub ndb: f64,
    #[serde(rename = "ndA")]
    pub nda: f64,
    pub ameas: f64,
    #[serde(rename = "F0")]
    pub f0: f64,
    #[serde(rename = "Fplus")]
    pub fplus: f64,
}

impl SeriesRow {
    /// Toric rows: zero-basis fidelity is `1 − pX`, plus-basis `1 − pZ`.
    pub fn from_toric(r: &ToricRow) -> SeriesRow {
        SeriesRow { t: r.t, nx: r.nx, nz: r.nz, ndb: r.n_d_b, nda: r.n_d_a, ameas: r.ameas, f0: 1.0 - r.px, fplus: 1.0 - r.pz }
    }

    /// D4 rows carry one basis; the other fidelity column is NaN.
    pub fn from_d4(r: &D4Row, plus: bool) -> SeriesRow {
        let (f0, fplus) = if plus { (f64::NAN, r.fidelity) } else { (r.fidelity, f64::NAN) };
        SeriesRow { t: r.t, nx: r.nx, nz: r.nz, ndb: r.n_d_b, nda: r.n_d_a, ameas: r.ameas, f0, fplus }
    }
}

/// Run metadata stored next to every series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub trajectories: usize,
    pub seed: u64,
    pub config_hash: String,
    pub rows: Vec<SeriesRow>,
}

fn nan_mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs.filter(|x| !x.is_nan()) {
        s += x;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Row-wise mean of per-trajectory series sharing one time grid.
pub fn ensemble_mean(runs: &[Vec<SeriesRow>]) -> Vec<SeriesRow> {
    let Some(first) = runs.first() else { return Vec::new() };
    (0..first.len())
        .map(|i| {
            let col = |f: fn(&SeriesRow) -> f64| nan_mean(runs.iter().map(|r| f(&r[i])));
            SeriesRow {
                t: first[i].t,
                nx: col(|r| r.nx),
                nz: col(|r| r.nz),
                ndb: col(|r| r.ndb),
                nda: col(|r| r.nda),
                ameas: col(|r| r.ameas),
                f0: col(|r| r.f0),
                fplus: col(|r| r.fplus),
            }
        })
        .collect()
}

/// Merges two series on the same time grid, taking non-NaN columns from
/// either (used to join zero- and plus-basis ensembles).
pub fn merge_bases(zero: &[SeriesRow], plus: &[SeriesRow]) -> Vec<SeriesRow> {
    zero.iter()
        .zip(plus)
        .map(|(a, b)| {
            let avg = |x: f64, y: f64| nan_mean([x, y].into_iter());
            SeriesRow {
                t: a.t,
                nx: avg(a.nx, b.nx),
                nz: avg(a.nz, b.nz),
                ndb: avg(a.ndb, b.ndb),
                nda: avg(a.nda, b.nda),
                ameas: avg(a.ameas, b.ameas),
                f0: a.f0,
                fplus: b.fplus,
            }
        })
        .collect()
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("window {window} exceeds the series span {span}")]
    Window { window: f64, span: f64 },
    #[error("empty input")]
    Empty,
    #[error("target mean {target} never attained (range {lo}..{hi})")]
    TargetNotAttained { target: f64, lo: f64, hi: f64 },
    #[error("fit needs at least {0} finite points")]
    TooFewPoints(usize),
}

/// `(nX+nZ)/2` at the last time minus the same at `t_f − window` (the
/// latest row at or before it).
pub fn delta_density(series: &[SeriesRow], window: f64) -> Result<f64, MetricsError> {
    let last = series.last().ok_or(MetricsError::Empty)?;
    let span = last.t - series[0].t;
    if window > span + 1e-12 {
        return Err(MetricsError::Window { window, span });
    }
    let t0 = last.t - window;
    let earlier = series.iter().rev().find(|r| r.t <= t0 + 1e-12).unwrap_or(&series[0]);
    Ok((last.nx + last.nz) / 2.0 - (earlier.nx + earlier.nz) / 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: u64,
}

/// Uniform bins on `[0, 1]`; the top edge belongs to the last bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    let mut h: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin { bin_lo: i as f64 / bins as f64, bin_hi: (i + 1) as f64 / bins as f64, count: 0 })
        .collect();
    for &v in values {
        let i = ((v * bins as f64).floor() as usize).min(bins - 1);
        h[i].count += 1;
    }
    h
}

/// Whether a density is strictly below saturation, i.e. the trajectory has
/// not been absorbed.
pub fn not_absorbed(density: f64, n_edges: usize) -> bool {
    density < 1.0 - 1.0 / (2.0 * n_edges as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityHistogram {
    /// Index into the time grid where the ensemble mean first reached the
    /// target.
    pub index: usize,
    pub bins: Vec<HistogramBin>,
    /// Mean over trajectories not yet absorbed (NaN if all are).
    pub conditioned_mean: f64,
}

/// Histogram of per-trajectory densities at the first time the ensemble
/// mean reaches `target`. `densities[k][i]` is trajectory `k` at time `i`.
pub fn density_histogram(densities: &[Vec<f64>], target: f64, bins: usize, n_edges: usize) -> Result<DensityHistogram, MetricsError> {
    if densities.len() < 2 {
        return Err(MetricsError::Empty);
    }
    let means = column_means(densities);
    let index = means.iter().position(|&m| m >= target).ok_or_else(|| MetricsError::TargetNotAttained {
        target,
        lo: means.iter().copied().fold(f64::INFINITY, f64::min),
        hi: means.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })?;
    let column: Vec<f64> = densities.iter().map(|d| d[index]).collect();
    Ok(DensityHistogram { index, bins: histogram(&column, bins), conditioned_mean: conditioned_mean(&column, n_edges) })
}

pub fn column_means(densities: &[Vec<f64>]) -> Vec<f64> {
    let n = densities.iter().map(Vec::len).min().unwrap_or(0);
    (0..n).map(|i| densities.iter().map(|d| d[i]).sum::<f64>() / densities.len() as f64).collect()
}

pub fn conditioned_mean(column: &[f64], n_edges: usize) -> f64 {
    nan_mean(column.iter().map(|&d| if not_absorbed(d, n_edges) { d } else { f64::NAN }))
}

/// Two-peak test used for the bistability check: a local maximum below
/// 0.5 holding at least `min_frac` of the mass within its neighborhood, a
/// saturated peak in the top bin holding at least `min_frac`, and a
/// valley between them lower than half the smaller peak.
pub fn is_bimodal(bins: &[HistogramBin], min_frac: f64) -> bool {
    let total: u64 = bins.iter().map(|b| b.count).sum();
    if total == 0 {
        return false;
    }
    let n = bins.len();
    // three-bin moving sum smooths shot noise
    let smooth: Vec<u64> = (0..n).map(|i| bins[i.saturating_sub(1)..(i + 2).min(n)].iter().map(|b| b.count).sum()).collect();
    let top = bins[n - 1].count;
    if (top as f64) < min_frac * total as f64 {
        return false;
    }
    let low: Vec<usize> = (0..n).filter(|&i| bins[i].bin_hi <= 0.5).collect();
    let Some(&peak) = low.iter().max_by_key(|&&i| (smooth[i], std::cmp::Reverse(i))) else { return false };
    if (smooth[peak] as f64) < min_frac * total as f64 {
        return false;
    }
    let valley = smooth[peak..n - 1].iter().copied().min().unwrap_or(0);
    (valley as f64) < 0.5 * (smooth[peak].min(top) as f64)
}

/// Least-squares line `y = intercept + slope·x` with standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    pub r2: f64,
    pub n: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit, MetricsError> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(&a, &b)| (a, b)).filter(|(a, b)| a.is_finite() && b.is_finite()).collect();
    let n = pts.len();
    if n < 2 {
        return Err(MetricsError::TooFewPoints(2));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(MetricsError::TooFewPoints(2));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let (slope_se, intercept_se) = if n > 2 {
        let s2 = sse / (nf - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / nf + mx * mx / sxx)).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LinearFit { slope, intercept, slope_se, intercept_se, r2, n })
}

/// `τ = α·ln(L/L0)`, fitted as a line in `ln L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub alpha: f64,
    pub l0: f64,
    pub alpha_se: f64,
    pub l0_se: f64,
    pub r2: f64,
}

pub fn log_fit(l: &[f64], tau: &[f64]) -> Result<LogFit, MetricsError> {
    let x: Vec<f64> = l.iter().map(|v| v.ln()).collect();
    let f = linear_fit(&x, tau)?;
    let alpha = f.slope;
    let ln_l0 = -f.intercept / alpha;
    let l0 = ln_l0.exp();
    // delta method on ln L0 = −b/a; slope and intercept covariance is −x̄·se_a²
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let cov = -mx * f.slope_se * f.slope_se;
    let var = (f.intercept_se / alpha).powi(2) + (f.intercept * f.slope_se / (alpha * alpha)).powi(2)
        - 2.0 * f.intercept / (alpha * alpha * alpha) * cov;
    Ok(LogFit { alpha, l0, alpha_se: f.slope_se, l0_se: l0 * var.max(0.0).sqrt(), r2: f.r2 })
}

/// `τ = a·x^b`, fitted as a line in log-log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub a: f64,
    pub b: f64,
    pub a_se: f64,
    pub b_se: f64,
    pub r2: f64,
}

pub fn power_fit(x: &[f64], y: &[f64]) -> Result<PowerFit, MetricsError> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let f = linear_fit(&lx, &ly)?;
    let a = f.intercept.exp();
    Ok(PowerFit { a, b: f.slope, a_se: a * f.intercept_se, b_se: f.slope_se, r2: f.r2 })
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub gx: f64,
    pub gz: f64,
    pub nf_mean: f64,
    #[serde(rename = "nX_mean")]
    pub nx_mean: f64,
    #[serde(rename = "nZ_mean")]
    pub nz_mean: f64,
    /// Fraction of decoded trajectories with intact logicals.
    pub f_mean: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub tau_mean: f64,
    pub tau_se: f64,
    pub censored_frac: f64,
}

/// Writes rows as CSV with a header from the serde field names. Floats use
/// the shortest representation that round-trips.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Content hash of the lattice tables that the dynamics reads.
pub fn geometry_hash(g: &Geometry) -> String {
    let mut h = Sha256::new();
    h.update((g.l as u64).to_le_bytes());
    h.update((g.colors as u64).to_le_bytes());
    for tables in [&g.edge_vertices, &g.edge_plaquettes] {
        for pair in tables.iter() {
            for x in pair {
                h.update(x.to_le_bytes());
            }
        }
    }
    for list in [&g.star.iter().map(|s| s.to_vec()).collect::<Vec<_>>(), &g.boundary.iter().map(|s| s.to_vec()).collect()] {
        for s in list {
            for x in s {
                h.update(x.to_le_bytes());
            }
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-run manifest naming the configuration and every file it produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub geometry_hashes: Vec<(usize, String)>,
    pub files: Vec<String>,
    pub results: serde_json::Value,
    pub version: String,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value) -> Manifest {
        let config_hash = sha256_hex(config.to_string().as_bytes());
        Manifest {
            command: command.to_string(),
            config,
            config_hash,
            geometry_hashes: Vec::new(),
            files: Vec::new(),
            results: serde_json::Value::Null,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let mut f = std::fs::File::create(dir.join("manifest.json"))?;
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        Ok(())
    }
}
