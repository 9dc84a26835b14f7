//! Ensemble drivers behind the command-line subcommands.
//!
//! Every task draws from its own stream `rng_stream(seed, index)` with a
//! fixed index per (grid point, trajectory), and results are aggregated in
//! index order, so outputs do not depend on the worker count.

use serde::{Deserialize, Serialize};

use crate::algebra::Algebra;
use crate::d4::run_d4;
use crate::flags::{cluster_sizes, flag_sweep, time_to_density, FlagKind, FlagState, Rates, Sampler, TauSample};
use crate::lattice::Geometry;
use crate::metrics::{self, mean_se, LogFit, PowerFit, ScanPoint, SeriesRow, TauRow};
use crate::toric::run_toric;
use crate::trajectory::{par_map, Basis, TrajectoryConfig};
use crate::{rng_stream, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sim {
    Toric,
    D4,
    /// Flags only (no stabilizer state).
    Flags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisChoice {
    Zero,
    Plus,
    Both,
}

/// One simulation point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub sim: Sim,
    pub l: usize,
    /// Lattice colors; 1 for the toric code, 3 for D4, either for flags.
    pub colors: usize,
    pub rates: Rates,
    pub t_final: f64,
    pub record_stride: usize,
    pub decode_stride: usize,
}

impl Point {
    pub fn new(sim: Sim, l: usize, rates: Rates, t_final: f64) -> Point {
        let colors = if sim == Sim::Toric { 1 } else { 3 };
        Point { sim, l, colors, rates, t_final, record_stride: 1, decode_stride: usize::MAX }
    }

    pub fn geometry(&self) -> Result<Geometry, crate::Error> {
        Geometry::new(self.l, self.colors)
    }

    fn config(&self, basis: Basis) -> TrajectoryConfig {
        TrajectoryConfig {
            basis,
            record_stride: self.record_stride,
            decode_stride: self.decode_stride,
            ..TrajectoryConfig::new(self.l, self.rates, self.t_final)
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.config(Basis::Zero).validate()?;
        if self.sim == Sim::Toric && self.colors != 1 || self.sim == Sim::D4 && self.colors != 3 {
            anyhow::bail!("{:?} needs {} color(s)", self.sim, if self.sim == Sim::Toric { 1 } else { 3 });
        }
        Ok(())
    }
}

/// Geometry plus the D4 relation tables when needed.
pub struct Lattice {
    pub g: Geometry,
    pub alg: Option<Algebra>,
}

impl Lattice {
    pub fn new(p: &Point) -> Result<Lattice, crate::Error> {
        let g = p.geometry()?;
        let alg = (p.sim == Sim::D4).then(|| Algebra::new(&g));
        Ok(Lattice { g, alg })
    }
}

/// One trajectory as series rows.
pub fn run_one(p: &Point, lat: &Lattice, basis: Basis, rng: &mut Rng) -> anyhow::Result<Vec<SeriesRow>> {
    let cfg = p.config(basis);
    Ok(match p.sim {
        Sim::Toric => run_toric(&cfg, &lat.g, rng)?.iter().map(SeriesRow::from_toric).collect(),
        Sim::D4 => {
            let alg = lat.alg.as_ref().expect("D4 lattice carries its algebra");
            run_d4(&cfg, &lat.g, alg, rng)?.iter().map(|r| SeriesRow::from_d4(r, basis == Basis::Plus)).collect()
        }
        Sim::Flags => run_flags(&cfg, &lat.g, rng),
    })
}

/// Flags-only trajectory; `F0` holds the flag fidelity.
pub fn run_flags(cfg: &TrajectoryConfig, g: &Geometry, rng: &mut Rng) -> Vec<SeriesRow> {
    let mut f = FlagState::new(g.n_edges());
    let sampler = Sampler::new(&cfg.rates, g.n_edges());
    let mut rows = Vec::new();
    let mut t = 0.0;
    for k in 1..=cfg.sweeps() {
        t += flag_sweep(&mut f, g, &sampler, &cfg.rates, rng);
        if cfg.records(k) {
            rows.push(SeriesRow {
                t,
                nx: f.density_x(),
                nz: f.density_z(),
                ndb: f64::NAN,
                nda: f64::NAN,
                ameas: f64::NAN,
                f0: f.fidelity() as u8 as f64,
                fplus: f64::NAN,
            });
        }
    }
    rows
}

fn bases(b: BasisChoice) -> Vec<Basis> {
    match b {
        BasisChoice::Zero => vec![Basis::Zero],
        BasisChoice::Plus => vec![Basis::Plus],
        BasisChoice::Both => vec![Basis::Zero, Basis::Plus],
    }
}

/// Ensemble-averaged series. With both bases each trajectory index is run
/// once per basis on the same random stream.
pub fn series(p: &Point, basis: BasisChoice, trajectories: usize, seed: u64, workers: usize) -> anyhow::Result<Vec<SeriesRow>> {
    p.validate()?;
    let lat = Lattice::new(p)?;
    let bs = if p.sim == Sim::D4 { bases(basis) } else { vec![Basis::Zero] };
    let mut per_basis = Vec::new();
    for &b in &bs {
        let runs: Vec<Vec<SeriesRow>> = par_map(trajectories, workers, |i| run_one(p, &lat, b, &mut rng_stream(seed, i as u64)))
            .into_iter()
            .collect::<anyhow::Result<_>>()?;
        per_basis.push(metrics::ensemble_mean(&runs));
    }
    Ok(match per_basis.len() {
        1 => per_basis.pop().unwrap(),
        _ => metrics::merge_bases(&per_basis[0], &per_basis[1]),
    })
}

/// Late-time densities and decoded fidelity over a `γx × γz` grid (γz
/// fastest). The fidelity is `F0` for D4, "neither logical flipped" for
/// the toric code and the flag fidelity for flags.
pub fn sweep(
    sim: Sim,
    l: usize,
    eta: f64,
    gx: &[f64],
    gz: &[f64],
    t_final: f64,
    trajectories: usize,
    seed: u64,
    workers: usize,
) -> anyhow::Result<Vec<ScanPoint>> {
    if gx.is_empty() || gz.is_empty() || trajectories == 0 {
        anyhow::bail!("empty grid");
    }
    let pts: Vec<(f64, f64)> = gx.iter().flat_map(|&x| gz.iter().map(move |&z| (x, z))).collect();
    let base = Point { record_stride: usize::MAX, ..Point::new(sim, l, Rates::new(eta, 1.0, 1.0), t_final) };
    let lat = Lattice::new(&base)?;
    for &(x, z) in &pts {
        Point { rates: Rates::new(eta, x, z), ..base.clone() }.validate()?;
    }
    let finals = par_map(pts.len() * trajectories, workers, |task| -> anyhow::Result<SeriesRow> {
        let (x, z) = pts[task / trajectories];
        let p = Point { rates: Rates::new(eta, x, z), ..base.clone() };
        let rows = run_one(&p, &lat, Basis::Zero, &mut rng_stream(seed, task as u64))?;
        let mut last = *rows.last().expect("at least one sweep");
        if sim == Sim::Toric {
            last.f0 = (last.f0 == 1.0 && last.fplus == 1.0) as u8 as f64;
        }
        Ok(last)
    })
    .into_iter()
    .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(pts
        .iter()
        .zip(finals.chunks(trajectories))
        .map(|(&(x, z), rows)| {
            let m = |f: fn(&SeriesRow) -> f64| rows.iter().map(f).sum::<f64>() / rows.len() as f64;
            ScanPoint { gx: x, gz: z, nf_mean: m(|r| (r.nx + r.nz) / 2.0), nx_mean: m(|r| r.nx), nz_mean: m(|r| r.nz), f_mean: m(|r| r.f0) }
        })
        .collect())
}

/// `τ(L)` table: time for the monitored flag density to reach `threshold`
/// from empty flags, one row per `L`.
#[allow(clippy::too_many_arguments)]
pub fn tau_table(
    ls: &[usize],
    colors: usize,
    rates: &Rates,
    kind: FlagKind,
    threshold: f64,
    trials: usize,
    max_sweeps: usize,
    seed: u64,
    stream0: u64,
    workers: usize,
) -> anyhow::Result<Vec<TauRow>> {
    rates.validate()?;
    let gs: Vec<Geometry> = ls.iter().map(|&l| Geometry::new(l, colors)).collect::<Result<_, _>>()?;
    let samples: Vec<TauSample> = par_map(ls.len() * trials, workers, |task| {
        let g = &gs[task / trials];
        time_to_density(g, rates, kind, threshold, max_sweeps, &mut rng_stream(seed, stream0 + task as u64))
    });
    Ok(ls
        .iter()
        .zip(samples.chunks(trials))
        .map(|(&l, s)| {
            let taus: Vec<f64> = s.iter().map(|x| x.tau).collect();
            let (tau_mean, tau_se) = mean_se(&taus);
            let censored_frac = s.iter().filter(|x| x.censored).count() as f64 / s.len() as f64;
            TauRow { l, tau_mean, tau_se, censored_frac }
        })
        .collect())
}

/// Discrete curvature of `ln τ` against `ln L` across consecutive sizes:
/// slope of the last segment minus slope of the first. NaN when a size is
/// mostly censored, since its mean then only reflects the horizon.
pub fn loglog_curvature(rows: &[TauRow]) -> f64 {
    if rows.iter().any(|r| r.censored_frac >= 0.5) {
        return f64::NAN;
    }
    let slope = |a: &TauRow, b: &TauRow| (b.tau_mean.ln() - a.tau_mean.ln()) / ((b.l as f64).ln() - (a.l as f64).ln());
    let n = rows.len();
    if n < 3 {
        return f64::NAN;
    }
    slope(&rows[n - 2], &rows[n - 1]) - slope(&rows[0], &rows[1])
}

/// First change of `curv` from concave (negative) to convex (positive)
/// along ascending `gx`, linearly interpolated.
pub fn locate_flip(gx: &[f64], curv: &[f64]) -> Option<f64> {
    gx.windows(2)
        .zip(curv.windows(2))
        .find_map(|(x, c)| (c[0] < 0.0 && c[1] > 0.0).then(|| x[0] + (x[1] - x[0]) * c[0] / (c[0] - c[1])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub gx: Vec<f64>,
    pub tables: Vec<Vec<TauRow>>,
    pub curvature: Vec<f64>,
    pub flip: Option<f64>,
}

/// `τ(L; γx)` tables for X flags and the location of the curvature flip.
#[allow(clippy::too_many_arguments)]
pub fn transition(
    gx: &[f64],
    ls: &[usize],
    colors: usize,
    eta: f64,
    gz: f64,
    threshold: f64,
    trials: usize,
    max_sweeps: usize,
    seed: u64,
    workers: usize,
) -> anyhow::Result<Transition> {
    if gx.is_empty() || ls.len() < 3 {
        anyhow::bail!("transition needs at least one γx and three sizes");
    }
    let mut tables = Vec::new();
    for (k, &x) in gx.iter().enumerate() {
        let stream0 = (k * ls.len() * trials) as u64;
        tables.push(tau_table(ls, colors, &Rates::new(eta, x, gz), FlagKind::X, threshold, trials, max_sweeps, seed, stream0, workers)?);
    }
    let curvature: Vec<f64> = tables.iter().map(|t| loglog_curvature(t)).collect();
    let flip = locate_flip(gx, &curvature);
    Ok(Transition { gx: gx.to_vec(), tables, curvature, flip })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionedRow {
    pub t: f64,
    pub mean: f64,
    pub cond_mean: f64,
    pub active_frac: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bistability {
    pub t_star: f64,
    pub bins: Vec<metrics::HistogramBin>,
    pub conditioned_mean: f64,
    pub bimodal: bool,
    pub series: Vec<ConditionedRow>,
}

/// Per-trajectory densities of one flag kind at every `stride` sweeps.
fn density_paths(g: &Geometry, rates: &Rates, kind: FlagKind, t_final: f64, stride: usize, n: usize, seed: u64, workers: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let cfg = TrajectoryConfig { record_stride: stride, ..TrajectoryConfig::new(g.l, *rates, t_final) };
    let sampler = Sampler::new(rates, g.n_edges());
    let times: Vec<f64> = (1..=cfg.sweeps()).filter(|&k| cfg.records(k)).map(|k| k as f64 * rates.dt()).collect();
    let paths = par_map(n, workers, |i| {
        let mut rng = rng_stream(seed, i as u64);
        let mut f = FlagState::new(g.n_edges());
        let mut out = Vec::with_capacity(times.len());
        for k in 1..=cfg.sweeps() {
            flag_sweep(&mut f, g, &sampler, rates, &mut rng);
            if cfg.records(k) {
                out.push(f.density(kind));
            }
        }
        out
    });
    (times, paths)
}

/// Histogram of one flag density at the time its ensemble mean reaches
/// `target`, with the mean over trajectories that are not yet absorbed.
#[allow(clippy::too_many_arguments)]
pub fn bistability(
    l: usize,
    colors: usize,
    rates: &Rates,
    kind: FlagKind,
    target: f64,
    t_final: f64,
    stride: usize,
    trajectories: usize,
    bins: usize,
    seed: u64,
    workers: usize,
) -> anyhow::Result<Bistability> {
    rates.validate()?;
    let g = Geometry::new(l, colors)?;
    let (times, paths) = density_paths(&g, rates, kind, t_final, stride, trajectories, seed, workers);
    let h = metrics::density_histogram(&paths, target, bins, g.n_edges())?;
    let series = (0..times.len())
        .map(|i| {
            let col: Vec<f64> = paths.iter().map(|p| p[i]).collect();
            let active = col.iter().filter(|&&d| metrics::not_absorbed(d, g.n_edges())).count();
            ConditionedRow {
                t: times[i],
                mean: col.iter().sum::<f64>() / col.len() as f64,
                cond_mean: metrics::conditioned_mean(&col, g.n_edges()),
                active_frac: active as f64 / col.len() as f64,
            }
        })
        .collect();
    let bimodal = metrics::is_bimodal(&h.bins, 0.05);
    Ok(Bistability { t_star: times[h.index], bins: h.bins, conditioned_mean: h.conditioned_mean, bimodal, series })
}

/// Flag configuration saved from a steady state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub l: usize,
    pub colors: usize,
    pub rates: Rates,
    pub t: f64,
    /// X and Z flags as strings of '0'/'1' in edge order.
    pub x: String,
    pub z: String,
}

pub const SNAPSHOT_VERSION: u32 = 1;

fn bits(v: &[bool]) -> String {
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

impl Snapshot {
    pub fn new(g: &Geometry, rates: Rates, t: f64, f: &FlagState) -> Snapshot {
        Snapshot { version: SNAPSHOT_VERSION, l: g.l, colors: g.colors, rates, t, x: bits(&f.x), z: bits(&f.z) }
    }

    pub fn flags(&self) -> anyhow::Result<FlagState> {
        if self.version != SNAPSHOT_VERSION {
            anyhow::bail!("snapshot version {} (expected {SNAPSHOT_VERSION})", self.version);
        }
        if self.x.len() != self.z.len() {
            anyhow::bail!("snapshot flag arrays differ in length");
        }
        let mut f = FlagState::new(self.x.len());
        for (e, (a, b)) in self.x.bytes().zip(self.z.bytes()).enumerate() {
            f.set_x(e as u32, a == b'1');
            f.set_z(e as u32, b == b'1');
        }
        Ok(f)
    }
}

/// Steady-state flag snapshots after evolving empty flags to `t_ss`.
pub fn steady_snapshots(g: &Geometry, rates: &Rates, t_ss: f64, n: usize, seed: u64, workers: usize) -> Vec<Snapshot> {
    let cfg = TrajectoryConfig::new(g.l, *rates, t_ss);
    let sampler = Sampler::new(rates, g.n_edges());
    par_map(n, workers, |i| {
        let mut rng = rng_stream(seed, i as u64);
        let mut f = FlagState::new(g.n_edges());
        let mut t = 0.0;
        for _ in 0..cfg.sweeps() {
            t += flag_sweep(&mut f, g, &sampler, rates, &mut rng);
        }
        Snapshot::new(g, *rates, t, &f)
    })
}

/// Time until every flag is cleared under noiseless evolution.
pub fn recovery_time(g: &Geometry, rates: &Rates, mut f: FlagState, max_sweeps: usize, rng: &mut Rng) -> TauSample {
    let noiseless = Rates { eta: 0.0, ..*rates };
    let sampler = Sampler::new(&noiseless, g.n_edges());
    let mut t = 0.0;
    for _ in 0..max_sweeps {
        if f.fidelity() {
            return TauSample { tau: t, censored: false };
        }
        t += flag_sweep(&mut f, g, &sampler, &noiseless, rng);
    }
    TauSample { tau: t, censored: !f.fidelity() }
}

/// Smallest recorded time at which fewer than a fraction `eps` of the
/// trajectories still carry flags, i.e. the first time `1 − F_flag < eps`.
pub fn tau_eps(samples: &[TauSample], eps: f64) -> (f64, bool) {
    let mut s: Vec<&TauSample> = samples.iter().collect();
    s.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    let n = s.len();
    let k = ((n as f64 * (1.0 - eps)).floor() as usize).min(n - 1);
    (s[k].tau, s[k].censored)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub rows: Vec<TauRow>,
    pub fit: Option<LogFit>,
}

/// `τ(ε)` per size from recovery times; the standard error is a bootstrap
/// over trajectories.
pub fn recovery(per_l: &[(usize, Vec<TauSample>)], eps: f64, seed: u64) -> Recovery {
    use rand::Rng as _;
    let rows: Vec<TauRow> = per_l
        .iter()
        .map(|(l, s)| {
            let (tau, _) = tau_eps(s, eps);
            let mut rng = rng_stream(seed, u64::MAX - *l as u64);
            let boots: Vec<f64> = (0..200)
                .map(|_| {
                    let r: Vec<TauSample> = (0..s.len()).map(|_| s[rng.gen_range(0..s.len())]).collect();
                    tau_eps(&r, eps).0
                })
                .collect();
            let censored_frac = s.iter().filter(|x| x.censored).count() as f64 / s.len() as f64;
            TauRow { l: *l, tau_mean: tau, tau_se: mean_se(&boots).1 * (boots.len() as f64).sqrt(), censored_frac }
        })
        .collect();
    let ls: Vec<f64> = rows.iter().map(|r| r.l as f64).collect();
    let taus: Vec<f64> = rows.iter().map(|r| r.tau_mean).collect();
    Recovery { fit: metrics::log_fit(&ls, &taus).ok(), rows }
}

/// Recovery times from snapshots, one stream per snapshot.
pub fn recover_from(g: &Geometry, snaps: &[Snapshot], max_sweeps: usize, seed: u64, stream0: u64, workers: usize) -> anyhow::Result<Vec<TauSample>> {
    for s in snaps {
        if s.l != g.l || s.colors != g.colors {
            anyhow::bail!("snapshot for L={} colors={} does not match the lattice", s.l, s.colors);
        }
    }
    par_map(snaps.len(), workers, |i| {
        let f = snaps[i].flags()?;
        Ok(recovery_time(g, &snaps[i].rates, f, max_sweeps, &mut rng_stream(seed, stream0 + i as u64)))
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub phi_e: f64,
    pub t: f64,
    #[serde(rename = "F")]
    pub f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfLife {
    pub phi_e: f64,
    pub tau: f64,
    pub censored: bool,
}

/// First time the decoded fidelity drops to 1/2, linearly interpolated;
/// censored at the last time if it never does.
pub fn half_life(series: &[(f64, f64)]) -> HalfLife {
    let mut prev = (0.0, 1.0);
    for &(t, f) in series {
        if f <= 0.5 {
            let tau = if prev.1 > f { prev.0 + (t - prev.0) * (prev.1 - 0.5) / (prev.1 - f) } else { t };
            return HalfLife { phi_e: f64::NAN, tau, censored: false };
        }
        prev = (t, f);
    }
    HalfLife { phi_e: f64::NAN, tau: series.last().map_or(0.0, |x| x.0), censored: true }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Unheralded {
    pub series: Vec<FidelityRow>,
    pub half_lives: Vec<HalfLife>,
    pub fit: Option<PowerFit>,
}

/// Decoded zero-basis fidelity against time for each heralded fraction.
pub fn unheralded(p: &Point, phi_e: &[f64], trajectories: usize, seed: u64, workers: usize) -> anyhow::Result<Unheralded> {
    let mut series = Vec::new();
    let mut half_lives = Vec::new();
    for (k, &phi) in phi_e.iter().enumerate() {
        let q = Point { sim: Sim::D4, decode_stride: p.record_stride, rates: p.rates.with_phi_e(phi), ..p.clone() };
        q.validate()?;
        let lat = Lattice::new(&q)?;
        let runs: Vec<Vec<SeriesRow>> = par_map(trajectories, workers, |i| {
            run_one(&q, &lat, Basis::Zero, &mut rng_stream(seed, (k * trajectories + i) as u64))
        })
        .into_iter()
        .collect::<anyhow::Result<_>>()?;
        let mean = metrics::ensemble_mean(&runs);
        let pts: Vec<(f64, f64)> = mean.iter().map(|r| (r.t, r.f0)).collect();
        series.extend(pts.iter().map(|&(t, f)| FidelityRow { phi_e: phi, t, f }));
        half_lives.push(HalfLife { phi_e: phi, ..half_life(&pts) });
    }
    let fitted: Vec<&HalfLife> = half_lives.iter().filter(|h| h.phi_e < 1.0 && !h.censored).collect();
    let x: Vec<f64> = fitted.iter().map(|h| 1.0 - h.phi_e).collect();
    let y: Vec<f64> = fitted.iter().map(|h| h.tau).collect();
    let fit = metrics::power_fit(&x, &y).ok();
    Ok(Unheralded { series, half_lives, fit })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub size: usize,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmaxRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub smax_mean: f64,
    pub smax_se: f64,
}

/// Cluster-size histograms (both flag kinds, all colors pooled) and the
/// mean largest cluster per trajectory, from steady-state snapshots.
pub fn clusters(g: &Geometry, snaps: &[Snapshot]) -> anyhow::Result<(Vec<ClusterRow>, SmaxRow)> {
    let mut hist = std::collections::BTreeMap::new();
    let mut smax = Vec::new();
    for s in snaps {
        let f = s.flags()?;
        let mut largest = 0;
        for kind in [FlagKind::X, FlagKind::Z] {
            for c in 0..g.colors as u8 {
                for (size, n) in cluster_sizes(&f, g, kind, c) {
                    *hist.entry(size).or_insert(0u64) += n as u64;
                    largest = largest.max(size);
                }
            }
        }
        smax.push(largest as f64);
    }
    let (m, se) = mean_se(&smax);
    Ok((hist.into_iter().map(|(size, count)| ClusterRow { l: g.l, size, count }).collect(), SmaxRow { l: g.l, smax_mean: m, smax_se: se }))
}
