use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use htsim::algebra::Algebra;
use htsim::d4::{decode_d4, D4State};
use htsim::experiments::{self as ex, BasisChoice, Point, Sim, Snapshot};
use htsim::flags::{FlagKind, Pauli, Rates};
use htsim::meanfield::{linspace, mf_scan};
use htsim::metrics::{geometry_hash, write_csv, Manifest, TauRow};
use htsim::toric::{toric_init, toric_logical_error};
use htsim::trajectory::default_workers;
use htsim::{rng_stream, Basis, Geometry};

#[derive(Parser)]
#[command(name = "htsim", version, about = "Local error-correction trajectories for honeycomb toric and D4 codes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Cmd {
    /// Toric-code time series.
    RunToric,
    /// D4 time series.
    RunD4,
    /// Flags-only time series.
    RunFlags,
    /// Late-time flag densities over a (γx, γz) grid.
    Sweep,
    /// Noiseless recovery from steady-state flag snapshots.
    Recover,
    /// τ(L) tables for X flags and the curvature flip in γx.
    Transition,
    /// Density histograms where the ensemble mean reaches a target.
    Bistability,
    /// Decoded fidelity decay against the heralded fraction.
    Unheralded,
    /// Mean-field grid scan.
    Meanfield,
    /// Flag-cluster statistics in the steady state.
    Clusters,
    /// Golden decoding cases.
    DecodeCheck,
    /// Lattice tables as JSON.
    GeometryDump,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModelArg {
    Toric,
    D4,
    Flags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BasisArg {
    Zero,
    Plus,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    X,
    Z,
}

/// Options shared by all subcommands; a JSON config file with the same
/// (snake_case) names fills in anything not given on the command line.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Opts {
    /// JSON config file mirroring these options.
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    model: Option<ModelArg>,
    #[arg(long = "L", global = true)]
    #[serde(rename = "L")]
    l: Option<usize>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long, global = true)]
    gamma_x: Option<f64>,
    #[arg(long, global = true)]
    gamma_z: Option<f64>,
    #[arg(long, global = true)]
    phi_e: Option<f64>,
    #[arg(long, global = true)]
    t_final: Option<f64>,
    #[arg(long, global = true)]
    trajectories: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    basis: Option<BasisArg>,
    /// Worker threads (0 = all cores); falls back to HTSIM_WORKERS.
    #[arg(long, global = true)]
    #[serde(skip)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
    /// Multiplier on default trajectory counts.
    #[arg(long, global = true)]
    budget: Option<f64>,
    /// `lo:hi`
    #[arg(long, global = true)]
    gx_range: Option<String>,
    /// `lo:hi`
    #[arg(long, global = true)]
    gz_range: Option<String>,
    #[arg(long, global = true)]
    grid_steps: Option<usize>,
    /// Comma-separated sizes.
    #[arg(long = "L-list", global = true)]
    #[serde(rename = "L_list")]
    l_list: Option<String>,
    /// Density threshold (transition) or target mean (bistability).
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Flag colors for flags-only runs.
    #[arg(long, global = true)]
    colors: Option<usize>,
    /// Monitored flag kind.
    #[arg(long, global = true, value_enum)]
    kind: Option<KindArg>,
    /// Comma-separated heralded fractions.
    #[arg(long, global = true)]
    phi_list: Option<String>,
    /// Infidelity cutoff for recovery times.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Time to reach the steady state before snapshots.
    #[arg(long, global = true)]
    t_ss: Option<f64>,
    /// Censoring horizon in sweeps.
    #[arg(long, global = true)]
    max_sweeps: Option<usize>,
    #[arg(long, global = true)]
    record_stride: Option<usize>,
    #[arg(long, global = true)]
    decode_stride: Option<usize>,
    /// Directory of snapshots to recover from instead of generating them.
    #[arg(long, global = true)]
    #[serde(skip)]
    from: Option<PathBuf>,
}

macro_rules! merge {
    ($a:expr, $b:expr, $($f:ident),*) => { Opts { $($f: $a.$f.or($b.$f),)* } };
}

impl Opts {
    fn merged(self) -> Result<Opts> {
        let file: Opts = match &self.config {
            Some(p) => serde_json::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
                .with_context(|| format!("parsing {}", p.display()))?,
            None => Opts::default(),
        };
        Ok(merge!(self, file, config, model, l, eta, gamma_x, gamma_z, phi_e, t_final, trajectories, seed, basis, workers, out,
            budget, gx_range, gz_range, grid_steps, l_list, threshold, colors, kind, phi_list, eps, t_ss, max_sweeps,
            record_stride, decode_stride, from))
    }

    fn workers(&self) -> usize {
        self.workers.unwrap_or_else(default_workers)
    }

    fn trajectories(&self, default: usize) -> usize {
        let n = self.trajectories.unwrap_or(default);
        match self.budget {
            Some(b) => ((n as f64 * b).round() as usize).max(2),
            None => n,
        }
    }

    fn rates(&self, gx: f64, gz: f64) -> Rates {
        Rates::new(self.eta.unwrap_or(1.0), self.gamma_x.unwrap_or(gx), self.gamma_z.unwrap_or(gz)).with_phi_e(self.phi_e.unwrap_or(1.0))
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn sizes(&self, default: &[usize]) -> Result<Vec<usize>> {
        match &self.l_list {
            Some(s) => parse_list(s),
            None => Ok(default.to_vec()),
        }
    }

    fn grid(&self, range: &Option<String>, default: (f64, f64), steps: usize) -> Result<Vec<f64>> {
        let (lo, hi) = match range {
            Some(r) => {
                let (a, b) = r.split_once(':').context("range must be lo:hi")?;
                (a.trim().parse()?, b.trim().parse()?)
            }
            None => default,
        };
        let n = self.grid_steps.unwrap_or(steps);
        if n == 0 || !(lo <= hi) {
            bail!("invalid grid {lo}:{hi} with {n} steps");
        }
        Ok(linspace(lo, hi, n))
    }

    fn strides(&self, p: &mut Point, decodes: usize) {
        let sweeps = (p.t_final / p.rates.dt()).ceil().max(1.0) as usize;
        p.record_stride = self.record_stride.unwrap_or((sweeps / 200).max(1));
        p.decode_stride = self.decode_stride.unwrap_or((sweeps / decodes).max(p.record_stride));
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let v: Vec<T> = s.split(',').map(|x| x.trim().parse()).collect::<Result<_, _>>()?;
    if v.is_empty() {
        bail!("empty list");
    }
    Ok(v)
}

fn gx_label(x: f64) -> String {
    format!("{x}").replace('.', "p")
}

struct Run {
    dir: PathBuf,
    manifest: Manifest,
}

impl Run {
    fn new(cmd: Cmd, o: &Opts) -> Result<Run> {
        let dir = o.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let probe = dir.join(".write-test");
        fs::write(&probe, b"").with_context(|| format!("{} is not writable", dir.display()))?;
        fs::remove_file(probe)?;
        let config = json!({ "command": cmd, "options": o });
        Ok(Run { dir, manifest: Manifest::new(&serde_json::to_value(cmd)?.as_str().unwrap_or_default().to_string(), config) })
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        write_csv(&self.dir.join(name), rows)?;
        self.manifest.files.push(name.to_string());
        Ok(())
    }

    fn geometry(&mut self, g: &Geometry) {
        self.manifest.geometry_hashes.push((g.l, geometry_hash(g)));
    }

    fn finish(mut self, results: serde_json::Value) -> Result<()> {
        self.manifest.results = results;
        self.manifest.write(&self.dir)?;
        println!("{}", serde_json::to_string_pretty(&self.manifest.results)?);
        Ok(())
    }
}

fn sim(m: ModelArg) -> Sim {
    match m {
        ModelArg::Toric => Sim::Toric,
        ModelArg::D4 => Sim::D4,
        ModelArg::Flags => Sim::Flags,
    }
}

fn kind(k: KindArg) -> FlagKind {
    match k {
        KindArg::X => FlagKind::X,
        KindArg::Z => FlagKind::Z,
    }
}

fn run_series(cmd: Cmd, o: &Opts, s: Sim) -> Result<()> {
    let (l, gx, gz, tf, n) = match s {
        Sim::Toric => (24, 4.0, 8.0, 100.0, 500),
        Sim::D4 => (18, 35.0, 500.0, 20.0, 500),
        Sim::Flags => (48, 35.0, 500.0, 20.0, 500),
    };
    let mut p = Point::new(s, o.l.unwrap_or(l), o.rates(gx, gz), o.t_final.unwrap_or(tf));
    if s == Sim::Flags {
        p.colors = o.colors.unwrap_or(3);
    }
    o.strides(&mut p, 20);
    let basis = match o.basis.unwrap_or(BasisArg::Both) {
        BasisArg::Zero => BasisChoice::Zero,
        BasisArg::Plus => BasisChoice::Plus,
        BasisArg::Both => BasisChoice::Both,
    };
    let mut run = Run::new(cmd, o)?;
    run.geometry(&p.geometry()?);
    let rows = ex::series(&p, basis, o.trajectories(n), o.seed(), o.workers())?;
    run.csv("series.csv", &rows)?;
    let last = rows.last().copied();
    run.finish(json!({ "final": last }))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let o = cli.opts.merged()?;
    let w = o.workers();
    let seed = o.seed();
    match cli.cmd {
        Cmd::RunToric => run_series(cli.cmd, &o, Sim::Toric),
        Cmd::RunD4 => run_series(cli.cmd, &o, Sim::D4),
        Cmd::RunFlags => run_series(cli.cmd, &o, Sim::Flags),
        Cmd::Sweep => {
            let s = sim(o.model.unwrap_or(ModelArg::Toric));
            let (l, gxr, gzr, tf) = match s {
                Sim::D4 => (18, (0.0, 40.0), (0.0, 600.0), 20.0),
                _ => (48, (0.0, 30.0), (0.0, 40.0), 100.0),
            };
            let gx = o.grid(&o.gx_range, gxr, 24)?;
            let gz = o.grid(&o.gz_range, gzr, 24)?;
            let l = o.l.unwrap_or(l);
            let mut run = Run::new(cli.cmd, &o)?;
            run.geometry(&Geometry::new(l, if s == Sim::Toric { 1 } else { 3 })?);
            let pts = ex::sweep(s, l, o.eta.unwrap_or(1.0), &gx, &gz, o.t_final.unwrap_or(tf), o.trajectories(100), seed, w)?;
            run.csv("scan.csv", &pts)?;
            run.finish(json!({ "points": pts.len() }))
        }
        Cmd::Recover => {
            let ls = o.sizes(&[24, 48, 96, 144])?;
            let rates = o.rates(35.0, 500.0);
            let n = o.trajectories(1000);
            let colors = o.colors.unwrap_or(3);
            let mut run = Run::new(cli.cmd, &o)?;
            let mut per_l = Vec::new();
            for (k, &l) in ls.iter().enumerate() {
                let g = Geometry::new(l, colors)?;
                run.geometry(&g);
                let name = format!("snapshots_L{l}.json");
                let snaps: Vec<Snapshot> = match &o.from {
                    Some(dir) => serde_json::from_str(&fs::read_to_string(dir.join(&name)).with_context(|| format!("reading {name}"))?)?,
                    None => {
                        let s = ex::steady_snapshots(&g, &rates, o.t_ss.unwrap_or(20.0), n, seed.wrapping_add(k as u64), w);
                        fs::write(run.dir.join(&name), serde_json::to_string(&s)?)?;
                        run.manifest.files.push(name);
                        s
                    }
                };
                let samples = ex::recover_from(&g, &snaps, o.max_sweeps.unwrap_or(1_000_000), seed, (k * snaps.len()) as u64, w)?;
                per_l.push((l, samples));
            }
            let rec = ex::recovery(&per_l, o.eps.unwrap_or(0.5), seed);
            run.csv("tau.csv", &rec.rows)?;
            run.finish(json!({ "eps": o.eps.unwrap_or(0.5), "fit": rec.fit }))
        }
        Cmd::Transition => {
            let gx = o.grid(&o.gx_range, (5.5, 7.5), 9)?;
            let ls = o.sizes(&[48, 96, 192])?;
            let tr = ex::transition(
                &gx,
                &ls,
                o.colors.unwrap_or(1),
                o.eta.unwrap_or(1.0),
                o.gamma_z.unwrap_or(0.0),
                o.threshold.unwrap_or(0.65),
                o.trajectories(500),
                o.max_sweeps.unwrap_or(10_000),
                seed,
                w,
            )?;
            let mut run = Run::new(cli.cmd, &o)?;
            for (x, t) in tr.gx.iter().zip(&tr.tables) {
                run.csv(&format!("tau_gx{}.csv", gx_label(*x)), t)?;
            }
            #[derive(Serialize)]
            struct Curv {
                gx: f64,
                curvature: f64,
            }
            let c: Vec<Curv> = tr.gx.iter().zip(&tr.curvature).map(|(&gx, &curvature)| Curv { gx, curvature }).collect();
            run.csv("curvature.csv", &c)?;
            let censored = tr.tables.iter().flatten().any(|r: &TauRow| r.censored_frac > 0.5);
            run.finish(json!({ "flip_gx": tr.flip, "censored_dominated": censored }))
        }
        Cmd::Bistability => {
            let k = o.kind.unwrap_or(KindArg::X);
            let (gx, gz, colors, l) = match k {
                KindArg::X => (6.45, 0.0, 1, 96),
                KindArg::Z => (18.25, 500.0, 3, 48),
            };
            let rates = o.rates(gx, gz);
            let colors = o.colors.unwrap_or(colors);
            let l = o.l.unwrap_or(l);
            let tf = o.t_final.unwrap_or(50.0);
            let stride = o.record_stride.unwrap_or(((tf / rates.dt()) as usize / 500).max(1));
            let b = ex::bistability(l, colors, &rates, kind(k), o.threshold.unwrap_or(0.6), tf, stride, o.trajectories(500), 50, seed, w)?;
            let mut run = Run::new(cli.cmd, &o)?;
            run.geometry(&Geometry::new(l, colors)?);
            run.csv("histogram.csv", &b.bins)?;
            run.csv("conditioned.csv", &b.series)?;
            run.finish(json!({ "t_star": b.t_star, "conditioned_mean": b.conditioned_mean, "bimodal": b.bimodal }))
        }
        Cmd::Unheralded => {
            let phi: Vec<f64> = match &o.phi_list {
                Some(s) => parse_list(s)?,
                None => vec![0.9, 0.95, 0.98, 0.99, 1.0],
            };
            let mut p = Point::new(Sim::D4, o.l.unwrap_or(18), o.rates(35.0, 500.0), o.t_final.unwrap_or(50.0));
            o.strides(&mut p, 100);
            p.record_stride = o.record_stride.unwrap_or(p.decode_stride);
            let u = ex::unheralded(&p, &phi, o.trajectories(250), seed, w)?;
            let mut run = Run::new(cli.cmd, &o)?;
            run.geometry(&p.geometry()?);
            run.csv("fidelity.csv", &u.series)?;
            run.csv("halflife.csv", &u.half_lives)?;
            run.finish(json!({ "fit": u.fit }))
        }
        Cmd::Meanfield => {
            let gx = o.grid(&o.gx_range, (0.0, 40.0), 32)?;
            let gz = o.grid(&o.gz_range, (0.0, 600.0), 32)?;
            let rows = mf_scan(o.eta.unwrap_or(1.0), &gx, &gz, o.t_final.unwrap_or(1e4), 1e-2, w)?;
            let mut run = Run::new(cli.cmd, &o)?;
            run.csv("meanfield.csv", &rows)?;
            run.finish(json!({ "points": rows.len() }))
        }
        Cmd::Clusters => {
            let ls = o.sizes(&[24, 48, 96])?;
            let rates = o.rates(35.0, 500.0);
            let colors = o.colors.unwrap_or(3);
            let n = o.trajectories(200);
            let mut run = Run::new(cli.cmd, &o)?;
            let (mut hist, mut smax) = (Vec::new(), Vec::new());
            for (k, &l) in ls.iter().enumerate() {
                let g = Geometry::new(l, colors)?;
                run.geometry(&g);
                let snaps = ex::steady_snapshots(&g, &rates, o.t_ss.unwrap_or(20.0), n, seed.wrapping_add(k as u64), w);
                let (h, s) = ex::clusters(&g, &snaps)?;
                hist.extend(h);
                smax.push(s);
            }
            run.csv("clusters.csv", &hist)?;
            run.csv("smax.csv", &smax)?;
            let ls: Vec<f64> = smax.iter().map(|s| s.l as f64).collect();
            let m: Vec<f64> = smax.iter().map(|s| s.smax_mean).collect();
            run.finish(json!({ "fit": htsim::metrics::log_fit(&ls, &m).ok() }))
        }
        Cmd::DecodeCheck => {
            let mut run = Run::new(cli.cmd, &o)?;
            let rows = decode_check(o.l.unwrap_or(6))?;
            run.csv("decode_check.csv", &rows)?;
            let failed = rows.iter().filter(|r| !r.pass).count();
            run.finish(json!({ "cases": rows.len(), "failed": failed }))?;
            if failed > 0 {
                bail!("{failed} decoding case(s) failed");
            }
            Ok(())
        }
        Cmd::GeometryDump => {
            let g = Geometry::new(o.l.unwrap_or(6), o.colors.unwrap_or(3))?;
            let mut run = Run::new(cli.cmd, &o)?;
            run.geometry(&g);
            let path = run.dir.join("geometry.json");
            serde_json::to_writer(fs::File::create(&path)?, &g)?;
            run.manifest.files.push("geometry.json".into());
            run.finish(json!({ "L": g.l, "colors": g.colors, "edges": g.n_edges() }))
        }
    }
}

#[derive(Serialize)]
struct CheckRow {
    case: String,
    expected: bool,
    got: bool,
    pass: bool,
}

/// Known error patterns and whether decoding should restore the logical
/// state.
fn decode_check(l: usize) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let mut push = |case: String, expected: bool, got: bool| rows.push(CheckRow { case, expected, got, pass: expected == got });
    let g = Geometry::new(l, 1)?;
    let (f0, _) = toric_init(&g, Basis::Zero);
    for e in [0, g.n_edges() as u32 / 2] {
        let mut f = f0.clone();
        f.apply(&g, Pauli::Y, e);
        push(format!("toric Y on edge {e}"), true, toric_logical_error(&f, &g)? == (false, false));
    }
    let lp = &g.logical[0].x_v;
    let mut f = f0.clone();
    for &e in &lp[..lp.len() / 2 + 1] {
        f.apply_x(&g, e);
    }
    push("toric X string past half the loop".into(), false, toric_logical_error(&f, &g)?.0 == false);
    let mut f = f0.clone();
    for &e in lp {
        f.apply_x(&g, e);
    }
    push("toric closed X loop".into(), false, toric_logical_error(&f, &g)?.0 == false);

    let g = Geometry::new(l, 3)?;
    let alg = Algebra::new(&g);
    let mut rng = rng_stream(0, 0);
    for basis in [Basis::Zero, Basis::Plus] {
        for e in [0u32, 7, g.n_edges() as u32 - 1] {
            for p in [Pauli::X, Pauli::Z, Pauli::Y] {
                let mut st = D4State::new(&g, &alg, basis);
                if p.has_x() {
                    st.tab.apply_x(e);
                }
                if p.has_z() {
                    st.tab.apply_z(e);
                }
                push(format!("d4 {basis:?} {p:?} on edge {e}"), true, decode_d4(&st.tab, &mut rng)?);
            }
        }
        let mut st = D4State::new(&g, &alg, basis);
        for &e in &g.logical[0].z_h {
            st.tab.apply_z(e);
        }
        push(format!("d4 {basis:?} Z logical loop"), basis == Basis::Zero, decode_d4(&st.tab, &mut rng)?);
    }
    Ok(rows)
}
