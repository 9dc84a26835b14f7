//! Acceptance criteria, one PASS/FAIL line each. Runs scaled-down sizes by
//! default; `HTSIM_ACCEPTANCE_FULL=1` selects the full sizes. Positional
//! arguments filter criteria by substring. Never fails the test run.

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use anyhow::{ensure, Result};
use htsim::decoder::{brute_force_mwpm, mwpm, pairing_weight};
use htsim::experiments::{
    bistability, recover_from, recovery, series, steady_snapshots, sweep, transition, unheralded, BasisChoice, Point,
    Sim,
};
use htsim::flags::{FlagKind, Rates};
use htsim::meanfield::{classify, linspace, mf_scan, Phase};
use htsim::metrics::ScanPoint;
use htsim::trajectory::default_workers;
use htsim::{rng_stream, Geometry};
use rand::Rng;

struct Ctx {
    full: bool,
    workers: usize,
}

impl Ctx {
    fn pick<T>(&self, scaled: T, full: T) -> T {
        if self.full {
            full
        } else {
            scaled
        }
    }
}

/// `(passed, detail)`.
type Verdict = (bool, String);

fn toric_absorbing(c: &Ctx) -> Result<Verdict> {
    let p = Point::new(Sim::Toric, 24, Rates::new(1.0, 4.0, 8.0), 100.0);
    let p = Point { record_stride: usize::MAX, ..p };
    let last = *series(&p, BasisChoice::Zero, 500, 101, c.workers)?.last().unwrap();
    let (px, pz) = (1.0 - last.f0, 1.0 - last.fplus);
    let ok = (px - 0.75).abs() <= 0.03 && (pz - 0.75).abs() <= 0.03;
    Ok((ok, format!("pX={px:.3} pZ={pz:.3} (want 0.75±0.03)")))
}

fn phase_of(s: &ScanPoint) -> Phase {
    classify(s.nx_mean, s.nz_mean, 0.5)
}

fn toric_four_phase(c: &Ctx) -> Result<Verdict> {
    let n = c.pick(6, 50);
    let grid = sweep(Sim::Toric, 24, 1.0, &linspace(0.0, 30.0, 8), &linspace(0.0, 40.0, 8), 100.0, n, 102, c.workers)?;
    let mut seen: Vec<Phase> = grid.iter().map(phase_of).collect();
    seen.sort_by_key(|p| *p as u8);
    seen.dedup();
    let corners = sweep(Sim::Toric, 24, 1.0, &[4.0, 15.0], &[8.0, 20.0], 100.0, 50, 103, c.workers)?;
    let at = |x: f64, z: f64| corners.iter().find(|s| s.gx == x && s.gz == z).unwrap();
    let want = [
        (15.0, 20.0, Phase::Active),
        (15.0, 8.0, Phase::XActive),
        (4.0, 20.0, Phase::ZActive),
        (4.0, 8.0, Phase::Absorbing),
    ];
    let mut ok = seen.len() == 4;
    let mut detail = format!("grid phases {seen:?} ({n}/pt);");
    for (x, z, ph) in want {
        let s = at(x, z);
        ok &= phase_of(s) == ph;
        detail += &format!(" ({x},{z}) {:?} nX={:.2} nZ={:.2}", phase_of(s), s.nx_mean, s.nz_mean);
    }
    let infid = 1.0 - at(15.0, 20.0).f_mean;
    ok &= infid < 0.02;
    detail += &format!("; active 1-F={infid:.3}");
    Ok((ok, detail))
}

fn toric_oracle(_: &Ctx) -> Result<Verdict> {
    Ok(match common::checks::toric_replay(1000, 40, 104) {
        Ok(()) => (true, "1000 sequences x 40 events agree".into()),
        Err(e) => (false, e),
    })
}

fn tableau_algebra(_: &Ctx) -> Result<Verdict> {
    if let Err(e) = common::checks::patch_identities() {
        return Ok((false, e));
    }
    let s = common::checks::d4_measurement_stats(10_000, 105).map_err(anyhow::Error::msg)?;
    let ok = s.max_sigma <= 3.0 && s.idempotent;
    Ok((ok, format!("identities hold; plaquettes {:?} max dev {:.2}σ, re-measurement idempotent: {}", s.plaquettes, s.max_sigma, s.idempotent)))
}

/// Fidelity indistinguishable (3σ) from fully random logicals, which
/// survive with probability `floor`.
fn near_random(f: f64, floor: f64, n: usize) -> bool {
    f <= floor + 3.0 * (floor * (1.0 - floor) / n as f64).sqrt()
}

fn d4_points(c: &Ctx) -> Result<Verdict> {
    let n = c.pick(16, 100);
    let mut ok = true;
    let mut detail = format!("{n} traj;");
    for gx in [4.0, 14.0, 35.0] {
        let p = Point { record_stride: usize::MAX, ..Point::new(Sim::D4, 18, Rates::new(1.0, gx, 500.0), 20.0) };
        let r = *series(&p, BasisChoice::Both, n, 106, c.workers)?.last().unwrap();
        // six random signs in the zero basis; in the plus basis three X and
        // three Z_V signs, or only the three X signs when X flags are clear
        let pass = match gx as u32 {
            4 => r.nx > 0.95 && (r.ndb - 0.5).abs() <= 0.02 && near_random(r.f0, 1.0 / 64.0, n) && near_random(r.fplus, 1.0 / 64.0, n),
            14 => r.nx < 0.2 && r.nz > 0.95 && r.f0 > 0.95 && near_random(r.fplus, 1.0 / 8.0, n),
            _ => r.nx < 0.2 && r.nz < 0.2 && r.f0 > 0.95 && r.fplus > 0.95,
        };
        ok &= pass;
        detail += &format!(" γx={gx}: nX={:.3} nZ={:.3} ndB={:.3} F0={:.2} F+={:.2};", r.nx, r.nz, r.ndb, r.f0, r.fplus);
    }
    Ok((ok, detail))
}

fn x_transition(c: &Ctx) -> Result<Verdict> {
    let gx = c.pick(vec![5.5, 5.75, 6.0, 6.25, 6.5, 6.75, 7.0], linspace(6.0, 7.0, 9));
    let ls = c.pick(vec![9, 18, 36], vec![48, 96, 192]);
    let trials = c.pick(32, 500);
    let max_sweeps = c.pick(20_000, 200_000);
    let tr = transition(&gx, &ls, 1, 1.0, 0.0, 0.65, trials, max_sweeps, 107, c.workers)?;
    let curv: Vec<String> = tr.gx.iter().zip(&tr.curvature).map(|(x, k)| format!("{x}:{k:.2}")).collect();
    let ok = tr.flip.is_some_and(|f| (f - 6.45).abs() <= 0.15);
    Ok((ok, format!("L={ls:?} {trials} trials; flip {:?} (want 6.45±0.15); curvature {}", tr.flip, curv.join(" "))))
}

fn bistable(c: &Ctx) -> Result<Verdict> {
    let n = c.pick(100, 500);
    let x = bistability(c.pick(24, 96), 1, &Rates::new(1.0, 6.45, 0.0), FlagKind::X, 0.6, c.pick(400.0, 4000.0), 10, n, 50, 108, c.workers)?;
    let z = bistability(c.pick(12, 48), 3, &Rates::new(1.0, 18.25, 500.0), FlagKind::Z, 0.6, c.pick(15.0, 60.0), 18, n, 50, 109, c.workers)?;
    let u = bistability(c.pick(24, 96), 1, &Rates::new(1.0, 4.0, 0.0), FlagKind::X, 0.6, 20.0, 1, n, 50, 110, c.workers)?;
    let ok = x.bimodal && z.bimodal && !u.bimodal;
    Ok((
        ok,
        format!(
            "X γx=6.45 bimodal={} (t*={:.1}); Z γx=18.25 bimodal={} (t*={:.2}); X γx=4 bimodal={} (t*={:.2})",
            x.bimodal, x.t_star, z.bimodal, z.t_star, u.bimodal, u.t_star
        ),
    ))
}

fn recovery_scaling(c: &Ctx) -> Result<Verdict> {
    let ls = c.pick(vec![12, 24, 48], vec![24, 48, 96]);
    let n = c.pick(40, 1000);
    let t_ss = c.pick(5.0, 20.0);
    let rates = Rates::new(1.0, 35.0, 500.0);
    let mut per_l = Vec::new();
    for (k, &l) in ls.iter().enumerate() {
        let g = Geometry::new(l, 3)?;
        let snaps = steady_snapshots(&g, &rates, t_ss, n, 111 + k as u64, c.workers);
        per_l.push((l, recover_from(&g, &snaps, 1_000_000, 111, (k * n) as u64, c.workers)?));
    }
    let rec = recovery(&per_l, 0.5, 111);
    let taus: Vec<String> = rec.rows.iter().map(|r| format!("{}:{:.3}", r.l, r.tau_mean)).collect();
    Ok(match rec.fit {
        Some(f) => (f.r2 > 0.9, format!("L={ls:?} {n} traj; τ {}; α={:.3} L0={:.2} R²={:.3}", taus.join(" "), f.alpha, f.l0, f.r2)),
        None => (false, format!("no fit; τ {}", taus.join(" "))),
    })
}

fn unheralded_lifetime(c: &Ctx) -> Result<Verdict> {
    let n = c.pick(8, 250);
    let t = c.pick(8.0, 50.0);
    let p = Point::new(Sim::D4, 18, Rates::new(1.0, 35.0, 500.0), t);
    let stride = ((0.1 / p.rates.dt()).round() as usize).max(1);
    let p = Point { record_stride: stride, decode_stride: stride, ..p };
    let u = unheralded(&p, &[0.9, 0.95, 0.98, 0.99], n, 112, c.workers)?;
    let hl: Vec<String> = u.half_lives.iter().map(|h| format!("{}:{:.2}{}", h.phi_e, h.tau, if h.censored { "+" } else { "" })).collect();
    Ok(match u.fit {
        Some(f) => ((f.b + 0.5).abs() <= 0.2, format!("{n} traj; half-lives {}; b={:.3}±{:.3}", hl.join(" "), f.b, f.b_se)),
        None => (false, format!("no fit; half-lives {}", hl.join(" "))),
    })
}

fn mean_field(c: &Ctx) -> Result<Verdict> {
    let gx = linspace(0.0, 40.0, 32);
    let gz = linspace(0.0, 600.0, 32);
    let rows = mf_scan(1.0, &gx, &gz, 1e4, 1e-2, c.workers)?;
    let ph: Vec<Phase> = rows.iter().map(|r| classify(r.nx_final, r.nz_final, 0.9)).collect();
    let mut seen = ph.clone();
    seen.sort_by_key(|p| *p as u8);
    seen.dedup();
    let cell = gx[1] - gx[0];
    let mut edge_ok = true;
    for (j, _) in gz.iter().enumerate() {
        let first = (0..gx.len()).find(|&i| rows[i * gz.len() + j].nx_final < 0.9);
        edge_ok &= first.is_some_and(|i| gx[i] >= 2.0 && gx[i] - 2.0 < cell);
    }
    let want = [Phase::Active, Phase::XActive, Phase::Absorbing];
    let ok = seen.len() == 3 && want.iter().all(|p| seen.contains(p)) && edge_ok;
    Ok((ok, format!("regions {seen:?}; X edge within one cell ({cell:.2}) of γx=2 in every row: {edge_ok}")))
}

fn mwpm_exact(_: &Ctx) -> Result<Verdict> {
    let mut rng = rng_stream(113, 0);
    for trial in 0..1000 {
        let n = 2 * rng.gen_range(1..=5);
        let w: Vec<u32> = (0..n * n).map(|_| rng.gen_range(0..20)).collect();
        let d = |i: usize, j: usize| w[i.min(j) * n + i.max(j)];
        let (best, _) = brute_force_mwpm(n, d)?;
        let got = pairing_weight(&mwpm(n, d)?, d);
        ensure!(got == best, "instance {trial}: {got} vs brute force {best}");
    }
    Ok((true, "1000 instances, ≤10 defects".into()))
}

fn run_cli(args: &[&str], out: &Path, workers: usize) -> Result<()> {
    let st = Command::new(env!("CARGO_BIN_EXE_htsim"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--workers")
        .arg(workers.to_string())
        .env_remove("HTSIM_WORKERS")
        .output()?;
    ensure!(st.status.success(), "htsim {args:?}: {}", String::from_utf8_lossy(&st.stderr));
    Ok(())
}

fn same_dirs(a: &Path, b: &Path) -> Result<Vec<String>> {
    let mut names: Vec<String> = fs::read_dir(a)?.map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned())).collect::<Result<_, _>>()?;
    names.sort();
    for n in &names {
        ensure!(fs::read(a.join(n))? == fs::read(b.join(n))?, "{n} differs");
    }
    ensure!(fs::read_dir(b)?.count() == names.len(), "file sets differ");
    Ok(names)
}

fn determinism(_: &Ctx) -> Result<Verdict> {
    let root: PathBuf = std::env::temp_dir().join(format!("htsim-acceptance-{}", std::process::id()));
    let cases: [&[&str]; 3] = [
        &["run-d4", "--L", "6", "--t-final", "1", "--trajectories", "6", "--seed", "5"],
        &["sweep", "--model", "toric", "--L", "6", "--grid-steps", "3", "--t-final", "5", "--trajectories", "4", "--seed", "6"],
        &["transition", "--L-list", "6,9,12", "--gx-range", "5:7", "--grid-steps", "3", "--trajectories", "4", "--max-sweeps", "200"],
    ];
    let mut files = 0;
    for (k, args) in cases.iter().enumerate() {
        let (a, b) = (root.join(format!("{k}-w1")), root.join(format!("{k}-w3")));
        run_cli(args, &a, 1)?;
        run_cli(args, &b, 3)?;
        files += same_dirs(&a, &b)?.len();
    }
    let _ = fs::remove_dir_all(&root);
    Ok((true, format!("run-d4, sweep and transition byte-identical for 1 and 3 workers ({files} files)")))
}

fn main() {
    let ctx = Ctx { full: std::env::var("HTSIM_ACCEPTANCE_FULL").is_ok_and(|v| v == "1"), workers: default_workers() };
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn(&Ctx) -> Result<Verdict>); 12] = [
        ("toric-absorbing", toric_absorbing),
        ("toric-four-phase", toric_four_phase),
        ("toric-oracle", toric_oracle),
        ("tableau-algebra", tableau_algebra),
        ("d4-three-points", d4_points),
        ("x-transition", x_transition),
        ("bistability", bistable),
        ("recovery-scaling", recovery_scaling),
        ("unheralded-lifetime", unheralded_lifetime),
        ("mean-field", mean_field),
        ("mwpm-exact", mwpm_exact),
        ("determinism", determinism),
    ];
    let workers = if ctx.workers == 0 { "all cores".to_string() } else { format!("{} worker(s)", ctx.workers) };
    println!("acceptance: {} scale, {workers}", if ctx.full { "full" } else { "reduced" });
    let (mut pass, mut total) = (0, 0);
    for (name, f) in criteria {
        if !filters.is_empty() && !filters.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(|| f(&ctx))) {
            Ok(Ok(v)) => v,
            Ok(Err(e)) => (false, format!("error: {e:#}")),
            Err(p) => (false, format!("panic: {}", p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())),
        };
        total += 1;
        pass += ok as usize;
        println!("{} {name}: {detail} [{:.1}s]", if ok { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {pass}/{total} passed");
}
