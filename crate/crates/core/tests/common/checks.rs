//! Oracle checks shared by the integration tests and the acceptance target.
//! Each returns `Err` with a description instead of panicking.

use super::Sv;
use htsim::algebra::Algebra;
use htsim::flags::{x_correction, z_correction, Branch, Rates, Sampler};
use htsim::tableau::{Outcome, Tableau};
use htsim::toric::{toric_event, toric_init, PauliFrame};
use htsim::{rng_stream, Basis, Geometry};

fn union(parts: &[&[u32]]) -> Vec<u32> {
    let mut v: Vec<u32> = parts.iter().flat_map(|p| p.iter().copied()).collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn close(a: &[f32], b: &[f32]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-5)
}

macro_rules! ensure {
    ($c:expr, $($m:tt)*) => {
        if !$c {
            return Err(format!($($m)*));
        }
    };
}

/// `X_j CZ_jk = CZ_jk X_j Z_k` on two qubits.
pub fn cz_relation() -> Result<(), String> {
    let g = Geometry::new(3, 3).unwrap();
    let s = Sv::random(&g, vec![0, 1], 1);
    let mut lhs = s.with_amp(s.amp.clone());
    lhs.cz(0, 1);
    lhs.x(0);
    let mut rhs = s.with_amp(s.amp.clone());
    rhs.z(1);
    rhs.x(0);
    rhs.cz(0, 1);
    ensure!(close(&lhs.amp, &rhs.amp), "X CZ != CZ X Z");
    Ok(())
}

/// `A_p A_q = A_q A_p B_u B_v` for adjacent plaquettes sharing the edge `uv`.
pub fn plaquette_commutators() -> Result<(), String> {
    let g = Geometry::new(6, 3).unwrap();
    let mut buf = Vec::new();
    let mut buf2 = Vec::new();
    for p in [0u32, 7, 20] {
        for ad in &g.adjacent[p as usize] {
            let (pi, qi) = (p as usize, ad.q as usize);
            let qubits = union(&[
                &g.boundary[pi],
                &g.interior[pi],
                &g.boundary[qi],
                &g.interior[qi],
                &g.star[ad.u as usize],
                &g.star[ad.v as usize],
            ]);
            ensure!(qubits.len() <= 24, "patch too large: {}", qubits.len());
            let s = Sv::random(&g, qubits, p as u64);
            s.plaquette(&g, ad.q, &mut buf);
            let t = s.with_amp(buf.clone());
            t.plaquette(&g, p, &mut buf2);
            let lhs = buf2.clone();
            let zm = s.mask(&g.star[ad.u as usize]) ^ s.mask(&g.star[ad.v as usize]);
            s.apply_dx(0, &[], zm, &mut buf);
            let t = s.with_amp(buf.clone());
            t.plaquette(&g, p, &mut buf2);
            let t = s.with_amp(buf2.clone());
            t.plaquette(&g, ad.q, &mut buf);
            ensure!(close(&lhs, &buf), "commutator p={p} q={}", ad.q);
        }
    }
    Ok(())
}

/// `X_k A_p X_k = A_p Z_partners` for every plaquette containing `k`.
pub fn x_actions() -> Result<(), String> {
    let g = Geometry::new(6, 3).unwrap();
    let alg = Algebra::new(&g);
    let mut buf = Vec::new();
    let mut buf2 = Vec::new();
    for k in [0u32, 5, 31, 77] {
        for t in &alg.xcz[k as usize] {
            let pi = t.p as usize;
            let qubits = union(&[&g.boundary[pi], &g.interior[pi]]);
            let s = Sv::random(&g, qubits, k as u64);
            let mut xs = s.with_amp(s.amp.clone());
            xs.x(k);
            xs.plaquette(&g, t.p, &mut buf);
            let mut o = s.with_amp(buf.clone());
            o.x(k);
            s.plaquette(&g, t.p, &mut buf2);
            let a = s.with_amp(buf2.clone());
            a.apply_dx(0, &[], a.mask(&t.partners), &mut buf);
            ensure!(close(&o.amp, &buf), "X action k={k} p={}", t.p);
        }
    }
    Ok(())
}

/// `K A_p K = ± A_p Z_E` for every core and plaquette. Factors of K that
/// commute with A_p cancel, so a patch with the loop edges inside p and the
/// CZ pairs touching ∂p is enough.
pub fn core_actions() -> Result<(), String> {
    let g = Geometry::new(6, 3).unwrap();
    let alg = Algebra::new(&g);
    let mut buf = Vec::new();
    let mut buf2 = Vec::new();
    for core in &alg.cores {
        for p in 0..g.n_plaquettes() {
            let bd = &g.boundary[p];
            let loop_in: Vec<u32> = g.interior[p].iter().copied().filter(|&e| core.on_c.contains(e as usize)).collect();
            let pairs: Vec<[u32; 2]> = core.pairs.iter().copied().filter(|[a, b]| bd.contains(a) || bd.contains(b)).collect();
            let ends: Vec<u32> = pairs.iter().flatten().copied().collect();
            let e: &[u32] = core.rel[p].as_ref().map_or(&[], |r| &r.e);
            let qubits = union(&[bd, &g.interior[p], &ends, e]);
            ensure!(qubits.len() <= 24, "patch too large: {}", qubits.len());
            let s = Sv::random(&g, qubits, p as u64);
            let kflip = s.mask(&loop_in);
            let kp = s.pair_masks(&pairs);
            s.apply_dx(kflip, &kp, 0, &mut buf);
            let t = s.with_amp(buf.clone());
            t.plaquette(&g, p as u32, &mut buf2);
            let t = s.with_amp(buf2.clone());
            t.apply_dx(kflip, &kp, 0, &mut buf);
            s.apply_dx(0, &[], s.mask(e), &mut buf2);
            let t = s.with_amp(buf2.clone());
            let mut want = Vec::new();
            t.plaquette(&g, p as u32, &mut want);
            if core.rel[p].as_ref().is_some_and(|r| r.neg) {
                want.iter_mut().for_each(|a| *a = -*a);
            }
            ensure!(close(&buf, &want), "core action color {} p={p}", core.color);
        }
    }
    Ok(())
}

pub fn patch_identities() -> Result<(), String> {
    cz_relation()?;
    plaquette_commutators()?;
    x_actions()?;
    core_actions()
}

fn sign(v: f64, neg: bool) -> f64 {
    if neg {
        -v
    } else {
        v
    }
}

/// Compares every stabilizer and logical of the frame with the oracle.
fn toric_compare(g: &Geometry, fr: &PauliFrame, sv: &Sv) -> Result<(), String> {
    for v in 0..g.n_vertices() {
        let ev = sv.z_expect(sv.mask(&g.star[v]));
        ensure!((ev - sign(1.0, fr.b_defect[v])).abs() < 1e-4, "B_{v}: frame {} oracle {ev}", fr.b_defect[v]);
    }
    for p in 0..g.n_plaquettes() {
        let ev = sv.x_expect(sv.mask(&g.boundary[p]));
        ensure!((ev - sign(1.0, fr.a_defect[p])).abs() < 1e-4, "A_{p}: frame {} oracle {ev}", fr.a_defect[p]);
    }
    let lg = &g.logical[0];
    let l = fr.logical;
    let checks: [(&str, f64, bool); 2] = match fr.basis {
        Basis::Zero => [("Z_V", sv.z_expect(sv.mask(&lg.z_v)), l.z_v), ("Z_H", sv.z_expect(sv.mask(&lg.z_h)), l.z_h)],
        Basis::Plus => [("X_V", sv.x_expect(sv.mask(&lg.x_v)), l.x_v), ("X_H", sv.x_expect(sv.mask(&lg.x_h)), l.x_h)],
    };
    for (name, ev, neg) in checks {
        ensure!((ev - sign(1.0, neg)).abs() < 1e-4, "{name}: frame {neg} oracle {ev}");
    }
    Ok(())
}

/// Replays random event sequences on the L = 3 toric code against its
/// 512-amplitude state vector. Corrections are decided from a copy of the
/// flags and the oracle's own measurement.
pub fn toric_replay(sequences: usize, steps: usize, seed: u64) -> Result<(), String> {
    let g = Geometry::new(3, 1).unwrap();
    ensure!(g.n_edges() == 9, "expected 9 qubits, got {}", g.n_edges());
    let rates = Rates::new(1.0, 3.0, 3.0).with_phi_e(0.8);
    let sampler = Sampler::new(&rates, g.n_edges());
    let mut op = Vec::new();
    let mut moves = 0;
    for s in 0..sequences {
        let basis = if s % 2 == 0 { Basis::Zero } else { Basis::Plus };
        let (mut fr, mut flags) = toric_init(&g, basis);
        let mut sv = Sv::full(&g);
        if basis == Basis::Plus {
            let h = 1.0 / (sv.amp.len() as f32).sqrt();
            sv.amp.iter_mut().for_each(|a| *a = h);
            for v in 0..g.n_vertices() {
                sv.apply_dx(0, &[], sv.mask(&g.star[v]), &mut op);
                sv.project(&op, false);
            }
        } else {
            for p in 0..g.n_plaquettes() {
                sv.apply_dx(sv.mask(&g.boundary[p]), &[], 0, &mut op);
                sv.project(&op, false);
            }
        }
        toric_compare(&g, &fr, &sv).map_err(|e| format!("seq {s} init: {e}"))?;
        let mut rng = rng_stream(seed, s as u64);
        for step in 0..steps {
            let ev = sampler.sample(&mut rng);
            let mut shadow = flags.clone();
            match ev.branch {
                Branch::Heralded(p) | Branch::Unheralded(p) => {
                    if p.has_x() {
                        sv.x(ev.edge);
                    }
                    if p.has_z() {
                        sv.z(ev.edge);
                    }
                }
                Branch::XCorrection => {
                    let v = g.edge_vertices[ev.edge as usize][ev.side];
                    if let Some(m) = x_correction(&mut shadow, &g, v) {
                        moves += 1;
                        if sv.z_expect(sv.mask(&g.star[v as usize])) < 0.0 {
                            sv.x(m.edge());
                        }
                    }
                }
                Branch::ZCorrection => {
                    let p = g.edge_plaquettes[ev.edge as usize][ev.side];
                    if let Some(m) = z_correction(&mut shadow, &g, p) {
                        moves += 1;
                        if sv.x_expect(sv.mask(&g.boundary[p as usize])) < 0.0 {
                            sv.z(m.edge());
                        }
                    }
                }
            }
            toric_event(&mut fr, &mut flags, &g, ev);
            if !matches!(ev.branch, Branch::Heralded(_)) {
                ensure!(shadow == flags, "seq {s} step {step}: flag update differs");
            }
            toric_compare(&g, &fr, &sv).map_err(|e| format!("seq {s} step {step}: {e}"))?;
        }
    }
    ensure!(moves > 0, "no correction move exercised");
    Ok(())
}

/// Summary of [`d4_measurement_stats`].
pub struct MeasurementStats {
    pub plaquettes: [u32; 3],
    pub expected: [f64; 8],
    pub counts: [usize; 8],
    /// Largest deviation in units of the binomial standard deviation.
    pub max_sigma: f64,
    pub idempotent: bool,
}

/// Prepares the L = 3 zero-basis code state with two X errors, measures the
/// first three plaquettes with random outcomes in sequence on `trials`
/// tableau copies, and compares the joint outcome frequencies with the
/// probabilities from the state vector. Each copy re-measures all three and
/// must reproduce its outcomes.
pub fn d4_measurement_stats(trials: usize, seed: u64) -> Result<MeasurementStats, String> {
    let g = Geometry::new(3, 3).unwrap();
    let alg = Algebra::new(&g);
    let mut tab = Tableau::new(&g, &alg, Basis::Zero);
    let mut sv = Sv::full(&g);
    let mut op = Vec::new();
    for p in 0..g.n_plaquettes() as u32 {
        sv.plaquette(&g, p, &mut op);
        sv.project(&op, false);
    }
    drop(op);
    let ks = [0u32, 1 + g.n_edges() as u32 / 2];
    for k in ks {
        tab.apply_x(k);
        sv.x(k);
    }
    let random: Vec<u32> = (0..g.n_plaquettes() as u32).filter(|&p| tab.peek(p).is_none()).collect();
    ensure!(random.len() >= 3, "only {} random plaquettes", random.len());
    let ps = [random[0], random[1], random[2]];
    let dx = |p: u32, sv: &Sv| (sv.mask(&g.boundary[p as usize]), sv.pair_masks(&g.cz_pairs[p as usize]));

    // exact joint distribution, depth first
    let mut expected = [0.0; 8];
    let (f0, c0) = dx(ps[0], &sv);
    let e0 = sv.expect_dx(f0, &c0);
    for m0 in 0..2 {
        let p0 = (1.0 + sign(e0, m0 == 1)) / 2.0;
        if p0 < 1e-9 {
            continue;
        }
        let s1 = sv.projected_dx(f0, &c0, m0 == 1);
        let (f1, c1) = dx(ps[1], &s1);
        let e1 = s1.expect_dx(f1, &c1);
        for m1 in 0..2 {
            let p1 = (1.0 + sign(e1, m1 == 1)) / 2.0;
            if p1 < 1e-9 {
                continue;
            }
            let s2 = s1.projected_dx(f1, &c1, m1 == 1);
            let (f2, c2) = dx(ps[2], &s2);
            let e2 = s2.expect_dx(f2, &c2);
            for m2 in 0..2 {
                let p2 = (1.0 + sign(e2, m2 == 1)) / 2.0;
                expected[m0 | m1 << 1 | m2 << 2] = p0 * p1 * p2;
            }
        }
    }
    drop(sv);

    let mut counts = [0usize; 8];
    let mut idempotent = true;
    for i in 0..trials {
        let mut t = tab.clone();
        let mut rng = rng_stream(seed, i as u64);
        let mut idx = 0;
        let mut outs = [false; 3];
        for (j, &p) in ps.iter().enumerate() {
            let o = t.measure(p, &mut rng);
            if let Outcome::Unresolved { .. } = o {
                return Err(format!("trial {i}: unresolved measurement of {p}"));
            }
            outs[j] = o.neg();
            idx |= (o.neg() as usize) << j;
        }
        for (j, &p) in ps.iter().enumerate() {
            idempotent &= matches!(t.measure(p, &mut rng), Outcome::Determined { neg } if neg == outs[j]);
        }
        counts[idx] += 1;
    }
    let n = trials as f64;
    let max_sigma = expected
        .iter()
        .zip(&counts)
        .map(|(&p, &c)| {
            let sd = (n * p * (1.0 - p)).sqrt();
            let d = (c as f64 - n * p).abs();
            if sd > 0.0 {
                d / sd
            } else if d > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    Ok(MeasurementStats { plaquettes: ps, expected, counts, max_sigma, idempotent })
}
