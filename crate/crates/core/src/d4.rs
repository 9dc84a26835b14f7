//! D4 trajectories: flags, noise and correction moves acting on the
//! quasi-stabilizer tableau.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::algebra::Algebra;
use crate::decoder::{mwpm, DecodeError};
use crate::flags::{x_correction, z_correction, Branch, Event, FlagState, Pauli, Sampler};
use crate::lattice::Geometry;
use crate::tableau::{Outcome, Tableau};
use crate::trajectory::{Basis, TrajectoryConfig};
use crate::Rng;

#[derive(Clone, Debug)]
pub struct D4State<'a> {
    pub tab: Tableau<'a>,
    pub flags: FlagState,
    /// Plaquette measurements performed by correction moves.
    pub ameas: u64,
}

impl<'a> D4State<'a> {
    pub fn new(g: &'a Geometry, alg: &'a Algebra, basis: Basis) -> D4State<'a> {
        D4State { tab: Tableau::new(g, alg, basis), flags: FlagState::new(g.n_edges()), ameas: 0 }
    }

    fn apply(&mut self, p: Pauli, e: u32) {
        if p.has_x() {
            self.tab.apply_x(e);
        }
        if p.has_z() {
            self.tab.apply_z(e);
        }
    }

    /// Fraction of vertices with `B_v = −1`.
    pub fn density_b(&self) -> f64 {
        self.tab.n_vertex_defects() as f64 / self.tab.vertex_signs().len() as f64
    }

    /// `(1/N_p) Σ_p (1 − ⟨A_p⟩)/2`, with `⟨A_p⟩ = 0` for plaquettes whose
    /// measurement would be random.
    pub fn density_a(&self) -> f64 {
        let np = self.tab.geometry().n_plaquettes();
        let s: f64 = (0..np as u32)
            .map(|p| match self.tab.peek(p) {
                None => 0.5,
                Some(true) => 1.0,
                Some(false) => 0.0,
            })
            .sum();
        s / np as f64
    }
}

/// One site event.
pub fn d4_event(st: &mut D4State, g: &Geometry, ev: Event, rng: &mut Rng) {
    match ev.branch {
        Branch::Heralded(p) => {
            st.apply(p, ev.edge);
            st.flags.set_x(ev.edge, true);
            st.flags.set_z(ev.edge, true);
        }
        Branch::Unheralded(p) => st.apply(p, ev.edge),
        Branch::XCorrection => {
            let v = g.edge_vertices[ev.edge as usize][ev.side];
            if let Some(m) = x_correction(&mut st.flags, g, v) {
                if st.tab.vertex_negative(v) {
                    st.tab.apply_x(m.edge());
                }
            }
        }
        Branch::ZCorrection => {
            let p = g.edge_plaquettes[ev.edge as usize][ev.side];
            if let Some(m) = z_correction(&mut st.flags, g, p) {
                st.ameas += 1;
                if st.tab.measure(p, rng).neg() {
                    st.tab.apply_z(m.edge());
                }
            }
        }
    }
}

/// Decodes a copy of the tableau: vertex defects are paired and cleared by
/// X strings, every plaquette is measured, plaquette defects are paired and
/// cleared by Z strings. Returns whether all tracked logicals end at +1 with
/// no logical lost.
pub fn decode_d4(tab: &Tableau, rng: &mut impl rand::Rng) -> Result<bool, DecodeError> {
    let g = tab.geometry();
    let mut t = tab.clone();
    for c in 0..3u8 {
        let vs: Vec<u32> = g.vertices_of_color(c).filter(|&v| t.vertex_negative(v)).collect();
        for (i, j) in mwpm(vs.len(), |i, j| g.vertex_distance(vs[i], vs[j]))? {
            for e in g.vertex_path(vs[i], vs[j]) {
                t.apply_x(e);
            }
        }
    }
    if t.n_vertex_defects() != 0 {
        return Err(DecodeError::Residual);
    }
    let mut defect = vec![false; g.n_plaquettes()];
    for p in 0..g.n_plaquettes() as u32 {
        let out = t.measure(p, rng);
        if matches!(out, Outcome::Unresolved { .. }) {
            return Ok(false);
        }
        defect[p as usize] = out.neg();
    }
    for c in 0..3u8 {
        let ps: Vec<u32> = g.plaquettes_of_color(c).filter(|&p| defect[p as usize]).collect();
        // an odd count per color means a Z-logical of another color was flipped
        let Ok(pairs) = mwpm(ps.len(), |i, j| g.plaquette_distance(ps[i], ps[j])) else { return Ok(false) };
        for (i, j) in pairs {
            for e in g.plaquette_path(ps[i], ps[j]) {
                t.apply_z(e);
            }
        }
    }
    Ok(logicals_intact(&t))
}

/// Whether every tracked logical has sign +1 and none was lost.
pub fn logicals_intact(t: &Tableau) -> bool {
    if t.collapsed() {
        return false;
    }
    match t.basis() {
        Basis::Zero => (0..3).all(|c| t.z_logical(c, 0) == Some(false) && t.z_logical(c, 1) == Some(false)),
        Basis::Plus => (0..3).all(|c| t.z_logical(c, 0) == Some(false) && t.x_logical_negative(c) == Some(false)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct D4Row {
    pub t: f64,
    #[serde(rename = "nX")]
    pub nx: f64,
    #[serde(rename = "nZ")]
    pub nz: f64,
    pub n_d_b: f64,
    pub n_d_a: f64,
    /// Plaquette measurements per plaquette per unit time since the last row.
    pub ameas: f64,
    /// Decoded fidelity indicator at decode points, NaN elsewhere.
    pub fidelity: f64,
}

/// Separate random stream for decoding so diagnostics never shift the
/// trajectory's draws.
fn decode_rng(rng: &Rng) -> Rng {
    let mut d = Rng::from_seed(rng.get_seed());
    d.set_stream(rng.get_stream() ^ (1 << 63));
    d
}

/// Runs one D4 trajectory.
pub fn run_d4(cfg: &TrajectoryConfig, g: &Geometry, alg: &Algebra, rng: &mut Rng) -> Result<Vec<D4Row>, DecodeError> {
    let mut st = D4State::new(g, alg, cfg.basis);
    let sampler = Sampler::new(&cfg.rates, g.n_edges());
    let mut drng = decode_rng(rng);
    let mut rows = Vec::new();
    let mut t = 0.0;
    let (mut last_t, mut last_m) = (0.0, 0);
    for k in 1..=cfg.sweeps() {
        for _ in 0..g.n_edges() {
            let ev = sampler.sample(rng);
            d4_event(&mut st, g, ev, rng);
        }
        t += cfg.rates.dt();
        if cfg.records(k) {
            let fidelity = if cfg.decodes(k) { decode_d4(&st.tab, &mut drng)? as u8 as f64 } else { f64::NAN };
            let ameas = (st.ameas - last_m) as f64 / ((t - last_t) * g.n_plaquettes() as f64);
            (last_t, last_m) = (t, st.ameas);
            rows.push(D4Row {
                t,
                nx: st.flags.density_x(),
                nz: st.flags.density_z(),
                n_d_b: st.density_b(),
                n_d_a: st.density_a(),
                ameas,
                fidelity,
            });
        }
    }
    Ok(rows)
}

/// Unheralded runs: the fidelity indicator of the decoded state at every
/// recorded sweep.
pub fn fidelity_series(cfg: &TrajectoryConfig, g: &Geometry, alg: &Algebra, rng: &mut Rng) -> Result<Vec<(f64, bool)>, DecodeError> {
    let cfg = TrajectoryConfig { decode_stride: cfg.record_stride, ..cfg.clone() };
    Ok(run_d4(&cfg, g, alg, rng)?.into_iter().map(|r| (r.t, r.fidelity == 1.0)).collect())
}

/// A random-valued helper for tests and the decode check: `n` heralded
/// errors of random Pauli type on distinct random edges.
pub fn random_errors(st: &mut D4State, n: usize, rng: &mut impl rand::Rng) {
    let ne = st.flags.len() as u32;
    for _ in 0..n {
        let e = rng.gen_range(0..ne);
        let p = [Pauli::X, Pauli::Z, Pauli::Y][rng.gen_range(0..3)];
        st.apply(p, e);
        st.flags.set_x(e, true);
        st.flags.set_z(e, true);
    }
}
