//! Erasure flags and their autonomous classical dynamics.
//!
//! The correction moves only read flags and write flags; the stabilizer part
//! (measure, then conditionally apply a Pauli) is returned to the caller as
//! an [`XMove`] or [`ZMove`].

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::lattice::Geometry;
use crate::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Toric,
    D4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub eta: f64,
    pub gamma_x: f64,
    pub gamma_z: f64,
    pub phi_e: f64,
}

impl Rates {
    pub fn new(eta: f64, gamma_x: f64, gamma_z: f64) -> Rates {
        Rates { eta, gamma_x, gamma_z, phi_e: 1.0 }
    }

    pub fn with_phi_e(mut self, phi_e: f64) -> Rates {
        self.phi_e = phi_e;
        self
    }

    pub fn validate(&self) -> Result<(), crate::Error> {
        let ok = [self.eta, self.gamma_x, self.gamma_z].iter().all(|r| r.is_finite() && *r >= 0.0)
            && (0.0..=1.0).contains(&self.phi_e)
            && self.total() > 0.0;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::BadRates)
        }
    }

    /// `η + 2γx/3 + γz/3`, the inverse of the time step per sweep.
    pub fn total(&self) -> f64 {
        self.eta + 2.0 * self.gamma_x / 3.0 + self.gamma_z / 3.0
    }

    /// Time advanced by one sweep.
    pub fn dt(&self) -> f64 {
        1.0 / self.total()
    }

    /// Branch probabilities in the order of [`Branch::ALL`].
    pub fn branch_probabilities(&self) -> [f64; 9] {
        let c0 = self.dt();
        let h = c0 * self.eta * self.phi_e / 4.0;
        let u = c0 * self.eta * (1.0 - self.phi_e) / 3.0;
        [h, h, h, h, u, u, u, 2.0 * c0 * self.gamma_x / 3.0, c0 * self.gamma_z / 3.0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Z,
    /// `Z·X`, applied in the `Y` branch.
    Y,
}

impl Pauli {
    pub fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }
    pub fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Heralded(Pauli),
    Unheralded(Pauli),
    XCorrection,
    ZCorrection,
}

impl Branch {
    pub const ALL: [Branch; 9] = [
        Branch::Heralded(Pauli::I),
        Branch::Heralded(Pauli::X),
        Branch::Heralded(Pauli::Z),
        Branch::Heralded(Pauli::Y),
        Branch::Unheralded(Pauli::X),
        Branch::Unheralded(Pauli::Z),
        Branch::Unheralded(Pauli::Y),
        Branch::XCorrection,
        Branch::ZCorrection,
    ];
}

/// One sampled site event: a qubit, a side (which of its two vertices or
/// plaquettes) and a branch.
#[derive(Clone, Copy, Debug)]
pub struct Event {
    pub edge: u32,
    pub side: usize,
    pub branch: Branch,
}

#[derive(Clone, Debug)]
pub struct Sampler {
    cumulative: [f64; 9],
    n_edges: u32,
}

impl Sampler {
    pub fn new(rates: &Rates, n_edges: usize) -> Sampler {
        let p = rates.branch_probabilities();
        let mut cumulative = [0.0; 9];
        let mut acc = 0.0;
        for (c, x) in cumulative.iter_mut().zip(p) {
            acc += x;
            *c = acc;
        }
        cumulative[8] = f64::INFINITY;
        Sampler { cumulative, n_edges: n_edges as u32 }
    }

    pub fn sample(&self, rng: &mut Rng) -> Event {
        let edge = rng.gen_range(0..self.n_edges);
        let side = rng.gen::<bool>() as usize;
        let u: f64 = rng.gen();
        let k = self.cumulative.iter().position(|&c| u < c).unwrap_or(8);
        Event { edge, side, branch: Branch::ALL[k] }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagState {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
    nx: usize,
    nz: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlagKind {
    X,
    Z,
}

impl FlagState {
    pub fn new(n_edges: usize) -> FlagState {
        FlagState { x: vec![false; n_edges], z: vec![false; n_edges], nx: 0, nz: 0 }
    }

    pub fn filled(n_edges: usize) -> FlagState {
        FlagState { x: vec![true; n_edges], z: vec![true; n_edges], nx: n_edges, nz: n_edges }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn set_x(&mut self, e: u32, on: bool) {
        let f = &mut self.x[e as usize];
        if *f != on {
            *f = on;
            if on {
                self.nx += 1
            } else {
                self.nx -= 1
            }
        }
    }

    pub fn set_z(&mut self, e: u32, on: bool) {
        let f = &mut self.z[e as usize];
        if *f != on {
            *f = on;
            if on {
                self.nz += 1
            } else {
                self.nz -= 1
            }
        }
    }

    pub fn count_x(&self) -> usize {
        self.nx
    }

    pub fn count_z(&self) -> usize {
        self.nz
    }

    pub fn density_x(&self) -> f64 {
        self.nx as f64 / self.len() as f64
    }

    pub fn density_z(&self) -> f64 {
        self.nz as f64 / self.len() as f64
    }

    pub fn density(&self, kind: FlagKind) -> f64 {
        match kind {
            FlagKind::X => self.density_x(),
            FlagKind::Z => self.density_z(),
        }
    }

    /// 1 iff no flag is raised.
    pub fn fidelity(&self) -> bool {
        self.nx == 0 && self.nz == 0
    }

    /// Recounts the cached totals; used by tests.
    pub fn recount(&self) -> (usize, usize) {
        (self.x.iter().filter(|b| **b).count(), self.z.iter().filter(|b| **b).count())
    }
}

/// Stabilizer action requested by an X-correction move at vertex `v`:
/// measure `B_v` and apply `X` on `edge` iff the outcome is −1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XMove {
    Leaf { vertex: u32, edge: u32 },
    Loop { vertex: u32, edge: u32 },
}

impl XMove {
    pub fn vertex(self) -> u32 {
        match self {
            XMove::Leaf { vertex, .. } | XMove::Loop { vertex, .. } => vertex,
        }
    }
    pub fn edge(self) -> u32 {
        match self {
            XMove::Leaf { edge, .. } | XMove::Loop { edge, .. } => edge,
        }
    }
}

/// Stabilizer action requested by a Z-correction move at plaquette `p`:
/// measure `A_p` and apply `Z` on `edge` iff the outcome is −1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZMove {
    Leaf { plaquette: u32, edge: u32 },
    Loop { plaquette: u32, edge: u32 },
}

impl ZMove {
    pub fn plaquette(self) -> u32 {
        match self {
            ZMove::Leaf { plaquette, .. } | ZMove::Loop { plaquette, .. } => plaquette,
        }
    }
    pub fn edge(self) -> u32 {
        match self {
            ZMove::Leaf { edge, .. } | ZMove::Loop { edge, .. } => edge,
        }
    }
}

/// X-correction flag update at vertex `v`. Reads X flags only. With three
/// colors, Z flags are raised on `Ω(j)` (leaf) or `Ξ(v)` (loop).
pub fn x_correction(f: &mut FlagState, g: &Geometry, v: u32) -> Option<XMove> {
    let star = g.star[v as usize];
    let fl = star.map(|e| f.x[e as usize]);
    let n = fl.iter().filter(|b| **b).count();
    if n == 1 {
        let j = star[fl.iter().position(|b| *b).unwrap()];
        f.set_x(j, false);
        if g.colors == 3 {
            for e in g.omega[j as usize] {
                f.set_z(e, true);
            }
        }
        return Some(XMove::Leaf { vertex: v, edge: j });
    }
    if let Some(xl) = g.xloop[v as usize] {
        if fl == [true, true, false] {
            f.set_x(xl.e[0], false);
            f.set_x(xl.e[1], false);
            for e in xl.outer {
                f.set_x(e, true);
            }
            if g.colors == 3 {
                for e in g.xi[v as usize] {
                    f.set_z(e, true);
                }
            }
            return Some(XMove::Loop { vertex: v, edge: xl.e[0] });
        }
    }
    None
}

/// Z-correction flag update at plaquette `p`. With three colors the move is
/// blocked by any X flag on the interior of `p`.
pub fn z_correction(f: &mut FlagState, g: &Geometry, p: u32) -> Option<ZMove> {
    if g.colors == 3 && g.interior[p as usize].iter().any(|&e| f.x[e as usize]) {
        return None;
    }
    let bdy = g.boundary[p as usize];
    let n = bdy.iter().filter(|&&e| f.z[e as usize]).count();
    if n == 1 {
        let j = *bdy.iter().find(|&&e| f.z[e as usize]).unwrap();
        f.set_z(j, false);
        return Some(ZMove::Leaf { plaquette: p, edge: j });
    }
    let zl = g.zloop[p as usize];
    if zl.rest.iter().any(|&e| f.z[e as usize]) {
        return None;
    }
    let pat = crate::lattice::ZPattern::from_bits(zl.e.map(|e| f.z[e as usize]))?;
    for &i in pat.flagged() {
        f.set_z(zl.e[i], false);
    }
    for &i in pat.refresh() {
        f.set_z(zl.d[i], true);
    }
    Some(ZMove::Loop { plaquette: p, edge: zl.e[pat.push()] })
}

/// Flag part of one site event.
pub fn flag_event(f: &mut FlagState, g: &Geometry, ev: Event) {
    match ev.branch {
        Branch::Heralded(_) => {
            f.set_x(ev.edge, true);
            f.set_z(ev.edge, true);
        }
        Branch::Unheralded(_) => {}
        Branch::XCorrection => {
            x_correction(f, g, g.edge_vertices[ev.edge as usize][ev.side]);
        }
        Branch::ZCorrection => {
            z_correction(f, g, g.edge_plaquettes[ev.edge as usize][ev.side]);
        }
    }
}

/// One Monte Carlo sweep (one event per edge on average). Returns the time
/// advanced.
pub fn flag_sweep(f: &mut FlagState, g: &Geometry, sampler: &Sampler, rates: &Rates, rng: &mut Rng) -> f64 {
    for _ in 0..g.n_edges() {
        let ev = sampler.sample(rng);
        flag_event(f, g, ev);
    }
    rates.dt()
}

/// Connected components of flagged edges of one color. X flags connect
/// through shared vertices, Z flags through shared plaquettes.
pub fn cluster_sizes(f: &FlagState, g: &Geometry, kind: FlagKind, color: u8) -> BTreeMap<usize, usize> {
    let n = g.n_edges();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(p: &mut [u32], mut x: u32) -> u32 {
        while p[x as usize] != x {
            p[x as usize] = p[p[x as usize] as usize];
            x = p[x as usize];
        }
        x
    }
    let flags = match kind {
        FlagKind::X => &f.x,
        FlagKind::Z => &f.z,
    };
    let on = |e: u32| flags[e as usize] && g.edge_color[e as usize] == color;
    let mut union = |groups: &mut dyn Iterator<Item = u32>| {
        let members: Vec<u32> = groups.filter(|&e| on(e)).collect();
        for w in members.windows(2) {
            let a = find(&mut parent, w[0]);
            let b = find(&mut parent, w[1]);
            parent[a.max(b) as usize] = a.min(b);
        }
    };
    match kind {
        FlagKind::X => {
            for v in g.vertices_of_color(color) {
                union(&mut g.star[v as usize].into_iter());
            }
        }
        FlagKind::Z => {
            for p in g.plaquettes_of_color(color) {
                union(&mut g.boundary[p as usize].into_iter());
            }
        }
    }
    let mut size: BTreeMap<u32, usize> = BTreeMap::new();
    for e in 0..n as u32 {
        if on(e) {
            *size.entry(find(&mut parent, e)).or_default() += 1;
        }
    }
    let mut hist = BTreeMap::new();
    for s in size.into_values() {
        *hist.entry(s).or_default() += 1;
    }
    hist
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauSample {
    pub tau: f64,
    pub censored: bool,
}

/// First time at which the density of `kind` flags reaches `threshold`,
/// starting from the empty state. Trials that do not cross within
/// `max_sweeps` are censored at the final time.
pub fn time_to_density(
    g: &Geometry,
    rates: &Rates,
    kind: FlagKind,
    threshold: f64,
    max_sweeps: usize,
    rng: &mut Rng,
) -> TauSample {
    let mut f = FlagState::new(g.n_edges());
    if f.density(kind) >= threshold {
        return TauSample { tau: 0.0, censored: false };
    }
    let sampler = Sampler::new(rates, g.n_edges());
    let mut t = 0.0;
    for _ in 0..max_sweeps {
        t += flag_sweep(&mut f, g, &sampler, rates, rng);
        if f.density(kind) >= threshold {
            return TauSample { tau: t, censored: false };
        }
    }
    TauSample { tau: t, censored: true }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_stream;

    #[test]
    fn branch_probabilities_sum_to_one() {
        for r in [Rates::new(1.0, 4.0, 8.0), Rates::new(1.0, 35.0, 500.0).with_phi_e(0.9), Rates::new(0.0, 1.0, 0.0)] {
            let s: f64 = r.branch_probabilities().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_empty_state_is_stationary() {
        let g = Geometry::new(6, 3).unwrap();
        let r = Rates::new(0.0, 10.0, 10.0);
        let s = Sampler::new(&r, g.n_edges());
        let mut f = FlagState::new(g.n_edges());
        let mut rng = rng_stream(1, 0);
        for _ in 0..20 {
            flag_sweep(&mut f, &g, &s, &r, &mut rng);
        }
        assert!(f.fidelity());
    }

    #[test]
    fn absorbing_state_is_absorbing() {
        for colors in [1, 3] {
            let g = Geometry::new(6, colors).unwrap();
            let r = Rates::new(1.0, 5.0, 7.0);
            let s = Sampler::new(&r, g.n_edges());
            let mut f = FlagState::filled(g.n_edges());
            let mut rng = rng_stream(2, 0);
            for _ in 0..20 {
                flag_sweep(&mut f, &g, &s, &r, &mut rng);
            }
            assert_eq!(f, FlagState::filled(g.n_edges()));
        }
    }

    #[test]
    fn counts_stay_consistent() {
        let g = Geometry::new(9, 3).unwrap();
        let r = Rates::new(1.0, 10.0, 20.0);
        let s = Sampler::new(&r, g.n_edges());
        let mut f = FlagState::new(g.n_edges());
        let mut rng = rng_stream(3, 0);
        for _ in 0..30 {
            flag_sweep(&mut f, &g, &s, &r, &mut rng);
            assert_eq!(f.recount(), (f.count_x(), f.count_z()));
        }
    }

    #[test]
    fn x_leaf_and_loop() {
        let g = Geometry::new(6, 3).unwrap();
        let v = (0..g.n_vertices() as u32).find(|&v| g.vertex_sub[v as usize] == 1).unwrap();
        let mut f = FlagState::new(g.n_edges());
        let j = g.star[v as usize][2];
        f.set_x(j, true);
        assert_eq!(x_correction(&mut f, &g, v), Some(XMove::Leaf { vertex: v, edge: j }));
        assert_eq!(f.count_x(), 0);
        assert_eq!(f.count_z(), 4);
        for e in g.omega[j as usize] {
            assert!(f.z[e as usize]);
        }
        let mut f = FlagState::new(g.n_edges());
        let xl = g.xloop[v as usize].unwrap();
        f.set_x(xl.e[0], true);
        f.set_x(xl.e[1], true);
        assert_eq!(x_correction(&mut f, &g, v), Some(XMove::Loop { vertex: v, edge: xl.e[0] }));
        assert_eq!(f.count_x(), 4);
        assert!(xl.outer.iter().all(|&e| f.x[e as usize]));
        assert_eq!(f.count_z(), 6);
        // two flags in another pattern: no-op
        let mut f = FlagState::new(g.n_edges());
        f.set_x(xl.e[1], true);
        f.set_x(xl.e[2], true);
        let before = f.clone();
        assert_eq!(x_correction(&mut f, &g, v), None);
        assert_eq!(f, before);
    }

    #[test]
    fn z_moves_gated_by_interior_x_flags() {
        let g = Geometry::new(6, 3).unwrap();
        let mut f = FlagState::new(g.n_edges());
        let j = g.boundary[0][3];
        f.set_z(j, true);
        f.set_x(g.interior[0][0], true);
        assert_eq!(z_correction(&mut f, &g, 0), None);
        f.set_x(g.interior[0][0], false);
        assert_eq!(z_correction(&mut f, &g, 0), Some(ZMove::Leaf { plaquette: 0, edge: j }));
        let zl = g.zloop[0];
        let mut f = FlagState::new(g.n_edges());
        f.set_z(zl.e[1], true);
        f.set_z(zl.e[2], true);
        assert_eq!(z_correction(&mut f, &g, 0), Some(ZMove::Loop { plaquette: 0, edge: zl.e[1] }));
        assert!(f.z[zl.d[1] as usize] && !f.z[zl.e[1] as usize] && !f.z[zl.e[2] as usize]);
        assert_eq!(f.count_z(), 1);
    }

    #[test]
    fn hexagonal_loop_is_cleared() {
        // Six X flags around one plaquette: leaf moves alone are stuck, the
        // loop moves shrink it away.
        let g = Geometry::new(9, 1).unwrap();
        let r = Rates::new(0.0, 1.0, 0.0);
        let s = Sampler::new(&r, g.n_edges());
        let mut rng = rng_stream(4, 0);
        for p in 0..g.n_plaquettes() {
            let mut f = FlagState::new(g.n_edges());
            for e in g.boundary[p] {
                f.set_x(e, true);
            }
            for _ in 0..200 {
                flag_sweep(&mut f, &g, &s, &r, &mut rng);
            }
            assert_eq!(f.count_x(), 0);
        }
    }

    #[test]
    fn clusters() {
        let g = Geometry::new(6, 1).unwrap();
        let f = FlagState::new(g.n_edges());
        assert!(cluster_sizes(&f, &g, FlagKind::X, 0).is_empty());
        let mut f = FlagState::new(g.n_edges());
        let st = g.star[0];
        f.set_x(st[0], true);
        assert_eq!(cluster_sizes(&f, &g, FlagKind::X, 0), BTreeMap::from([(1, 1)]));
        f.set_x(st[1], true);
        let far = (0..g.n_edges() as u32)
            .find(|&e| g.edge_vertices[e as usize].iter().all(|&v| g.vertex_distance(v, 0) > 2))
            .unwrap();
        f.set_x(far, true);
        assert_eq!(cluster_sizes(&f, &g, FlagKind::X, 0), BTreeMap::from([(1, 1), (2, 1)]));
    }

    #[test]
    fn noise_only_is_monotone() {
        let g = Geometry::new(6, 1).unwrap();
        let r = Rates::new(1.0, 0.0, 0.0);
        let s = Sampler::new(&r, g.n_edges());
        let mut f = FlagState::new(g.n_edges());
        let mut rng = rng_stream(5, 0);
        let mut last = (0, 0);
        for _ in 0..50 {
            flag_sweep(&mut f, &g, &s, &r, &mut rng);
            let now = (f.count_x(), f.count_z());
            assert!(now.0 >= last.0 && now.1 >= last.1);
            last = now;
        }
        let tau = time_to_density(&g, &r, FlagKind::X, 0.0, 10, &mut rng);
        assert_eq!(tau, TauSample { tau: 0.0, censored: false });
    }
}
