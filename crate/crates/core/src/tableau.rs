//! Quasi-stabilizer tableau for the D4 code.
//!
//! A row is the operator `(−1)^neg · Z^z · Π_{p∈a} A_p · K_{c1} K_{c2} …`
//! with the plaquette factors in ascending order and X-logical cores `K_c`
//! at the right. Vertex checks commute with every row, so whenever
//! reordering produces a product of vertex checks it is replaced by its
//! value on the current state. Rows are stabilizers (`G`, color products,
//! X-logicals) or destabilizers (`D`, one per `G` row).

use fixedbitset::FixedBitSet;
use rand::Rng;

use crate::algebra::{decompose, Algebra};
use crate::lattice::{Geometry, MASK_Z_H, MASK_Z_V};
use crate::trajectory::Basis;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub neg: bool,
    pub z: FixedBitSet,
    pub a: FixedBitSet,
    pub cores: Vec<u8>,
}

impl Row {
    fn empty(g: &Geometry) -> Row {
        Row { neg: false, z: FixedBitSet::with_capacity(g.n_edges()), a: FixedBitSet::with_capacity(g.n_plaquettes()), cores: Vec::new() }
    }

    pub fn is_scalar(&self) -> bool {
        self.z.is_clear() && self.a.is_clear() && self.cores.is_empty()
    }
}

/// Result of a plaquette measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// A stabilizer anticommuted; the outcome was drawn with probability ½.
    Random { neg: bool },
    /// Only an X-logical anticommuted; it is lost.
    Collapse { neg: bool, color: u8 },
    /// The state was an eigenstate.
    Determined { neg: bool },
    /// The eigenvalue could not be resolved from the tracked rows.
    Unresolved { neg: bool },
}

impl Outcome {
    pub fn neg(self) -> bool {
        match self {
            Outcome::Random { neg } | Outcome::Collapse { neg, .. } | Outcome::Determined { neg } | Outcome::Unresolved { neg } => neg,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Tableau<'a> {
    g: &'a Geometry,
    alg: &'a Algebra,
    basis: Basis,
    vneg: Vec<bool>,
    rows: Vec<Row>,
    zcol: Vec<FixedBitSet>,
    acol: Vec<FixedBitSet>,
    g_rows: Vec<usize>,
    d_rows: Vec<usize>,
    extras: Vec<usize>,
    xlog: [Option<usize>; 3],
    /// Sign of `Z_V`, `Z_H` per color when tracked.
    zlog: [[Option<bool>; 2]; 3],
    core_rows: Vec<usize>,
    pub collapses: u32,
    pub unresolved: u32,
}

fn parity(n: usize) -> bool {
    n % 2 == 1
}

impl<'a> Tableau<'a> {
    pub fn new(g: &'a Geometry, alg: &'a Algebra, basis: Basis) -> Tableau<'a> {
        assert_eq!(g.colors, 3, "the tableau is defined for the D4 code");
        let np = g.n_plaquettes();
        let mut rows = Vec::new();
        let mut g_rows = Vec::new();
        let mut d_rows = Vec::new();
        let mut dests = Vec::new();
        for p in 0..np {
            if g.p_star[g.plaq_color[p] as usize] as usize == p {
                continue;
            }
            let mut r = Row::empty(g);
            r.a.insert(p);
            g_rows.push(rows.len());
            rows.push(r);
            let mut d = Row::empty(g);
            for &e in &g.destab_path[p] {
                d.z.toggle(e as usize);
            }
            if basis == Basis::Plus {
                let c = g.plaq_color[p] as usize;
                let lg = &g.logical[c];
                if parity(lg.x_v.iter().filter(|&&e| d.z.contains(e as usize)).count()) {
                    for &e in &lg.z_h {
                        d.z.toggle(e as usize);
                    }
                }
            }
            dests.push(d);
        }
        for d in dests {
            d_rows.push(rows.len());
            rows.push(d);
        }
        let mut extras = Vec::new();
        for c in 0..3u8 {
            let mut r = Row::empty(g);
            for p in g.plaquettes_of_color(c) {
                r.a.insert(p as usize);
            }
            extras.push(rows.len());
            rows.push(r);
        }
        let mut xlog = [None; 3];
        let mut zlog = [[Some(false); 2]; 3];
        if basis == Basis::Plus {
            for c in 0..3 {
                let mut r = Row::empty(g);
                r.cores.push(c as u8);
                xlog[c] = Some(rows.len());
                rows.push(r);
                zlog[c][1] = None;
            }
        }
        let cap = rows.len() + 4;
        let mut t = Tableau {
            g,
            alg,
            basis,
            vneg: vec![false; g.n_vertices()],
            rows: Vec::new(),
            zcol: vec![FixedBitSet::with_capacity(cap); g.n_edges()],
            acol: vec![FixedBitSet::with_capacity(cap); np],
            g_rows,
            d_rows,
            extras,
            xlog,
            zlog,
            core_rows: Vec::new(),
            collapses: 0,
            unresolved: 0,
        };
        for r in rows {
            t.push_row(r);
        }
        t
    }

    pub fn geometry(&self) -> &'a Geometry {
        self.g
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn vertex_negative(&self, v: u32) -> bool {
        self.vneg[v as usize]
    }

    pub fn vertex_signs(&self) -> &[bool] {
        &self.vneg
    }

    pub fn n_vertex_defects(&self) -> usize {
        self.vneg.iter().filter(|&&b| b).count()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn n_stabilizers(&self) -> usize {
        self.g_rows.len()
    }

    /// Sign of `Z_V` (`dir = 0`) or `Z_H` (`dir = 1`) of color `c`, if tracked.
    pub fn z_logical(&self, c: usize, dir: usize) -> Option<bool> {
        self.zlog[c][dir]
    }

    pub fn x_logical_row(&self, c: usize) -> Option<&Row> {
        self.xlog[c].map(|i| &self.rows[i])
    }

    fn zlog_bit(&self, bit: usize) -> Option<bool> {
        self.zlog[bit / 2][bit % 2]
    }

    fn push_row(&mut self, r: Row) -> usize {
        let i = self.rows.len();
        for col in self.zcol.iter_mut().chain(self.acol.iter_mut()) {
            if col.len() <= i {
                col.grow(i + 1);
            }
        }
        for e in r.z.ones() {
            self.zcol[e].insert(i);
        }
        for p in r.a.ones() {
            self.acol[p].insert(i);
        }
        if !r.cores.is_empty() {
            self.core_rows.push(i);
        }
        self.rows.push(r);
        i
    }

    fn replace_row(&mut self, i: usize, r: Row) {
        let old = &self.rows[i];
        for e in old.z.symmetric_difference(&r.z) {
            self.zcol[e].toggle(i);
        }
        for p in old.a.symmetric_difference(&r.a) {
            self.acol[p].toggle(i);
        }
        let had = !old.cores.is_empty();
        let has = !r.cores.is_empty();
        if had && !has {
            self.core_rows.retain(|&j| j != i);
        } else if has && !had {
            self.core_rows.push(i);
        }
        self.rows[i] = r;
    }

    fn toggle_z(&mut self, i: usize, e: usize) {
        self.rows[i].z.toggle(e);
        self.zcol[e].toggle(i);
    }

    /// Number of plaquettes in `a` below index `below` with edge `e` on the
    /// boundary.
    fn boundary_hits(&self, a: &FixedBitSet, e: u32, below: usize) -> usize {
        self.g.edge_plaquettes[e as usize].iter().filter(|&&q| (q as usize) < below && a.contains(q as usize)).count()
    }

    /// Applies `Z` on edge `k`.
    pub fn apply_z(&mut self, k: u32) {
        let [p1, p2] = self.g.edge_plaquettes[k as usize];
        let mut flip = self.acol[p1 as usize].clone();
        flip.symmetric_difference_with(&self.acol[p2 as usize]);
        for i in flip.ones() {
            self.rows[i].neg ^= true;
        }
        for &i in &self.core_rows {
            let r = &mut self.rows[i];
            let n = r.cores.iter().filter(|&&c| self.alg.cores[c as usize].on_c.contains(k as usize)).count();
            r.neg ^= parity(n);
        }
    }

    /// Applies `X` on edge `k`.
    pub fn apply_x(&mut self, k: u32) {
        let g = self.g;
        let ku = k as usize;
        for v in g.edge_vertices[ku] {
            self.vneg[v as usize] ^= true;
        }
        let c = g.edge_color[ku] as usize;
        let m = g.logical_mask[ku];
        for (dir, mask) in [(0, MASK_Z_V), (1, MASK_Z_H)] {
            if m & mask != 0 {
                if let Some(s) = self.zlog[c][dir].as_mut() {
                    *s ^= true;
                }
            }
        }
        for i in self.zcol[ku].ones() {
            self.rows[i].neg ^= true;
        }
        for t in &self.alg.xcz[ku] {
            let hit: Vec<usize> = self.acol[t.p as usize].ones().collect();
            for i in hit {
                let n: usize = t.partners.iter().map(|&b| self.boundary_hits(&self.rows[i].a, b, t.p as usize)).sum();
                self.rows[i].neg ^= parity(n);
                for &b in &t.partners {
                    self.toggle_z(i, b as usize);
                }
            }
        }
        for idx in 0..self.core_rows.len() {
            let i = self.core_rows[idx];
            let cores = self.rows[i].cores.clone();
            let mut toggles: Vec<u32> = Vec::new();
            let mut neg = false;
            for (j, &cj) in cores.iter().enumerate() {
                let xi = self.alg.cores[cj as usize].partners(k);
                if xi.is_empty() {
                    continue;
                }
                for &e in xi {
                    let passed = cores[..=j].iter().filter(|&&cl| self.alg.cores[cl as usize].on_c.contains(e as usize)).count();
                    neg ^= parity(passed + self.boundary_hits(&self.rows[i].a, e, usize::MAX));
                    toggles.push(e);
                }
            }
            self.rows[i].neg ^= neg;
            for e in toggles {
                self.toggle_z(i, e as usize);
            }
        }
    }

    /// Whether `A_p R A_p = −R` on the current state, for rows with cores.
    fn core_anti(&self, r: &Row, p: u32) -> bool {
        let mut neg = false;
        for (j, &cj) in r.cores.iter().enumerate() {
            let Some(cr) = &self.alg.cores[cj as usize].rel[p as usize] else { continue };
            let bd = &self.g.boundary[p as usize];
            let mut n = cr.e.iter().filter(|e| bd.contains(e)).count();
            for &cl in &r.cores[j + 1..] {
                n += cr.e.iter().filter(|&&e| self.alg.cores[cl as usize].on_c.contains(e as usize)).count();
            }
            let val = cr.val.negative(&self.vneg, |b| self.zlog_bit(b)).expect("core relation involves tracked logicals only");
            neg ^= cr.neg ^ parity(n) ^ val;
        }
        neg
    }

    /// Rows anticommuting with `A_p` on the current state.
    pub fn anticommuting(&self, p: u32) -> FixedBitSet {
        let mut acc = FixedBitSet::with_capacity(self.rows.len());
        for &e in &self.g.boundary[p as usize] {
            acc.symmetric_difference_with(&self.zcol[e as usize]);
        }
        for rel in &self.alg.rel[p as usize] {
            let val = rel.t.negative(&self.vneg, |b| self.zlog_bit(b)).expect("relation involves tracked logicals only");
            if rel.neg ^ val {
                acc.symmetric_difference_with(&self.acol[rel.q as usize]);
            }
        }
        acc.grow(self.rows.len());
        for &i in &self.core_rows {
            if self.core_anti(&self.rows[i], p) {
                acc.toggle(i);
            }
        }
        acc
    }

    /// The product `a·b` with vertex checks evaluated on the current state.
    pub fn product(&self, a: &Row, b: &Row) -> Row {
        let g = self.g;
        let mut neg = a.neg ^ b.neg;
        let mut z = b.z.clone();
        for &c in a.cores.iter().rev() {
            let core = &self.alg.cores[c as usize];
            neg ^= parity(z.intersection_count(&core.on_c));
            for q in b.a.ones() {
                let Some(cr) = &core.rel[q] else { continue };
                neg ^= cr.neg;
                for &e in &cr.e {
                    neg ^= parity(self.boundary_hits(&b.a, e, q + 1));
                    z.toggle(e as usize);
                }
            }
        }
        // Z of b past the plaquettes of a
        let n = if z.count_ones(..) <= 6 * a.a.count_ones(..) {
            z.ones().map(|e| self.boundary_hits(&a.a, e as u32, usize::MAX)).sum::<usize>()
        } else {
            a.a.ones().map(|p| g.boundary[p].iter().filter(|&&e| z.contains(e as usize)).count()).sum()
        };
        neg ^= parity(n);
        // merge the plaquette products
        for q in b.a.ones() {
            for rel in &self.alg.rel[q] {
                let r = rel.q as usize;
                if r > q && a.a.contains(r) {
                    let val = rel.t.negative(&self.vneg, |bit| self.zlog_bit(bit)).expect("relation involves tracked logicals only");
                    neg ^= rel.neg ^ val;
                }
            }
        }
        z.symmetric_difference_with(&a.z);
        let mut pa = a.a.clone();
        pa.symmetric_difference_with(&b.a);
        let mut cores = a.cores.clone();
        for &c in &b.cores {
            if cores.last() == Some(&c) {
                cores.pop();
            } else {
                cores.push(c);
            }
        }
        Row { neg, z, a: pa, cores }
    }

    fn plaquette_row(&self, p: u32, neg: bool) -> Row {
        let mut r = Row::empty(self.g);
        r.a.insert(p as usize);
        r.neg = neg;
        r
    }

    /// Eigenvalue sign of the Z-string `z` on the current state, if fixed by
    /// the tracked vertex checks and Z-logicals.
    pub fn z_string_negative(&self, z: &FixedBitSet) -> Option<bool> {
        if z.is_clear() {
            return Some(false);
        }
        let edges: Vec<u32> = z.ones().map(|e| e as u32).collect();
        decompose(self.g, &edges)?.negative(&self.vneg, |b| self.zlog_bit(b))
    }

    /// `A_p` written through the stabilizer rows, when `A_p` has a definite
    /// value. `None` means case (a) (some stabilizer anticommutes).
    fn resolve(&self, p: u32, anti: &FixedBitSet) -> Option<Option<bool>> {
        if self.g_rows.iter().any(|&i| anti.contains(i)) || self.xlog.iter().flatten().any(|&i| anti.contains(i)) {
            return None;
        }
        let mut t = self.plaquette_row(p, false);
        for (k, &d) in self.d_rows.iter().enumerate() {
            if anti.contains(d) {
                t = self.product(&t, &self.rows[self.g_rows[k]]);
            }
        }
        if !t.a.is_clear() || !t.cores.is_empty() {
            let cand: Vec<usize> = self.extras.iter().copied().chain(self.xlog.iter().flatten().copied()).collect();
            let found = (1u32..1 << cand.len()).find(|&mask| {
                let mut a = t.a.clone();
                let mut cores = [0u8; 3];
                for &c in &t.cores {
                    cores[c as usize] ^= 1;
                }
                for (j, &i) in cand.iter().enumerate() {
                    if mask >> j & 1 == 1 {
                        a.symmetric_difference_with(&self.rows[i].a);
                        for &c in &self.rows[i].cores {
                            cores[c as usize] ^= 1;
                        }
                    }
                }
                a.is_clear() && cores == [0; 3]
            });
            let Some(mask) = found else { return Some(None) };
            for (j, &i) in cand.iter().enumerate() {
                if mask >> j & 1 == 1 {
                    t = self.product(&t, &self.rows[i]);
                }
            }
            if !t.a.is_clear() || !t.cores.is_empty() {
                return Some(None);
            }
        }
        Some(self.z_string_negative(&t.z).map(|v| v ^ t.neg))
    }

    /// Sign of `⟨A_p⟩` without measuring: `Some(neg)` when the state is an
    /// eigenstate, `None` when the outcome would be random.
    pub fn peek(&self, p: u32) -> Option<bool> {
        let anti = self.anticommuting(p);
        self.resolve(p, &anti).flatten()
    }

    /// Projective measurement of `A_p`.
    pub fn measure(&mut self, p: u32, rng: &mut impl Rng) -> Outcome {
        let anti = self.anticommuting(p);
        if let Some(k) = self.g_rows.iter().position(|&i| anti.contains(i)) {
            let neg = rng.gen::<bool>();
            let piv = self.g_rows[k];
            let pivot = self.rows[piv].clone();
            for i in anti.ones() {
                if i != piv {
                    let r = self.product(&pivot, &self.rows[i]);
                    self.replace_row(i, r);
                }
            }
            let d = self.d_rows[k];
            self.replace_row(d, pivot);
            let r = self.plaquette_row(p, neg);
            self.replace_row(piv, r);
            return Outcome::Random { neg };
        }
        if let Some(c) = (0..3).find(|&c| self.xlog[c].is_some_and(|i| anti.contains(i))) {
            let neg = rng.gen::<bool>();
            let piv = self.xlog[c].unwrap();
            let pivot = self.rows[piv].clone();
            for i in anti.ones() {
                if i != piv {
                    let r = self.product(&self.rows[i], &pivot);
                    self.replace_row(i, r);
                }
            }
            self.xlog[c] = None;
            self.d_rows.push(piv);
            let r = self.plaquette_row(p, neg);
            let gi = self.push_row(r);
            self.g_rows.push(gi);
            self.collapses += 1;
            return Outcome::Collapse { neg, color: c as u8 };
        }
        match self.resolve(p, &anti).expect("no stabilizer anticommutes") {
            Some(neg) => Outcome::Determined { neg },
            None => {
                self.unresolved += 1;
                Outcome::Unresolved { neg: rng.gen::<bool>() }
            }
        }
    }

    /// Whether an X-logical was lost to a measurement.
    pub fn collapsed(&self) -> bool {
        self.collapses > 0
    }

    /// Eigenvalue sign of the X-logical of color `c` on a state with no
    /// vertex defects and all plaquettes at +1.
    pub fn x_logical_negative(&self, c: usize) -> Option<bool> {
        let r = &self.rows[self.xlog[c]?];
        if r.cores != [c as u8] {
            return None;
        }
        self.z_string_negative(&r.z).map(|v| v ^ r.neg)
    }
}
