//! Conjugation tables for the D4 check operators.
//!
//! Every plaquette operator is `A_p = D_p X_∂p` with `D_p` the product of
//! controlled-Z gates on the interior pairs. The tables record how `A_p`,
//! single-qubit `X` and the X-logical cores act on each other by
//! conjugation. Diagonal leftovers are products of vertex checks and
//! Z-logicals; they are stored as a [`ZValue`] and evaluated on the current
//! state.

use std::collections::{HashMap, VecDeque};

use fixedbitset::FixedBitSet;

use crate::lattice::Geometry;

/// A Z-string written as `Π_{v∈vertices} B_v` times Z-logicals. Logical bit
/// `2c` is `Z_V` of color `c`, bit `2c + 1` is `Z_H`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ZValue {
    pub vertices: Vec<u32>,
    pub logical: u8,
}

impl ZValue {
    pub fn is_identity(&self) -> bool {
        self.vertices.is_empty() && self.logical == 0
    }

    /// Whether the string has eigenvalue −1. `zlog(bit)` gives the sign of a
    /// Z-logical if it is known.
    pub fn negative(&self, vneg: &[bool], zlog: impl Fn(usize) -> Option<bool>) -> Option<bool> {
        let mut neg = self.vertices.iter().filter(|&&v| vneg[v as usize]).count() % 2 == 1;
        for bit in 0..6 {
            if self.logical >> bit & 1 == 1 {
                neg ^= zlog(bit)?;
            }
        }
        Some(neg)
    }
}

/// Symmetric difference of a multiset of edges, sorted.
pub fn xor_set(mut v: Vec<u32>) -> Vec<u32> {
    v.sort_unstable();
    let mut out: Vec<u32> = Vec::with_capacity(v.len());
    for e in v {
        if out.last() == Some(&e) {
            out.pop();
        } else {
            out.push(e);
        }
    }
    out
}

/// `X_S D X_S = (−1)^neg D Z_T` for `D` the product of CZ over `pairs`.
pub fn cz_conj<'a>(pairs: impl IntoIterator<Item = &'a [u32; 2]>, in_s: impl Fn(u32) -> bool) -> (bool, Vec<u32>) {
    let mut neg = false;
    let mut t = Vec::new();
    for &[a, b] in pairs {
        let (sa, sb) = (in_s(a), in_s(b));
        if sa {
            t.push(b);
        }
        if sb {
            t.push(a);
        }
        neg ^= sa && sb;
    }
    (neg, xor_set(t))
}

/// Writes the Z-string on `edges` as vertex checks times Z-logicals, or
/// `None` if it is not a product of those.
pub fn decompose(g: &Geometry, edges: &[u32]) -> Option<ZValue> {
    let mut on = vec![false; g.n_edges()];
    for &e in edges {
        on[e as usize] ^= true;
    }
    let mut logical = 0u8;
    for c in 0..g.colors {
        let lg = &g.logical[c];
        let odd = |path: &[u32]| path.iter().filter(|&&e| on[e as usize]).count() % 2 == 1;
        let (zv, zh) = (odd(&lg.x_h), odd(&lg.x_v));
        for (bit, hit, sup) in [(0, zv, &lg.z_v), (1, zh, &lg.z_h)] {
            if hit {
                logical |= 1 << (2 * c + bit);
                for &e in sup {
                    on[e as usize] ^= true;
                }
            }
        }
    }
    let nv = g.n_vertices();
    let mut side: Vec<Option<bool>> = vec![None; nv];
    let mut vertices = Vec::new();
    for root in 0..nv as u32 {
        if side[root as usize].is_some() {
            continue;
        }
        side[root as usize] = Some(false);
        let mut comp = vec![root];
        let mut q = VecDeque::from([root]);
        while let Some(x) = q.pop_front() {
            let sx = side[x as usize].unwrap();
            for (y, e) in g.vertex_nbrs(x) {
                let sy = sx ^ on[e as usize];
                match side[y as usize] {
                    None => {
                        side[y as usize] = Some(sy);
                        comp.push(y);
                        q.push_back(y);
                    }
                    Some(s) if s != sy => return None,
                    _ => {}
                }
            }
        }
        let inside: Vec<u32> = comp.iter().copied().filter(|&v| side[v as usize] == Some(true)).collect();
        if 2 * inside.len() <= comp.len() {
            vertices.extend(inside);
        } else {
            vertices.extend(comp.into_iter().filter(|&v| side[v as usize] == Some(false)));
        }
    }
    vertices.sort_unstable();
    Some(ZValue { vertices, logical })
}

/// `A_p A_q A_p = (−1)^neg A_q Z_T`.
#[derive(Clone, Debug)]
pub struct Rel {
    pub q: u32,
    pub neg: bool,
    pub t: ZValue,
}

/// `X_k A_p X_k = Z_partners A_p` for `k` interior to `p`.
#[derive(Clone, Debug)]
pub struct XTarget {
    pub p: u32,
    pub partners: Vec<u32>,
}

/// `K A_p K = (−1)^neg A_p Z_E` for an X-logical core `K`.
#[derive(Clone, Debug)]
pub struct CoreRel {
    pub e: Vec<u32>,
    pub neg: bool,
    pub val: ZValue,
}

/// X-logical core `K = X_C D_K` of one color: `X` on a closed loop and
/// controlled-Z between ordered rung pairs.
#[derive(Clone, Debug)]
pub struct Core {
    pub color: u8,
    pub on_c: FixedBitSet,
    pub pairs: Vec<[u32; 2]>,
    /// CZ partners of each rung.
    pub xi: HashMap<u32, Vec<u32>>,
    /// Nontrivial `K A_p K` relations by plaquette.
    pub rel: Vec<Option<CoreRel>>,
}

impl Core {
    fn build(g: &Geometry, c: u8, later_first: bool) -> Option<Core> {
        let lg = &g.logical[c as usize];
        let mut on_c = FixedBitSet::with_capacity(g.n_edges());
        for &e in &lg.x_v {
            on_c.toggle(e as usize);
        }
        let first = (c + 1 + later_first as u8) % 3;
        let mut pairs = Vec::new();
        for (i, &ri) in lg.rungs.iter().enumerate() {
            for &rj in &lg.rungs[..i] {
                if g.edge_color[ri as usize] == first && g.edge_color[rj as usize] != first {
                    pairs.push([ri, rj]);
                }
            }
        }
        let mut xi: HashMap<u32, Vec<u32>> = HashMap::new();
        for &[a, b] in &pairs {
            xi.entry(a).or_default().push(b);
            xi.entry(b).or_default().push(a);
        }
        for v in xi.values_mut() {
            *v = xor_set(std::mem::take(v));
        }
        let mut rel = Vec::with_capacity(g.n_plaquettes());
        for p in 0..g.n_plaquettes() {
            let bd = &g.boundary[p];
            let (n1, t1) = cz_conj(&pairs, |e| bd.contains(&e));
            let (n2, t2) = cz_conj(&g.cz_pairs[p], |e| on_c.contains(e as usize));
            let flip = t1.iter().filter(|&&e| on_c.contains(e as usize)).count() + t2.iter().filter(|&&e| bd.contains(&e)).count();
            let neg = n1 ^ n2 ^ (flip % 2 == 1);
            let e = xor_set([t1, t2].concat());
            if e.is_empty() && !neg {
                rel.push(None);
                continue;
            }
            let val = decompose(g, &e)?;
            rel.push(Some(CoreRel { e, neg, val }));
        }
        Some(Core { color: c, on_c, pairs, xi, rel })
    }

    /// `X_k K X_k = K Z_ξ(k)`.
    pub fn partners(&self, k: u32) -> &[u32] {
        self.xi.get(&k).map_or(&[], |v| v)
    }
}

#[derive(Clone, Debug)]
pub struct Algebra {
    /// Per plaquette `p`, the plaquettes `q` with a nontrivial `A_p A_q A_p`.
    pub rel: Vec<Vec<Rel>>,
    /// Per edge `k`, the plaquettes with `k` in a CZ pair.
    pub xcz: Vec<Vec<XTarget>>,
    /// X-logical cores by color (D4 only).
    pub cores: Vec<Core>,
}

impl Algebra {
    pub fn new(g: &Geometry) -> Algebra {
        let np = g.n_plaquettes();
        let mut rel = Vec::with_capacity(np);
        for p in 0..np {
            let mut cand: Vec<u32> = g.interior[p].iter().flat_map(|&e| g.edge_plaquettes[e as usize]).collect();
            cand.extend(g.boundary[p].iter().flat_map(|&e| g.edge_sites[e as usize].map(|s| g.site_plaq[s as usize])));
            cand.sort_unstable();
            cand.dedup();
            let mut rp = Vec::new();
            for q in cand {
                if q as usize == p || q == crate::lattice::NONE {
                    continue;
                }
                let (bp, bq) = (&g.boundary[p], &g.boundary[q as usize]);
                let (n1, t1) = cz_conj(&g.cz_pairs[q as usize], |e| bp.contains(&e));
                let (n2, t2) = cz_conj(&g.cz_pairs[p], |e| bq.contains(&e));
                let t = xor_set([t1, t2].concat());
                let neg = n1 ^ n2 ^ (t.iter().filter(|&&e| bq.contains(&e)).count() % 2 == 1);
                if t.is_empty() && !neg {
                    continue;
                }
                let t = decompose(g, &t).expect("plaquette commutator is a product of vertex checks");
                rp.push(Rel { q, neg, t });
            }
            rel.push(rp);
        }
        let mut xcz = vec![Vec::new(); g.n_edges()];
        for p in 0..np {
            let mut by_edge: HashMap<u32, Vec<u32>> = HashMap::new();
            for &[a, b] in &g.cz_pairs[p] {
                by_edge.entry(a).or_default().push(b);
                by_edge.entry(b).or_default().push(a);
            }
            let mut keys: Vec<u32> = by_edge.keys().copied().collect();
            keys.sort_unstable();
            for k in keys {
                let partners = xor_set(by_edge.remove(&k).unwrap());
                xcz[k as usize].push(XTarget { p: p as u32, partners });
            }
        }
        let cores = if g.colors == 3 {
            (0..3u8)
                .map(|c| {
                    Core::build(g, c, false)
                        .or_else(|| Core::build(g, c, true))
                        .expect("X-logical core commutes with the checks up to vertex checks")
                })
                .collect()
        } else {
            Vec::new()
        };
        Algebra { rel, xcz, cores }
    }

    /// The relation entry of `A_p A_q A_p`, if nontrivial.
    pub fn rel(&self, p: u32, q: u32) -> Option<&Rel> {
        self.rel[p as usize].iter().find(|r| r.q == q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generic_relation_is_two_vertex_checks() {
        for l in [6, 9] {
            let g = Geometry::new(l, 3).unwrap();
            let a = Algebra::new(&g);
            for p in 0..g.n_plaquettes() as u32 {
                let mut want: Vec<(u32, Vec<u32>)> = g.adjacent[p as usize]
                    .iter()
                    .map(|ad| {
                        let mut uv = vec![ad.u, ad.v];
                        uv.sort_unstable();
                        (ad.q, uv)
                    })
                    .collect();
                want.sort();
                let mut got: Vec<(u32, Vec<u32>)> = a.rel[p as usize]
                    .iter()
                    .map(|r| {
                        assert!(!r.neg && r.t.logical == 0, "L={l} p={p} {r:?}");
                        (r.q, r.t.vertices.clone())
                    })
                    .collect();
                got.sort();
                assert_eq!(got, want, "L={l} p={p}");
            }
        }
    }

    #[test]
    fn relations_are_symmetric() {
        for l in [3, 6] {
            let g = Geometry::new(l, 3).unwrap();
            let a = Algebra::new(&g);
            for p in 0..g.n_plaquettes() as u32 {
                for r in &a.rel[p as usize] {
                    let back = a.rel(r.q, p).expect("symmetric");
                    assert_eq!(back.t, r.t);
                    assert_eq!(back.neg, r.neg);
                }
            }
        }
    }

    #[test]
    fn x_on_interior_edge_hits_two_plaquettes() {
        let g = Geometry::new(6, 3).unwrap();
        let a = Algebra::new(&g);
        for k in 0..g.n_edges() {
            assert_eq!(a.xcz[k].len(), 2);
            for t in &a.xcz[k] {
                assert_eq!(t.partners.len(), 2);
                assert!(g.interior[t.p as usize].contains(&(k as u32)));
            }
        }
    }

    #[test]
    fn cores_exist_and_are_local_away_from_the_seam() {
        for l in [3, 6, 9] {
            let g = Geometry::new(l, 3).unwrap();
            let a = Algebra::new(&g);
            for core in &a.cores {
                let n = core.rel.iter().flatten().count();
                assert!(n > 0 && n < g.n_plaquettes());
                for r in core.rel.iter().flatten() {
                    // Z_H of the core's color would not be fixed in the plus basis
                    assert_eq!(r.val.logical & 0b101010, 0, "L={l} {r:?}");
                }
            }
        }
    }

    #[test]
    fn logicals_decompose() {
        let g = Geometry::new(6, 3).unwrap();
        for c in 0..3 {
            let lg = &g.logical[c];
            assert_eq!(decompose(&g, &lg.z_v).unwrap(), ZValue { vertices: vec![], logical: 1 << (2 * c) });
            assert_eq!(decompose(&g, &lg.z_h).unwrap(), ZValue { vertices: vec![], logical: 2 << (2 * c) });
        }
        let v = 5;
        let star = g.star[v].to_vec();
        assert_eq!(decompose(&g, &star).unwrap().vertices, vec![v as u32]);
        assert!(decompose(&g, &star[..2]).is_none());
    }
}
