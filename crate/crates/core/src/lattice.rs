//! Torus honeycomb geometry.
//!
//! All three honeycomb lattices live on one fine triangular lattice of
//! `L × L` sites. Site `(i, j)` sits at `i·u1 + j·u2` with `u1 = (1, 0)` and
//! `u2 = (1/2, √3/2)`, and has coset `κ = (i − j) mod 3`. For color `c`:
//!
//! * plaquettes are the coset-`c` sites (hexagon centers),
//! * vertices are the sites of the two other cosets; sublattice 1 is coset
//!   `c + 1`, sublattice 2 is coset `c + 2`,
//! * edges are the fine bonds joining cosets `c + 1` and `c + 2`.
//!
//! Every fine bond therefore carries exactly one color (the coset it does not
//! touch). Pictures are drawn with the index frame rotated by +90°, so `u1`
//! points north.
//!
//! Indexing: sites are numbered `s = i + L·j`. Fine bonds are numbered
//! `3·s + d` for the three forward directions `d ∈ {u1, u2, u2 − u1}`; edges of
//! the geometry are the bonds of the included colors in that order.
//! Vertices are the `(site, color)` pairs in site-major order and plaquettes
//! are the sites carrying an included color, in site order.

use std::collections::VecDeque;
use std::sync::OnceLock;

use serde::Serialize;

use crate::Error;

/// Neighbor offsets in counter-clockwise order (index frame).
pub const DIRS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

pub const NONE: u32 = u32::MAX;

pub const MASK_Z_V: u8 = 1;
pub const MASK_Z_H: u8 = 2;
pub const MASK_X_V: u8 = 4;
pub const MASK_X_H: u8 = 8;

/// Vertex or plaquette handle used by [`Geometry::graph_distance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    Vertex(u32),
    Plaquette(u32),
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct XLoop {
    /// `(e0, e1, e2)`: north, south-west and south-east edges of the vertex.
    pub e: [u32; 3],
    /// Boundary of the north-west plaquette minus `e0, e1`.
    pub outer: [u32; 4],
    pub p_nw: u32,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ZLoop {
    /// North-western boundary edges, ordered from north-most.
    pub e: [u32; 3],
    /// Outward edges at the corners `e0|e1` and `e1|e2`.
    pub d: [u32; 2],
    /// The remaining three boundary edges.
    pub rest: [u32; 3],
}

/// Pattern of flags on `(e0, e1, e2)` accepted by a Z-loop move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ZPattern {
    E01,
    E12,
    E02,
    E012,
}

impl ZPattern {
    pub fn from_bits(b: [bool; 3]) -> Option<ZPattern> {
        match b {
            [true, true, false] => Some(ZPattern::E01),
            [false, true, true] => Some(ZPattern::E12),
            [true, false, true] => Some(ZPattern::E02),
            [true, true, true] => Some(ZPattern::E012),
            _ => None,
        }
    }

    /// Indices into `ZLoop::d` of the refreshed edges.
    pub fn refresh(self) -> &'static [usize] {
        match self {
            ZPattern::E01 => &[0],
            ZPattern::E12 => &[1],
            ZPattern::E02 | ZPattern::E012 => &[0, 1],
        }
    }

    /// Index into `ZLoop::e` of the push edge (north-most flagged edge).
    pub fn push(self) -> usize {
        match self {
            ZPattern::E12 => 1,
            _ => 0,
        }
    }

    pub fn flagged(self) -> &'static [usize] {
        match self {
            ZPattern::E01 => &[0, 1],
            ZPattern::E12 => &[1, 2],
            ZPattern::E02 => &[0, 2],
            ZPattern::E012 => &[0, 1, 2],
        }
    }
}

/// Adjacent plaquette of another color and the vertex pair whose `B` product
/// appears when the two plaquette checks are swapped.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Adjacent {
    pub q: u32,
    pub u: u32,
    pub v: u32,
}

/// Logical supports of one color.
#[derive(Clone, Debug, Serialize)]
pub struct LogicalSupport {
    /// Dual loop winding along `u1` (vertical).
    pub z_v: Vec<u32>,
    /// Dual loop winding along `u2` (horizontal).
    pub z_h: Vec<u32>,
    /// Direct loop winding along `u1`.
    pub x_v: Vec<u32>,
    /// Direct loop winding along `u2`.
    pub x_h: Vec<u32>,
    /// Sites visited by `x_v`, in order.
    pub x_v_sites: Vec<u32>,
    /// Rung edge at each site of `x_v_sites` (the other-color spoke pointing
    /// into the bend of the loop).
    pub rungs: Vec<u32>,
}

#[derive(Debug, Serialize)]
pub struct Geometry {
    pub l: usize,
    pub colors: usize,
    pub edge_bond: Vec<u32>,
    #[serde(skip)]
    pub bond_edge: Vec<u32>,
    pub edge_sites: Vec<[u32; 2]>,
    pub edge_color: Vec<u8>,
    pub edge_vertices: Vec<[u32; 2]>,
    pub edge_plaquettes: Vec<[u32; 2]>,
    pub vertex_site: Vec<u32>,
    pub vertex_color: Vec<u8>,
    pub vertex_sub: Vec<u8>,
    #[serde(skip)]
    pub site_vertex: Vec<[u32; 3]>,
    pub star: Vec<[u32; 3]>,
    pub plaq_site: Vec<u32>,
    pub plaq_color: Vec<u8>,
    #[serde(skip)]
    pub site_plaq: Vec<u32>,
    pub boundary: Vec<[u32; 6]>,
    pub interior: Vec<[u32; 6]>,
    pub cz_pairs: Vec<[[u32; 2]; 6]>,
    pub adjacent: Vec<[Adjacent; 6]>,
    pub xloop: Vec<Option<XLoop>>,
    pub zloop: Vec<ZLoop>,
    pub xi: Vec<[u32; 6]>,
    pub omega: Vec<[u32; 4]>,
    pub logical: Vec<LogicalSupport>,
    pub p_star: Vec<u32>,
    /// Per edge, `MASK_*` bits for the logical supports of the edge's color.
    pub logical_mask: Vec<u8>,
    pub destab_path: Vec<Vec<u32>>,
    #[serde(skip)]
    dist: OnceLock<Distances>,
}

#[derive(Debug)]
struct Distances {
    /// Per color: local vertex index, vertex list and a dense table.
    vert: Vec<DistTable>,
    plaq: Vec<DistTable>,
}

#[derive(Debug)]
struct DistTable {
    local: Vec<u32>,
    n: usize,
    d: Vec<u16>,
}

impl DistTable {
    fn get(&self, a: u32, b: u32) -> u32 {
        let (i, j) = (self.local[a as usize] as usize, self.local[b as usize] as usize);
        self.d[i * self.n + j] as u32
    }
}

fn coset(i: i64, j: i64) -> u8 {
    (i - j).rem_euclid(3) as u8
}

impl Geometry {
    /// Builds the geometry for `colors` ∈ {1, 3}. With one color only color 0
    /// is present (the toric code).
    pub fn new(l: usize, colors: usize) -> Result<Geometry, Error> {
        if l < 3 || l % 3 != 0 {
            return Err(Error::BadSize(l));
        }
        if colors != 1 && colors != 3 {
            return Err(Error::BadColors(colors));
        }
        let n = l * l;
        let included = |c: u8| (c as usize) < colors;
        let mut g = Geometry {
            l,
            colors,
            edge_bond: Vec::new(),
            bond_edge: vec![NONE; 3 * n],
            edge_sites: Vec::new(),
            edge_color: Vec::new(),
            edge_vertices: Vec::new(),
            edge_plaquettes: Vec::new(),
            vertex_site: Vec::new(),
            vertex_color: Vec::new(),
            vertex_sub: Vec::new(),
            site_vertex: vec![[NONE; 3]; n],
            star: Vec::new(),
            plaq_site: Vec::new(),
            plaq_color: Vec::new(),
            site_plaq: vec![NONE; n],
            boundary: Vec::new(),
            interior: Vec::new(),
            cz_pairs: Vec::new(),
            adjacent: Vec::new(),
            xloop: Vec::new(),
            zloop: Vec::new(),
            xi: Vec::new(),
            omega: Vec::new(),
            logical: Vec::new(),
            p_star: Vec::new(),
            logical_mask: Vec::new(),
            destab_path: Vec::new(),
            dist: OnceLock::new(),
        };
        for s in 0..n {
            for d in 0..3 {
                let b = 3 * s + d;
                let c = g.bond_color(b as u32);
                if included(c) {
                    g.bond_edge[b] = g.edge_bond.len() as u32;
                    g.edge_bond.push(b as u32);
                    g.edge_sites.push([s as u32, g.nbr(s as u32, d)]);
                    g.edge_color.push(c);
                }
            }
        }
        for s in 0..n {
            let k = g.site_coset(s as u32);
            for c in 0..3u8 {
                if c != k && included(c) {
                    g.site_vertex[s][c as usize] = g.vertex_site.len() as u32;
                    g.vertex_site.push(s as u32);
                    g.vertex_color.push(c);
                    g.vertex_sub.push(if k == (c + 1) % 3 { 1 } else { 2 });
                }
            }
            if included(k) {
                g.site_plaq[s] = g.plaq_site.len() as u32;
                g.plaq_site.push(s as u32);
                g.plaq_color.push(k);
            }
        }
        // Stars: sublattice 1 uses the even directions (N, SW, SE after
        // rotation), sublattice 2 the odd ones.
        for v in 0..g.vertex_site.len() {
            let s = g.vertex_site[v];
            let off = if g.vertex_sub[v] == 1 { 0 } else { 1 };
            let st = [0, 2, 4].map(|k| g.edge(g.spoke(s, k + off)));
            g.star.push(st);
        }
        for e in 0..g.edge_bond.len() {
            let [a, b] = g.edge_sites[e];
            let c = g.edge_color[e] as usize;
            g.edge_vertices.push([g.site_vertex[a as usize][c], g.site_vertex[b as usize][c]]);
            let [n1, n2] = g.common(a, b);
            g.edge_plaquettes.push([g.site_plaq[n1 as usize], g.site_plaq[n2 as usize]]);
        }
        for p in 0..g.plaq_site.len() {
            let s = g.plaq_site[p];
            let ring: [u32; 6] = std::array::from_fn(|k| g.edge(g.ring_bond(s, k)));
            g.boundary.push(ring);
            g.zloop.push(ZLoop {
                e: [ring[0], ring[1], ring[2]],
                d: [g.edge(g.spoke(g.nbr(s, 1), 1)), g.edge(g.spoke(g.nbr(s, 2), 2))],
                rest: [ring[3], ring[4], ring[5]],
            });
            if colors == 3 {
                let inner: [u32; 6] = std::array::from_fn(|k| g.edge(g.spoke(s, k)));
                g.interior.push(inner);
                g.cz_pairs.push(std::array::from_fn(|k| [inner[k], inner[(k + 1) % 6]]));
                let adj = std::array::from_fn(|k| {
                    let t = g.nbr(s, k);
                    let cc = g.bond_color(g.spoke(s, k)) as usize;
                    Adjacent {
                        q: g.site_plaq[t as usize],
                        u: g.site_vertex[s as usize][cc],
                        v: g.site_vertex[t as usize][cc],
                    }
                });
                g.adjacent.push(adj);
            }
        }
        for v in 0..g.vertex_site.len() {
            let s = g.vertex_site[v];
            if g.vertex_sub[v] != 1 {
                g.xloop.push(None);
                if colors == 3 {
                    g.xi.push([NONE; 6]);
                }
                continue;
            }
            let e = g.star[v];
            let p_nw = g.site_plaq[g.nbr(s, 1) as usize];
            let outer: Vec<u32> =
                g.boundary[p_nw as usize].iter().copied().filter(|x| *x != e[0] && *x != e[1]).collect();
            g.xloop.push(Some(XLoop { e, outer: [outer[0], outer[1], outer[2], outer[3]], p_nw }));
            if colors == 3 {
                let a = g.nbr(s, 0);
                let b = g.nbr(s, 2);
                let bond = |x: u32, y: u32| g.edge(g.bond_between(x, y).expect("adjacent"));
                let xi = [
                    bond(a, g.nbr(s, 1)),
                    bond(a, g.nbr(s, 5)),
                    bond(b, g.nbr(s, 1)),
                    bond(b, g.nbr(s, 3)),
                    g.edge(g.spoke(s, 5)),
                    g.edge(g.spoke(s, 3)),
                ];
                g.xi.push(xi);
            }
        }
        if colors == 3 {
            for e in 0..g.edge_bond.len() {
                let [a, b] = g.edge_sites[e];
                let [n1, n2] = g.common(a, b);
                let bond = |x: u32, y: u32| g.edge(g.bond_between(x, y).expect("adjacent"));
                let om = [bond(a, n1), bond(a, n2), bond(b, n1), bond(b, n2)];
                g.omega.push(om);
            }
        }
        for c in 0..colors as u8 {
            let sup = g.build_logicals(c);
            g.logical.push(sup);
            let last = (0..g.plaq_site.len()).rev().find(|&p| g.plaq_color[p] == c).unwrap();
            g.p_star.push(last as u32);
        }
        g.logical_mask = vec![0; g.edge_bond.len()];
        for sup in &g.logical {
            for (bit, set) in [(MASK_Z_V, &sup.z_v), (MASK_Z_H, &sup.z_h), (MASK_X_V, &sup.x_v), (MASK_X_H, &sup.x_h)] {
                for &e in set {
                    g.logical_mask[e as usize] ^= bit;
                }
            }
        }
        g.destab_path = (0..g.plaq_site.len() as u32)
            .map(|p| {
                let c = g.plaq_color[p as usize] as usize;
                if p == g.p_star[c] {
                    Vec::new()
                } else {
                    g.dual_path(p, g.p_star[c])
                }
            })
            .collect();
        Ok(g)
    }

    pub fn n_sites(&self) -> usize {
        self.l * self.l
    }
    pub fn n_edges(&self) -> usize {
        self.edge_bond.len()
    }
    pub fn n_vertices(&self) -> usize {
        self.vertex_site.len()
    }
    pub fn n_plaquettes(&self) -> usize {
        self.plaq_site.len()
    }

    pub fn site_ij(&self, s: u32) -> (i64, i64) {
        let l = self.l as u32;
        ((s % l) as i64, (s / l) as i64)
    }

    fn site_at(&self, i: i64, j: i64) -> u32 {
        let l = self.l as i64;
        (i.rem_euclid(l) + l * j.rem_euclid(l)) as u32
    }

    pub fn site_coset(&self, s: u32) -> u8 {
        let (i, j) = self.site_ij(s);
        coset(i, j)
    }

    /// Neighbor of site `s` in direction `k` (counter-clockwise from `u1`).
    pub fn nbr(&self, s: u32, k: usize) -> u32 {
        let (i, j) = self.site_ij(s);
        let (di, dj) = DIRS[k % 6];
        self.site_at(i + di as i64, j + dj as i64)
    }

    /// Fine bond from `s` in direction `k`.
    pub fn spoke(&self, s: u32, k: usize) -> u32 {
        let k = k % 6;
        if k < 3 {
            3 * s + k as u32
        } else {
            3 * self.nbr(s, k) + (k - 3) as u32
        }
    }

    /// The `k`-th ring bond around `s`, joining `nbr(s, k)` and `nbr(s, k+1)`.
    fn ring_bond(&self, s: u32, k: usize) -> u32 {
        self.spoke(self.nbr(s, k), k + 2)
    }

    pub fn bond_color(&self, b: u32) -> u8 {
        let s = b / 3;
        let t = self.nbr(s, (b % 3) as usize);
        3 - self.site_coset(s) - self.site_coset(t)
    }

    fn dir_to(&self, a: u32, b: u32) -> usize {
        (0..6).find(|&k| self.nbr(a, k) == b).expect("adjacent sites")
    }

    pub fn bond_between(&self, a: u32, b: u32) -> Option<u32> {
        (0..6).find(|&k| self.nbr(a, k) == b).map(|k| self.spoke(a, k))
    }

    /// Edge index of a fine bond of an included color.
    pub fn edge(&self, b: u32) -> u32 {
        let e = self.bond_edge[b as usize];
        debug_assert!(e != NONE, "bond of excluded color");
        e
    }

    /// The two common neighbors of adjacent sites.
    fn common(&self, a: u32, b: u32) -> [u32; 2] {
        let k = (0..6).find(|&k| self.nbr(a, k) == b).expect("adjacent sites");
        [self.nbr(a, k + 1), self.nbr(a, k + 5)]
    }

    pub fn vertex(&self, s: u32, c: u8) -> u32 {
        self.site_vertex[s as usize][c as usize]
    }

    pub fn edges_of_color(&self, c: u8) -> impl Iterator<Item = u32> + '_ {
        (0..self.n_edges() as u32).filter(move |&e| self.edge_color[e as usize] == c)
    }

    pub fn vertices_of_color(&self, c: u8) -> impl Iterator<Item = u32> + '_ {
        (0..self.n_vertices() as u32).filter(move |&v| self.vertex_color[v as usize] == c)
    }

    pub fn plaquettes_of_color(&self, c: u8) -> impl Iterator<Item = u32> + '_ {
        (0..self.n_plaquettes() as u32).filter(move |&p| self.plaq_color[p as usize] == c)
    }

    /// Same-color vertices joined to `v` by an edge, with that edge.
    pub fn vertex_nbrs(&self, v: u32) -> [(u32, u32); 3] {
        self.star[v as usize].map(|e| {
            let [a, b] = self.edge_vertices[e as usize];
            (if a == v { b } else { a }, e)
        })
    }

    /// Same-color plaquettes sharing an edge with `p`, with that edge.
    pub fn plaq_nbrs(&self, p: u32) -> [(u32, u32); 6] {
        self.boundary[p as usize].map(|e| {
            let [a, b] = self.edge_plaquettes[e as usize];
            (if a == p { b } else { a }, e)
        })
    }

    fn build_logicals(&self, c: u8) -> LogicalSupport {
        let c1 = (c + 1) % 3;
        // sublattice-1 start site on row j = 0
        let v0 = self.site_at(c1 as i64, 0);
        let walk = |steps: [usize; 4]| {
            let mut sites = vec![v0];
            let mut edges = Vec::new();
            let mut s = v0;
            for _ in 0..self.l / 3 {
                for &k in &steps {
                    edges.push(self.edge(self.spoke(s, k)));
                    s = self.nbr(s, k);
                    sites.push(s);
                }
            }
            assert_eq!(s, v0);
            sites.pop();
            (sites, edges)
        };
        // N, NE, N, NW
        let (x_v_sites, x_v) = walk([0, 5, 0, 1]);
        // SW, NW, N, NW
        let (_, x_h) = walk([2, 1, 0, 1]);
        let p0 = self.site_at(c as i64, 0);
        // a dual step is given by the two directions to the common neighbors
        let dual = |steps: [(usize, usize); 2]| {
            let mut edges = Vec::new();
            let mut s = p0;
            for _ in 0..self.l / 3 {
                for &(k1, k2) in &steps {
                    let a = self.nbr(s, k1);
                    let b = self.nbr(s, k2);
                    edges.push(self.edge(self.bond_between(a, b).expect("shared edge")));
                    let (ai, aj) = self.site_ij(a);
                    let (bi, bj) = self.site_ij(b);
                    let (si, sj) = self.site_ij(s);
                    s = self.site_at(ai + bi - si, aj + bj - sj);
                }
            }
            assert_eq!(s, p0);
            edges
        };
        let z_v = dual([(0, 1), (0, 5)]);
        let z_h = dual([(0, 1), (1, 2)]);
        let n = x_v_sites.len();
        let rungs = (0..if self.colors == 3 { n } else { 0 })
            .map(|i| {
                let t = x_v_sites[i];
                let ka = self.dir_to(t, x_v_sites[(i + n - 1) % n]);
                let kb = self.dir_to(t, x_v_sites[(i + 1) % n]);
                let k = if (kb + 6 - ka) % 6 == 2 { ka + 1 } else { kb + 1 };
                self.edge(self.spoke(t, k))
            })
            .collect();
        LogicalSupport { z_v, z_h, x_v, x_h, x_v_sites, rungs }
    }

    /// Shortest dual path between same-color plaquettes as the list of
    /// crossed edges. Ties follow boundary order.
    pub fn dual_path(&self, a: u32, b: u32) -> Vec<u32> {
        let n = self.n_plaquettes();
        let mut prev = vec![(NONE, NONE); n];
        let mut seen = vec![false; n];
        let mut q = VecDeque::from([b]);
        seen[b as usize] = true;
        while let Some(x) = q.pop_front() {
            if x == a {
                break;
            }
            for (y, e) in self.plaq_nbrs(x) {
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    prev[y as usize] = (x, e);
                    q.push_back(y);
                }
            }
        }
        let mut path = Vec::new();
        let mut x = a;
        while x != b {
            let (y, e) = prev[x as usize];
            path.push(e);
            x = y;
        }
        path
    }

    fn bfs<F: Fn(u32) -> I, I: IntoIterator<Item = u32>>(&self, nodes: &[u32], local: &[u32], adj: F) -> Vec<u16> {
        let n = nodes.len();
        let mut d = vec![u16::MAX; n * n];
        let mut q = VecDeque::new();
        for (i, &src) in nodes.iter().enumerate() {
            let row = &mut d[i * n..(i + 1) * n];
            row[i] = 0;
            q.push_back(src);
            while let Some(x) = q.pop_front() {
                let dx = row[local[x as usize] as usize];
                for y in adj(x) {
                    let ly = local[y as usize] as usize;
                    if row[ly] == u16::MAX {
                        row[ly] = dx + 1;
                        q.push_back(y);
                    }
                }
            }
        }
        d
    }

    fn distances(&self) -> &Distances {
        self.dist.get_or_init(|| {
            let mut vert = Vec::new();
            let mut plaq = Vec::new();
            for c in 0..self.colors as u8 {
                let vs: Vec<u32> = self.vertices_of_color(c).collect();
                let mut local = vec![NONE; self.n_vertices()];
                for (i, &v) in vs.iter().enumerate() {
                    local[v as usize] = i as u32;
                }
                let d = self.bfs(&vs, &local, |v| self.vertex_nbrs(v).map(|x| x.0));
                vert.push(DistTable { local, n: vs.len(), d });
                let ps: Vec<u32> = self.plaquettes_of_color(c).collect();
                let mut local = vec![NONE; self.n_plaquettes()];
                for (i, &p) in ps.iter().enumerate() {
                    local[p as usize] = i as u32;
                }
                let d = self.bfs(&ps, &local, |p| self.plaq_nbrs(p).map(|x| x.0));
                plaq.push(DistTable { local, n: ps.len(), d });
            }
            Distances { vert, plaq }
        })
    }

    /// Lattice distance between two vertices (or two plaquettes) of one color.
    pub fn graph_distance(&self, a: Node, b: Node) -> Result<u32, Error> {
        match (a, b) {
            (Node::Vertex(x), Node::Vertex(y)) => {
                let c = self.vertex_color[x as usize];
                if c != self.vertex_color[y as usize] {
                    return Err(Error::MixedNodes);
                }
                Ok(self.vertex_distance(x, y))
            }
            (Node::Plaquette(x), Node::Plaquette(y)) => {
                let c = self.plaq_color[x as usize];
                if c != self.plaq_color[y as usize] {
                    return Err(Error::MixedNodes);
                }
                Ok(self.plaquette_distance(x, y))
            }
            _ => Err(Error::MixedNodes),
        }
    }

    pub fn vertex_distance(&self, a: u32, b: u32) -> u32 {
        let c = self.vertex_color[a as usize] as usize;
        self.distances().vert[c].get(a, b)
    }

    pub fn plaquette_distance(&self, a: u32, b: u32) -> u32 {
        let c = self.plaq_color[a as usize] as usize;
        self.distances().plaq[c].get(a, b)
    }

    /// A shortest edge path between same-color vertices. At each step the
    /// lowest-index edge that gets closer is taken.
    pub fn vertex_path(&self, a: u32, b: u32) -> Vec<u32> {
        let mut path = Vec::new();
        let mut x = a;
        while x != b {
            let d = self.vertex_distance(x, b);
            let (y, e) = self
                .vertex_nbrs(x)
                .into_iter()
                .filter(|&(y, _)| self.vertex_distance(y, b) < d)
                .min_by_key(|&(_, e)| e)
                .expect("descent");
            path.push(e);
            x = y;
        }
        path
    }

    /// A shortest dual path between same-color plaquettes (crossed edges).
    pub fn plaquette_path(&self, a: u32, b: u32) -> Vec<u32> {
        let mut path = Vec::new();
        let mut x = a;
        while x != b {
            let d = self.plaquette_distance(x, b);
            let (y, e) = self
                .plaq_nbrs(x)
                .into_iter()
                .filter(|&(y, _)| self.plaquette_distance(y, b) < d)
                .min_by_key(|&(_, e)| e)
                .expect("descent");
            path.push(e);
            x = y;
        }
        path
    }

    /// Physical position of a site (index frame rotated by +90°).
    pub fn site_position(&self, s: u32) -> (f64, f64) {
        let (i, j) = self.site_ij(s);
        let (x, y) = (i as f64 + 0.5 * j as f64, 0.5 * 3f64.sqrt() * j as f64);
        (-y, x)
    }
}
