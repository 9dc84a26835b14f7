//! Dense state-vector oracle over a subset of edge qubits.
#![allow(dead_code)]

pub mod checks;

use htsim::Geometry;

pub struct Sv {
    /// Global edge id of each local qubit.
    pub qubits: Vec<u32>,
    pub local: Vec<Option<usize>>,
    pub amp: Vec<f32>,
}

impl Sv {
    /// `|0…0⟩` on the given edges.
    pub fn zeros(g: &Geometry, qubits: Vec<u32>) -> Sv {
        let mut local = vec![None; g.n_edges()];
        for (i, &e) in qubits.iter().enumerate() {
            local[e as usize] = Some(i);
        }
        let mut amp = vec![0.0; 1 << qubits.len()];
        amp[0] = 1.0;
        Sv { qubits, local, amp }
    }

    pub fn full(g: &Geometry) -> Sv {
        Sv::zeros(g, (0..g.n_edges() as u32).collect())
    }

    /// Same qubits, new amplitudes.
    pub fn with_amp(&self, amp: Vec<f32>) -> Sv {
        Sv { qubits: self.qubits.clone(), local: self.local.clone(), amp }
    }

    pub fn bit(&self, e: u32) -> usize {
        1 << self.local[e as usize].expect("edge in patch")
    }

    pub fn mask(&self, edges: &[u32]) -> usize {
        edges.iter().fold(0, |m, &e| m ^ self.bit(e))
    }

    pub fn pair_masks(&self, pairs: &[[u32; 2]]) -> Vec<usize> {
        pairs.iter().map(|&[a, b]| self.bit(a) | self.bit(b)).collect()
    }

    pub fn random(g: &Geometry, qubits: Vec<u32>, seed: u64) -> Sv {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut s = Sv::zeros(g, qubits);
        for a in s.amp.iter_mut() {
            *a = rng.gen_range(-1.0..1.0);
        }
        s.normalize();
        s
    }

    pub fn norm2(&self) -> f64 {
        self.amp.iter().map(|&a| a as f64 * a as f64).sum()
    }

    pub fn normalize(&mut self) -> f64 {
        let n = self.norm2().sqrt();
        let inv = (1.0 / n) as f32;
        self.amp.iter_mut().for_each(|a| *a *= inv);
        n
    }

    pub fn dot(&self, other: &[f32]) -> f64 {
        self.amp.iter().zip(other).map(|(&a, &b)| a as f64 * b as f64).sum()
    }

    pub fn x(&mut self, e: u32) {
        let b = self.bit(e);
        for i in 0..self.amp.len() {
            if i & b == 0 {
                self.amp.swap(i, i | b);
            }
        }
    }

    pub fn z(&mut self, e: u32) {
        let b = self.bit(e);
        for (i, a) in self.amp.iter_mut().enumerate() {
            if i & b != 0 {
                *a = -*a;
            }
        }
    }

    pub fn cz(&mut self, a: u32, b: u32) {
        let m = self.bit(a) | self.bit(b);
        for (i, x) in self.amp.iter_mut().enumerate() {
            if i & m == m {
                *x = -*x;
            }
        }
    }

    /// `out = D X_flip |ψ⟩` with `D` the CZ product over `pairs` (masks)
    /// and an optional diagonal Z mask.
    pub fn apply_dx(&self, flip: usize, pairs: &[usize], zmask: usize, out: &mut Vec<f32>) {
        out.resize(self.amp.len(), 0.0);
        for (i, o) in out.iter_mut().enumerate() {
            let mut n = (i & zmask).count_ones();
            for &m in pairs {
                n += (i & m == m) as u32;
            }
            let a = self.amp[i ^ flip];
            *o = if n % 2 == 1 { -a } else { a };
        }
    }

    /// `A_p |ψ⟩` into `out`.
    pub fn plaquette(&self, g: &Geometry, p: u32, out: &mut Vec<f32>) {
        let flip = self.mask(&g.boundary[p as usize]);
        let pairs = self.pair_masks(&g.cz_pairs[p as usize]);
        self.apply_dx(flip, &pairs, 0, out);
    }

    /// Projects onto the `neg` eigenspace of the involution already applied
    /// into `op` (= O|ψ⟩); returns the probability of that outcome.
    pub fn project(&mut self, op: &[f32], neg: bool) -> f64 {
        let s: f32 = if neg { -1.0 } else { 1.0 };
        let ev = self.dot(op);
        for (a, &b) in self.amp.iter_mut().zip(op) {
            *a = 0.5 * (*a + s * b);
        }
        self.normalize();
        (1.0 + s as f64 * ev) / 2.0
    }

    /// Index of the largest amplitude; definite Z-type values can be read
    /// off it.
    pub fn peak(&self) -> usize {
        let mut best = 0;
        for (i, &a) in self.amp.iter().enumerate() {
            if a.abs() > self.amp[best].abs() {
                best = i;
            }
        }
        best
    }

    /// Sign of `D` (CZ product over `pairs`) and a Z mask at basis state `i`.
    fn sign(i: usize, pairs: &[usize], zmask: usize) -> bool {
        let mut n = (i & zmask).count_ones();
        for &m in pairs {
            n += (i & m == m) as u32;
        }
        n % 2 == 1
    }

    /// `⟨ψ| D X_flip |ψ⟩` without a scratch vector.
    pub fn expect_dx(&self, flip: usize, pairs: &[usize]) -> f64 {
        self.amp
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let b = self.amp[i ^ flip] as f64;
                if Sv::sign(i, pairs, 0) { -(a as f64) * b } else { a as f64 * b }
            })
            .sum()
    }

    /// Normalized projection onto the `neg` eigenspace of `D X_flip`.
    pub fn projected_dx(&self, flip: usize, pairs: &[usize], neg: bool) -> Sv {
        let amp = self
            .amp
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let b = self.amp[i ^ flip];
                let b = if Sv::sign(i, pairs, 0) != neg { -b } else { b };
                0.5 * (a + b)
            })
            .collect();
        let mut s = self.with_amp(amp);
        s.normalize();
        s
    }

    /// `⟨X_mask⟩`.
    pub fn x_expect(&self, xmask: usize) -> f64 {
        self.expect_dx(xmask, &[])
    }

    /// `⟨Z_mask⟩`.
    pub fn z_expect(&self, zmask: usize) -> f64 {
        self.amp.iter().enumerate().map(|(i, &a)| {
            let v = a as f64 * a as f64;
            if (i & zmask).count_ones() % 2 == 1 { -v } else { v }
        }).sum()
    }
}
