//! Toric code in the Pauli frame.
//!
//! The state is always `∏_{ex} X ∏_{ez} Z` applied to a code state, so the
//! dynamics only needs the error record and the stabilizer parities it
//! implies.

use serde::{Deserialize, Serialize};

use crate::decoder::{mwpm, DecodeError};
use crate::flags::{x_correction, z_correction, Branch, Event, FlagState, Pauli, Sampler};
use crate::lattice::{Geometry, MASK_X_H, MASK_X_V, MASK_Z_H, MASK_Z_V};
use crate::trajectory::{Basis, TrajectoryConfig};
use crate::Rng;

/// Parities of the error record against the four logical supports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalParity {
    /// `Z_V` flipped (odd overlap of `ex` with the `Z_V` loop).
    pub z_v: bool,
    pub z_h: bool,
    /// `X_V` flipped (odd overlap of `ez` with the `X_V` loop).
    pub x_v: bool,
    pub x_h: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliFrame {
    pub ex: Vec<bool>,
    pub ez: Vec<bool>,
    pub b_defect: Vec<bool>,
    pub a_defect: Vec<bool>,
    pub logical: LogicalParity,
    pub basis: Basis,
    nb: usize,
    na: usize,
}

impl PauliFrame {
    pub fn count_b(&self) -> usize {
        self.nb
    }

    pub fn count_a(&self) -> usize {
        self.na
    }

    pub fn apply_x(&mut self, g: &Geometry, e: u32) {
        self.ex[e as usize] ^= true;
        for v in g.edge_vertices[e as usize] {
            let d = &mut self.b_defect[v as usize];
            *d ^= true;
            if *d {
                self.nb += 1
            } else {
                self.nb -= 1
            }
        }
        let m = g.logical_mask[e as usize];
        self.logical.z_v ^= m & MASK_Z_V != 0;
        self.logical.z_h ^= m & MASK_Z_H != 0;
    }

    pub fn apply_z(&mut self, g: &Geometry, e: u32) {
        self.ez[e as usize] ^= true;
        for p in g.edge_plaquettes[e as usize] {
            let d = &mut self.a_defect[p as usize];
            *d ^= true;
            if *d {
                self.na += 1
            } else {
                self.na -= 1
            }
        }
        let m = g.logical_mask[e as usize];
        self.logical.x_v ^= m & MASK_X_V != 0;
        self.logical.x_h ^= m & MASK_X_H != 0;
    }

    pub fn apply(&mut self, g: &Geometry, p: Pauli, e: u32) {
        if p.has_x() {
            self.apply_x(g, e);
        }
        if p.has_z() {
            self.apply_z(g, e);
        }
    }

    /// Defect parities recomputed from the error record.
    pub fn rederive(&self, g: &Geometry) -> (Vec<bool>, Vec<bool>) {
        let b = g.star.iter().map(|s| s.iter().filter(|&&e| self.ex[e as usize]).count() % 2 == 1).collect();
        let a = g.boundary.iter().map(|s| s.iter().filter(|&&e| self.ez[e as usize]).count() % 2 == 1).collect();
        (b, a)
    }

    pub fn density_b(&self) -> f64 {
        self.nb as f64 / self.b_defect.len() as f64
    }

    pub fn density_a(&self) -> f64 {
        self.na as f64 / self.a_defect.len() as f64
    }
}

pub fn toric_init(g: &Geometry, basis: Basis) -> (PauliFrame, FlagState) {
    let n = g.n_edges();
    let frame = PauliFrame {
        ex: vec![false; n],
        ez: vec![false; n],
        b_defect: vec![false; g.n_vertices()],
        a_defect: vec![false; g.n_plaquettes()],
        logical: LogicalParity::default(),
        basis,
        nb: 0,
        na: 0,
    };
    (frame, FlagState::new(n))
}

/// One site event: noise, or a correction move whose measurement is read
/// from the defect parities. Returns whether a plaquette was measured.
pub fn toric_event(frame: &mut PauliFrame, flags: &mut FlagState, g: &Geometry, ev: Event) -> bool {
    match ev.branch {
        Branch::Heralded(p) => {
            frame.apply(g, p, ev.edge);
            flags.set_x(ev.edge, true);
            flags.set_z(ev.edge, true);
        }
        Branch::Unheralded(p) => frame.apply(g, p, ev.edge),
        Branch::XCorrection => {
            let v = g.edge_vertices[ev.edge as usize][ev.side];
            if let Some(m) = x_correction(flags, g, v) {
                if frame.b_defect[v as usize] {
                    frame.apply_x(g, m.edge());
                }
            }
        }
        Branch::ZCorrection => {
            let p = g.edge_plaquettes[ev.edge as usize][ev.side];
            if let Some(m) = z_correction(flags, g, p) {
                if frame.a_defect[p as usize] {
                    frame.apply_z(g, m.edge());
                }
                return true;
            }
        }
    }
    false
}

/// Correction strings (edge parities) pairing all vertex and plaquette
/// defects of one color by minimum-weight matching.
pub fn matching_correction(
    g: &Geometry,
    b_defect: &[bool],
    a_defect: &[bool],
    color: u8,
) -> Result<(Vec<bool>, Vec<bool>), DecodeError> {
    let mut dx = vec![false; g.n_edges()];
    let mut dz = vec![false; g.n_edges()];
    let vs: Vec<u32> = g.vertices_of_color(color).filter(|&v| b_defect[v as usize]).collect();
    for (i, j) in mwpm(vs.len(), |i, j| g.vertex_distance(vs[i], vs[j]))? {
        for e in g.vertex_path(vs[i], vs[j]) {
            dx[e as usize] ^= true;
        }
    }
    let ps: Vec<u32> = g.plaquettes_of_color(color).filter(|&p| a_defect[p as usize]).collect();
    for (i, j) in mwpm(ps.len(), |i, j| g.plaquette_distance(ps[i], ps[j]))? {
        for e in g.plaquette_path(ps[i], ps[j]) {
            dz[e as usize] ^= true;
        }
    }
    Ok((dx, dz))
}

/// Decodes a copy of the frame. Returns `(pX, pZ)`: whether the residual X
/// (Z) error after matching flips a Z (X) logical.
pub fn toric_logical_error(frame: &PauliFrame, g: &Geometry) -> Result<(bool, bool), DecodeError> {
    let (dx, dz) = matching_correction(g, &frame.b_defect, &frame.a_defect, 0)?;
    let parity = |d: &[bool], bit: u8| {
        d.iter().enumerate().filter(|(e, &on)| on && g.logical_mask[*e] & bit != 0).count() % 2 == 1
    };
    let px = (frame.logical.z_v ^ parity(&dx, MASK_Z_V)) || (frame.logical.z_h ^ parity(&dx, MASK_Z_H));
    let pz = (frame.logical.x_v ^ parity(&dz, MASK_X_V)) || (frame.logical.x_h ^ parity(&dz, MASK_X_H));
    Ok((px, pz))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToricRow {
    pub t: f64,
    #[serde(rename = "nX")]
    pub nx: f64,
    #[serde(rename = "nZ")]
    pub nz: f64,
    pub n_d_b: f64,
    pub n_d_a: f64,
    /// Plaquette measurements per plaquette per unit time since the last row.
    pub ameas: f64,
    /// Logical error indicators at decode points, NaN elsewhere.
    #[serde(rename = "pX")]
    pub px: f64,
    #[serde(rename = "pZ")]
    pub pz: f64,
}

/// Runs one toric trajectory, recording a row at every recorded sweep.
pub fn run_toric(cfg: &TrajectoryConfig, g: &Geometry, rng: &mut Rng) -> Result<Vec<ToricRow>, DecodeError> {
    let (mut frame, mut flags) = toric_init(g, cfg.basis);
    let sampler = Sampler::new(&cfg.rates, g.n_edges());
    let mut rows = Vec::new();
    let mut t = 0.0;
    let (mut meas, mut last_t, mut last_m) = (0u64, 0.0, 0u64);
    for k in 1..=cfg.sweeps() {
        for _ in 0..g.n_edges() {
            let ev = sampler.sample(rng);
            meas += toric_event(&mut frame, &mut flags, g, ev) as u64;
        }
        t += cfg.rates.dt();
        debug_assert_eq!(frame.rederive(g), (frame.b_defect.clone(), frame.a_defect.clone()));
        if cfg.records(k) {
            let (px, pz) = if cfg.decodes(k) {
                let (a, b) = toric_logical_error(&frame, g)?;
                (a as u8 as f64, b as u8 as f64)
            } else {
                (f64::NAN, f64::NAN)
            };
            let ameas = (meas - last_m) as f64 / ((t - last_t) * g.n_plaquettes() as f64);
            (last_t, last_m) = (t, meas);
            rows.push(ToricRow {
                t,
                nx: flags.density_x(),
                nz: flags.density_z(),
                n_d_b: frame.density_b(),
                n_d_a: frame.density_a(),
                ameas,
                px,
                pz,
            });
        }
    }
    Ok(rows)
}
