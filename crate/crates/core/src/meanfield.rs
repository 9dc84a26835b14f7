//! Site (mean-field) approximation of the D4 flag dynamics.

use serde::{Deserialize, Serialize};

use crate::flags::Rates;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MfState {
    pub nx: f64,
    pub nz: f64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MfError {
    #[error("step size must be positive")]
    BadStep,
    #[error("integration left [0, 1] even after {0} step halvings")]
    OutOfBounds(u32),
}

const TOL: f64 = 1e-9;
const MAX_HALVINGS: u32 = 12;

pub fn mf_rhs(s: MfState, r: &Rates) -> (f64, f64) {
    let (x, z) = (s.nx, s.nz);
    let leaf = 2.0 * r.gamma_x * x * (1.0 - x).powi(2);
    let dx = r.eta * (1.0 - x) - leaf;
    let dz = r.eta * (1.0 - z) + leaf * (1.0 - z) - 2.0 * r.gamma_z * z * (1.0 - z).powi(5) * (1.0 - x).powi(6);
    (dx, dz)
}

fn rk4(s: MfState, r: &Rates, h: f64) -> MfState {
    let f = |s: MfState| mf_rhs(s, r);
    let add = |s: MfState, k: (f64, f64), a: f64| MfState { nx: s.nx + a * k.0, nz: s.nz + a * k.1 };
    let k1 = f(s);
    let k2 = f(add(s, k1, h / 2.0));
    let k3 = f(add(s, k2, h / 2.0));
    let k4 = f(add(s, k3, h));
    MfState {
        nx: s.nx + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        nz: s.nz + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    }
}

fn in_bounds(s: MfState) -> bool {
    (-TOL..=1.0 + TOL).contains(&s.nx) && (-TOL..=1.0 + TOL).contains(&s.nz)
}

/// Fixed-step RK4 from `s0` to `t_final`, returning `(t, state)` every
/// `every` steps and at the end. A step that leaves `[0, 1]` by more than
/// 1e−9 restarts the integration with half the step.
pub fn mf_integrate(s0: MfState, r: &Rates, t_final: f64, dt: f64, every: usize) -> Result<Vec<(f64, MfState)>, MfError> {
    if !(dt > 0.0) {
        return Err(MfError::BadStep);
    }
    let mut h = dt;
    'retry: for _ in 0..=MAX_HALVINGS {
        let n = (t_final / h).ceil() as usize;
        let mut out = vec![(0.0, s0)];
        let mut s = s0;
        for k in 1..=n {
            s = rk4(s, r, h);
            if !in_bounds(s) {
                h /= 2.0;
                continue 'retry;
            }
            if k % every.max(1) == 0 || k == n {
                out.push((k as f64 * h, clamp(s)));
            }
        }
        return Ok(out);
    }
    Err(MfError::OutOfBounds(MAX_HALVINGS))
}

fn clamp(s: MfState) -> MfState {
    MfState { nx: s.nx.clamp(0.0, 1.0), nz: s.nz.clamp(0.0, 1.0) }
}

/// Final state at `t_final` from the empty state. The step is capped by the
/// fastest linear rate so RK4 stays stable at large γz; integration stops
/// early once the flow has converged to a fixed point.
pub fn mf_final(r: &Rates, t_final: f64, dt: f64) -> Result<MfState, MfError> {
    if !(dt > 0.0) {
        return Err(MfError::BadStep);
    }
    let mut h = dt.min(1.0 / (r.eta + 2.0 * r.gamma_x + 2.0 * r.gamma_z));
    'retry: for _ in 0..=MAX_HALVINGS {
        let mut s = MfState { nx: 0.0, nz: 0.0 };
        let n = (t_final / h).ceil() as usize;
        for _ in 0..n {
            let next = rk4(s, r, h);
            if !in_bounds(next) {
                h /= 2.0;
                continue 'retry;
            }
            let (dx, dz) = mf_rhs(next, r);
            s = next;
            if dx.abs() < 1e-13 && dz.abs() < 1e-13 {
                break;
            }
        }
        return Ok(clamp(s));
    }
    Err(MfError::OutOfBounds(MAX_HALVINGS))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub gamma_x: f64,
    pub gamma_z: f64,
    #[serde(rename = "nX_final")]
    pub nx_final: f64,
    #[serde(rename = "nZ_final")]
    pub nz_final: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Active,
    XActive,
    ZActive,
    Absorbing,
}

/// Region of a final state; a density at or above `high` counts as
/// absorbed.
pub fn classify(nx: f64, nz: f64, high: f64) -> Phase {
    match (nx >= high, nz >= high) {
        (false, false) => Phase::Active,
        (false, true) => Phase::XActive,
        (true, false) => Phase::ZActive,
        (true, true) => Phase::Absorbing,
    }
}

/// `n` evenly spaced points covering `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Final densities over a `γx × γz` grid (γz fastest).
pub fn mf_scan(eta: f64, gx: &[f64], gz: &[f64], t_final: f64, dt: f64, workers: usize) -> Result<Vec<ScanRow>, MfError> {
    let pts: Vec<(f64, f64)> = gx.iter().flat_map(|&x| gz.iter().map(move |&z| (x, z))).collect();
    crate::trajectory::par_map(pts.len(), workers, |i| {
        let (x, z) = pts[i];
        let s = mf_final(&Rates::new(eta, x, z), t_final, dt)?;
        Ok(ScanRow { gamma_x: x, gamma_z: z, nx_final: s.nx, nz_final: s.nz })
    })
    .into_iter()
    .collect()
}
