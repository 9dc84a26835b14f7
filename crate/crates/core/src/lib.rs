//! Trajectory simulation of local, measurement-and-feedback error correction
//! for the honeycomb toric code and the D4 quantum double under heralded
//! (erasure) noise.
//!
//! The guide in `book/` walks through the model; its code listings run as
//! doc-tests of the [`guide`] modules.

pub mod algebra;
pub mod d4;
pub mod decoder;
pub mod experiments;
pub mod flags;
pub mod lattice;
pub mod matching;
pub mod meanfield;
pub mod metrics;
pub mod tableau;
pub mod toric;
pub mod trajectory;

/// The guide in `book/`; every Rust listing in it is a doc-test.
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    pub mod lattice {}
    #[doc = include_str!("../../../book/src/flags.md")]
    pub mod flags {}
    #[doc = include_str!("../../../book/src/toric.md")]
    pub mod toric {}
    #[doc = include_str!("../../../book/src/d4.md")]
    pub mod d4 {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub mod experiments {}
}

pub use lattice::Geometry;
pub use trajectory::{Basis, TrajectoryConfig};

use rand::SeedableRng;

/// Random generator used by every simulation.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Independent generator for trajectory `index` of a run seeded with `seed`.
pub fn rng_stream(seed: u64, index: u64) -> Rng {
    let mut r = Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("linear size {0} must be a positive multiple of 3")]
    BadSize(usize),
    #[error("color count {0} must be 1 or 3")]
    BadColors(usize),
    #[error("distance query mixes node kinds or colors")]
    MixedNodes,
    #[error("rates must be finite, non-negative and not all zero; phi_e in [0, 1]")]
    BadRates,
    #[error("t_final must be positive and strides at least 1")]
    BadSchedule,
}
