//! Numerical testbed for compressing many copies of shallow-circuit quantum
//! states into hybrid classical-quantum memory.
//!
//! The crate is organized in layers: dense complex linear algebra and state
//! metrics ([`linalg`]), brickwork circuits and their two-layer lightcone
//! reduction ([`circuit`]), small-rotation local parameterization
//! ([`localparam`]), the map from locally rotated states to multi-mode
//! coherent states ([`qlan`]), truncated-Fock channels ([`bosonic`]),
//! covering/tomography budgets ([`learner`]), the end-to-end budget calculus
//! and desk-scale pipeline ([`protocol`]), and memory lower bounds
//! ([`bounds`]).

pub mod circuit;
pub mod bosonic;
pub mod bounds;
pub mod error;
pub mod learner;
pub mod protocol;
pub mod qlan;
pub mod localparam;
pub mod linalg;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
