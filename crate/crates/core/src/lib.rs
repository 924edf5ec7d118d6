//! Simulation and numerical verification for the reflected alpha-stable
//! process on the punctured line.
//!
//! The process moves as a symmetric alpha-stable Levy process while in
//! `D = (0, inf)`. When it jumps out to `z < 0` it waits there for an
//! exponential time of rate `nu(z, D)` and then jumps back into `D` with
//! law proportional to the Levy density.

pub mod analytic;
pub mod chain;
pub mod error;
pub mod export;
pub mod neumann;
pub mod numerics;
pub mod parallel;
pub mod quadrature;
pub mod rng;
pub mod samplers;
pub mod stats;
pub mod testfn;
pub mod walk;

pub use analytic::{Alpha, GeneratorExponent, HardyConstants, Regime, Side};
pub use error::{Error, Result};
pub use neumann::{McGrid, PotentialEstimate};
pub use rng::RngStream;
pub use samplers::StableSampler;
pub use stats::{EstimateCI, Guard, KsResult};
pub use testfn::{Evaluable, TestFunction};
pub use walk::{Horizon, StepPolicy, Trajectory};
