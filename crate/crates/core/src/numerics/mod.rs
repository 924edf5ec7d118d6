//! Numerical building blocks: tanh-sinh quadrature and Taylor jets.

pub mod jet;
pub mod tanh_sinh;

pub use jet::Jet;
pub use tanh_sinh::{QuadOutput, TanhSinh};
