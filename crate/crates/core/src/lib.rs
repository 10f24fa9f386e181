//! Pseudo-spectral simulation and harmonic-analysis diagnostics for the
//! generalized SQG active scalar family
//!
//! ```text
//! ∂ₜθ + u·∇θ = 0,    u = −∇⊥(−Δ)^{−1+β/2} θ,
//! ```
//!
//! on the periodic torus `[0, 2π)²`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod active_scalar;
pub mod cli_io;
pub mod error;
pub mod function_spaces;
pub mod littlewood_paley;
pub mod par;
pub mod spectral;
pub mod verifier;

pub use error::{Error, Result};
