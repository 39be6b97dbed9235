//! Numerical laboratory for the stability of Hardy–Sobolev–Maz'ya inequalities
//! `S‖u‖_{L^{p₁*}(|y|⁻¹)} ≤ ‖Du‖_{L^p}` on `ℝⁿ = ℝᵏ × ℝⁿ⁻ᵏ`, restricted to
//! cylindrically symmetric functions `u(|y|, z)`.

pub mod domain;
pub mod experiments;
pub mod error;
pub mod functionals;
pub mod ineqlab;
pub mod manifold;
pub mod projection;
pub mod spectrum;

pub use error::{Error, Result};
