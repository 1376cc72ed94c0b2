//! Numerical laboratory for `−Δu = u^{−γ}` in the critical planar sector.
//!
//! The sector `{0 < r < 1, |θ| < β}` with `β = (1+γ)π/4` is the opening for which the
//! harmonic boundary rate `r^φ`, `φ = 2/(1+γ)`, matches the nonlinear rate.

pub mod analysis;
pub mod domain;
pub mod error;
pub mod green2d;
pub mod numeric;
pub mod ode1d;
pub mod recursion;
pub mod solver;

pub use domain::{Polar, ReferenceLadder, SectorDomain};
pub use error::{Error, Result};
pub use green2d::GreenEvaluator;
