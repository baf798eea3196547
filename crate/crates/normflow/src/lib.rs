//! Normalized (mass-constrained) radial solutions of quasilinear elliptic problems
//!
//! ```text
//! −div(b(|∇u|²)∇u) = |u|^{p−2}u − λu  in ℝᴺ,   ‖u‖₂ = ρ
//! ```
//!
//! with (2,q)-type coefficients and the truncated Born–Infeld operator.
//! Throughout, `s` denotes `|∇u|²`.

pub mod bipipeline;
pub mod coefficients;
pub mod energy;
pub mod groundstate;
pub mod mountainpass;
pub mod radial;
pub mod reference;

pub use coefficients::Family;
pub use energy::ProblemSpec;
pub use radial::{RadialFunction, RadialGrid};
