//! Weyl-Titchmarsh M-matrices for half-line matrix-valued Schrödinger
//! operators `-I_m d²/dx² + Q(x)`.
//!
//! The toolkit computes the M-matrix along several independent routes —
//! regular boundary-value problems pushed to increasing horizons, the
//! matrix Riccati flow, a bounded Cayley-transform chart, and a Volterra
//! integral equation for compactly supported potentials — and verifies
//! the high-energy machinery built on it: disk containment and nesting,
//! exponential locality, the coefficient recursion for the asymptotic
//! expansion in powers of `z^{-1/2}`, and the diagonal Green's matrix
//! expansion.
//!
//! Entry points:
//! - [`potential::PotentialModel`] declares the coefficient `Q(x)`.
//! - [`weyl::limit_m`] extracts `M_+(z, x0)` as the horizon grows.
//! - [`volterra::solve_volterra`] does the same through the integral
//!   equation when `Q` has compact support.
//! - [`asymptotics::m_coeffs`] produces the expansion coefficients from
//!   the exact recursion; [`asymptotics::verify_order`] measures the
//!   remainder decay against the numerical M.

pub mod asymptotics;
pub mod cayley;
pub mod error;
pub mod linalg;
pub mod ode;
pub mod potential;
pub mod propagate;
pub mod volterra;
pub mod weyl;

pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use num_complex::Complex64;
pub use ode::StepControl;
pub use potential::PotentialModel;
