//! Simulation laboratory for the generalized μ-Camassa-Holm equation
//!
//! ```text
//! m_t + k1((2μ(u)u − u_x²)m)_x + k2(2μ(u)u_x − 2u_x u_xx − u u_xxx) + γ u_x = 0,   m = μ(u) − u_xx
//! ```
//!
//! on the unit circle, with `μ(u)` the mean of `u`.
//!
//! The PDE is integrated in u-form ([`model::rhs_u`], [`timestepper::integrate`]).
//! Peakon dynamics live in [`peakons`], Lagrangian traces in [`characteristics`],
//! and wave-breaking criteria and detection in [`blowup`]. The batch front end
//! is [`cli`], and [`acceptance`] holds the acceptance checks.

pub mod acceptance;
pub mod blowup;
pub mod characteristics;
pub mod cli;
pub mod config;
pub mod error;
pub mod green;
pub mod grid;
pub mod model;
mod ode;
pub mod peakons;
pub mod timestepper;

pub use error::{Error, Result};
