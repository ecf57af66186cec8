//! Pseudospectral toolkit for the three-component long wave / short wave
//! resonance system
//!
//! ```text
//!     i φ_t + φ_xx = β w φ
//!     i ψ_t + ψ_xx = β w ψ
//!       w_t        = β (|φ|² + |ψ|²)_x
//! ```
//!
//! on a periodic domain, where φ and ψ are complex short-wave envelopes and
//! w is a real long-wave field. The crate provides
//!
//! * the explicit solitary-wave family (sech profiles on a common ray, with
//!   a linear carrier phase) and its admissibility checks,
//! * Fourier pseudospectral differentiation, quadrature, and translation on
//!   a [`PeriodicGrid`],
//! * an integrating-factor RK4 time stepper with 2/3-rule dealiasing,
//! * the conserved functionals (two masses, momentum, energy) and the
//!   Lyapunov combination used in stability arguments,
//! * the linearized operators about the solitary profile together with
//!   constrained Rayleigh-quotient solvers, and
//! * an orbital metric that measures the distance of a state to the group
//!   orbit (translations and phase rotations) of the solitary wave.
//!
//! All fields live on uniform periodic grids and all integrals are trapezoid
//! sums, which are spectrally accurate for the smooth, rapidly decaying
//! fields this crate targets.

pub mod dynamics;
mod error;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod operators;
pub mod orbital;
pub mod params;
pub mod profile;
pub mod state;

mod fft;

pub use error::Error;
pub use field::{ComplexField, RealField};
pub use num_complex::Complex64;
pub use grid::PeriodicGrid;
pub use params::PhysParams;
pub use profile::SolitonProfile;
pub use state::LsiState;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
