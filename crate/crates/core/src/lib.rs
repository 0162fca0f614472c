//! Numerical laboratory for the conformal flow on S³ and the cubic Szegő equation.
//!
//! The crate is organised around the resonant (time-averaged) system
//!
//! ```text
//! i(n+1) dα_n/dt = Σ_j Σ_{k≤n+j} [min(n,j,k,n+j-k)+1] conj(α_j) α_k α_{n+j-k}
//! ```
//!
//! together with its parent oscillator system (the cubic conformal wave
//! equation in sine modes), the structurally parallel cubic Szegő equation,
//! closed-form solution families, and generating-function machinery.
//!
//! Module map:
//!
//! * [`modes`], [`interaction`], [`flow`]: state space, interaction coefficients,
//!   right-hand side, Hamiltonian, charges and symmetries of the conformal flow.
//! * [`integrator`]: adaptive Dormand–Prince 8(5,3) with dense sampling and
//!   conservation monitoring.
//! * [`subspace`]: the invariant subspace `α_n = (b + a n) pⁿ`.
//! * [`stationary`]: stationary-state families and the nonlinear eigenvalue residual.
//! * [`szego`]: the cubic Szegő equation and its single-pole solutions.
//! * [`genfunc`]: rational generating functions, master summation formula and
//!   the contour-integral form of the flow.
//! * [`wave`]: the parent oscillator system and validation of time averaging.

pub mod error;
pub mod flow;
pub mod genfunc;
pub mod integrator;
pub mod interaction;
pub mod modes;
pub mod stationary;
pub mod subspace;
pub mod szego;
pub mod wave;

pub use error::{Error, Result};
pub use flow::ChargeSet;
pub use modes::ModeSpectrum;
pub use num_complex::Complex64;
