//! Numerical schemes and experiment drivers for the stochastic Manakov system,
//! a pair of coupled nonlinear Schrödinger equations driven by multiplicative
//! gradient noise acting through the Pauli matrices.
//!
//! The crate is organized around five layers:
//!
//! - [`field`]: uniform 1-D grids, two-component complex fields, discrete
//!   norms and physical observables, initial data, and the (optionally
//!   truncated) power-law nonlinearity.
//! - [`noise`]: reproducible three-component Brownian increments with exact
//!   power-of-two coarsening, so one sampled path can drive every scheme and
//!   every step size of a comparison (common random numbers).
//! - [`propagator`]: the one-step random linear propagator
//!   `(Id + H/2)^{-1}(Id - H/2)` in a pseudospectral (periodic) and a
//!   block-tridiagonal finite-difference (Dirichlet) backend.
//! - [`integrators`]: four one-step schemes — Lie-Trotter splitting,
//!   exponential, Crank-Nicolson, relaxation — and the trajectory driver.
//! - [`experiments`]: convergence studies (strong, in probability, almost
//!   sure), norm-drift and cost comparisons, soliton observables, and blowup
//!   sweeps, plus the small statistics toolbox they need.
//!
//! The [`cli`] module parses flat key-value run configurations, knows the
//! named experiment presets, and writes manifests and CSV tables; the `manakov`
//! binary is a thin wrapper around it. Each major capability also has a
//! runnable example under `examples/`.

pub mod cli;
pub mod experiments;
pub mod fft;
pub mod field;
pub mod integrators;
pub mod mat2;
pub mod noise;
pub mod propagator;

pub use field::{
    hamiltonian, h1_norm, initial_condition, l2_norm, mass_center, nonlinearity, pauli_dot,
    pulse_width, Boundary, FieldError, Grid1D, InitialCondition, NonlinearitySpec, SolitonParams,
    SpinorField,
};
pub use integrators::{
    run_trajectory, Problem, RecordSpec, SchemeConfig, SchemeKind, StepError, TrajectoryOutcome,
    TrajectoryRecord,
};
pub use noise::{NoiseError, WienerPath};
pub use propagator::{LinearOperatorParams, Propagator, PropagatorError};
