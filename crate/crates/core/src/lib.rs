//! Simulation and verification toolkit for the one-dimensional wave equation
//! `z_tt - z_xx + a(x) g(z_t) = 0` on `(0, 1)`, studied in `L^p` energy norms.
//!
//! The solver works on the Riemann invariants `rho = z_x + z_t` and
//! `xi = z_x - z_t`. Around it sit checkers for the energy balance, the
//! multiplier identities, convex inequalities, Gronwall-type lemmas, the
//! weight family driving the decay rates, and decay-rate fitting.

pub mod convex;
pub mod damping;
pub mod decay;
pub mod energy;
pub mod error;
pub mod gronwall;
pub mod multiplier;
pub mod quadrature;
pub mod sim;
pub mod weights;

pub use damping::{CoefficientProfile, CutoffSet, DampingKind, DampingSpec, Grid};
pub use error::{Result, WaveError};
pub use sim::{BoundaryMode, InitialData, RunSpec, SimState, Trajectory};
