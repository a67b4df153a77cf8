//! Steady states of local master equations for weakly coupled qubit
//! networks, and the thermodynamics of their heat currents.
//!
//! Each qubit `i` has splitting `E_i`, a bath at inverse temperature `β_i`
//! and a reset dissipator `D_i(ρ) = p_i (τ_i ⊗ tr_i ρ − ρ)`. The qubits
//! interact through `g X`, and the steady state solves
//! `0 = −i[H, ρ] + Σ D_i(ρ)`.
//!
//! ```
//! use lme::algebra::Tolerances;
//! use lme::model::{build_two_qubit, QubitSpec};
//! use lme::solvers::{closed_form_two_qubit, exact_steady_state};
//!
//! let q1 = QubitSpec::new(1.0, 1.0, 0.1).unwrap();
//! let q2 = QubitSpec::new(1.0, 0.5, 0.1).unwrap();
//! let model = build_two_qubit(q1, q2, 0.05).unwrap();
//! let tol = Tolerances::default();
//!
//! let exact = exact_steady_state(&model, &tol).unwrap();
//! let (closed, _) = closed_form_two_qubit(&model, &tol).unwrap();
//! assert!(exact.rho.distance(&closed.rho) < 1e-10);
//! ```

pub mod algebra;
pub mod error;
pub mod model;
pub mod sampling;
pub mod solvers;
pub mod thermo;
pub mod verification;

pub use error::{Error, Result};
