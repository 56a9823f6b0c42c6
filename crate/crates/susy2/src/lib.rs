//! Construction and verification of second-order SUSY (Darboux) partners of
//! one-dimensional Schrödinger operators `-d²/dx² + V(x)`, including complex
//! partners of real potentials.
//!
//! The crate is organised around five pieces:
//!
//! * [`problem`] / [`grid`] / [`closed_form`] / [`ivp`] — boundary-value
//!   problems, sampled complex-valued functions, elementary solutions and a
//!   fixed-step RK4 integrator for the Schrödinger equation at arbitrary
//!   complex energy.
//! * [`darboux`] — first-order, second-order non-confluent and confluent
//!   transformations of potentials and solutions via Wronskian formulas,
//!   plus the reverse transformation.
//! * [`classify`] — zero counting for complex solutions and the case tables
//!   deciding whether a given transformation is reducible or irreducible,
//!   what it does to the spectrum, and whether the partner can be
//!   PT-symmetric.
//! * [`spectral`] — an independent check of the predicted spectra:
//!   finite-difference discretisation, a complex-symmetric tridiagonal QR
//!   eigensolver, shooting refinement and report generation.
//! * [`catalog`] — nine built-in example transformations with closed-form
//!   partner potentials and expected verdicts, used as regression anchors.
//!
//! All operations are pure functions of their inputs; values are immutable
//! after construction and safe to share across threads.

pub mod catalog;
pub mod classify;
pub mod closed_form;
pub mod darboux;
pub mod error;
pub mod grid;
pub mod io;
pub mod ivp;
pub mod problem;
pub mod spectral;

pub use error::{Result, SusyError};
pub use grid::{Energy, Grid, GridFunction};
pub use problem::{BoundaryProblem, PotentialClass, ProblemKind};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
