//! Interactive preference-guided multi-objective Bayesian optimization.
//!
//! A session starts with a space-filling design followed by ParEGO-style
//! rounds (random simplex weight, augmented Tchebycheff scalarization, GP
//! surrogate, expected improvement). The resulting Pareto front is shown to a
//! decision maker, whose pick steers one of two exploration strategies:
//!
//! - **TRIPE** evaluates Delaunay interior and fringe candidates neighbouring
//!   the preferred input.
//! - **WAPE** perturbs the preferred scalarization weight and reruns the
//!   weighted BO inner loop around it.
//!
//! The [`engine`] module drives sessions; everything else is the numerical
//! machinery it is built from.

pub mod acquisition;
pub mod archive;
pub mod engine;
pub mod error;
pub mod problem;
pub mod sampling;
pub mod scalarize;
pub mod surrogate;
pub mod tricand;

pub use error::{Error, Result};
