//! Adaptive embedded Runge-Kutta integration in several floating-point
//! precisions, gene-inheritance ODE models, and tools for studying how
//! roundoff breaks their invariants.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod experiments;
pub mod export;
pub mod matrix;
pub mod models;
pub mod scalar;
pub mod solver;
pub mod tableau;

pub use matrix::SquareMatrix;
pub use scalar::{Precision, Scalar};
pub use solver::{integrate, OdeSystem, SolverConfig, SolverError, Termination, Trajectory};
pub use tableau::{ButcherTableau, Method};
