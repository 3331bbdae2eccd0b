//! Walk-on-boundary Monte Carlo solvers for Laplace and Poisson problems.

pub mod estimators;
pub mod geometry;
pub mod harness;
pub mod kernels;
pub mod math;
pub mod problem;
pub mod sampling;
pub mod wos;
