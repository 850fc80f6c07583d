//! Numerical laboratory for the spatially homogeneous Boltzmann equation with
//! hard-potential cutoff kernels: collision operator, linearization in the
//! Gaussian and stretched-exponential settings, spectral gap, semigroup and
//! resolvent estimates, and nonlinear relaxation.

pub mod acceptance;
pub mod collision;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod kernels;
pub mod linalg;
pub mod linearized;
pub mod quadrature;
pub mod report;
pub mod spectral;
pub mod velocity_space;

pub use error::{Error, Result};
