//! Velocity grids, sphere quadrature, weights, fields and their moments.

mod field;
mod grid;
mod io;
mod sphere;

pub use field::*;
pub use grid::{GridSpec, Interpolation, Stencil, VelocityGrid};
pub use io::*;
pub use sphere::{Frame, SphereQuadrature, SphereRule};
