//! Bigraded spherical harmonics on the CR 3-sphere, the Hopf quadrature grid,
//! and the dense transforms between coefficients and node values.

pub mod basis;
pub mod cache;
pub mod field;
pub mod grid;
pub mod poly;
pub mod transform;

pub use basis::{build_basis, mode_count, mode_position, mode_table, Basis, ModeIndex, Part};
pub use field::SpectralField;
pub use grid::{build_grid, Node, QuadratureGrid};
pub use poly::Poly;
pub use transform::{analyze, synthesize, SpectralSpace};

/// Total contact volume `int theta0 ^ dtheta0` of the standard sphere with
/// `theta0 = cos^2(eta) dxi1 + sin^2(eta) dxi2`, whose density in Hopf
/// coordinates is `sin(2 eta) deta dxi1 dxi2`. Checked against the grid at
/// two resolutions in the tests.
pub const CONTACT_VOLUME: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
