//! Spectral simulator for the normalized Q-curvature flow on the standard CR
//! 3-sphere, plus the pointwise frame calculus, Green-operator eigensolver and
//! Heisenberg-group toolkit used to check the identities around it.
//!
//! The crate is organised bottom-up:
//!
//! * [`sphere`]: bigraded harmonic basis, Hopf quadrature grid, transforms.
//! * [`frame`]: pointwise CR frame and covariant jets (the independent oracle).
//! * [`operators`]: spectral sub-Laplacian, `T`, Kohn Laplacian, Paneitz.
//! * [`flow`]: split and generic integrators for the flow.
//! * [`diagnostics`]: identity and inequality reports.
//! * [`eigen`]: Green operator, power iteration and deflation.
//! * [`heisenberg`]: group law, dilations, sub-gradient, ball quadrature.

pub mod diagnostics;
pub mod eigen;
pub mod error;
pub mod exec;
pub mod flow;
pub mod frame;
pub mod heisenberg;
pub mod operators;
pub mod quad;
pub mod sphere;

pub use error::{QflowError, Result};
pub use exec::Exec;
