//! Dirichlet domains of discrete groups acting on hyperbolic space.
//!
//! Points and isometries live in the hyperboloid model inside Minkowski space
//! `R^{n,1}`. The crate covers Lorentzian linear algebra, dynamical
//! classification of isometries, enumeration of finitely generated groups,
//! bisector arrangements, Dirichlet domains as polyhedral cones, abstract
//! polyhedral complexes and their projective completions.

pub mod bisector;
pub mod complexes;
pub mod complexify;
pub mod cone;
pub mod domain;
pub mod error;
pub mod exact;
pub mod group;
pub mod isometry;
pub mod linalg;
pub mod lorentz;
pub mod par;

pub use error::{GeomError, Result};
