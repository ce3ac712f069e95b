//! Pseudo-spectral simulation of dilute rigid-rod suspensions on the 2D
//! torus: the kinetic orientation model, its tensor closure, moment
//! machinery and a suite of structural diagnostics.

pub mod error;
pub mod field;
pub mod da;
pub mod diagnostics;
pub mod doi;
pub mod grid;
pub mod imex;
pub mod moments;
pub mod ops;
pub mod random;
pub mod snapshot;

pub use error::{Error, Result};
pub use field::{ComplexField, ComplexValued, Field, RealValued, ScalarField, TensorField2x2, VectorField};
pub use grid::{Fraction, Grid};
