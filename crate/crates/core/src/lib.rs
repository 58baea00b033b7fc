//! Numerical laboratory for time emerging from a timeless composite: a clock
//! coordinate `R` and a system coordinate `x` at fixed total energy, reduced
//! to time-dependent dynamics for the system.

pub mod classical;
pub mod drive;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod grid;
pub mod interp;
pub mod linalg;
pub mod potential;
pub mod semiclassics;
pub mod spec;
pub mod stationary;

pub use error::{Error, Result};
pub use field::{ComplexField1D, ComplexField2D};
pub use grid::{Grid1D, Grid2D};
pub use potential::{Coupling, Potential};
pub use spec::CompositeSpec;

pub use num_complex::Complex64;
