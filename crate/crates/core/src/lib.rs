//! Numerical laboratory for one-dimensional magnetic relaxation: the resistive
//! system, its perfectly conducting limit, and the effective angle dynamics.

pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod full;
pub mod grid;
pub mod hyperbolic;
pub mod initial;
pub mod interp;
pub mod limit;
pub mod linalg;
pub mod oracle;

pub use error::{Error, Result};
pub use fields::{AngleState, Gauge, MagneticState, VelocityField};
pub use grid::PeriodicGrid;
