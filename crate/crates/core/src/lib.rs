//! Numerical laboratory for time-fractional advection-diffusion equations:
//! discrete fractional calculus, a finite-difference forward solver, Carleman
//! weight machinery and two inverse problems.

mod banded;
pub mod carleman;
pub mod error;
pub mod fade;
pub mod frac_calc;
pub mod geometry;
pub mod grid;
pub mod inverse;

pub use error::{FradeError, Result};
pub use frac_calc::{FractionalOrder, TimeGrid, TimeSeries};
pub use grid::{Axis, GridFunction, SpaceField, SpaceGrid, SpaceTimeGrid};
