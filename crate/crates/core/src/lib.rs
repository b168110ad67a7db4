//! Two-phase free boundary energies on grids.
//!
//! The crate builds and audits discrete minimizers of
//! `int |grad u|^2 + q_+^2 |{u > 0}| + q_-^2 |{u < 0}|` on long strips,
//! where the boundary data dips below 1 in the middle and the minimizer
//! develops a pool of zeros, and constructs almost-minimizers with prescribed
//! branch sets from regularized distances to weighted graphs.

pub mod boundary;
pub mod energy;
pub mod error;
pub mod freeboundary;
pub mod geometry;
pub mod harness;
pub mod minimize2d;
pub mod regdist;
pub mod slice1d;

pub use boundary::{BoundaryData, ProfileParams, Weights};
pub use energy::EnergyReport;
pub use error::{Error, Result};
pub use geometry::{Grid, Rect, ScalarField2D};
pub use slice1d::SliceSolution;
