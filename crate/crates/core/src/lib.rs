//! Numerical laboratory for fourth-order conformal geometry on flat tori.

// index loops mirror the tensor notation; `!(x > 0.0)` deliberately rejects NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod covariant;
pub mod curvature;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod krylov;
pub mod linalg;
pub mod linearization;
pub mod metric;
pub mod q_operators;
pub mod reduce;
pub mod report;
pub mod run;
pub mod scenario;
pub mod solvers;
pub mod spectral;
pub mod trig;

pub use curvature::{curvature_bundle, CurvatureBundle};
pub use error::{QlabError, Result};
pub use field::{OneFormField, ScalarField, SymTensor2Field, Tensor4Field};
pub use grid::PeriodicGrid;
pub use metric::{Geometry, MetricField, MetricPreset};
