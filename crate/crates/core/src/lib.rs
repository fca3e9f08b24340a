// Negated comparisons like `!(x > 0.0)` are deliberate domain guards: they
// reject NaN together with the out-of-range values. The special-function
// coefficient tables keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

//! Random orthogonal projections and sections of l_p balls.
//!
//! This crate simulates the volume of a fixed-dimensional random projection
//! or section of the N-dimensional l_p unit ball, evaluates the closed-form
//! constants that govern its high-dimensional limit (asymptotic means and
//! variances, limiting-process covariances, deviation rate functions), and
//! provides the statistical machinery to verify the limit behavior
//! empirically at desk scale.
//!
//! Module layout:
//!
//! * [`specfun`] — log-gamma, the diagonal Gauss hypergeometric function,
//!   and the distribution functions used by the test harness.
//! * [`closed_forms`] — Gaussian and Stiefel moments, asymptotic means and
//!   variances of the scaled volume, limit radii, process covariances.
//! * [`sampling`] — seeded, replicable Stiefel frame sampling and sphere
//!   quadrature grids.
//! * [`geometry`] — support/radial profiles of the projected or intersected
//!   ball, the inf/sup transforms between them, volume quadrature, and
//!   Hausdorff distance to the limiting ball.
//! * [`limits`] — the centered empirical process, CLT and Hausdorff
//!   experiments, moderate-deviation covariance blocks and quadratic rates,
//!   the entropy rate on Gaussian measures, and the KS test.

pub mod closed_forms;
pub mod error;
pub mod geometry;
pub mod limits;
pub(crate) mod linalg;
pub mod sampling;
pub mod specfun;

pub use error::{Error, Result};
