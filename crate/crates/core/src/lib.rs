//! Entire functions of Bessel type defined by Beta-function recurrences.
//!
//! A model is fixed by `(nu, alpha, beta, a)` and a class. Class B builds
//! `F(z) = Σ c_n z^n`, class A the even series `F(z) = Σ c_n z^{2n}`, and
//! `f(z) = z^nu F(z)`. The crate computes the coefficients, evaluates the
//! series, locates the positive zeros and checks the identities these
//! functions satisfy.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod coefficients;
pub mod error;
pub mod math;
pub mod quadrature;
pub mod series;
pub mod verify;
pub mod zeros;

pub use coefficients::{CoefficientSource, CoefficientTable};
pub use error::{Constraint, Error, Result};
pub use math::{ModelClass, ModelParams};
pub use series::{Evaluation, SeriesFunction};
