//! Numerical checks of the identities satisfied by the model functions.
//!
//! Every check produces a [`ResidualReport`]. A sample passes when its
//! relative residual is below `max(tolerance, 10 × error_estimate)`; the
//! kernel identities, whose truncation error dominates, pass only when the
//! residual is below the estimate itself.

mod bessel;
mod gram;
mod integral;
mod kernel;
mod mellin;
mod ode;
mod suite;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::quadrature::QuadratureRule;
use crate::series::SeriesFunction;

pub use bessel::{bessel_reduction_residual, normalized_bessel, BESSEL_TOL};
pub use gram::{gram_matrix, GramReport, ORTHOGONALITY_TOL};
pub use integral::{
    default_z_samples, integral_eq_residual_a, integral_eq_residual_a_with, integral_eq_residual_b,
    integral_eq_residual_b_with, INTEGRAL_EQ_TOL,
};
pub use kernel::{kernel_checks, KernelReport, KernelSeries};
pub use mellin::{chi, default_s_samples, h as mellin_h, mellin_kernel_identity, MELLIN_TOL};
pub use ode::{ode_coefficient_residual, ODE_TOL};
pub use suite::{
    coefficient_forms, gram_summary, is_conjecture, kernel_pairs, order_check, run_conjecture, run_suite, CheckSummary,
    ErrorInfo, SuiteConfig, SuiteReport, FORMS_TOL, ORDER_TOL, SCHEMA_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Reported for runs whose outcome is not settled by a theorem.
    Evidence,
}

/// How a report decides pass/fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassRule {
    /// `rel < max(tol, 10 × estimate)`
    Standard,
    /// `rel < estimate`
    WithinEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    /// Sample coordinates (`z`, `(z, ζ)`, `s` or `n`).
    pub at: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_residual: f64,
    /// `|lhs - rhs|` over the sample's scale (at least `max(|lhs|, |rhs|)`).
    pub rel_residual: f64,
    /// Relative error estimate of the comparison itself.
    pub error_estimate: f64,
    pub pass: bool,
}

impl ResidualSample {
    /// Builds a sample with `scale` at least `max(|lhs|, |rhs|)`.
    pub fn new(at: Vec<f64>, lhs: f64, rhs: f64, scale: f64, abs_error: f64) -> Self {
        let abs = (lhs - rhs).abs();
        let scale = scale.max(lhs.abs()).max(rhs.abs());
        let (rel, est) = if scale > 0.0 { (abs / scale, abs_error / scale) } else { (abs, abs_error) };
        ResidualSample {
            at,
            lhs,
            rhs,
            abs_residual: abs,
            rel_residual: rel,
            error_estimate: est,
            pass: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub name: String,
    pub samples: Vec<ResidualSample>,
    pub max_abs_residual: f64,
    /// Largest relative residual over the samples.
    pub residual: f64,
    /// Largest relative error estimate over the samples.
    pub error_estimate: f64,
    pub tolerance: f64,
    pub rule: PassRule,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ResidualReport {
    pub fn from_samples(name: &str, mut samples: Vec<ResidualSample>, tolerance: f64, rule: PassRule) -> Self {
        let mut all = true;
        for s in &mut samples {
            let ok = match rule {
                PassRule::Standard => s.rel_residual < tolerance.max(10.0 * s.error_estimate),
                PassRule::WithinEstimate => s.rel_residual < s.error_estimate,
            };
            s.pass = ok && s.rel_residual.is_finite();
            all &= s.pass;
        }
        let fold = |f: fn(&ResidualSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
        ResidualReport {
            name: name.to_string(),
            max_abs_residual: fold(|s| s.abs_residual),
            residual: fold(|s| s.rel_residual),
            error_estimate: fold(|s| s.error_estimate),
            tolerance,
            rule,
            status: if all && !samples.is_empty() { Status::Pass } else { Status::Fail },
            samples,
            note: None,
        }
    }

    /// Relabels the outcome as evidence.
    pub fn as_evidence(mut self) -> Self {
        self.status = Status::Evidence;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// `F(z t_i)` at every node of `rule`, with the largest error bound.
pub(crate) fn node_values(sf: &SeriesFunction, z: f64, rule: &QuadratureRule, tol: f64) -> Result<(Vec<f64>, f64)> {
    let mut vals = Vec::with_capacity(rule.m);
    let mut err: f64 = 0.0;
    for &t in &rule.nodes {
        let e = sf.eval_F(z * t, tol)?;
        vals.push(e.value);
        err = err.max(e.error_bound);
    }
    Ok((vals, err))
}

/// `Σ w_i g_i` with compensated summation, and `Σ w_i |g_i|`.
pub(crate) fn weighted_sum(rule: &QuadratureRule, g: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut s = crate::quadrature::NeumaierSum::default();
    let mut a = 0.0;
    for (w, v) in rule.weights.iter().zip(g) {
        s.add(w * v);
        a += w * v.abs();
    }
    (s.value(), a)
}
