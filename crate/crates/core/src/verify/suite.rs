use serde::{Deserialize, Serialize};

use super::{
    bessel_reduction_residual, default_s_samples, default_z_samples, gram_matrix, integral_eq_residual_a,
    integral_eq_residual_b, kernel_checks, mellin_kernel_identity, ode_coefficient_residual, GramReport, PassRule,
    ResidualReport, ResidualSample, Status, ORTHOGONALITY_TOL,
};
use crate::coefficients::{class_a_closed_form, class_a_coeffs, class_b_closed_form, class_b_recurrence, hyperbessel_coeffs, CoefficientTable};
use crate::error::{Error, Result};
use crate::math::{ModelClass, ModelParams};
use crate::quadrature::DEFAULT_M;
use crate::series::{estimate_order, OrderEstimate, SeriesFunction};
use crate::zeros::{find_zeros, summability_diagnostic, ScanConfig, SummabilityReport, ZeroSet};

pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance of the coefficient-form comparison.
pub const FORMS_TOL: f64 = 1e-10;
/// Allowed distance of the estimated order from the theoretical one.
pub const ORDER_TOL: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub params: ModelParams,
    /// Coefficients compared between the closed and recursive forms.
    pub n_coeffs: usize,
    pub zeros: usize,
    pub gram_size: usize,
    pub kernel_terms: usize,
    pub quad_m: usize,
    /// Series tolerance for reported evaluations.
    pub tol: f64,
    /// `(k, factor)`: multiply `c_k` by `factor` before checking.
    pub perturb: Vec<(usize, f64)>,
}

impl SuiteConfig {
    pub fn new(params: ModelParams) -> Self {
        SuiteConfig {
            params,
            n_coeffs: 100,
            zeros: 40,
            gram_size: 6,
            kernel_terms: 40,
            quad_m: DEFAULT_M,
            tol: crate::series::DEFAULT_TOL,
            perturb: Vec::new(),
        }
    }

    /// The coefficient table under test (perturbed if requested).
    pub fn table(&self, n: usize) -> Result<CoefficientTable> {
        let mut t = match self.params.class {
            ModelClass::B => class_b_recurrence(&self.params, n)?,
            ModelClass::A => class_a_coeffs(&self.params, n)?,
        };
        for &(k, f) in &self.perturb {
            t.scale_coefficient(k, f)?;
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        ErrorInfo {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

/// One line of the suite summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub residual: Option<f64>,
    pub error_estimate: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub params: ModelParams,
    pub checks: Vec<CheckSummary>,
    pub details: Vec<ResidualReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gram: Option<GramReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<OrderEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summability: Option<SummabilityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeros: Option<Vec<f64>>,
}

impl SuiteReport {
    fn new(params: ModelParams) -> Self {
        SuiteReport {
            schema_version: SCHEMA_VERSION,
            params,
            checks: Vec::new(),
            details: Vec::new(),
            gram: None,
            order: None,
            summability: None,
            zeros: None,
        }
    }

    pub fn any_failed(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, r: ResidualReport) {
        self.checks.push(CheckSummary {
            name: r.name.clone(),
            residual: Some(r.residual),
            error_estimate: Some(r.error_estimate),
            tolerance: Some(r.tolerance),
            status: r.status,
            error: None,
        });
        self.details.push(r);
    }

    fn push_error(&mut self, name: &str, e: &Error) {
        self.checks.push(CheckSummary {
            name: name.to_string(),
            residual: None,
            error_estimate: None,
            tolerance: None,
            status: Status::Fail,
            error: Some(e.into()),
        });
    }

    fn record(&mut self, name: &str, r: Result<ResidualReport>) {
        match r {
            Ok(r) => self.push(r),
            Err(e) => self.push_error(name, &e),
        }
    }
}

/// Whether a run tests an open statement rather than a theorem.
pub fn is_conjecture(params: &ModelParams) -> bool {
    params.beta != 0.0
}

/// Runs every check that applies to the configured model.
pub fn run_suite(cfg: &SuiteConfig) -> SuiteReport {
    let p = cfg.params;
    let mut rep = SuiteReport::new(p);

    let table = match cfg.table(cfg.n_coeffs.max(200)) {
        Ok(t) => t,
        Err(e) => {
            rep.push_error("coefficients", &e);
            return rep;
        }
    };
    rep.record("coefficient_forms", coefficient_forms(&p, &table, cfg.n_coeffs));

    match order_check(&p, &table) {
        Ok((r, est)) => {
            rep.push(r);
            rep.order = Some(est);
        }
        Err(e) => rep.push_error("order_law", &e),
    }

    if p.class == ModelClass::B && p.integer_beta().is_some() {
        rep.record("ode_coefficients", ode_coefficient_residual(&p, &table, 60.min(cfg.n_coeffs)));
    }
    let sf = SeriesFunction::new(table);
    if p.beta == 0.0 && p.a < 0.0 {
        rep.record("bessel_reduction", bessel_reduction_residual(&p, &sf));
    }
    match mellin_kernel_identity(&p, &default_s_samples(&p, 20)) {
        Ok([a, b]) => {
            rep.push(a);
            rep.push(b);
        }
        Err(e) => rep.push_error("mellin", &e),
    }

    let needed = cfg.zeros.max(cfg.gram_size).max(1);
    let scan = ScanConfig::default();
    let zeros = find_zeros(&sf, needed, &scan);
    // the integral equation only needs the first zero for its sample scale
    let first = match &zeros {
        Ok(z) => Ok(z.lambdas[0]),
        Err(_) => find_zeros(&sf, 1, &scan).map(|z| z.lambdas[0]),
    };
    let name = match p.class {
        ModelClass::A => "integral_equation_a",
        ModelClass::B => "integral_equation_b",
    };
    rep.record(
        name,
        first.and_then(|l1| {
            let z = default_z_samples(l1, 10);
            match p.class {
                ModelClass::A => integral_eq_residual_a(&sf, &z),
                ModelClass::B => integral_eq_residual_b(&sf, &z),
            }
        }),
    );
    let zs = match zeros {
        Ok(z) => z,
        Err(e) => {
            rep.push_error("zeros", &e);
            return rep;
        }
    };
    rep.zeros = Some(zs.lambdas.clone());
    rep.summability = summability_diagnostic(&zs).ok();

    if cfg.gram_size > 0 {
        match gram_matrix(&sf, &zs, cfg.gram_size, cfg.quad_m) {
            Ok(g) => {
                rep.push(gram_summary(&g));
                rep.gram = Some(g);
            }
            Err(e) => rep.push_error("gram_orthogonality", &e),
        }
    }

    if cfg.kernel_terms > 0 {
        let pairs = kernel_pairs(&zs);
        match kernel_checks(&sf, &zs, cfg.kernel_terms.min(zs.len()), &pairs, cfg.quad_m) {
            Ok(k) => {
                let (c, i) = if is_conjecture(&p) {
                    (k.constant.as_evidence(), k.identity.as_evidence())
                } else {
                    (k.constant, k.identity)
                };
                rep.push(c);
                rep.push(i);
            }
            Err(e) => rep.push_error("kernel", &e),
        }
    }
    rep
}

/// Gram matrix of the first `cfg.gram_size` zeros with a `cfg.quad_m` rule.
pub fn run_conjecture(cfg: &SuiteConfig) -> SuiteReport {
    let p = cfg.params;
    let mut rep = SuiteReport::new(p);
    let result = (|| {
        let sf = SeriesFunction::new(cfg.table(64)?);
        let zs = find_zeros(&sf, cfg.gram_size.max(1), &ScanConfig::default())?;
        let g = gram_matrix(&sf, &zs, cfg.gram_size, cfg.quad_m)?;
        Ok::<_, Error>((zs, g))
    })();
    match result {
        Ok((zs, g)) => {
            rep.zeros = Some(zs.lambdas);
            rep.push(gram_summary(&g));
            rep.gram = Some(g);
        }
        Err(e) => rep.push_error("gram_orthogonality", &e),
    }
    rep
}

/// Off-diagonal entries as residual samples.
pub fn gram_summary(g: &GramReport) -> ResidualReport {
    let mut samples = Vec::new();
    for i in 0..g.n {
        for j in i + 1..g.n {
            let mut s = ResidualSample::new(vec![(i + 1) as f64, (j + 1) as f64], g.entries[i][j], 0.0, 1.0, g.quadrature_error_estimate);
            s.pass = s.rel_residual < ORTHOGONALITY_TOL.max(10.0 * s.error_estimate);
            samples.push(s);
        }
    }
    let mut r = ResidualReport::from_samples("gram_orthogonality", samples, ORTHOGONALITY_TOL, PassRule::Standard);
    r.status = g.status;
    if g.n == 1 {
        r.status = if g.status == Status::Evidence { Status::Evidence } else { Status::Pass };
    }
    if g.status == Status::Evidence {
        r = r.with_note("orthogonality over the zeros is an open statement for beta != 0");
    }
    r
}

/// Five `(z, ζ)` pairs below and around the first zero.
pub fn kernel_pairs(zs: &ZeroSet) -> Vec<(f64, f64)> {
    let l = zs.lambdas[0];
    [(0.35, 0.62), (0.1, 0.9), (0.5, 0.501), (0.2, 0.45), (0.7, 0.05)]
        .iter()
        .map(|&(a, b)| (a * l, b * l))
        .collect()
}

/// Recurrence table against the closed forms on `ln |c_n|`.
pub fn coefficient_forms(p: &ModelParams, table: &CoefficientTable, n: usize) -> Result<ResidualReport> {
    let mut others = vec![match p.class {
        ModelClass::B => class_b_closed_form(p, n)?,
        ModelClass::A => class_a_closed_form(p, n)?,
    }];
    if p.class == ModelClass::B && p.integer_beta().is_some() {
        others.push(hyperbessel_coeffs(p, n)?);
    }
    let mut samples = Vec::new();
    for o in &others {
        for k in 1..=n {
            let (x, y) = (table.ln_abs()[k], o.ln_abs()[k]);
            let same_sign = table.values()[k].signum() == o.values()[k].signum() || table.values()[k] == 0.0;
            // a difference in ln |c| is a relative difference in c
            let d = if same_sign { (x - y).abs() } else { 2.0 };
            let err = 16.0 * f64::EPSILON * x.abs().max(y.abs()).max(1.0);
            let mut s = ResidualSample::new(vec![k as f64], x, y, 1.0, err);
            s.abs_residual = d;
            s.rel_residual = d;
            samples.push(s);
        }
    }
    Ok(ResidualReport::from_samples("coefficient_forms", samples, FORMS_TOL, PassRule::Standard))
}

/// `ρ̂` over `n ∈ [50, 200]` against `p/(β+2)`.
pub fn order_check(p: &ModelParams, table: &CoefficientTable) -> Result<(ResidualReport, OrderEstimate)> {
    let est = estimate_order(table, 50..=200)?;
    let want = p.class.power() as f64 / (p.beta + 2.0);
    let mut s = ResidualSample::new(vec![50.0, 200.0], est.rho_hat, want, 1.0, est.slope_stderr);
    s.rel_residual = (est.rho_hat - want).abs();
    s.error_estimate = 0.0;
    Ok((ResidualReport::from_samples("order_law", vec![s], ORDER_TOL, PassRule::Standard), est))
}
