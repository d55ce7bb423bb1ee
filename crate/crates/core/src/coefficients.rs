//! Power-series coefficients of `F`, normalized so that `c_0 = 1`.
//!
//! Class B tables hold `c_n` for `F(z) = Σ c_n z^n`; class A tables hold the
//! even coefficients, entry `n` multiplying `z^{2n}`. Besides the values each
//! table stores the consecutive ratios `c_n / c_{n-1}` and `ln |c_n|`, which
//! stay representable long after `c_n` itself underflows.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{log_gamma, pochhammer, ModelClass, ModelParams};

/// How a table was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientSource {
    Recurrence,
    ClosedForm,
    Hyperbessel,
}

/// Roots of `P_k`, the monic degree-`k` polynomial with
/// `∏_{i=0}^{k} (mu + j + i) - (mu)_{k+1} = j P_k(j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperbesselRoots {
    pub k: u32,
    /// Ascending coefficients of `P_k`; the last one is 1.
    pub poly: Vec<f64>,
    pub roots: Vec<Complex64>,
}

impl HyperbesselRoots {
    /// `P_k(j) = ∏ (j - α_i)` evaluated in complex arithmetic.
    pub fn eval_complex(&self, j: f64) -> Complex64 {
        self.roots
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, r| acc * (Complex64::new(j, 0.0) - r))
    }

    /// Real value of `P_k(j)`; fails when the imaginary residue is not negligible.
    pub fn eval(&self, j: f64) -> Result<f64> {
        let v = self.eval_complex(j);
        if v.im.abs() > 1e-10 * v.norm().max(1.0) {
            return Err(Error::Numeric(format!(
                "P_{}({j}) has imaginary residue {:e}",
                self.k, v.im
            )));
        }
        Ok(v.re)
    }

    /// `P_k(j)` from the expanded coefficients (Horner).
    pub fn eval_poly(&self, j: f64) -> f64 {
        self.poly.iter().rev().fold(0.0, |acc, c| acc * j + c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    params: ModelParams,
    source: CoefficientSource,
    values: Vec<f64>,
    ratios: Vec<f64>,
    ln_abs: Vec<f64>,
    adjustments: Vec<(usize, f64)>,
    roots: Option<HyperbesselRoots>,
}

#[derive(Default)]
struct Raw {
    values: Vec<f64>,
    ratios: Vec<f64>,
    ln_abs: Vec<f64>,
}

impl Raw {
    fn with_capacity(n: usize) -> Self {
        let mut r = Raw {
            values: Vec::with_capacity(n + 1),
            ratios: Vec::with_capacity(n + 1),
            ln_abs: Vec::with_capacity(n + 1),
        };
        r.values.push(1.0);
        r.ratios.push(1.0);
        r.ln_abs.push(0.0);
        r
    }

    /// Appends `c_n = c_{n-1} * ratio`.
    fn push_ratio(&mut self, ratio: f64) {
        let prev = *self.values.last().unwrap();
        let ln_prev = *self.ln_abs.last().unwrap();
        self.values.push(prev * ratio);
        self.ratios.push(ratio);
        self.ln_abs.push(ln_prev + ratio.abs().ln());
    }
}

impl CoefficientTable {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn source(&self) -> CoefficientSource {
        self.source
    }

    /// `c_0 ..= c_N`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `ratios()[n] = c_n / c_{n-1}` for `n >= 1`; entry 0 is 1.
    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    /// `ln |c_n|`; `-inf` for a vanishing coefficient.
    pub fn ln_abs(&self) -> &[f64] {
        &self.ln_abs
    }

    /// Largest stored index `N`.
    pub fn max_index(&self) -> usize {
        self.values.len() - 1
    }

    pub fn roots(&self) -> Option<&HyperbesselRoots> {
        self.roots.as_ref()
    }

    /// Manual rescalings applied with [`CoefficientTable::scale_coefficient`].
    pub fn adjustments(&self) -> &[(usize, f64)] {
        &self.adjustments
    }

    /// Regenerates the table up to index `n` (no-op if already that long).
    pub fn extend_to(&mut self, n: usize) -> Result<()> {
        if n <= self.max_index() {
            return Ok(());
        }
        let raw = generate(self.source, &self.params, self.roots.as_ref(), n)?;
        self.values = raw.values;
        self.ratios = raw.ratios;
        self.ln_abs = raw.ln_abs;
        let adj = self.adjustments.clone();
        for (k, f) in adj {
            self.apply_scale(k, f);
        }
        Ok(())
    }

    /// Multiplies `c_k` by `factor`, leaving every other coefficient alone.
    ///
    /// Used to build deliberately corrupted tables for detector checks.
    pub fn scale_coefficient(&mut self, k: usize, factor: f64) -> Result<()> {
        if !factor.is_finite() || factor == 0.0 {
            return Err(Error::Domain(format!("scale factor must be finite and nonzero, got {factor}")));
        }
        if k > self.max_index() {
            return Err(Error::TableExhausted {
                needed: k,
                available: self.max_index(),
            });
        }
        self.adjustments.push((k, factor));
        self.apply_scale(k, factor);
        Ok(())
    }

    fn apply_scale(&mut self, k: usize, factor: f64) {
        if k > self.max_index() {
            return;
        }
        self.values[k] *= factor;
        self.ln_abs[k] += factor.abs().ln();
        if k >= 1 {
            self.ratios[k] *= factor;
        }
        if k < self.max_index() {
            self.ratios[k + 1] /= factor;
        }
    }
}

/// Class B table from the Beta-difference recurrence
/// `c_n = a c_{n-1} [B(mu+n, beta+1) - B(mu+n-1, beta+1)] / [B(mu+n, beta+1) - B(mu, beta+1)]`.
pub fn class_b_recurrence(params: &ModelParams, n: usize) -> Result<CoefficientTable> {
    require_class(params, ModelClass::B)?;
    build(CoefficientSource::Recurrence, params, None, n)
}

/// Class B table from the Pochhammer product form, renormalized by `Γ(mu)`.
pub fn class_b_closed_form(params: &ModelParams, n: usize) -> Result<CoefficientTable> {
    require_class(params, ModelClass::B)?;
    build(CoefficientSource::ClosedForm, params, None, n)
}

/// Class A table (entry `n` multiplies `z^{2n}`) from the Beta-difference recurrence.
pub fn class_a_coeffs(params: &ModelParams, n: usize) -> Result<CoefficientTable> {
    require_class(params, ModelClass::A)?;
    build(CoefficientSource::Recurrence, params, None, n)
}

/// Class A table from the Pochhammer product form
/// `(a(β+1)/2)^n ∏ (β + 2(μ+2j-1)) (μ)_{2j-2} / ((μ+β+1)_{2j} - (μ)_{2j})`.
pub fn class_a_closed_form(params: &ModelParams, n: usize) -> Result<CoefficientTable> {
    require_class(params, ModelClass::A)?;
    build(CoefficientSource::ClosedForm, params, None, n)
}

/// Recurrence or closed form table for either class.
pub fn coefficients(params: &ModelParams, n: usize, source: CoefficientSource) -> Result<CoefficientTable> {
    match source {
        CoefficientSource::Hyperbessel => hyperbessel_coeffs(params, n),
        s => build(s, params, None, n),
    }
}

/// Integer-`beta` class B table through the roots of `P_k`.
pub fn hyperbessel_coeffs(params: &ModelParams, n: usize) -> Result<CoefficientTable> {
    require_class(params, ModelClass::B)?;
    let k = params
        .integer_beta()
        .ok_or(Error::NotInteger { beta: params.beta })?;
    let roots = hyperbessel_roots(params.mu(), k)?;
    build(CoefficientSource::Hyperbessel, params, Some(roots), n)
}

/// Builds `P_k` from `Q(j) = ∏_{i=0}^{k}(mu + j + i) - (mu)_{k+1}` and finds its roots
/// as companion-matrix eigenvalues.
pub fn hyperbessel_roots(mu: f64, k: u32) -> Result<HyperbesselRoots> {
    // ascending coefficients of ∏ (j + mu + i)
    let mut q = vec![1.0];
    for i in 0..=k {
        let shift = mu + i as f64;
        let mut next = vec![0.0; q.len() + 1];
        for (d, c) in q.iter().enumerate() {
            next[d] += c * shift;
            next[d + 1] += c;
        }
        q = next;
    }
    let poch = pochhammer(mu, k + 1);
    q[0] -= poch;
    if q[0].abs() > 1e-12 * poch.abs().max(1.0) {
        return Err(Error::Numeric(format!("Q(0) = {} is not zero", q[0])));
    }
    // Q(0) = 0, so dividing by j drops the constant term
    let poly: Vec<f64> = q[1..].to_vec();
    let deg = k as usize;
    let roots = match deg {
        0 => Vec::new(),
        1 => vec![Complex64::new(-poly[0], 0.0)],
        _ => {
            let mut comp = DMatrix::<f64>::zeros(deg, deg);
            for i in 1..deg {
                comp[(i, i - 1)] = 1.0;
            }
            for i in 0..deg {
                comp[(i, deg - 1)] = -poly[i];
            }
            let schur = nalgebra::linalg::Schur::try_new(comp, f64::EPSILON, 1000)
                .ok_or_else(|| Error::RootFindingFailure(format!("companion eigensolve of P_{k} did not converge")))?;
            let eig = schur.complex_eigenvalues();
            eig.iter().map(|r| polish_root(&poly, *r)).collect()
        }
    };
    if roots.iter().any(|r| !r.re.is_finite() || !r.im.is_finite()) {
        return Err(Error::RootFindingFailure(format!("non-finite root of P_{k}")));
    }
    Ok(HyperbesselRoots { k, poly, roots })
}

fn polish_root(poly: &[f64], mut x: Complex64) -> Complex64 {
    for _ in 0..3 {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in poly.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        x -= step;
        if step.norm() <= 1e-16 * x.norm() {
            break;
        }
    }
    x
}

fn require_class(params: &ModelParams, class: ModelClass) -> Result<()> {
    if params.class != class {
        return Err(Error::Domain(format!(
            "operation needs class {class} parameters, got class {}",
            params.class
        )));
    }
    Ok(())
}

fn build(
    source: CoefficientSource,
    params: &ModelParams,
    roots: Option<HyperbesselRoots>,
    n: usize,
) -> Result<CoefficientTable> {
    let raw = generate(source, params, roots.as_ref(), n)?;
    Ok(CoefficientTable {
        params: *params,
        source,
        values: raw.values,
        ratios: raw.ratios,
        ln_abs: raw.ln_abs,
        adjustments: Vec::new(),
        roots,
    })
}

fn generate(
    source: CoefficientSource,
    params: &ModelParams,
    roots: Option<&HyperbesselRoots>,
    n: usize,
) -> Result<Raw> {
    let raw = match (source, params.class) {
        (CoefficientSource::Recurrence, ModelClass::B) => recurrence_b(params, n),
        (CoefficientSource::Recurrence, ModelClass::A) => recurrence_a(params, n),
        (CoefficientSource::ClosedForm, ModelClass::B) => closed_form_b(params, n)?,
        (CoefficientSource::ClosedForm, ModelClass::A) => closed_form_a(params, n)?,
        (CoefficientSource::Hyperbessel, _) => {
            let roots = roots.ok_or_else(|| Error::Numeric("hyperbessel table without roots".into()))?;
            hyperbessel_raw(params, roots, n)?
        }
    };
    if let Some(i) = raw.ratios.iter().position(|r| !r.is_finite() || *r == 0.0) {
        return Err(Error::Numeric(format!(
            "coefficient ratio {i} is {} (denominator underflow)",
            raw.ratios[i]
        )));
    }
    Ok(raw)
}

/// `ln (B(mu+k, beta+1) / B(mu, beta+1))` for `k = 0..=kmax`, accumulated
/// factor by factor: `B(x+1,y)/B(x,y) = 1 - y/(x+y)`.
fn log_beta_shift(mu: f64, beta: f64, kmax: usize) -> Vec<f64> {
    let y = beta + 1.0;
    let mut out = Vec::with_capacity(kmax + 1);
    let mut s = 0.0;
    out.push(0.0);
    for i in 0..kmax {
        s += (-y / (mu + i as f64 + y)).ln_1p();
        out.push(s);
    }
    out
}

fn recurrence_b(params: &ModelParams, n: usize) -> Raw {
    let (mu, beta, a) = (params.mu(), params.beta, params.a);
    let y = beta + 1.0;
    let s = log_beta_shift(mu, beta, n);
    let mut raw = Raw::with_capacity(n);
    for k in 1..=n {
        let ratio = if k == 1 {
            // numerator and denominator are the same Beta difference
            a
        } else {
            // B(mu+k) - B(mu+k-1) = -B(mu+k-1) y / (mu+k+beta)
            // B(mu+k) - B(mu)     = -B(mu) (1 - B(mu+k)/B(mu))
            let kf = k as f64;
            a * y * s[k - 1].exp() / ((mu + kf + beta) * -s[k].exp_m1())
        };
        raw.push_ratio(ratio);
    }
    raw
}

fn recurrence_a(params: &ModelParams, n: usize) -> Raw {
    let (mu, beta, a) = (params.mu(), params.beta, params.a);
    let y = beta + 1.0;
    let s = log_beta_shift(mu, beta, 2 * n);
    let mut raw = Raw::with_capacity(n);
    for k in 1..=n {
        // x = mu + 2k - 2:  B(x+2) - B(x) = -B(x) y (2x + y + 1) / ((x+y)(x+y+1))
        let x = mu + 2.0 * k as f64 - 2.0;
        let num = s[2 * k - 2].exp() * y * (2.0 * x + y + 1.0) / ((x + y) * (x + y + 1.0));
        let den = -s[2 * k].exp_m1();
        raw.push_ratio(0.5 * a * num / den);
    }
    raw
}

/// `ln((mu+beta+1)_j / (mu)_j)` via log-Gamma.
fn log_poch_ratio(mu: f64, beta: f64, j: usize, lg_mu: f64, lg_mub: f64) -> Result<f64> {
    let jf = j as f64;
    Ok(log_gamma(mu + beta + 1.0 + jf)? - lg_mub - log_gamma(mu + jf)? + lg_mu)
}

fn closed_form_b(params: &ModelParams, n: usize) -> Result<Raw> {
    let (mu, beta, a) = (params.mu(), params.beta, params.a);
    let lg_mu = log_gamma(mu)?;
    let lg_mub = log_gamma(mu + beta + 1.0)?;
    let ln_ab = (a * (beta + 1.0)).abs().ln();
    let mut raw = Raw::with_capacity(n);
    // Σ_j ln[(mu)_j / ((mu+beta+1)_j - (mu)_j)] = Σ_j -ln(expm1(L_j))
    let mut prod_sum = 0.0;
    for k in 1..=n {
        let l = log_poch_ratio(mu, beta, k, lg_mu, lg_mub)?;
        let em1 = l.exp_m1();
        prod_sum -= em1.ln();
        let kf = k as f64;
        let ratio = a * (beta + 1.0) / ((mu + kf - 1.0) * em1);
        // a_n Γ(mu), straight from the product formula
        let ln_c = kf * ln_ab - log_gamma(mu + kf)? + lg_mu + prod_sum;
        let sign = if a < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        raw.values.push(sign * ln_c.exp());
        raw.ratios.push(ratio);
        raw.ln_abs.push(ln_c);
    }
    Ok(raw)
}

fn closed_form_a(params: &ModelParams, n: usize) -> Result<Raw> {
    let (mu, beta, a) = (params.mu(), params.beta, params.a);
    let lg_mu = log_gamma(mu)?;
    let lg_mub = log_gamma(mu + beta + 1.0)?;
    let half = 0.5 * a * (beta + 1.0);
    let ln_half = half.abs().ln();
    let mut raw = Raw::with_capacity(n);
    let mut sum = 0.0;
    for k in 1..=n {
        let kf = k as f64;
        let lead = beta + 2.0 * (mu + 2.0 * kf - 1.0);
        // ln (mu)_{2k-2} and ln[(mu+beta+1)_{2k} - (mu)_{2k}]
        let ln_poch_lo = log_gamma(mu + 2.0 * kf - 2.0)? - lg_mu;
        let ln_poch_hi = log_gamma(mu + 2.0 * kf)? - lg_mu;
        let em1 = log_poch_ratio(mu, beta, 2 * k, lg_mu, lg_mub)?.exp_m1();
        let ln_den = ln_poch_hi + em1.ln();
        sum += lead.ln() + ln_poch_lo - ln_den;
        let ln_c = kf * ln_half + sum;
        let ratio = half * lead / ((mu + 2.0 * kf - 2.0) * (mu + 2.0 * kf - 1.0) * em1);
        let sign = if half < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
        raw.values.push(sign * ln_c.exp());
        raw.ratios.push(ratio);
        raw.ln_abs.push(ln_c);
    }
    Ok(raw)
}

fn hyperbessel_raw(params: &ModelParams, roots: &HyperbesselRoots, n: usize) -> Result<Raw> {
    let mu = params.mu();
    let k = roots.k;
    let scale = params.a * (k as f64 + 1.0) * pochhammer(mu, k + 1);
    let mut raw = Raw::with_capacity(n);
    for j in 1..=n {
        let jf = j as f64;
        let p = roots.eval(jf)?;
        if !(p > 0.0) {
            return Err(Error::Numeric(format!("P_{k}({j}) = {p} is not positive")));
        }
        raw.push_ratio(scale / ((mu + jf - 1.0) * jf * p));
    }
    Ok(raw)
}
