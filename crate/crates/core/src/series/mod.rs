//! Evaluation of `F`, `F'` and `f = z^nu F` from a coefficient table.
//!
//! Both classes share one evaluator in the power variable `x = z^p` (`p = 1`
//! for class B, `p = 2` for class A), so class A never looks at the sign of
//! `z` except through `z²`. Summation runs in `f64` first; when the rounding
//! estimate of the alternating sum exceeds the requested tolerance it is
//! repeated in extended precision.

mod wide;

use std::ops::RangeInclusive;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientTable;
use crate::error::{Error, Result};
use crate::math::{ModelClass, ModelParams};

use wide::{wide_ratios, wide_sum, WideRatios, MAX_PRECISION};

/// Default relative tolerance for series truncation.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Tables grow in blocks of this many coefficients.
pub const EXTENSION_BLOCK: usize = 32;

const MAX_TERMS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    /// `Σ c_n z^n` (class B)
    AllPowers,
    /// `Σ c_n z^{2n}` (class A)
    EvenPowers,
}

impl Parity {
    fn of(class: ModelClass) -> Self {
        match class {
            ModelClass::A => Parity::EvenPowers,
            ModelClass::B => Parity::AllPowers,
        }
    }
}

/// Value of a truncated series with its error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    /// Truncation tail bound plus the rounding estimate.
    pub error_bound: f64,
    pub terms_used: usize,
}

struct State {
    table: CoefficientTable,
    wide: Option<Arc<WideRatios>>,
}

/// An evaluator for `F` backed by a (possibly growing) coefficient table.
pub struct SeriesFunction {
    params: ModelParams,
    parity: Parity,
    extendable: bool,
    state: RwLock<State>,
}

impl std::fmt::Debug for SeriesFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeriesFunction")
            .field("params", &self.params)
            .field("parity", &self.parity)
            .field("extendable", &self.extendable)
            .finish()
    }
}

impl SeriesFunction {
    /// Evaluator that extends its table on demand.
    pub fn new(table: CoefficientTable) -> Self {
        Self::build(table, true)
    }

    /// Evaluator restricted to the coefficients already in `table`.
    pub fn fixed(table: CoefficientTable) -> Self {
        Self::build(table, false)
    }

    fn build(table: CoefficientTable, extendable: bool) -> Self {
        let params = *table.params();
        SeriesFunction {
            params,
            parity: Parity::of(params.class),
            extendable,
            state: RwLock::new(State { table, wide: None }),
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn nu(&self) -> f64 {
        self.params.nu
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Snapshot of the current table.
    pub fn table(&self) -> CoefficientTable {
        self.state.read().unwrap().table.clone()
    }

    /// `F(z)` for real `z`.
    #[allow(non_snake_case)]
    pub fn eval_F(&self, z: f64, tol: f64) -> Result<Evaluation> {
        check_tol(tol)?;
        let x = self.power_var(z);
        self.sum(x, tol, false)
    }

    /// `F'(z)` by termwise differentiation.
    #[allow(non_snake_case)]
    pub fn eval_F_prime(&self, z: f64, tol: f64) -> Result<Evaluation> {
        check_tol(tol)?;
        let x = self.power_var(z);
        // D(x) = Σ n c_n x^{n-1};  class B: F' = D(z), class A: F' = 2z D(z²)
        let d = if x == 0.0 {
            let st = self.read_with(1)?;
            let c1 = st.table.values()[1];
            Evaluation {
                value: c1,
                error_bound: 0.0,
                terms_used: 2,
            }
        } else {
            let mut e = self.sum(x, tol, true)?;
            e.value /= x;
            e.error_bound /= x.abs();
            e
        };
        Ok(match self.parity {
            Parity::AllPowers => d,
            Parity::EvenPowers => Evaluation {
                value: 2.0 * z * d.value,
                error_bound: 2.0 * z.abs() * d.error_bound,
                terms_used: d.terms_used,
            },
        })
    }

    /// `f(z) = z^nu F(z)` on the positive axis.
    pub fn eval_f(&self, z: f64, tol: f64) -> Result<f64> {
        Ok(self.prefactor(z)? * self.eval_F(z, tol)?.value)
    }

    /// `z^nu` as `exp(nu ln z)`; nonpositive `z` only for nonnegative integer `nu`.
    pub fn prefactor(&self, z: f64) -> Result<f64> {
        let nu = self.params.nu;
        if z > 0.0 {
            return Ok((nu * z.ln()).exp());
        }
        if nu >= 0.0 && nu == nu.floor() {
            return Ok(z.powi(nu as i32));
        }
        Err(Error::Domain(format!("z^nu needs z > 0 for nu = {nu}, got z = {z}")))
    }

    /// `f'(z) = z^nu F'(z)` at a zero of `F`.
    pub fn f_prime_at_zero(&self, z: f64, tol: f64) -> Result<f64> {
        Ok(self.prefactor(z)? * self.eval_F_prime(z, tol)?.value)
    }

    fn power_var(&self, z: f64) -> f64 {
        match self.parity {
            Parity::AllPowers => z,
            Parity::EvenPowers => z * z,
        }
    }

    /// Read guard on a table holding at least index `n`.
    fn read_with(&self, n: usize) -> Result<std::sync::RwLockReadGuard<'_, State>> {
        {
            let st = self.state.read().unwrap();
            if st.table.max_index() >= n {
                return Ok(st);
            }
            if !self.extendable {
                return Err(Error::TableExhausted {
                    needed: n,
                    available: st.table.max_index(),
                });
            }
        }
        {
            let mut st = self.state.write().unwrap();
            let target = n.div_ceil(EXTENSION_BLOCK) * EXTENSION_BLOCK;
            st.table.extend_to(target)?;
        }
        Ok(self.state.read().unwrap())
    }

    fn sum(&self, x: f64, tol: f64, derivative: bool) -> Result<Evaluation> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("non-finite argument {x}")));
        }
        if x == 0.0 {
            let st = self.read_with(0)?;
            return Ok(Evaluation {
                value: if derivative { 0.0 } else { st.table.values()[0] },
                error_bound: 0.0,
                terms_used: 1,
            });
        }
        let fast = self.sum_f64(x, tol, derivative)?;
        let threshold = tol * fast.sum.abs();
        if fast.rounding <= threshold {
            return Ok(Evaluation {
                value: fast.sum,
                error_bound: 2.0 * fast.last.abs() + fast.rounding,
                terms_used: fast.terms,
            });
        }
        self.sum_wide(x, tol, derivative, &fast)
    }

    fn sum_f64(&self, x: f64, tol: f64, derivative: bool) -> Result<FastSum> {
        let mut st = self.read_with(EXTENSION_BLOCK)?;
        let c0 = st.table.values()[0];
        let mut term = c0;
        let mut sum = if derivative { 0.0 } else { c0 };
        let mut abs_sum = if derivative { 0.0 } else { c0.abs() };
        let mut weighted = abs_sum;
        let mut max_term = c0.abs();
        let mut prev = if derivative { 0.0 } else { c0 };
        let mut small_run = 0;
        let mut n = 1;
        loop {
            if n > MAX_TERMS {
                return Err(Error::Numeric(format!("series did not converge within {MAX_TERMS} terms at x = {x}")));
            }
            if n > st.table.max_index() {
                drop(st);
                st = self.read_with(n)?;
            }
            term *= st.table.ratios()[n] * x;
            if !term.is_finite() {
                return Err(Error::Numeric(format!("series term overflow at x = {x}")));
            }
            let c = if derivative { n as f64 * term } else { term };
            sum += c;
            abs_sum += c.abs();
            weighted += (n as f64 + 1.0) * c.abs();
            max_term = max_term.max(term.abs());
            let small = c.abs() < tol * sum.abs().max(f64::EPSILON * abs_sum);
            let decaying = prev != 0.0 && (c / prev).abs() < 0.5;
            if small && (decaying || c == 0.0) {
                small_run += 1;
            } else {
                small_run = 0;
            }
            prev = c;
            if small_run >= 2 {
                return Ok(FastSum {
                    sum,
                    last: c,
                    rounding: 4.0 * f64::EPSILON * weighted,
                    max_term,
                    abs_sum,
                    terms: n + 1,
                });
            }
            n += 1;
        }
    }

    fn sum_wide(&self, x: f64, tol: f64, derivative: bool, fast: &FastSum) -> Result<Evaluation> {
        // bits to hold the largest term plus 53 significant bits of the result and guard
        let scale = fast.abs_sum.max(fast.max_term).log2().max(0.0);
        let need = scale.ceil() as usize + 53 + 64 + 16;
        let prec = need.div_ceil(128) * 128;
        if prec > MAX_PRECISION {
            return Err(Error::Numeric(format!(
                "argument {x} needs {prec} bits of working precision"
            )));
        }
        let mut len = fast.terms + EXTENSION_BLOCK;
        loop {
            let ratios = self.wide_ratios(prec, len)?;
            if let Some(ws) = wide_sum(&ratios, x, tol, derivative)? {
                let rounding = 4.0 * ws.terms as f64 * ws.abs_sum * 2f64.powi(-(ratios.prec as i32));
                return Ok(Evaluation {
                    value: ws.value,
                    error_bound: 2.0 * ws.last_term.abs() + rounding + f64::EPSILON * ws.value.abs(),
                    terms_used: ws.terms,
                });
            }
            if len > MAX_TERMS {
                return Err(Error::Numeric(format!("wide series did not converge at x = {x}")));
            }
            len *= 2;
        }
    }

    fn wide_ratios(&self, prec: usize, len: usize) -> Result<Arc<WideRatios>> {
        {
            let st = self.state.read().unwrap();
            if let Some(w) = &st.wide {
                if w.prec >= prec && w.len() >= len {
                    return Ok(Arc::clone(w));
                }
            }
        }
        let mut st = self.state.write().unwrap();
        if let Some(w) = &st.wide {
            if w.prec >= prec && w.len() >= len {
                return Ok(Arc::clone(w));
            }
        }
        let (prec, len) = match &st.wide {
            Some(w) => (prec.max(w.prec), len.max(w.len())),
            None => (prec, len),
        };
        let w = Arc::new(wide_ratios(&self.params, st.table.adjustments(), len, prec));
        st.wide = Some(Arc::clone(&w));
        Ok(w)
    }
}

struct FastSum {
    sum: f64,
    last: f64,
    rounding: f64,
    max_term: f64,
    abs_sum: f64,
    terms: usize,
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("tolerance must be positive, got {tol}")))
    }
}

/// Least-squares order estimate from the coefficient decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub rho_hat: f64,
    /// Fitted slope of `ln |c_n / c_{n-1}|` against `ln n`.
    pub slope: f64,
    pub slope_stderr: f64,
}

/// Fits `ln |c_n / c_{n-1}| ≈ s ln n + b` over `window` and returns
/// `rho = p / (-s)`.
pub fn estimate_order(table: &CoefficientTable, window: RangeInclusive<usize>) -> Result<OrderEstimate> {
    let (lo, hi) = (*window.start(), *window.end());
    if lo < 20 || hi > table.max_index() || hi < lo || hi - lo + 1 < 30 {
        return Err(Error::Domain(format!(
            "order window [{lo}, {hi}] must lie in [20, {}] with at least 30 points",
            table.max_index()
        )));
    }
    let mut xs = Vec::with_capacity(hi - lo + 1);
    let mut ys = Vec::with_capacity(hi - lo + 1);
    for n in lo..=hi {
        let r = table.ratios()[n];
        if r == 0.0 || !table.ln_abs()[n].is_finite() {
            return Err(Error::DegenerateWindow { index: n });
        }
        xs.push((n as f64).ln());
        ys.push(r.abs().ln());
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_stderr = (sse / (m - 2.0) / sxx).sqrt();
    let p = table.params().class.power() as f64;
    Ok(OrderEstimate {
        rho_hat: p / -slope,
        slope,
        slope_stderr,
    })
}
