//! Extended-precision summation for arguments where the alternating series
//! cancels more digits than `f64` carries.
//!
//! Coefficient ratios are regenerated here from the Beta recurrence using only
//! `+ - * /` on exactly representable inputs, so they are correct to the
//! working precision rather than inherited from the `f64` table.

use astro_float_num::{BigFloat, RoundingMode};

use crate::error::{Error, Result};
use crate::math::{ModelClass, ModelParams};

const RM: RoundingMode = RoundingMode::ToEven;

/// Working precision ceiling, in bits.
pub(crate) const MAX_PRECISION: usize = 4096;

pub(crate) fn big(x: f64, prec: usize) -> BigFloat {
    BigFloat::from_f64(x, prec)
}

/// Nearest `f64` to a finite `BigFloat` (saturating to ±inf, flushing to 0).
pub(crate) fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let Some((words, _, sign, exp, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    let n = words.len();
    let top = words[n - 1] as f64;
    let next = if n >= 2 { words[n - 2] as f64 } else { 0.0 };
    // mantissa is 0.m with the top bit of the last word worth 1/2
    let m = (top + next * 2f64.powi(-64)) * 2f64.powi(-64);
    let v = ldexp(m, exp as i64);
    match sign {
        astro_float_num::Sign::Neg => -v,
        astro_float_num::Sign::Pos => v,
    }
}

fn ldexp(mut m: f64, mut e: i64) -> f64 {
    while e > 1000 {
        m *= 2f64.powi(1000);
        e -= 1000;
        if m.is_infinite() {
            return m;
        }
    }
    while e < -1000 {
        m *= 2f64.powi(-1000);
        e += 1000;
        if m == 0.0 {
            return m;
        }
    }
    m * 2f64.powi(e as i32)
}

/// `c_n / c_{n-1}` for `n = 1..=len` at a fixed working precision.
pub(crate) struct WideRatios {
    pub prec: usize,
    pub c0: f64,
    pub ratios: Vec<BigFloat>,
}

impl WideRatios {
    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    /// Ratio `n >= 1`.
    pub fn get(&self, n: usize) -> &BigFloat {
        &self.ratios[n - 1]
    }
}

/// Regenerates the recurrence ratios with `prec` bits and re-applies any
/// manual coefficient rescalings.
pub(crate) fn wide_ratios(
    params: &ModelParams,
    adjustments: &[(usize, f64)],
    len: usize,
    prec: usize,
) -> WideRatios {
    let mu = params.mu();
    let beta = params.beta;
    let step = match params.class {
        ModelClass::B => 1,
        ModelClass::A => 2,
    };
    // rho_k = B(mu + k, beta + 1) / B(mu, beta + 1) = ∏_{i<k} (mu+i)/(mu+beta+1+i)
    let kmax = step * len;
    let mut rho = Vec::with_capacity(kmax + 1);
    let one = big(1.0, prec);
    rho.push(one.clone());
    let mut cur = one.clone();
    for i in 0..kmax {
        let num = big(mu, prec).add(&big(i as f64, prec), prec, RM);
        let den = num.add(&big(beta + 1.0, prec), prec, RM);
        cur = cur.mul(&num, prec, RM).div(&den, prec, RM);
        rho.push(cur.clone());
    }
    let lead = match params.class {
        ModelClass::B => big(params.a, prec),
        ModelClass::A => big(params.a, prec).mul(&big(0.5, prec), prec, RM),
    };
    let mut ratios = Vec::with_capacity(len);
    for n in 1..=len {
        let hi = &rho[step * n];
        let lo = &rho[step * (n - 1)];
        let num = hi.sub(lo, prec, RM);
        let den = hi.sub(&one, prec, RM);
        ratios.push(lead.mul(&num, prec, RM).div(&den, prec, RM));
    }
    let mut c0 = 1.0;
    for &(k, f) in adjustments {
        if k == 0 {
            c0 *= f;
        }
        if k >= 1 && k <= len {
            ratios[k - 1] = ratios[k - 1].mul(&big(f, prec), prec, RM);
        }
        if k < len {
            ratios[k] = ratios[k].div(&big(f, prec), prec, RM);
        }
    }
    WideRatios { prec, c0, ratios }
}

/// Outcome of an extended-precision summation.
pub(crate) struct WideSum {
    pub value: f64,
    pub last_term: f64,
    pub abs_sum: f64,
    pub terms: usize,
}

/// Sums `Σ w(n) c_n x^n` where `w(n) = 1` (value) or `n` (derivative numerator),
/// stopping by the same rule as the `f64` path.
///
/// Returns `Ok(None)` if the ratios run out before the stopping rule fires.
pub(crate) fn wide_sum(
    ratios: &WideRatios,
    x: f64,
    tol: f64,
    derivative: bool,
) -> Result<Option<WideSum>> {
    let prec = ratios.prec;
    let xw = big(x, prec);
    let mut term = big(ratios.c0, prec);
    let mut sum = if derivative { big(0.0, prec) } else { term.clone() };
    let mut abs_sum = if derivative { 0.0 } else { ratios.c0.abs() };
    let floor = 2f64.powi(-(prec as i32 - 8));
    let mut prev_contrib = if derivative { 0.0 } else { ratios.c0 };
    let mut small_run = 0;
    for n in 1..=ratios.len() {
        term = term.mul(&ratios.get(n).mul(&xw, prec, RM), prec, RM);
        let contrib = if derivative {
            term.mul(&big(n as f64, prec), prec, RM)
        } else {
            term.clone()
        };
        sum = sum.add(&contrib, prec, RM);
        let c = to_f64(&contrib);
        if !c.is_finite() {
            return Err(Error::Numeric(format!("series term overflow at x = {x}")));
        }
        abs_sum += c.abs();
        let s = to_f64(&sum).abs();
        let small = c.abs() < tol * s.max(floor * abs_sum);
        let decaying = prev_contrib != 0.0 && (c / prev_contrib).abs() < 0.5;
        if small && (decaying || c == 0.0) {
            small_run += 1;
        } else {
            small_run = 0;
        }
        prev_contrib = c;
        if small_run >= 2 {
            return Ok(Some(WideSum {
                value: to_f64(&sum),
                last_term: c,
                abs_sum,
                terms: n + 1,
            }));
        }
    }
    Ok(None)
}
