//! Parameter validation and scalar special functions.
//!
//! Everything here works in `f64`. Beta values are formed in log space since
//! the coefficient recurrences call them with first arguments in the hundreds.

use serde::{Deserialize, Serialize};

use crate::error::{Constraint, Error, Result};

/// The two function families: `A` (even, order < 2) and `B` (order < 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelClass {
    A,
    B,
}

impl ModelClass {
    /// Power map exponent: terms of `F` are `c_n z^{p n}`.
    pub fn power(self) -> u32 {
        match self {
            ModelClass::A => 2,
            ModelClass::B => 1,
        }
    }
}

impl std::str::FromStr for ModelClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(ModelClass::A),
            "B" | "b" => Ok(ModelClass::B),
            other => Err(Error::Config(format!("unknown class '{other}', expected A or B"))),
        }
    }
}

impl std::fmt::Display for ModelClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelClass::A => f.write_str("A"),
            ModelClass::B => f.write_str("B"),
        }
    }
}

/// Validated parameter tuple `(nu, alpha, beta, a, class)`.
///
/// `a` is `F'(0)` for class B and `F''(0)` for class A.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    pub class: ModelClass,
}

impl ModelParams {
    /// Checks the strict integrability constraints and returns the tuple.
    pub fn validate(nu: f64, alpha: f64, beta: f64, a: f64, class: ModelClass) -> Result<Self> {
        if ![nu, alpha, beta, a].iter().all(|v| v.is_finite()) {
            return Err(Error::ConstraintViolation {
                which: Constraint::Finite,
            });
        }
        let p = ModelParams {
            nu,
            alpha,
            beta,
            a,
            class,
        };
        if p.mu() <= 0.0 {
            return Err(Error::ConstraintViolation {
                which: Constraint::MuPositive,
            });
        }
        if beta <= -1.0 {
            return Err(Error::ConstraintViolation {
                which: Constraint::BetaGtMinus1,
            });
        }
        if a == 0.0 {
            return Err(Error::ConstraintViolation {
                which: Constraint::ANonzero,
            });
        }
        Ok(p)
    }

    /// `mu = 2 nu + alpha + 1`.
    pub fn mu(&self) -> f64 {
        2.0 * self.nu + self.alpha + 1.0
    }

    /// Quadrature exponent at `t = 0` once the `t^{2 nu}` of `f(λt)²` is absorbed.
    pub fn weight_exponent(&self) -> f64 {
        2.0 * self.nu + self.alpha
    }

    /// `B(mu, beta + 1)`, the constant of both integral equations.
    pub fn beta_constant(&self) -> f64 {
        beta_fn(self.mu(), self.beta + 1.0).expect("validated parameters")
    }

    /// `Some(k)` when `beta` lies within `1e-9` of a nonnegative integer.
    pub fn integer_beta(&self) -> Option<u32> {
        let k = self.beta.round();
        if k >= 0.0 && (self.beta - k).abs() <= 1e-9 && k < u32::MAX as f64 {
            Some(k as u32)
        } else {
            None
        }
    }
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
const LN2_HI: f64 = std::f64::consts::LN_2;
const LN2_LO: f64 = 2.319_046_813_846_299_6e-17;

/// Error-free `a + b = s + e`.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// `ln x` as an unevaluated sum `hi + lo` for normal positive `x`.
fn ln_double(x: f64) -> (f64, f64) {
    let bits = x.to_bits();
    let mut e = ((bits >> 52) & 0x7ff) as i64 - 1023;
    let mut m = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | (1023 << 52));
    if m > std::f64::consts::SQRT_2 {
        m *= 0.5;
        e += 1;
    }
    let ef = e as f64;
    let p = ef * LN2_HI;
    let p_err = ef.mul_add(LN2_HI, -p);
    let (hi, err) = two_sum(p, m.ln());
    let (hi, lo) = two_sum(hi, err + p_err + ef * LN2_LO);
    (hi, lo)
}

/// Stirling correction `ln Γ(x) - [(x - 1/2) ln x - x + ln √(2π)]` for `x >= 10`.
fn stirling_tail(x: f64) -> f64 {
    // B_{2k} / (2k (2k - 1))
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let r = 1.0 / (x * x);
    let mut acc = 0.0;
    for c in C.iter().rev() {
        acc = acc * r + c;
    }
    acc / x
}

/// Natural log of the Gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    if x >= 10.0 {
        return Ok(log_gamma_large(x));
    }
    // shift into the Stirling range: Γ(x) = Γ(x + k) / (x (x+1) ... (x+k-1))
    let k = (10.0 - x).ceil() as i32;
    let mut prod = 1.0;
    for i in 0..k {
        prod *= x + i as f64;
    }
    Ok(log_gamma_large(x + k as f64) - prod.ln())
}

fn log_gamma_large(x: f64) -> f64 {
    let (lh, ll) = ln_double(x);
    let a = x - 0.5;
    let p = a * lh;
    let p_err = a.mul_add(lh, -p) + a * ll;
    let (s, e) = two_sum(p, -x);
    s + (e + p_err + HALF_LN_2PI + stirling_tail(x))
}

/// `ln |Γ(x)|` and the sign of `Γ(x)` for any real `x` that is not a pole.
///
/// Negative arguments go through the reflection formula.
pub fn log_gamma_signed(x: f64) -> Result<(f64, f64)> {
    if x > 0.0 {
        return Ok((log_gamma(x)?, 1.0));
    }
    if x == x.floor() {
        return Err(Error::Domain(format!("Gamma has a pole at {x}")));
    }
    // Γ(x) Γ(1 - x) = π / sin(π x)
    let s = sin_pi(x);
    let lg = log_gamma(1.0 - x)?;
    Ok((std::f64::consts::PI.ln() - s.abs().ln() - lg, s.signum()))
}

/// `sin(π x)` with the argument reduced exactly first.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).floor();
    // r in [0, 2)
    let (r, sign) = if r >= 1.0 { (r - 1.0, -1.0) } else { (r, 1.0) };
    let r = if r > 0.5 { 1.0 - r } else { r };
    sign * (std::f64::consts::PI * r).sin()
}

/// `ln B(x, y)` for positive arguments.
pub fn log_beta(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0) || !(y > 0.0) {
        return Err(Error::Domain(format!(
            "Beta requires positive arguments, got ({x}, {y})"
        )));
    }
    Ok(log_gamma(x)? + log_gamma(y)? - log_gamma(x + y)?)
}

/// Euler Beta function `B(x, y) = Γ(x)Γ(y)/Γ(x+y)`.
pub fn beta_fn(x: f64, y: f64) -> Result<f64> {
    log_beta(x, y).map(f64::exp)
}

/// `B(x, y)` continued through the Gamma ratio to any `x`, `y`, `x + y` off the poles.
pub fn beta_continued(x: f64, y: f64) -> Result<f64> {
    let (lx, sx) = log_gamma_signed(x)?;
    let (ly, sy) = log_gamma_signed(y)?;
    let xy = x + y;
    if xy <= 0.0 && xy == xy.floor() {
        // 1/Γ vanishes at its poles
        return Ok(0.0);
    }
    let (lxy, sxy) = log_gamma_signed(xy)?;
    Ok(sx * sy * sxy * (lx + ly - lxy).exp())
}

/// Rising factorial `(b)_j = b (b+1) ... (b+j-1)`, with `(b)_0 = 1`.
pub fn pochhammer(b: f64, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (b + i as f64))
}

/// `ln ((b)_j)` for `b > 0`, through log-Gamma.
pub fn log_pochhammer(b: f64, j: u32) -> Result<f64> {
    Ok(log_gamma(b + j as f64)? - log_gamma(b)?)
}
