//! Positive real zeros of `F` by geometric scanning and bracketed refinement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{ModelClass, ModelParams};
use crate::series::SeriesFunction;

/// Series tolerance used while locating zeros.
const ZERO_EVAL_TOL: f64 = 1e-14;
/// Scan steps allowed between consecutive zeros.
const MAX_SCAN_STEPS: usize = 10_000;
const MAX_BISECTIONS: usize = 40;
const MAX_SECANT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub start: f64,
    /// `None` picks `0.1 / |c_1|`.
    pub initial_step: Option<f64>,
    pub growth: f64,
    /// Relative refinement tolerance.
    pub refine_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            start: 1e-6,
            initial_step: None,
            growth: 1.05,
            refine_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub params: ModelParams,
    pub lambdas: Vec<f64>,
    pub refine_tol: f64,
    /// `f'(λ_n) = λ_n^ν F'(λ_n)`.
    pub derivative_at_zero: Vec<f64>,
}

impl ZeroSet {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// The first `count` positive zeros of `F`.
pub fn find_zeros(sf: &SeriesFunction, count: usize, scan: &ScanConfig) -> Result<ZeroSet> {
    if count == 0 {
        return Err(Error::Domain("zero count must be at least 1".into()));
    }
    if !(scan.start >= 0.0 && scan.start.is_finite()) {
        return Err(Error::Domain(format!("scan start must be nonnegative, got {}", scan.start)));
    }
    if !(scan.growth >= 1.0 && scan.growth.is_finite()) {
        return Err(Error::Domain(format!("scan growth must be at least 1, got {}", scan.growth)));
    }
    if !(scan.refine_tol > 0.0 && scan.refine_tol < 1e-3) {
        return Err(Error::Domain(format!("refine_tol out of range: {}", scan.refine_tol)));
    }
    let mut step = match scan.initial_step {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::Domain(format!("initial step must be positive, got {h}"))),
        None => {
            let c1 = sf.table().values().get(1).copied().unwrap_or(0.0);
            0.1 / c1.abs().max(f64::MIN_POSITIVE)
        }
    };
    let f = |z: f64| sf.eval_F(z, ZERO_EVAL_TOL).map(|e| e.value);

    let mut lambdas = Vec::with_capacity(count);
    let mut derivs = Vec::with_capacity(count);
    let mut z = scan.start;
    let mut fz = f(z)?;
    let mut steps = 0;
    while lambdas.len() < count {
        steps += 1;
        if steps > MAX_SCAN_STEPS {
            return Err(Error::ScanExhausted {
                found: lambdas.len(),
                requested: count,
                reached: z,
            });
        }
        if let Some(&last) = lambdas.last() {
            let gap = match lambdas.len() {
                1 => last - scan.start,
                n => last - lambdas[n - 2],
            };
            step = if lambdas.len() >= 2 { step.max(0.125 * gap) } else { step }.min(0.25 * gap);
        }
        let zn = z + step;
        let fn_ = match f(zn) {
            Ok(v) => v,
            Err(Error::Numeric(_)) => {
                return Err(Error::ScanExhausted {
                    found: lambdas.len(),
                    requested: count,
                    reached: z,
                })
            }
            Err(e) => return Err(e),
        };
        if fz == 0.0 || fz.signum() != fn_.signum() {
            let (a, fa) = if fz == 0.0 { (z - step * 1e-3, f(z - step * 1e-3)?) } else { (z, fz) };
            let lambda = refine(&f, a, fa, zn, fn_, scan.refine_tol)?;
            let slope = sf.eval_F_prime(lambda, ZERO_EVAL_TOL)?.value;
            let scale = fa.abs().max(fn_.abs()) / (zn - a);
            if !(slope.abs() > 1e-10 * scale) {
                return Err(Error::DerivativeVanishes {
                    index: lambdas.len() + 1,
                    at: lambda,
                });
            }
            derivs.push(sf.prefactor(lambda)? * slope);
            steps = 0;
            lambdas.push(lambda);
            step *= scan.growth;
        }
        z = zn;
        fz = fn_;
    }
    Ok(ZeroSet {
        params: *sf.params(),
        lambdas,
        refine_tol: scan.refine_tol,
        derivative_at_zero: derivs,
    })
}

/// Bisection down to a short bracket, then Illinois-modified secant.
fn refine<G>(f: &G, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, tol: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    for _ in 0..MAX_BISECTIONS {
        if (b - a) <= 1e-3 * b.abs() {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
            fb = fm;
        }
    }
    let mut side = 0i8;
    for _ in 0..MAX_SECANT {
        let width = b - a;
        if width <= tol * b.abs() {
            break;
        }
        let mut c = b - fb * (b - a) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
        // a secant step that lands within tolerance of an end closes the bracket
        let near = tol * c.abs();
        if (c - a).abs() <= near || (b - c).abs() <= near {
            let probe = if (c - a).abs() <= near { (c + near).min(b) } else { (c - near).max(a) };
            let fp = f(probe)?;
            if fp.signum() != fc.signum() {
                return Ok(if fc.abs() <= fp.abs() { c } else { probe });
            }
        }
    }
    Ok(if fa.abs() < fb.abs() { a } else { b })
}

/// Growth-rate summary of a zero set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummabilityReport {
    /// Exponent `q` in `Σ λ_n^{-q}`: 1 for class B, 2 for class A.
    pub exponent: u32,
    /// Fitted slope of `ln λ_n` against `ln n`.
    pub slope: f64,
    pub partial_sum: f64,
    pub tail_estimate: f64,
    /// `q · slope ≤ 1`: the sum looks divergent.
    pub divergent: bool,
    pub zeros_used: usize,
    /// Relative change of the partial sum over the last half of the zeros.
    pub last_half_change: f64,
}

/// Log-log growth fit over the upper half of the zeros, with a tail estimate
/// for `Σ λ_n^{-q}`.
pub fn summability_diagnostic(zs: &ZeroSet) -> Result<SummabilityReport> {
    let k = zs.lambdas.len();
    if k < 5 {
        return Err(Error::InsufficientZeros { needed: 5, available: k });
    }
    let q = match zs.params.class {
        ModelClass::B => 1,
        ModelClass::A => 2,
    };
    let lo = if k >= 10 { k / 2 } else { 1 };
    let pts: Vec<(f64, f64)> = (lo..=k).map(|n| ((n as f64).ln(), zs.lambdas[n - 1].ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let terms: Vec<f64> = zs.lambdas.iter().map(|l| l.powi(-(q as i32))).collect();
    let partial_sum: f64 = terms.iter().sum();
    let half: f64 = terms[..k / 2].iter().sum();
    let decay = q as f64 * slope;
    let divergent = decay <= 1.0;
    let tail_estimate = if divergent {
        f64::INFINITY
    } else {
        terms[k - 1] * k as f64 / (decay - 1.0)
    };
    Ok(SummabilityReport {
        exponent: q,
        slope,
        partial_sum,
        tail_estimate,
        divergent,
        zeros_used: k,
        last_half_change: (partial_sum - half) / partial_sum,
    })
}
