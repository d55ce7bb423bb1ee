use super::{PassRule, ResidualReport, ResidualSample};
use crate::error::{Error, Result};
use crate::math::{beta_continued, ModelParams};

pub const MELLIN_TOL: f64 = 1e-10;

const POLE_MARGIN: f64 = 0.1;
const CHI_TERM_TOL: f64 = 1e-15;
const CHI_MAX_TERMS: usize = 2_000_000;

/// `h(s) = B(ν+α−s+1, β+1)`, continued through the Gamma ratio.
pub fn h(params: &ModelParams, s: f64) -> Result<f64> {
    beta_continued(params.nu + params.alpha - s + 1.0, params.beta + 1.0)
}

/// Nearest pole of `h(s)` or `1/h(s)` to `s`, if any lies within the margin.
fn nearest_pole(params: &ModelParams, s: f64) -> Option<f64> {
    let base = params.nu + params.alpha;
    [base + 1.0, base + params.beta + 2.0]
        .into_iter()
        .filter_map(|first| {
            let n = (s - first).round().max(0.0);
            let pole = first + n;
            ((s - pole).abs() < POLE_MARGIN).then_some(pole)
        })
        .next()
}

/// `χ(s) = Σ (−β)_n / (n! (2ν+α+n+1)(ν+α+n+1−s))` with its absolute-term
/// sum and truncation estimate.
pub fn chi(params: &ModelParams, s: f64) -> (f64, f64, f64) {
    let (nu, alpha, beta) = (params.nu, params.alpha, params.beta);
    let mut coef = 1.0; // (−β)_n / n!
    let mut sum = 0.0;
    let mut abs = 0.0;
    let mut last = 0.0;
    let mut n = 0usize;
    loop {
        let nf = n as f64;
        let t = coef / ((2.0 * nu + alpha + nf + 1.0) * (nu + alpha + nf + 1.0 - s));
        sum += t;
        abs += t.abs();
        last = if t != 0.0 { t } else { last };
        coef *= (nf - beta) / (nf + 1.0);
        n += 1;
        if coef == 0.0 {
            return (sum, abs, 0.0);
        }
        if (t.abs() < CHI_TERM_TOL * sum.abs().max(1e-300) && n > 8) || n >= CHI_MAX_TERMS {
            break;
        }
    }
    // terms decay like n^{−β−3}; add the integral of the fitted tail
    let nf = (n - 1) as f64;
    let tail = last * nf.powf(beta + 3.0) * (nf + 0.5).powf(-beta - 2.0) / (beta + 2.0);
    (sum + tail, abs, tail.abs())
}

/// `count` points avoiding the poles and `s = −ν`.
pub fn default_s_samples(params: &ModelParams, count: usize) -> Vec<f64> {
    let base = params.nu + params.alpha;
    let mut out = Vec::with_capacity(count);
    let mut s = base - 3.03;
    while out.len() < count {
        if nearest_pole(params, s).is_none() && (s + params.nu).abs() >= POLE_MARGIN {
            out.push(s);
        }
        s += 0.37;
    }
    out
}

/// The two forms of the Mellin kernel `H(s)` and the factorization
/// `h(s) − h(−ν) = (ν+s) χ(s)`, as two reports.
pub fn mellin_kernel_identity(params: &ModelParams, s_samples: &[f64]) -> Result<[ResidualReport; 2]> {
    let eps = f64::EPSILON;
    let h_nu = h(params, -params.nu)?;
    let mut kernel = Vec::with_capacity(s_samples.len());
    let mut factor = Vec::with_capacity(s_samples.len());
    for &s in s_samples {
        if let Some(pole) = nearest_pole(params, s) {
            return Err(Error::PoleProximity {
                s,
                pole,
                margin: POLE_MARGIN,
            });
        }
        let hs = h(params, s)?;
        let hs1 = h(params, s + 1.0)?;
        let num = hs - h_nu;
        let num_err = 8.0 * eps * (hs.abs() + h_nu.abs());
        let h43 = num / (params.a * (hs - hs1));
        let h44 = (s - params.nu - params.alpha) * num / (params.a * (params.beta + 1.0) * hs);
        // the shared numerator cancels from the comparison
        let err43 = h43.abs() * 16.0 * eps * (1.0 + (hs.abs() + hs1.abs()) / (hs - hs1).abs());
        kernel.push(ResidualSample::new(vec![s], h43, h44, 0.0, err43 + 16.0 * eps * h44.abs()));

        let (c, c_abs, c_tail) = chi(params, s);
        let rhs = (params.nu + s) * c;
        let rhs_err = (params.nu + s).abs() * (c_tail + 4.0 * eps * c_abs);
        factor.push(ResidualSample::new(vec![s], num, rhs, 0.0, num_err + rhs_err));
    }
    Ok([
        ResidualReport::from_samples("mellin_kernel_forms", kernel, MELLIN_TOL, PassRule::Standard),
        ResidualReport::from_samples("mellin_chi_factorization", factor, MELLIN_TOL, PassRule::Standard),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::ModelClass;
    use crate::verify::Status;

    fn params(nu: f64, alpha: f64, beta: f64) -> ModelParams {
        ModelParams::validate(nu, alpha, beta, -1.0, ModelClass::B).unwrap()
    }

    #[test]
    fn numerator_vanishes_at_minus_nu() {
        let p = params(0.3, 0.5, 1.0);
        assert_eq!(h(&p, -0.3).unwrap() - h(&p, -p.nu).unwrap(), 0.0);
    }

    #[test]
    fn forms_agree_at_point_three() {
        let p = params(0.0, 0.0, 1.0);
        let [k, f] = mellin_kernel_identity(&p, &[0.3]).unwrap();
        assert!(k.residual < 1e-11, "{k:?}");
        assert!(f.residual < 1e-11, "{f:?}");
        // β = 1: h(s) = 1/((1−s)(2−s)), H = (s)(h(s) − 1/2)/(−2 h(s))
        let hs = 1.0 / (0.7 * 1.7);
        assert!((k.samples[0].lhs - 0.3 * (hs - 0.5) / (-2.0 * hs)).abs() < 1e-15);
    }

    #[test]
    fn beta_zero_chi_is_one_term() {
        let p = params(0.3, 0.5, 0.0);
        let (c, _, tail) = chi(&p, 0.2);
        assert_eq!(tail, 0.0);
        assert_eq!(c, 1.0 / ((2.0 * 0.3 + 0.5 + 1.0) * (0.3 + 0.5 + 1.0 - 0.2)));
        let [_, f] = mellin_kernel_identity(&p, &[0.2]).unwrap();
        assert!(f.residual < 1e-13, "{}", f.residual);
    }

    #[test]
    fn non_integer_beta() {
        for beta in [0.5, 1.7, 2.5] {
            let p = params(0.3, 0.5, beta);
            let s = default_s_samples(&p, 20);
            let [k, f] = mellin_kernel_identity(&p, &s).unwrap();
            assert_eq!(k.status, Status::Pass, "{k:?}");
            assert_eq!(f.status, Status::Pass, "beta {beta}: {}", f.residual);
        }
    }

    #[test]
    fn samples_avoid_poles() {
        let p = params(0.3, 0.5, 1.0);
        let s = default_s_samples(&p, 20);
        assert_eq!(s.len(), 20);
        for &x in &s {
            assert!(nearest_pole(&p, x).is_none());
            assert!((x + p.nu).abs() >= 0.1);
        }
        assert!(matches!(
            mellin_kernel_identity(&p, &[p.nu + p.alpha + 2.05]),
            Err(Error::PoleProximity { .. })
        ));
    }
}
