use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{node_values, weighted_sum, PassRule, ResidualReport, ResidualSample};
use crate::error::{Error, Result};
use crate::math::ModelClass;
use crate::quadrature::{gauss_jacobi_rule, QuadratureRule, MAX_NODES};
use crate::series::SeriesFunction;
use crate::zeros::ZeroSet;

const EVAL_TOL: f64 = 1e-14;
const MIN_TERMS: usize = 5;

/// Truncated expansion of the kernel `q` over the zeros.
///
/// Class B: `q(z) = Σ W_n [1/(z−λ_n) + 1/λ_n]` with `W_n = A_n / f'(λ_n)²`.
/// Class A: `q(z) = Σ W_n [1/(z²−λ_n²) + 1/λ_n²]` with `W_n = 4 λ_n² A_n / f'(λ_n)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSeries {
    pub class: ModelClass,
    pub m: usize,
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
    /// Relative quadrature error of each `A_n`.
    pub norm_errors: Vec<f64>,
    pub derivatives: Vec<f64>,
    pub weights: Vec<f64>,
    /// Partial sums of `-q'(0)` (class B) or `-q''(0)` (class A).
    pub constant_partial_sums: Vec<f64>,
}

impl KernelSeries {
    /// Terms of the constant series: `W_n/λ_n²` or `2 W_n/λ_n⁴`.
    pub fn constant_terms(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.lambdas)
            .map(|(w, l)| match self.class {
                ModelClass::B => w / (l * l),
                ModelClass::A => 2.0 * w / l.powi(4),
            })
            .collect()
    }

    /// Terms of `−(q(z) − q(ζ)) / (z − ζ)` (class B) or `/(z² − ζ²)` (class A).
    pub fn difference_terms(&self, z: f64, zeta: f64) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.lambdas)
            .map(|(w, &l)| match self.class {
                ModelClass::B => w / ((z - l) * (zeta - l)),
                ModelClass::A => w / ((z * z - l * l) * (zeta * zeta - l * l)),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub series: KernelSeries,
    /// `q'(0) = −B(μ,β+1)` (class B) or `q''(0) = −2B(μ,β+1)` (class A).
    pub constant: ResidualReport,
    /// The kernel representation of `∫₀¹ f(zt) f(ζt) t^α (1-t)^β dt`.
    pub identity: ResidualReport,
}

/// Truncation estimate for `Σ_{n>M} t_n`.
///
/// Two tail models are evaluated from the last terms: the plain power law
/// `t_M M / (s − 1)` and a shifted power law `C (n + δ)^{-s}` fitted through
/// `t_{M/2}`, `t_{3M/4}`, `t_M` and summed from `M + ½`. The result is the
/// shifted estimate plus the disagreement between the two.
pub(crate) fn tail_estimate(terms: &[f64]) -> f64 {
    let m = terms.len();
    if m < 4 || terms[m - 1] == 0.0 {
        return f64::INFINITY;
    }
    let plain = plain_tail(terms);
    match shifted_tail(terms) {
        Some(shifted) if plain.is_finite() => shifted + (shifted - plain).abs(),
        _ => plain,
    }
}

fn plain_tail(terms: &[f64]) -> f64 {
    let m = terms.len();
    let lo = (3 * m / 4).min(m - 2).max(1);
    let pts: Vec<(f64, f64)> = (lo..=m)
        .filter(|&n| terms[n - 1] != 0.0)
        .map(|n| ((n as f64).ln(), terms[n - 1].abs().ln()))
        .collect();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let s = -sxy / sxx;
    if s <= 1.0 {
        return f64::INFINITY;
    }
    terms[m - 1].abs() * m as f64 / (s - 1.0)
}

fn shifted_tail(terms: &[f64]) -> Option<f64> {
    let m = terms.len();
    let (n1, n2, n3) = (m / 2, 3 * m / 4, m);
    let t = |n: usize| terms[n - 1].abs();
    if n1 < 1 || n1 >= n2 || t(n1) == 0.0 || t(n2) == 0.0 {
        return None;
    }
    let (l12, l23) = ((t(n1) / t(n2)).ln(), (t(n2) / t(n3)).ln());
    if !(l12 > 0.0 && l23 > 0.0) {
        return None;
    }
    let target = l12 / l23;
    let (f1, f2, f3) = (n1 as f64, n2 as f64, n3 as f64);
    let g = |d: f64| ((f2 + d) / (f1 + d)).ln() / ((f3 + d) / (f2 + d)).ln() - target;
    // g decreases in δ on (−n1, ∞)
    let (mut lo, mut hi) = (-f1 + 0.5, 4.0 * f3);
    if g(lo) * g(hi) > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let d = 0.5 * (lo + hi);
    let s = l23 / ((f3 + d) / (f2 + d)).ln();
    if s <= 1.0 {
        return None;
    }
    Some(t(n3) * (f3 + d).powf(s) * (f3 + 0.5 + d).powf(1.0 - s) / (s - 1.0))
}

/// Kernel constant and kernel identity at `M = m_terms` zeros.
///
/// `A_n` uses weight exponents `(2ν+α, β)` with `F(λ_n t)²`; the rule size is
/// `max(quad_m, 4M)` (at most 256) and the doubled rule gives its error.
pub fn kernel_checks(
    sf: &SeriesFunction,
    zs: &ZeroSet,
    m_terms: usize,
    pairs: &[(f64, f64)],
    quad_m: usize,
) -> Result<KernelReport> {
    if m_terms < MIN_TERMS || m_terms > zs.lambdas.len() {
        return Err(Error::InsufficientZeros {
            needed: m_terms.max(MIN_TERMS),
            available: zs.lambdas.len(),
        });
    }
    let p = *sf.params();
    for &(z, zeta) in pairs {
        if !(z > 0.0 && zeta > 0.0) || z == zeta {
            return Err(Error::Domain(format!("kernel samples must be distinct and positive, got ({z}, {zeta})")));
        }
        if zs.lambdas[..m_terms].iter().any(|&l| (l - z).abs() < 1e-8 * l || (l - zeta).abs() < 1e-8 * l) {
            return Err(Error::Domain(format!("kernel sample ({z}, {zeta}) sits on a zero")));
        }
    }
    let m = quad_m.max(4 * m_terms).min(MAX_NODES / 2);
    let coarse = gauss_jacobi_rule(p.weight_exponent(), p.beta, m)?;
    let fine = gauss_jacobi_rule(p.weight_exponent(), p.beta, 2 * m)?;
    let lambdas = zs.lambdas[..m_terms].to_vec();
    let derivatives = zs.derivative_at_zero[..m_terms].to_vec();

    let norms: Vec<(f64, f64)> = lambdas
        .par_iter()
        .map(|&l| {
            let pre2 = sf.prefactor(l)?.powi(2);
            let a = |rule: &QuadratureRule| -> Result<f64> {
                let (v, _) = node_values(sf, l, rule, EVAL_TOL)?;
                Ok(pre2 * weighted_sum(rule, v.iter().map(|x| x * x)).0)
            };
            let (ac, af) = (a(&coarse)?, a(&fine)?);
            Ok((af, ((af - ac) / af).abs() + 8.0 * f64::EPSILON))
        })
        .collect::<Result<_>>()?;
    let weights: Vec<f64> = lambdas
        .iter()
        .zip(&norms)
        .zip(&derivatives)
        .map(|((&l, &(a, _)), &d)| match p.class {
            ModelClass::B => a / (d * d),
            ModelClass::A => 4.0 * l * l * a / (d * d),
        })
        .collect();
    let mut series = KernelSeries {
        class: p.class,
        m: m_terms,
        lambdas,
        norms: norms.iter().map(|x| x.0).collect(),
        norm_errors: norms.iter().map(|x| x.1).collect(),
        derivatives,
        weights,
        constant_partial_sums: Vec::new(),
    };

    // constant
    let terms = series.constant_terms();
    let mut acc = 0.0;
    series.constant_partial_sums = terms
        .iter()
        .map(|t| {
            acc += t;
            acc
        })
        .collect();
    let factor = match p.class {
        ModelClass::B => 1.0,
        ModelClass::A => 2.0,
    };
    let target = factor * p.beta_constant();
    let sum = acc;
    let err = tail_estimate(&terms) + propagated(&terms, &series.norm_errors) + 4.0 * f64::EPSILON * m_terms as f64 * sum.abs();
    let constant = ResidualReport::from_samples(
        match p.class {
            ModelClass::B => "kernel_q_prime_0",
            ModelClass::A => "kernel_q_second_0",
        },
        vec![ResidualSample::new(vec![m_terms as f64], -sum, -target, 0.0, err)],
        0.0,
        PassRule::WithinEstimate,
    );

    // identity
    let samples = pairs
        .par_iter()
        .map(|&(z, zeta)| {
            let fz = sf.eval_f(z, EVAL_TOL)?;
            let fzeta = sf.eval_f(zeta, EVAL_TOL)?;
            let dt = series.difference_terms(z, zeta);
            let lhs = fz * fzeta * dt.iter().sum::<f64>();
            let tail = (fz * fzeta).abs() * tail_estimate(&dt);
            let prop = (fz * fzeta).abs() * propagated(&dt, &series.norm_errors);
            let pre = sf.prefactor(z)? * sf.prefactor(zeta)?;
            let integral = |rule: &QuadratureRule| -> Result<f64> {
                let (a, _) = node_values(sf, z, rule, EVAL_TOL)?;
                let (b, _) = node_values(sf, zeta, rule, EVAL_TOL)?;
                Ok(pre * weighted_sum(rule, a.iter().zip(&b).map(|(x, y)| x * y)).0)
            };
            let (ic, rhs) = (integral(&coarse)?, integral(&fine)?);
            let err = tail + prop + (rhs - ic).abs() + 8.0 * f64::EPSILON * (lhs.abs() + rhs.abs());
            Ok(ResidualSample::new(vec![z, zeta], lhs, rhs, 0.0, err))
        })
        .collect::<Result<Vec<_>>>()?;
    let identity = ResidualReport::from_samples("kernel_identity", samples, 0.0, PassRule::WithinEstimate);
    Ok(KernelReport {
        series,
        constant,
        identity,
    })
}

/// `Σ |t_n| e_n` for relative errors `e_n` in the weights.
fn propagated(terms: &[f64], rel: &[f64]) -> f64 {
    terms.iter().zip(rel).map(|(t, e)| t.abs() * e).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{class_a_coeffs, class_b_recurrence};
    use crate::math::ModelParams;
    use crate::verify::Status;
    use crate::zeros::{find_zeros, ScanConfig};

    fn setup(nu: f64, alpha: f64, beta: f64, a: f64, class: ModelClass, k: usize) -> (SeriesFunction, ZeroSet) {
        let p = ModelParams::validate(nu, alpha, beta, a, class).unwrap();
        let sf = SeriesFunction::new(match class {
            ModelClass::B => class_b_recurrence(&p, 64).unwrap(),
            ModelClass::A => class_a_coeffs(&p, 64).unwrap(),
        });
        let zs = find_zeros(&sf, k, &ScanConfig::default()).unwrap();
        (sf, zs)
    }

    #[test]
    fn tail_of_power_laws() {
        for (shift, s) in [(0.0, 3.0), (-0.5, 2.0), (-0.25, 2.0), (3.0, 2.5), (0.4, 1.5)] {
            let t = |n: usize| (n as f64 + shift).powf(-s);
            let terms: Vec<f64> = (1..=40).map(t).collect();
            let est = tail_estimate(&terms);
            let exact: f64 = (41..2_000_000).map(t).sum::<f64>() + (2e6f64 + shift).powf(1.0 - s) / (s - 1.0);
            assert!(est > exact && est < 1.15 * exact, "shift {shift}, s {s}: {est} vs {exact}");
        }
        assert!(tail_estimate(&[1.0, 0.9, 0.8, 0.75, 0.7, 0.69, 0.68, 0.675]).is_infinite());
    }

    #[test]
    fn bessel_case_class_b() {
        let (sf, zs) = setup(0.0, 0.0, 0.0, -1.0, ModelClass::B, 40);
        let r = kernel_checks(&sf, &zs, 40, &[(0.5, 0.9), (0.5, 0.501)], 48).unwrap();
        // W_n = λ_n here, so the partial sums of Σ 1/λ_n rise towards B(1,1) = 1
        assert!(r.series.constant_partial_sums.windows(2).all(|w| w[1] > w[0] && w[1] < 1.0));
        for (w, l) in r.series.weights.iter().zip(&r.series.lambdas) {
            assert!((w - l).abs() < 1e-9 * l);
        }
        assert_eq!(r.constant.status, Status::Pass, "{:?}", r.constant);
        assert_eq!(r.identity.status, Status::Pass, "{:?}", r.identity);
        assert!(r.identity.samples.iter().all(|s| s.lhs.is_finite()));
    }

    #[test]
    fn bessel_case_class_a() {
        let (sf, zs) = setup(0.0, 1.0, 0.0, -2.0, ModelClass::A, 40);
        let r = kernel_checks(&sf, &zs, 40, &[(0.5, 0.9), (0.3, 0.7)], 48).unwrap();
        assert_eq!(r.constant.status, Status::Pass, "{:?}", r.constant);
        assert_eq!(r.identity.status, Status::Pass, "{:?}", r.identity);
    }

    #[test]
    fn needs_enough_zeros() {
        let (sf, zs) = setup(0.0, 0.0, 0.0, -1.0, ModelClass::B, 6);
        assert!(matches!(kernel_checks(&sf, &zs, 10, &[(0.5, 0.9)], 48), Err(Error::InsufficientZeros { .. })));
        assert!(matches!(kernel_checks(&sf, &zs, 4, &[(0.5, 0.9)], 48), Err(Error::InsufficientZeros { .. })));
        assert!(matches!(kernel_checks(&sf, &zs, 6, &[(0.5, 0.5)], 48), Err(Error::Domain(_))));
    }
}
