use rayon::prelude::*;

use super::{node_values, weighted_sum, PassRule, ResidualReport, ResidualSample};
use crate::error::{Error, Result};
use crate::math::ModelClass;
use crate::quadrature::{gauss_jacobi_rule, QuadratureRule, DEFAULT_M};
use crate::series::SeriesFunction;

pub const INTEGRAL_EQ_TOL: f64 = 1e-10;

const EVAL_TOL: f64 = 1e-14;

/// `count` points spread over `(0, 4 λ_1]`.
pub fn default_z_samples(lambda1: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|k| 4.0 * lambda1 * (k as f64 - 0.3) / count as f64).collect()
}

struct Rules {
    coarse: QuadratureRule,
    fine: QuadratureRule,
}

impl Rules {
    fn new(p: f64, q: f64, m: usize) -> Result<Self> {
        Ok(Rules {
            coarse: gauss_jacobi_rule(p, q, m)?,
            fine: gauss_jacobi_rule(p, q, 2 * m)?,
        })
    }

    /// `∫₀¹ g(t) F(z t) t^p (1-t)^q dt` from the fine rule, with an error
    /// estimate from the coarse one plus the series bounds.
    fn integral(&self, sf: &SeriesFunction, z: f64, g: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
        let mut out = [(0.0, 0.0); 2];
        for (k, rule) in [&self.coarse, &self.fine].into_iter().enumerate() {
            let (vals, bound) = node_values(sf, z, rule, EVAL_TOL)?;
            let (s, abs) = weighted_sum(rule, rule.nodes.iter().zip(&vals).map(|(&t, &v)| g(t) * v));
            let gmax = rule.nodes.iter().map(|&t| g(t).abs()).fold(0.0, f64::max);
            let mass: f64 = rule.weights.iter().sum();
            out[k] = (s, bound * gmax * mass + 4.0 * f64::EPSILON * abs);
        }
        Ok((out[1].0, (out[1].0 - out[0].0).abs() + out[1].1))
    }
}

/// Residual of the class-B integral equation
/// `a z ∫ t^{ν+α+1}(1-t)^β f(zt) = (az+1) ∫ t^{ν+α}(1-t)^β f(zt) − B(μ,β+1) f(z)`.
pub fn integral_eq_residual_b(sf: &SeriesFunction, z_samples: &[f64]) -> Result<ResidualReport> {
    integral_eq_residual_b_with(sf, z_samples, DEFAULT_M)
}

pub fn integral_eq_residual_b_with(sf: &SeriesFunction, z_samples: &[f64], m: usize) -> Result<ResidualReport> {
    let p = *sf.params();
    if p.class != ModelClass::B {
        return Err(Error::Domain("class-B integral equation needs a class-B model".into()));
    }
    check_samples(z_samples)?;
    let w = p.weight_exponent();
    let upper = Rules::new(w + 1.0, p.beta, m)?;
    let lower = Rules::new(w, p.beta, m)?;
    let b = p.beta_constant();
    let samples = z_samples
        .par_iter()
        .map(|&z| {
            let pre = sf.prefactor(z)?;
            let (i1, e1) = upper.integral(sf, z, |_| 1.0)?;
            let (i0, e0) = lower.integral(sf, z, |_| 1.0)?;
            let fz = sf.eval_F(z, EVAL_TOL)?;
            let lhs = pre * p.a * z * i1;
            let rhs0 = pre * (p.a * z + 1.0) * i0;
            let rhs1 = pre * b * fz.value;
            let rhs = rhs0 - rhs1;
            let err = pre.abs()
                * ((p.a * z).abs() * e1 + (p.a * z + 1.0).abs() * e0 + b * fz.error_bound)
                + 4.0 * f64::EPSILON * (lhs.abs() + rhs0.abs() + rhs1.abs());
            Ok(ResidualSample::new(vec![z], lhs, rhs, rhs1.abs(), err))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_samples(
        "integral_equation_b",
        samples,
        INTEGRAL_EQ_TOL,
        PassRule::Standard,
    ))
}

/// Residual of the class-A integral equation
/// `a z² ∫ t^{ν+α}(t²−1)(1-t)^β f(zt) = 2[∫ t^{ν+α}(1-t)^β f(zt) − f(z) B(μ,β+1)]`.
pub fn integral_eq_residual_a(sf: &SeriesFunction, z_samples: &[f64]) -> Result<ResidualReport> {
    integral_eq_residual_a_with(sf, z_samples, DEFAULT_M)
}

pub fn integral_eq_residual_a_with(sf: &SeriesFunction, z_samples: &[f64], m: usize) -> Result<ResidualReport> {
    let p = *sf.params();
    if p.class != ModelClass::A {
        return Err(Error::Domain("class-A integral equation needs a class-A model".into()));
    }
    check_samples(z_samples)?;
    let rules = Rules::new(p.weight_exponent(), p.beta, m)?;
    let b = p.beta_constant();
    let samples = z_samples
        .par_iter()
        .map(|&z| {
            let pre = sf.prefactor(z)?;
            let (i2, e2) = rules.integral(sf, z, |t| t * t - 1.0)?;
            let (i0, e0) = rules.integral(sf, z, |_| 1.0)?;
            let fz = sf.eval_F(z, EVAL_TOL)?;
            let lhs = pre * p.a * z * z * i2;
            let rhs0 = 2.0 * pre * i0;
            let rhs1 = 2.0 * pre * b * fz.value;
            let rhs = rhs0 - rhs1;
            let err = pre.abs() * ((p.a * z * z).abs() * e2 + 2.0 * e0 + 2.0 * b * fz.error_bound)
                + 4.0 * f64::EPSILON * (lhs.abs() + rhs0.abs() + rhs1.abs());
            Ok(ResidualSample::new(vec![z], lhs, rhs, rhs1.abs(), err))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_samples(
        "integral_equation_a",
        samples,
        INTEGRAL_EQ_TOL,
        PassRule::Standard,
    ))
}

fn check_samples(z: &[f64]) -> Result<()> {
    if z.is_empty() {
        return Err(Error::Domain("no sample points".into()));
    }
    if let Some(bad) = z.iter().find(|&&z| !(z > 0.0 && z.is_finite())) {
        return Err(Error::Domain(format!("sample points must be positive, got {bad}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{class_a_coeffs, class_b_recurrence};
    use crate::math::ModelParams;
    use crate::verify::Status;

    fn sf(nu: f64, alpha: f64, beta: f64, a: f64, class: ModelClass) -> SeriesFunction {
        let p = ModelParams::validate(nu, alpha, beta, a, class).unwrap();
        SeriesFunction::new(match class {
            ModelClass::B => class_b_recurrence(&p, 64).unwrap(),
            ModelClass::A => class_a_coeffs(&p, 64).unwrap(),
        })
    }

    #[test]
    fn class_b_solution_satisfies_equation() {
        let r = integral_eq_residual_b(&sf(0.3, 0.5, 1.0, -1.0, ModelClass::B), &[0.7]).unwrap();
        assert!(r.residual < 1e-10, "{r:?}");
        assert_eq!(r.status, Status::Pass);
    }

    #[test]
    fn class_a_solution_satisfies_equation() {
        let r = integral_eq_residual_a(&sf(0.3, 0.5, 1.0, -1.0, ModelClass::A), &[0.7, 2.0]).unwrap();
        assert!(r.residual < 1e-10, "{r:?}");
        assert_eq!(r.status, Status::Pass);
    }

    #[test]
    fn vanishing_near_origin() {
        let s = sf(0.0, 0.5, 0.5, -1.0, ModelClass::B);
        let r = integral_eq_residual_b(&s, &[1e-6]).unwrap();
        let scale = s.params().beta_constant();
        assert!(r.max_abs_residual < 1e-12 * scale, "{r:?}");
    }

    #[test]
    fn class_mismatch_is_rejected() {
        let s = sf(0.0, 0.0, 0.0, -1.0, ModelClass::B);
        assert!(matches!(integral_eq_residual_a(&s, &[1.0]), Err(Error::Domain(_))));
        assert!(matches!(integral_eq_residual_b(&s, &[]), Err(Error::Domain(_))));
        assert!(matches!(integral_eq_residual_b(&s, &[-1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn perturbed_tables_are_detected() {
        for class in [ModelClass::A, ModelClass::B] {
            let p = ModelParams::validate(0.3, 0.5, 1.0, -1.0, class).unwrap();
            let mut t = match class {
                ModelClass::B => class_b_recurrence(&p, 64).unwrap(),
                ModelClass::A => class_a_coeffs(&p, 64).unwrap(),
            };
            t.scale_coefficient(3, 1.01).unwrap();
            let s = SeriesFunction::new(t);
            let z = default_z_samples(2.0, 10);
            let r = match class {
                ModelClass::B => integral_eq_residual_b(&s, &z),
                ModelClass::A => integral_eq_residual_a(&s, &z),
            }
            .unwrap();
            assert!(r.residual > 1e-4, "{class}: {}", r.residual);
            assert_eq!(r.status, Status::Fail);
        }
    }
}
