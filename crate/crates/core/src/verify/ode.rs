use super::{PassRule, ResidualReport, ResidualSample};
use crate::coefficients::{hyperbessel_roots, CoefficientTable};
use crate::error::{Error, Result};
use crate::math::{pochhammer, ModelClass, ModelParams};

pub const ODE_TOL: f64 = 1e-11;

/// Termwise form of the order-`k+2` differential equation at `β = k`:
/// `n(n+2ν+α) P_k(n) c_n = a(k+1)(μ)_{k+1} c_{n-1}` for `n = 1..=n_max`.
///
/// `params` fixes the equation; `table` supplies the coefficients under test.
/// Both sides are divided by `c_{n-1}`, so the relative residual is
/// unaffected by underflow of the coefficients.
pub fn ode_coefficient_residual(params: &ModelParams, table: &CoefficientTable, n_max: usize) -> Result<ResidualReport> {
    if params.class != ModelClass::B {
        return Err(Error::Domain("the differential equation is stated for class B".into()));
    }
    let k = params.integer_beta().ok_or(Error::NotInteger { beta: params.beta })?;
    if n_max > table.max_index() {
        return Err(Error::TableExhausted {
            needed: n_max,
            available: table.max_index(),
        });
    }
    let mu = params.mu();
    let roots = match table.roots() {
        Some(r) if r.k == k && r.roots.len() == k as usize && (table.params().mu() - mu).abs() == 0.0 => r.clone(),
        _ => hyperbessel_roots(mu, k)?,
    };
    let rhs = params.a * (k as f64 + 1.0) * pochhammer(mu, k + 1);
    let samples = (1..=n_max)
        .map(|n| {
            let nf = n as f64;
            let pk = roots.eval(nf)?;
            let lhs = nf * (nf + mu - 1.0) * pk * table.ratios()[n];
            // each side carries a few roundings per factor of k
            let err = (8.0 + 4.0 * k as f64) * f64::EPSILON * lhs.abs().max(rhs.abs());
            Ok(ResidualSample::new(vec![nf], lhs, rhs, 0.0, err))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_samples("ode_coefficients", samples, ODE_TOL, PassRule::Standard))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{class_b_recurrence, hyperbessel_coeffs};
    use crate::verify::Status;

    #[test]
    fn k0_reduces_to_inverse_square_factorials() {
        let p = ModelParams::validate(0.0, 0.0, 0.0, -1.0, ModelClass::B).unwrap();
        let t = class_b_recurrence(&p, 30).unwrap();
        let r = ode_coefficient_residual(&p, &t, 30).unwrap();
        assert_eq!(r.status, Status::Pass);
        let mut fact = 1.0;
        for n in 1..=15 {
            fact *= n as f64;
            let want = (-1f64).powi(n as i32) / (fact * fact);
            assert!((t.values()[n] - want).abs() < 1e-14 * want.abs());
        }
    }

    #[test]
    fn k1_recurrence_table_satisfies_ode() {
        let p = ModelParams::validate(0.3, 0.5, 1.0, -1.0, ModelClass::B).unwrap();
        let t = class_b_recurrence(&p, 60).unwrap();
        let r = ode_coefficient_residual(&p, &t, 60).unwrap();
        assert!(r.residual < 1e-11, "{}", r.residual);
        let t = hyperbessel_coeffs(&p, 60).unwrap();
        assert!(ode_coefficient_residual(&p, &t, 60).unwrap().residual < 1e-11);
    }

    #[test]
    fn wrong_sign_of_a_is_order_one() {
        let p = ModelParams::validate(0.0, 0.0, 1.0, -1.0, ModelClass::B).unwrap();
        let q = ModelParams::validate(0.0, 0.0, 1.0, 1.0, ModelClass::B).unwrap();
        let t = class_b_recurrence(&q, 20).unwrap();
        let r = ode_coefficient_residual(&p, &t, 20).unwrap();
        assert!(r.residual > 0.5);
        assert_eq!(r.status, Status::Fail);
    }

    #[test]
    fn non_integer_beta_is_rejected() {
        let p = ModelParams::validate(0.0, 0.0, 0.5, -1.0, ModelClass::B).unwrap();
        let t = class_b_recurrence(&p, 20).unwrap();
        assert!(matches!(ode_coefficient_residual(&p, &t, 20), Err(Error::NotInteger { .. })));
    }
}
