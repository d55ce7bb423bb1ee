use super::{PassRule, ResidualReport, ResidualSample};
use crate::error::{Error, Result};
use crate::math::{ModelClass, ModelParams};
use crate::series::SeriesFunction;

pub const BESSEL_TOL: f64 = 1e-10;

const SAMPLES: usize = 20;
const X_MAX: f64 = 8.0;

/// `Γ(v+1) (x/2)^{-v} J_v(x) = Σ_k (−x²/4)^k / (k! (v+1)_k)`, with the sum
/// of absolute terms.
pub fn normalized_bessel(v: f64, x: f64) -> (f64, f64) {
    let q = -0.25 * x * x;
    let (mut term, mut sum, mut abs) = (1.0f64, 1.0f64, 1.0f64);
    for k in 1..500 {
        let kf = k as f64;
        term *= q / (kf * (v + kf));
        sum += term;
        abs += term.abs();
        if term.abs() < 1e-17 * abs && kf > x {
            break;
        }
    }
    (sum, abs)
}

/// Ratio of `F` to its Bessel closed form over 20 points.
///
/// Class B compares against the normalized `J_{μ−1}(√(−4aμz))`, class A
/// against the normalized `J_{μ/2−1}(√(−aμ) z)`. `params` (with `β = 0`,
/// `a < 0`) fixes the comparison function; `sf` is the series under test.
/// Each sample compares `F(z)/Φ(z)` with the mean ratio.
pub fn bessel_reduction_residual(params: &ModelParams, sf: &SeriesFunction) -> Result<ResidualReport> {
    if params.beta != 0.0 {
        return Err(Error::Domain(format!("Bessel reduction needs beta = 0, got {}", params.beta)));
    }
    if params.a >= 0.0 {
        return Err(Error::Domain(format!("Bessel reduction needs a < 0, got {}", params.a)));
    }
    if sf.params().class != params.class {
        return Err(Error::Domain("series and comparison belong to different classes".into()));
    }
    let mu = params.mu();
    let (v, to_z): (f64, Box<dyn Fn(f64) -> f64>) = match params.class {
        ModelClass::B => (mu - 1.0, Box::new(move |x: f64| x * x / (-4.0 * params.a * mu))),
        ModelClass::A => (mu / 2.0 - 1.0, Box::new(move |x: f64| x / (-params.a * mu).sqrt())),
    };
    let mut points = Vec::with_capacity(SAMPLES);
    for k in 1..=SAMPLES {
        let mut x = X_MAX * k as f64 / SAMPLES as f64;
        // step off the neighbourhood of a zero
        while normalized_bessel(v, x).0.abs() < 0.05 {
            x += 0.1;
        }
        let (phi, phi_abs) = normalized_bessel(v, x);
        let z = to_z(x);
        let f = sf.eval_F(z, 1e-15)?;
        let ratio = f.value / phi;
        let err = ratio.abs() * (f.error_bound / f.value.abs() + 4.0 * f64::EPSILON * phi_abs / phi.abs());
        points.push((z, ratio, err));
    }
    let mean = points.iter().map(|p| p.1).sum::<f64>() / SAMPLES as f64;
    let samples = points
        .into_iter()
        .map(|(z, r, e)| ResidualSample::new(vec![z], r, mean, 0.0, e))
        .collect();
    Ok(ResidualReport::from_samples("bessel_reduction", samples, BESSEL_TOL, PassRule::Standard))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{class_a_coeffs, class_b_recurrence};
    use crate::verify::Status;

    fn sf(p: &ModelParams) -> SeriesFunction {
        SeriesFunction::new(match p.class {
            ModelClass::B => class_b_recurrence(p, 64).unwrap(),
            ModelClass::A => class_a_coeffs(p, 64).unwrap(),
        })
    }

    #[test]
    fn j0_series() {
        // J_0(1) and J_{-1/2}(x) √(πx/2) = cos x
        assert!((normalized_bessel(0.0, 1.0).0 - 0.765_197_686_557_966_6).abs() < 1e-15);
        for x in [0.3, 2.0, 7.0] {
            assert!((normalized_bessel(-0.5, x).0 - x.cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn class_b_is_j0() {
        let p = ModelParams::validate(0.0, 0.0, 0.0, -1.0, ModelClass::B).unwrap();
        let r = bessel_reduction_residual(&p, &sf(&p)).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
        assert!((r.samples[0].rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn class_a_is_cosine() {
        let p = ModelParams::validate(0.0, 0.0, 0.0, -2.0, ModelClass::A).unwrap();
        let r = bessel_reduction_residual(&p, &sf(&p)).unwrap();
        assert_eq!(r.status, Status::Pass, "{r:?}");
        for s in &r.samples {
            assert!((sf(&p).eval_F(s.at[0], 1e-14).unwrap().value - (2f64.sqrt() * s.at[0]).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn general_parameters() {
        for class in [ModelClass::A, ModelClass::B] {
            for (nu, alpha, a) in [(0.3, 0.5, -0.5), (0.0, 0.5, -2.0), (0.3, 0.0, -1.0)] {
                let p = ModelParams::validate(nu, alpha, 0.0, a, class).unwrap();
                let r = bessel_reduction_residual(&p, &sf(&p)).unwrap();
                assert_eq!(r.status, Status::Pass, "{class} {nu} {alpha} {a}: {}", r.residual);
            }
        }
    }

    #[test]
    fn non_bessel_table_fails() {
        let p = ModelParams::validate(0.0, 0.0, 0.0, -1.0, ModelClass::B).unwrap();
        let q = ModelParams::validate(0.0, 0.0, 1.0, -1.0, ModelClass::B).unwrap();
        let r = bessel_reduction_residual(&p, &sf(&q)).unwrap();
        assert_eq!(r.status, Status::Fail);
        assert!(matches!(bessel_reduction_residual(&q, &sf(&q)), Err(Error::Domain(_))));
        let pos = ModelParams::validate(0.0, 0.0, 0.0, 1.0, ModelClass::B).unwrap();
        assert!(matches!(bessel_reduction_residual(&pos, &sf(&pos)), Err(Error::Domain(_))));
    }
}
