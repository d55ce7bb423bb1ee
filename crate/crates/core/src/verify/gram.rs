use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{node_values, weighted_sum, Status};
use crate::error::{Error, Result};
use crate::math::ModelParams;
use crate::quadrature::{gauss_jacobi_rule, QuadratureRule, MAX_NODES};
use crate::series::SeriesFunction;
use crate::zeros::ZeroSet;

/// Off-diagonal threshold for normalized Gram entries.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

const EVAL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub params: ModelParams,
    pub lambdas: Vec<f64>,
    pub n: usize,
    /// Rule sizes of the two quadratures compared.
    pub quad_m: [usize; 2],
    /// `G_{nm} = I_{nm} / √(A_n A_m)` from the larger rule.
    pub entries: Vec<Vec<f64>>,
    /// `A_n = ∫₀¹ f(λ_n t)² t^α (1-t)^β dt`.
    pub norms: Vec<f64>,
    pub max_offdiag: f64,
    /// Largest entry change between the two rules.
    pub quadrature_error_estimate: f64,
    pub tolerance: f64,
    pub status: Status,
}

/// Normalized Gram matrix of `f(λ_n t)` for the first `n` zeros.
///
/// The integrals use weight exponents `(2ν+α, β)` with the smooth factor
/// `F(λ_n t) F(λ_m t)`, at `m` and `2m` nodes.
pub fn gram_matrix(sf: &SeriesFunction, zs: &ZeroSet, n: usize, m: usize) -> Result<GramReport> {
    if n == 0 || n > zs.lambdas.len() {
        return Err(Error::InsufficientZeros {
            needed: n.max(1),
            available: zs.lambdas.len(),
        });
    }
    if 2 * m > MAX_NODES {
        return Err(Error::Domain(format!("rule size {m} leaves no room for the 2m comparison")));
    }
    let params = *sf.params();
    let lambdas = &zs.lambdas[..n];
    let coarse = gauss_jacobi_rule(params.weight_exponent(), params.beta, m)?;
    let fine = gauss_jacobi_rule(params.weight_exponent(), params.beta, 2 * m)?;
    let (g_coarse, _) = normalized(sf, lambdas, &coarse)?;
    let (g_fine, raw) = normalized(sf, lambdas, &fine)?;
    let mut max_offdiag: f64 = 0.0;
    let mut quad_err: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad_err = quad_err.max((g_fine[i][j] - g_coarse[i][j]).abs());
            if i != j {
                max_offdiag = max_offdiag.max(g_fine[i][j].abs());
            }
        }
    }
    let norms = lambdas
        .iter()
        .zip(&raw)
        .map(|(&l, &a)| Ok(sf.prefactor(l)?.powi(2) * a))
        .collect::<Result<Vec<_>>>()?;
    if norms.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::Numeric("nonpositive norm integral".into()));
    }
    let status = if params.beta != 0.0 {
        Status::Evidence
    } else if max_offdiag < ORTHOGONALITY_TOL.max(10.0 * quad_err) {
        Status::Pass
    } else {
        Status::Fail
    };
    Ok(GramReport {
        params,
        lambdas: lambdas.to_vec(),
        n,
        quad_m: [m, 2 * m],
        entries: g_fine,
        norms,
        max_offdiag,
        quadrature_error_estimate: quad_err,
        tolerance: ORTHOGONALITY_TOL,
        status,
    })
}

/// Normalized matrix and the raw diagonal `Σ w F(λ_n t)²`.
fn normalized(sf: &SeriesFunction, lambdas: &[f64], rule: &QuadratureRule) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let vals: Vec<Vec<f64>> = lambdas
        .par_iter()
        .map(|&l| node_values(sf, l, rule, EVAL_TOL).map(|v| v.0))
        .collect::<Result<_>>()?;
    let n = lambdas.len();
    let mut raw = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let (s, _) = weighted_sum(rule, vals[i].iter().zip(&vals[j]).map(|(a, b)| a * b));
            raw[i][j] = s;
            raw[j][i] = s;
        }
    }
    let diag: Vec<f64> = (0..n).map(|i| raw[i][i]).collect();
    let g = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 } else { raw[i][j] / (diag[i] * diag[j]).sqrt() })
                .collect()
        })
        .collect();
    Ok((g, diag))
}
