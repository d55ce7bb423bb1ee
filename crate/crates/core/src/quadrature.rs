//! Gauss–Jacobi rules on `(0, 1)` for the weight `t^p (1-t)^q`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::beta_fn;

/// Default node count for verification integrals.
pub const DEFAULT_M: usize = 48;

pub const MAX_NODES: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub p: f64,
    pub q: f64,
    pub m: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// `B(p+1, q+1)`, the total mass of the weight.
    pub fn mass(&self) -> f64 {
        beta_fn(self.p + 1.0, self.q + 1.0).unwrap_or(f64::NAN)
    }
}

/// Recurrence data of the monic Jacobi polynomials mapped to `(0, 1)`:
/// diagonal `d_n` for `n = 0..m` and off-diagonal `e_n` for `n = 1..=m`.
fn jacobi_matrix(p: f64, q: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
    // on (-1, 1) the weight is (1-x)^aj (1+x)^bj
    let (aj, bj) = (q, p);
    let s = aj + bj;
    let diag = (0..m)
        .map(|n| {
            let a = if n == 0 {
                (bj - aj) / (s + 2.0)
            } else {
                let k = 2.0 * n as f64 + s;
                (bj * bj - aj * aj) / (k * (k + 2.0))
            };
            (a + 1.0) / 2.0
        })
        .collect();
    let off = (1..=m)
        .map(|n| {
            let nf = n as f64;
            let b = if n == 1 {
                4.0 * (1.0 + aj) * (1.0 + bj) / ((s + 2.0).powi(2) * (s + 3.0))
            } else {
                let k = 2.0 * nf + s;
                4.0 * nf * (nf + aj) * (nf + bj) * (nf + s) / (k * k * (k + 1.0) * (k - 1.0))
            };
            b.sqrt() / 2.0
        })
        .collect();
    (diag, off)
}

/// Eigenvalues of the symmetric tridiagonal matrix by implicit-shift QL.
fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64], cap: usize) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e: Vec<f64> = off[..n.saturating_sub(1)].to_vec();
    e.push(0.0);
    let mut sweeps = 0;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > cap {
                return Err(Error::EigenFailure { sweeps });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Orthonormal polynomial values `p̂_0(t)..p̂_{m-1}(t)` summed in square, and
/// `p̂_m(t)`, `p̂_m'(t)`.
fn orthonormal_at(diag: &[f64], off: &[f64], mu0: f64, t: f64) -> (f64, f64, f64) {
    let m = diag.len();
    let (mut p_prev, mut p) = (0.0, 1.0 / mu0.sqrt());
    let (mut dp_prev, mut dp) = (0.0, 0.0);
    let mut christoffel = 0.0;
    for k in 0..m {
        christoffel += p * p;
        // t p_k = e_{k+1} p_{k+1} + d_k p_k + e_k p_{k-1}
        let e_k = if k == 0 { 0.0 } else { off[k - 1] };
        let next = ((t - diag[k]) * p - e_k * p_prev) / off[k];
        let dnext = ((t - diag[k]) * dp + p - e_k * dp_prev) / off[k];
        p_prev = p;
        p = next;
        dp_prev = dp;
        dp = dnext;
    }
    (christoffel, p, dp)
}

/// Gauss–Jacobi rule with `m` nodes for `∫₀¹ g(t) t^p (1-t)^q dt`.
pub fn gauss_jacobi_rule(p: f64, q: f64, m: usize) -> Result<QuadratureRule> {
    if !(p > -1.0 && q > -1.0 && p.is_finite() && q.is_finite()) {
        return Err(Error::Domain(format!("quadrature exponents must exceed -1, got p = {p}, q = {q}")));
    }
    if !(1..=MAX_NODES).contains(&m) {
        return Err(Error::Domain(format!("node count must be in 1..={MAX_NODES}, got {m}")));
    }
    let mu0 = beta_fn(p + 1.0, q + 1.0)?;
    let (diag, off) = jacobi_matrix(p, q, m);
    let mut nodes = tridiagonal_eigenvalues(&diag, &off[..m - 1], 100 * m)?;
    // one or two Newton steps on p̂_m recover full relative accuracy near the ends
    for i in 0..m {
        let lo = if i == 0 { 0.0 } else { nodes[i - 1] };
        let hi = if i + 1 == m { 1.0 } else { nodes[i + 1] };
        let room = 0.25 * (nodes[i] - lo).min(hi - nodes[i]);
        for _ in 0..3 {
            let (_, pm, dpm) = orthonormal_at(&diag, &off, mu0, nodes[i]);
            if dpm == 0.0 || !pm.is_finite() || !dpm.is_finite() {
                break;
            }
            let step = pm / dpm;
            if !(step.abs() < room) {
                break;
            }
            nodes[i] -= step;
            if step.abs() <= 2.0 * f64::EPSILON * nodes[i].abs() {
                break;
            }
        }
    }
    let weights: Vec<f64> = nodes
        .iter()
        .map(|&t| 1.0 / orthonormal_at(&diag, &off, mu0, t).0)
        .collect();
    if nodes.iter().any(|&t| !(t > 0.0 && t < 1.0)) || nodes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Numeric(format!("degenerate Gauss–Jacobi nodes for p = {p}, q = {q}, m = {m}")));
    }
    Ok(QuadratureRule { p, q, m, nodes, weights })
}

/// `Σ w_i g(t_i)` with compensated summation.
pub fn integrate_weighted<G>(rule: &QuadratureRule, mut g: G) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    let mut sum = NeumaierSum::default();
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = g(t)?;
        if !v.is_finite() {
            return Err(Error::Numeric(format!("integrand is not finite at t = {t}")));
        }
        sum.add(w * v);
    }
    Ok(sum.value())
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn moment(rule: &QuadratureRule, k: i32) -> f64 {
        integrate_weighted(rule, |t| Ok(t.powi(k))).unwrap()
    }

    #[test]
    fn legendre_on_unit_interval() {
        let r = gauss_jacobi_rule(0.0, 0.0, 5).unwrap();
        assert!((moment(&r, 1) - 0.5).abs() < 1e-15);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // 3-point Gauss–Legendre nodes: 1/2 ± √(3/5)/2
        let r = gauss_jacobi_rule(0.0, 0.0, 3).unwrap();
        let h = (0.6f64).sqrt() / 2.0;
        for (t, want) in r.nodes.iter().zip([0.5 - h, 0.5, 0.5 + h]) {
            assert!((t - want).abs() < 1e-15);
        }
        for (w, want) in r.weights.iter().zip([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0]) {
            assert!((w - want).abs() < 1e-15);
        }
    }

    #[test]
    fn weight_sum_is_beta() {
        let r = gauss_jacobi_rule(0.5, -0.5, 16).unwrap();
        let b = beta_fn(1.5, 0.5).unwrap();
        assert!((r.weights.iter().sum::<f64>() - b).abs() < 1e-12 * b);
        assert!((b - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn exactness_edge() {
        for (p, q) in [(0.0, 0.0), (0.5, 1.0), (-0.5, 2.0), (2.6, -0.7)] {
            for m in [1, 2, 7, 48, 96] {
                let r = gauss_jacobi_rule(p, q, m).unwrap();
                let k = 2 * m as i32 - 1;
                let want = beta_fn(p + k as f64 + 1.0, q + 1.0).unwrap();
                let got = moment(&r, k);
                assert!((got - want).abs() < 1e-12 * want, "p={p} q={q} m={m}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn degree_2m_is_not_exact() {
        let r = gauss_jacobi_rule(0.0, 0.0, 4).unwrap();
        let want = 1.0 / 9.0;
        assert!((moment(&r, 8) - want).abs() > 1e-6);
    }

    #[test]
    fn convergence_plateau() {
        let g = |t: f64| Ok((3.0 * t).cos() * (t * 1.7).exp());
        let r1 = gauss_jacobi_rule(0.3, 1.5, 24).unwrap();
        let r2 = gauss_jacobi_rule(0.3, 1.5, 48).unwrap();
        let a = integrate_weighted(&r1, g).unwrap();
        let b = integrate_weighted(&r2, g).unwrap();
        assert!((a - b).abs() < 1e-12 * b.abs());
    }

    #[test]
    fn large_rules() {
        let r = gauss_jacobi_rule(1.0, 0.5, MAX_NODES).unwrap();
        assert!(r.weights.iter().all(|&w| w > 0.0));
        let b = beta_fn(2.0, 1.5).unwrap();
        assert!((r.weights.iter().sum::<f64>() - b).abs() < 1e-12 * b);
        assert!((moment(&r, 101) - beta_fn(103.0, 1.5).unwrap()).abs() < 1e-11 * beta_fn(103.0, 1.5).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(gauss_jacobi_rule(-1.0, 0.0, 4), Err(Error::Domain(_))));
        assert!(matches!(gauss_jacobi_rule(0.0, -1.5, 4), Err(Error::Domain(_))));
        assert!(matches!(gauss_jacobi_rule(0.0, 0.0, 0), Err(Error::Domain(_))));
        assert!(matches!(gauss_jacobi_rule(0.0, 0.0, 513), Err(Error::Domain(_))));
        assert!(matches!(gauss_jacobi_rule(f64::NAN, 0.0, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn integrand_errors_propagate() {
        let r = gauss_jacobi_rule(0.0, 0.0, 4).unwrap();
        let e = integrate_weighted(&r, |t| if t > 0.5 { Err(Error::Numeric("x".into())) } else { Ok(1.0) });
        assert!(matches!(e, Err(Error::Numeric(_))));
        let e = integrate_weighted(&r, |_| Ok(f64::NAN));
        assert!(matches!(e, Err(Error::Numeric(_))));
    }

    #[test]
    fn compensated_sum() {
        let mut s = NeumaierSum::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }

    proptest! {
        #[test]
        fn moments_are_exact(p in -0.95f64..4.0, q in -0.95f64..4.0, mi in 0usize..4) {
            let m = [4usize, 8, 16, 32][mi];
            let r = gauss_jacobi_rule(p, q, m).unwrap();
            for k in 0..(2 * m as i32) {
                let want = beta_fn(p + k as f64 + 1.0, q + 1.0).unwrap();
                let got = moment(&r, k);
                prop_assert!((got - want).abs() < 1e-11 * want, "k = {}: {} vs {}", k, got, want);
            }
        }

        #[test]
        fn nodes_interlace(p in -0.95f64..4.0, q in -0.95f64..4.0, m in 1usize..60) {
            let a = gauss_jacobi_rule(p, q, m).unwrap();
            let b = gauss_jacobi_rule(p, q, m + 1).unwrap();
            prop_assert!(a.weights.iter().chain(&b.weights).all(|&w| w > 0.0));
            prop_assert!(a.nodes.iter().chain(&b.nodes).all(|&t| t > 0.0 && t < 1.0));
            for i in 0..m {
                prop_assert!(b.nodes[i] < a.nodes[i] && a.nodes[i] < b.nodes[i + 1]);
            }
        }
    }
}
