//! Univariate knot families on the reference interval [-1, 1] with weights
//! normalised to the uniform probability density.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnotKind {
    GaussLegendre,
    ClenshawCurtis,
}

/// Level-to-nodes map `m(j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelRule {
    /// `m(j) = j`.
    Linear,
    /// `m(1) = 1`, `m(j) = 2^(j-1) + 1`.
    Doubling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KnotFamily {
    pub kind: KnotKind,
    pub rule: LevelRule,
}

impl KnotFamily {
    pub fn gauss_legendre() -> Self {
        KnotFamily {
            kind: KnotKind::GaussLegendre,
            rule: LevelRule::Linear,
        }
    }

    /// Clenshaw-Curtis with the doubling rule (nested levels).
    pub fn clenshaw_curtis() -> Self {
        KnotFamily {
            kind: KnotKind::ClenshawCurtis,
            rule: LevelRule::Doubling,
        }
    }

    pub fn level_size(&self, j: usize) -> usize {
        match (self.rule, j) {
            (_, 0) => 0,
            (LevelRule::Linear, j) => j,
            (LevelRule::Doubling, 1) => 1,
            (LevelRule::Doubling, j) => (1usize << (j - 1)) + 1,
        }
    }

    /// Nodes and probability weights of the `m`-point rule on [-1, 1].
    pub fn rule(&self, m: usize) -> (Vec<f64>, Vec<f64>) {
        match self.kind {
            KnotKind::GaussLegendre => gauss_legendre(m),
            KnotKind::ClenshawCurtis => clenshaw_curtis(m),
        }
    }

    pub fn is_nested(&self) -> bool {
        self.kind == KnotKind::ClenshawCurtis && self.rule == LevelRule::Doubling
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// Gauss-Legendre nodes (ascending) and weights summing to 1. Nodes are
/// exactly antisymmetric; the middle node of an odd rule is exactly 0.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m / 2 {
        // descending root i, refined from the Chebyshev-like guess
        let mut r = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(m, r);
            let step = p / dp;
            r -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(m, r);
        let wi = 1.0 / ((1.0 - r * r) * dp * dp);
        x[i] = -r;
        x[m - 1 - i] = r;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m % 2 == 1 {
        let (_, dp) = legendre_with_derivative(m, 0.0);
        x[m / 2] = 0.0;
        w[m / 2] = 1.0 / (dp * dp);
    }
    (x, w)
}

/// Gauss-Legendre rule mapped to [0, 1].
pub fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(m);
    (x.iter().map(|t| 0.5 * (t + 1.0)).collect(), w)
}

/// Clenshaw-Curtis nodes (ascending) and weights summing to 1.
pub fn clenshaw_curtis(m: usize) -> (Vec<f64>, Vec<f64>) {
    if m == 1 {
        return (vec![0.0], vec![1.0]);
    }
    let n = m - 1;
    let nf = n as f64;
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for k in 0..m {
        // symmetric evaluation keeps mirrored nodes exact
        x[k] = if 2 * k == n {
            0.0
        } else if 2 * k < n {
            -(PI * k as f64 / nf).cos()
        } else {
            (PI * (n - k) as f64 / nf).cos()
        };
        let theta = PI * k as f64 / nf;
        let mut s = 0.0;
        for j in 1..=n / 2 {
            let b = if 2 * j == n { 1.0 } else { 2.0 };
            s += b / (4.0 * (j * j) as f64 - 1.0) * (2.0 * j as f64 * theta).cos();
        }
        let c = if k == 0 || k == n { 1.0 } else { 2.0 };
        // weights on [-1, 1] sum to 2; halve for the probability measure
        w[k] = 0.5 * c / nf * (1.0 - s);
    }
    (x, w)
}

/// Barycentric weights of a node set.
pub(crate) fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let prod: f64 = (0..x.len()).filter(|&k| k != i).map(|k| x[i] - x[k]).product();
            1.0 / prod
        })
        .collect()
}

/// Values of all Lagrange basis polynomials of `x` at `t`.
pub(crate) fn lagrange_basis(x: &[f64], bw: &[f64], t: f64, out: &mut [f64]) {
    if let Some(k) = x.iter().position(|&xk| xk == t) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[k] = 1.0;
        return;
    }
    let mut denom = 0.0;
    for k in 0..x.len() {
        let v = bw[k] / (t - x[k]);
        out[k] = v;
        denom += v;
    }
    for v in out.iter_mut() {
        *v /= denom;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_rules_integrate_polynomials_exactly() {
        for m in 1..=20 {
            let (x, w) = gauss_legendre(m);
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            assert!(w.iter().all(|&v| v > 0.0));
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            for q in 0..2 * m {
                let exact = if q % 2 == 1 { 0.0 } else { 1.0 / (q as f64 + 1.0) };
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(q as i32)).sum();
                assert_abs_diff_eq!(got, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn three_point_gauss_rule() {
        let (x, w) = gauss_legendre(3);
        assert_eq!(x[1], 0.0);
        assert_abs_diff_eq!(x[2], (0.6f64).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(w[0], 5.0 / 18.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 8.0 / 18.0, epsilon = 1e-15);
    }

    #[test]
    fn clenshaw_curtis_rules_are_nested_and_accurate() {
        let fam = KnotFamily::clenshaw_curtis();
        for j in 1..=6 {
            let m = fam.level_size(j);
            let (x, w) = clenshaw_curtis(m);
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
            // exact for degree m - 1
            for q in 0..m {
                let exact = if q % 2 == 1 { 0.0 } else { 1.0 / (q as f64 + 1.0) };
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(q as i32)).sum();
                assert_abs_diff_eq!(got, exact, epsilon = 1e-13);
            }
            if j > 1 {
                let (coarse, _) = clenshaw_curtis(fam.level_size(j - 1));
                for c in coarse {
                    assert!(x.contains(&c), "level {j} misses {c}");
                }
            }
        }
    }

    #[test]
    fn level_sizes() {
        let gl = KnotFamily::gauss_legendre();
        assert_eq!((0..5).map(|j| gl.level_size(j)).collect::<Vec<_>>(), [0, 1, 2, 3, 4]);
        let cc = KnotFamily::clenshaw_curtis();
        assert_eq!((0..5).map(|j| cc.level_size(j)).collect::<Vec<_>>(), [0, 1, 3, 5, 9]);
    }

    #[test]
    fn lagrange_basis_is_a_partition_of_unity() {
        let (x, _) = gauss_legendre(7);
        let bw = barycentric_weights(&x);
        let mut out = vec![0.0; 7];
        for &t in &[-1.0, -0.3, 0.0, 0.77, 1.0, x[2]] {
            lagrange_basis(&x, &bw, t, &mut out);
            assert_abs_diff_eq!(out.iter().sum::<f64>(), 1.0, epsilon = 1e-13);
        }
    }
}
