//! Conversion of a sparse-grid surrogate to an orthonormal Legendre
//! (polynomial chaos) expansion, and variance-based sensitivity indices.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::grid::for_each_tensor_index;
use super::knots::{gauss_legendre, lagrange_basis};
use super::surrogate::SparseGridSurrogate;

/// Orthonormal Legendre polynomials `sqrt(2k+1) P_k` for `k < n` at `x`
/// (orthonormal under the uniform density on [-1, 1]).
pub fn legendre_orthonormal(n: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n);
    let (mut p0, mut p1) = (1.0, x);
    for k in 0..n {
        let v = match k {
            0 => 1.0,
            1 => x,
            _ => {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        p.push(v * (2.0 * k as f64 + 1.0).sqrt());
    }
    p
}

/// Coefficients `T[a][k]` mapping nodal values on a rule to Legendre
/// coefficients of the interpolating polynomial, computed by Gauss
/// quadrature exact for the product of degrees.
fn nodal_to_modal(nodes: &[f64], bary: &[f64]) -> Vec<Vec<f64>> {
    let m = nodes.len();
    let (xg, wg) = gauss_legendre(m);
    let mut t = vec![vec![0.0; m]; m];
    let mut l = vec![0.0; m];
    for (x, w) in xg.iter().zip(&wg) {
        lagrange_basis(nodes, bary, *x, &mut l);
        let psi = legendre_orthonormal(m, *x);
        for a in 0..m {
            for k in 0..m {
                t[a][k] += w * psi[a] * l[k];
            }
        }
    }
    t
}

#[derive(Clone, Debug)]
pub struct PceExpansion {
    pub dim: usize,
    pub outputs: usize,
    /// Multi-degree -> coefficient per output.
    pub coefficients: BTreeMap<Vec<usize>, Vec<f64>>,
}

impl PceExpansion {
    pub fn from_surrogate(s: &SparseGridSurrogate) -> Self {
        let grid = &s.grid;
        let dim = grid.dim();
        let outputs = s.outputs();
        let mut transforms: HashMap<usize, Vec<Vec<f64>>> = HashMap::new();
        let mut coefficients: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
        for term in &grid.terms {
            for &m in &term.sizes {
                transforms.entry(m).or_insert_with(|| {
                    let r = grid.rule(m);
                    nodal_to_modal(&r.nodes, &r.bary)
                });
            }
            let tr: Vec<&Vec<Vec<f64>>> = term.sizes.iter().map(|m| &transforms[m]).collect();
            let mut acc = vec![0.0; outputs];
            for_each_tensor_index(&term.sizes, |alpha| {
                acc.iter_mut().for_each(|v| *v = 0.0);
                let mut n = 0;
                for_each_tensor_index(&term.sizes, |k| {
                    let mut w = 1.0;
                    for d in 0..dim {
                        w *= tr[d][alpha[d]][k[d]];
                    }
                    if w != 0.0 {
                        for (a, f) in acc.iter_mut().zip(&s.values()[term.point_ids[n]]) {
                            *a += w * f;
                        }
                    }
                    n += 1;
                });
                let entry = coefficients
                    .entry(alpha.to_vec())
                    .or_insert_with(|| vec![0.0; outputs]);
                for (e, a) in entry.iter_mut().zip(&acc) {
                    *e += term.coeff as f64 * a;
                }
            });
        }
        PceExpansion {
            dim,
            outputs,
            coefficients,
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        self.coefficients
            .get(&vec![0; self.dim])
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.outputs])
    }

    pub fn variance(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.outputs];
        for (alpha, c) in &self.coefficients {
            if alpha.iter().any(|&a| a > 0) {
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi += ci * ci;
                }
            }
        }
        v
    }

    /// Evaluates the expansion at a reference point.
    pub fn evaluate_reference(&self, y: &[f64]) -> Vec<f64> {
        let max_deg = self
            .coefficients
            .keys()
            .flat_map(|a| a.iter().copied())
            .max()
            .unwrap_or(0);
        let psi: Vec<Vec<f64>> = y.iter().map(|&t| legendre_orthonormal(max_deg + 1, t)).collect();
        let mut out = vec![0.0; self.outputs];
        for (alpha, c) in &self.coefficients {
            let b: f64 = alpha.iter().enumerate().map(|(d, &a)| psi[d][a]).product();
            for (o, ci) in out.iter_mut().zip(c) {
                *o += b * ci;
            }
        }
        out
    }

    pub fn sobol(&self) -> SobolReport {
        let var = self.variance();
        let mut first = vec![vec![0.0; self.dim]; self.outputs];
        let mut total = vec![vec![0.0; self.dim]; self.outputs];
        for (alpha, c) in &self.coefficients {
            let support: Vec<usize> = (0..self.dim).filter(|&d| alpha[d] > 0).collect();
            if support.is_empty() {
                continue;
            }
            for (o, ci) in c.iter().enumerate() {
                let e = ci * ci;
                for &d in &support {
                    total[o][d] += e;
                }
                if support.len() == 1 {
                    first[o][support[0]] += e;
                }
            }
        }
        // round-off variance of outputs that are constant in exact
        // arithmetic is treated as zero
        let mut magnitude = vec![0.0f64; self.outputs];
        for c in self.coefficients.values() {
            for (m, ci) in magnitude.iter_mut().zip(c) {
                *m = m.max(ci.abs());
            }
        }
        let scale = |rows: Vec<Vec<f64>>| -> Vec<Option<Vec<f64>>> {
            rows.into_iter()
                .zip(var.iter().zip(&magnitude))
                .map(|(r, (&v, &mag))| {
                    if v.is_finite() && v > (1e-10 * mag).powi(2) {
                        Some(r.into_iter().map(|x| x / v).collect())
                    } else {
                        None
                    }
                })
                .collect()
        };
        SobolReport {
            variance: var.clone(),
            first_order: scale(first),
            total: scale(total),
        }
    }
}

/// First-order and total Sobol indices per output; `None` marks outputs
/// with zero variance, for which the indices are undefined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolReport {
    pub variance: Vec<f64>,
    pub first_order: Vec<Option<Vec<f64>>>,
    pub total: Vec<Option<Vec<f64>>>,
}
