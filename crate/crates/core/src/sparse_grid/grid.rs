//! Combination-technique sparse grid on the reference cube [-1, 1]^N:
//! deduplicated collocation points, tensor terms and quadrature weights.

use std::collections::HashMap;

use crate::error::Result;

use super::index_set::MultiIndexSet;
use super::knots::{barycentric_weights, lagrange_basis, KnotFamily};

/// Relative tolerance for merging knots of different levels.
const DEDUP_TOL: f64 = 1e-12;

/// Univariate rule of one size, with its knots mapped to global knot ids.
#[derive(Clone, Debug)]
pub(crate) struct UnivariateRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub bary: Vec<f64>,
    pub ids: Vec<usize>,
}

/// One tensor grid `G_{m(j)}` with its combination coefficient.
#[derive(Clone, Debug)]
pub(crate) struct TensorTerm {
    pub level: Vec<usize>,
    pub coeff: i64,
    /// Rule size per dimension.
    pub sizes: Vec<usize>,
    /// Global point id of each tensor node, last dimension fastest.
    pub point_ids: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct SparseGrid {
    pub family: KnotFamily,
    pub index_set: MultiIndexSet,
    /// Reference coordinates of the distinct collocation points.
    points: Vec<Vec<f64>>,
    rules: HashMap<usize, UnivariateRule>,
    pub(crate) terms: Vec<TensorTerm>,
    quad_weights: Vec<f64>,
}

/// Iterates over all multi-indices `k` with `k[d] < sizes[d]`, last fastest.
pub(crate) fn for_each_tensor_index(sizes: &[usize], mut f: impl FnMut(&[usize])) {
    if sizes.contains(&0) {
        return;
    }
    let mut k = vec![0usize; sizes.len()];
    loop {
        f(&k);
        let mut d = sizes.len();
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            k[d] += 1;
            if k[d] < sizes[d] {
                break;
            }
            k[d] = 0;
        }
    }
}

impl SparseGrid {
    pub fn new(index_set: MultiIndexSet, family: KnotFamily) -> Result<Self> {
        let coeffs = index_set.combination_coefficients()?;
        let dim = index_set.dim;

        // global table of distinct knots over every rule size in use
        let mut sizes_used: Vec<usize> = coeffs
            .keys()
            .flat_map(|j| j.iter().map(|&l| family.level_size(l)))
            .collect();
        sizes_used.sort_unstable();
        sizes_used.dedup();
        let mut knots: Vec<f64> = Vec::new();
        let mut rules = HashMap::new();
        for &m in &sizes_used {
            let (nodes, weights) = family.rule(m);
            let ids = nodes
                .iter()
                .map(|&x| match knots.iter().position(|&k| (k - x).abs() <= DEDUP_TOL * 2.0) {
                    Some(id) => id,
                    None => {
                        knots.push(x);
                        knots.len() - 1
                    }
                })
                .collect();
            let bary = barycentric_weights(&nodes);
            rules.insert(m, UnivariateRule { nodes, weights, bary, ids });
        }

        let mut point_of: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut quad_weights: Vec<f64> = Vec::new();
        let mut terms = Vec::with_capacity(coeffs.len());
        for (level, &coeff) in &coeffs {
            let sizes: Vec<usize> = level.iter().map(|&l| family.level_size(l)).collect();
            let mut point_ids = Vec::with_capacity(sizes.iter().product());
            let mut key = vec![0usize; dim];
            for_each_tensor_index(&sizes, |k| {
                let mut w = coeff as f64;
                for d in 0..dim {
                    let r = &rules[&sizes[d]];
                    key[d] = r.ids[k[d]];
                    w *= r.weights[k[d]];
                }
                let id = *point_of.entry(key.clone()).or_insert_with(|| {
                    points.push(key.iter().map(|&i| knots[i]).collect());
                    quad_weights.push(0.0);
                    points.len() - 1
                });
                quad_weights[id] += w;
                point_ids.push(id);
            });
            terms.push(TensorTerm {
                level: level.clone(),
                coeff,
                sizes,
                point_ids,
            });
        }

        Ok(SparseGrid {
            family,
            index_set,
            points,
            rules,
            terms,
            quad_weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.index_set.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Collocation points in reference coordinates.
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Quadrature weights (uniform probability measure) per point.
    pub fn quadrature_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn coefficients(&self) -> Vec<(Vec<usize>, i64)> {
        self.terms.iter().map(|t| (t.level.clone(), t.coeff)).collect()
    }

    pub(crate) fn rule(&self, m: usize) -> &UnivariateRule {
        &self.rules[&m]
    }

    /// Weights `l_k(y)` such that the sparse interpolant of data `f_k` at the
    /// reference point `y` is `sum_k l_k(y) f_k`.
    pub fn interpolation_weights(&self, y: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        let mut basis: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
        for (&m, r) in &self.rules {
            for (d, &t) in y.iter().enumerate() {
                let mut out = vec![0.0; m];
                lagrange_basis(&r.nodes, &r.bary, t, &mut out);
                basis.insert((d, m), out);
            }
        }
        let mut w = vec![0.0; self.points.len()];
        for term in &self.terms {
            let b: Vec<&Vec<f64>> = (0..dim).map(|d| &basis[&(d, term.sizes[d])]).collect();
            let mut n = 0;
            for_each_tensor_index(&term.sizes, |k| {
                let mut v = term.coeff as f64;
                for d in 0..dim {
                    v *= b[d][k[d]];
                }
                w[term.point_ids[n]] += v;
                n += 1;
            });
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadrature_weights_sum_to_one() {
        for w in 0..5 {
            let g = SparseGrid::new(MultiIndexSet::isotropic(3, w as f64), KnotFamily::gauss_legendre()).unwrap();
            assert_abs_diff_eq!(g.quadrature_weights().iter().sum::<f64>(), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn one_dimensional_grid_has_the_finest_rule() {
        let g = SparseGrid::new(MultiIndexSet::isotropic(1, 4.0), KnotFamily::gauss_legendre()).unwrap();
        assert_eq!(g.coefficients(), vec![(vec![5], 1)]);
        assert_eq!(g.len(), 5);
    }

    #[test]
    fn paper_grid_sizes() {
        let gl = KnotFamily::gauss_legendre();
        // two parameters (case A) give the 137-point isotropic grid; the
        // same level in three parameters has 681 points
        let iso = SparseGrid::new(MultiIndexSet::isotropic(2, 6.0), gl).unwrap();
        assert_eq!(iso.len(), 137);
        let iso3 = SparseGrid::new(MultiIndexSet::isotropic(3, 6.0), gl).unwrap();
        assert_eq!(iso3.len(), 681);
        let ani = SparseGrid::new(MultiIndexSet::anisotropic(12.0, &[4.0, 4.0, 1.0]).unwrap(), gl).unwrap();
        assert_eq!(ani.len(), 133);
    }
}
