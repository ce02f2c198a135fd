//! Downward-closed multi-index sets and combination-technique coefficients.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a set was constructed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndexSetSpec {
    Isotropic { w: f64 },
    Anisotropic { w: f64, weights: Vec<f64> },
    Explicit,
}

/// A downward-closed set of multi-indices with entries `>= 1`, kept in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiIndexSet {
    pub dim: usize,
    pub spec: IndexSetSpec,
    indices: Vec<Vec<usize>>,
}

fn enumerate(dim: usize, admit: &dyn Fn(&[usize]) -> bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut j = vec![1usize; dim];
    // odometer walk; admissibility is monotone so a failing coordinate
    // resets and carries
    loop {
        if admit(&j) {
            out.push(j.clone());
            j[dim - 1] += 1;
            continue;
        }
        let mut d = dim - 1;
        loop {
            j[d] = 1;
            if d == 0 {
                out.sort();
                return out;
            }
            d -= 1;
            j[d] += 1;
            if admit(&j) {
                break;
            }
        }
    }
}

impl MultiIndexSet {
    /// `{ j >= 1 : sum_n (j_n - 1) <= w }`.
    pub fn isotropic(dim: usize, w: f64) -> Self {
        assert!(dim >= 1 && w >= 0.0);
        let indices = enumerate(dim, &|j| j.iter().map(|&v| (v - 1) as f64).sum::<f64>() <= w + 1e-12);
        MultiIndexSet {
            dim,
            spec: IndexSetSpec::Isotropic { w },
            indices,
        }
    }

    /// `{ j >= 1 : sum_n a_n (j_n - 1) <= w }`.
    pub fn anisotropic(w: f64, weights: &[f64]) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::Domain(format!("anisotropy weights must be positive, got {weights:?}")));
        }
        let ws = weights.to_vec();
        let indices = enumerate(weights.len(), &|j| {
            j.iter().zip(&ws).map(|(&v, a)| a * (v - 1) as f64).sum::<f64>() <= w + 1e-12
        });
        Ok(MultiIndexSet {
            dim: weights.len(),
            spec: IndexSetSpec::Anisotropic { w, weights: ws },
            indices,
        })
    }

    pub fn from_indices(dim: usize, mut indices: Vec<Vec<usize>>) -> Result<Self> {
        if indices.iter().any(|j| j.len() != dim || j.contains(&0)) {
            return Err(Error::Domain(format!("indices must have {dim} entries >= 1")));
        }
        indices.sort();
        indices.dedup();
        let set = MultiIndexSet {
            dim,
            spec: IndexSetSpec::Explicit,
            indices,
        };
        set.check_downward_closed()?;
        Ok(set)
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: &[usize]) -> bool {
        self.indices.binary_search_by(|v| v.as_slice().cmp(j)).is_ok()
    }

    pub fn check_downward_closed(&self) -> Result<()> {
        let set: HashSet<&[usize]> = self.indices.iter().map(|v| v.as_slice()).collect();
        for j in &self.indices {
            let mut k = j.clone();
            for d in 0..self.dim {
                if j[d] > 1 {
                    k[d] -= 1;
                    if !set.contains(k.as_slice()) {
                        return Err(Error::NotDownwardClosed(j.clone()));
                    }
                    k[d] += 1;
                }
            }
        }
        Ok(())
    }

    /// Nonzero coefficients `c_j = sum_{k in {0,1}^N, j + k in I} (-1)^|k|`.
    pub fn combination_coefficients(&self) -> Result<BTreeMap<Vec<usize>, i64>> {
        self.check_downward_closed()?;
        let mut out = BTreeMap::new();
        let mut jk = vec![0; self.dim];
        for j in &self.indices {
            let mut c = 0i64;
            for mask in 0u32..(1 << self.dim) {
                for d in 0..self.dim {
                    jk[d] = j[d] + ((mask >> d) & 1) as usize;
                }
                if self.contains(&jk) {
                    c += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
                }
            }
            if c != 0 {
                out.insert(j.clone(), c);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_isotropic_sets() {
        let s = MultiIndexSet::isotropic(2, 1.0);
        assert_eq!(s.indices(), &[vec![1, 1], vec![1, 2], vec![2, 1]]);
        let s = MultiIndexSet::isotropic(3, 0.0);
        assert_eq!(s.indices(), &[vec![1, 1, 1]]);
    }

    #[test]
    fn unit_weights_match_isotropic_set() {
        for w in 0..6 {
            let iso = MultiIndexSet::isotropic(3, w as f64);
            let ani = MultiIndexSet::anisotropic(w as f64, &[1.0, 1.0, 1.0]).unwrap();
            assert_eq!(iso.indices(), ani.indices());
        }
    }

    #[test]
    fn anisotropic_membership() {
        let s = MultiIndexSet::anisotropic(12.0, &[2.0, 2.0, 1.0]).unwrap();
        assert!(s.contains(&[1, 1, 13]));
        assert!(!s.contains(&[1, 1, 14]));
        assert!(s.contains(&[7, 1, 1]));
    }

    #[test]
    fn coefficients_of_the_three_index_set() {
        let s = MultiIndexSet::isotropic(2, 1.0);
        let c = s.combination_coefficients().unwrap();
        assert_eq!(c[&vec![1, 1]], -1);
        assert_eq!(c[&vec![1, 2]], 1);
        assert_eq!(c[&vec![2, 1]], 1);
    }

    #[test]
    fn rectangle_keeps_only_its_corner() {
        let s = MultiIndexSet::from_indices(2, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]).unwrap();
        let c = s.combination_coefficients().unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[&vec![2, 2]], 1);
    }

    #[test]
    fn non_closed_set_is_rejected() {
        let err = MultiIndexSet::from_indices(2, vec![vec![1, 1], vec![1, 3]]).unwrap_err();
        assert!(matches!(err, Error::NotDownwardClosed(j) if j == vec![1, 3]));
    }
}
