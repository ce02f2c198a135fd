//! Piecewise-linear change of vertical coordinate that sends the layer
//! interfaces of one realization to fixed reference positions `k / K`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interfaces `psi[0] > psi[1] > ... > psi[K]` (seafloor first) and the map
/// `z -> x` onto [0, 1] with `x(psi[k]) = k / K`. Reference coordinates
/// grow with depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentMap {
    psi: Vec<f64>,
}

impl AlignmentMap {
    pub fn new(psi: Vec<f64>) -> Result<Self> {
        if psi.len() < 2 {
            return Err(Error::Domain(format!("an alignment map needs at least two interfaces, got {}", psi.len())));
        }
        if psi.iter().any(|v| !v.is_finite()) || psi.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Domain(format!("interfaces must be strictly decreasing, got {psi:?}")));
        }
        Ok(AlignmentMap { psi })
    }

    /// Number of layers `K`.
    pub fn layers(&self) -> usize {
        self.psi.len() - 1
    }

    pub fn interfaces(&self) -> &[f64] {
        &self.psi
    }

    pub fn top(&self) -> f64 {
        self.psi[0]
    }

    pub fn bottom(&self) -> f64 {
        self.psi[self.layers()]
    }

    fn check(&self, z: f64) -> Result<()> {
        if !(z <= self.top() && z >= self.bottom()) {
            return Err(Error::OutOfColumn {
                z,
                bottom: self.bottom(),
                top: self.top(),
            });
        }
        Ok(())
    }

    /// Layer `k` with `psi[k] >= z > psi[k + 1]`; an interface belongs to
    /// the layer below it, and the basement to the deepest layer.
    pub fn layer_of(&self, z: f64) -> Result<usize> {
        self.check(z)?;
        let k = self.psi[1..].iter().take_while(|&&v| z <= v).count();
        Ok(k.min(self.layers() - 1))
    }

    pub fn to_reference(&self, z: f64) -> Result<f64> {
        let k = self.layer_of(z)?;
        let (a, b) = (self.psi[k], self.psi[k + 1]);
        Ok((k as f64 + (a - z) / (a - b)) / self.layers() as f64)
    }

    /// Layer owning the reference coordinate `x`, with the same side
    /// convention as [`AlignmentMap::layer_of`].
    pub fn reference_layer(&self, x: f64) -> usize {
        reference_layer(x, self.layers())
    }

    /// Inverse of [`AlignmentMap::to_reference`] for `x` in [0, 1].
    pub fn to_physical(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("reference coordinate {x} lies outside [0, 1]")));
        }
        let k = self.reference_layer(x);
        let t = x * self.layers() as f64 - k as f64;
        Ok(self.psi[k] + t * (self.psi[k + 1] - self.psi[k]))
    }
}

pub(crate) fn reference_layer(x: f64, layers: usize) -> usize {
    ((x * layers as f64).floor().max(0.0) as usize).min(layers - 1)
}
