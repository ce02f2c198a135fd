//! Cell-centred vertical profiles split by layer, and their piecewise-linear
//! resampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;
use crate::solver::{extract_interfaces, BasinState};

use super::alignment::AlignmentMap;

/// Scalar cell field of a basin state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Porosity,
    MechanicalPorosity,
    QuartzFraction,
    Pressure,
    EffectiveStress,
    Temperature,
}

impl Field {
    pub const ALL: [Field; 6] = [
        Field::Porosity,
        Field::MechanicalPorosity,
        Field::QuartzFraction,
        Field::Pressure,
        Field::EffectiveStress,
        Field::Temperature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::Porosity => "phi",
            Field::MechanicalPorosity => "phi_M",
            Field::QuartzFraction => "phi_Q",
            Field::Pressure => "P",
            Field::EffectiveStress => "sigma_c",
            Field::Temperature => "T",
        }
    }

    pub fn parse(s: &str) -> Result<Field> {
        Field::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s) || format!("{f:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown field `{s}`")))
    }

    pub fn values(self, state: &BasinState) -> Vec<f64> {
        match self {
            Field::Porosity => state.phi.clone(),
            Field::MechanicalPorosity => state.phi_m.clone(),
            Field::QuartzFraction => state.phi_q.clone(),
            Field::Pressure => state.p.clone(),
            Field::EffectiveStress => state.sigma_c(),
            Field::Temperature => state.t.clone(),
        }
    }
}

/// A field sampled at cell centres, ordered from the top down, with the
/// layer (counted from the top) that owns each cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayeredProfile {
    pub map: AlignmentMap,
    pub centers: Vec<f64>,
    pub layer: Vec<usize>,
    pub values: Vec<f64>,
}

impl LayeredProfile {
    pub fn new(map: AlignmentMap, centers: Vec<f64>, layer: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n = centers.len();
        if layer.len() != n || values.len() != n {
            return Err(Error::Domain("profile arrays differ in length".into()));
        }
        if centers.windows(2).any(|w| w[1] >= w[0]) || layer.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Domain("profile cells must be ordered from the top down".into()));
        }
        if let Some(k) = (0..map.layers()).find(|k| !layer.contains(k)) {
            return Err(Error::Domain(format!("layer {k} has no cells")));
        }
        Ok(LayeredProfile {
            map,
            centers,
            layer,
            values,
        })
    }

    /// Profile of `field` in a final state with `cfg.layer_count()` layers.
    pub fn from_state(state: &BasinState, field: Field, cfg: &ScenarioConfig) -> Result<Self> {
        let layers = cfg.layer_count();
        let map = AlignmentMap::new(extract_interfaces(state, layers)?)?;
        let values = field.values(state);
        let n = state.cell_count();
        let cells = (0..n).rev();
        Self::new(
            map,
            cells.clone().map(|i| state.cell_center(i)).collect(),
            cells.clone().map(|i| layers - 1 - state.layer[i]).collect(),
            cells.map(|i| values[i]).collect(),
        )
    }

    /// Value at `z` interpolated between the centres of layer `k` only;
    /// constant beyond the outermost centres of the layer.
    pub fn value_in_layer(&self, z: f64, k: usize) -> f64 {
        let lo = self.layer.partition_point(|&l| l < k);
        let hi = self.layer.partition_point(|&l| l <= k);
        interpolate_descending(&self.centers[lo..hi], &self.values[lo..hi], z)
    }

    /// Value at `z` using the layer that owns `z`.
    pub fn value_at(&self, z: f64) -> Result<f64> {
        Ok(self.value_in_layer(z, self.map.layer_of(z)?))
    }

    /// Value at `z` interpolated across all cells regardless of layers, as a
    /// plain depth-based representation would see it.
    pub fn value_across_layers(&self, z: f64) -> f64 {
        interpolate_descending(&self.centers, &self.values, z)
    }

    /// Values at reference stations, each mapped through this profile's own
    /// interfaces.
    pub fn resample(&self, stations: &StationGrid) -> Result<Vec<f64>> {
        if stations.layers != self.map.layers() {
            return Err(Error::LayerCount {
                expected: stations.layers,
                found: self.map.layers(),
            });
        }
        stations
            .xhat
            .iter()
            .zip(&stations.layer)
            .map(|(&x, &k)| Ok(self.value_in_layer(self.map.to_physical(x)?, k)))
            .collect()
    }
}

/// Piecewise-linear interpolation on strictly decreasing abscissae, constant
/// outside their range.
pub(crate) fn interpolate_descending(z: &[f64], v: &[f64], at: f64) -> f64 {
    let n = z.len();
    if at >= z[0] {
        return v[0];
    }
    if at <= z[n - 1] {
        return v[n - 1];
    }
    let i = z.partition_point(|&c| c > at);
    let (za, zb) = (z[i - 1], z[i]);
    let t = (za - at) / (za - zb);
    v[i - 1] + t * (v[i] - v[i - 1])
}

/// Half-width of the shift applied to stations requested exactly on an
/// interface, in reference units.
pub const STATION_EPS: f64 = 1e-6;

/// Reference stations with the layer each one belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationGrid {
    pub layers: usize,
    pub xhat: Vec<f64>,
    pub layer: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl StationGrid {
    /// `per_layer` equispaced stations inside each layer, interfaces
    /// excluded.
    pub fn uniform(layers: usize, per_layer: usize) -> Self {
        let mut xhat = Vec::with_capacity(layers * per_layer);
        let mut layer = Vec::with_capacity(layers * per_layer);
        for k in 0..layers {
            for i in 0..per_layer {
                xhat.push((k as f64 + (i as f64 + 0.5) / per_layer as f64) / layers as f64);
                layer.push(k);
            }
        }
        StationGrid {
            layers,
            xhat,
            layer,
            warnings: Vec::new(),
        }
    }

    /// Stations at arbitrary reference positions. A station on an interface
    /// is moved by [`STATION_EPS`] into the layer below (the deepest
    /// interface into the layer above), with a warning.
    pub fn from_positions(layers: usize, positions: &[f64]) -> Result<Self> {
        let mut grid = StationGrid {
            layers,
            xhat: Vec::new(),
            layer: Vec::new(),
            warnings: Vec::new(),
        };
        let mut sorted = positions.to_vec();
        sorted.sort_by(f64::total_cmp);
        for x in sorted {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Domain(format!("station {x} lies outside [0, 1]")));
            }
            let scaled = x * layers as f64;
            let mut y = x;
            if (scaled - scaled.round()).abs() <= 1e-12 {
                y = if scaled.round() as usize == layers { x - STATION_EPS } else { x + STATION_EPS };
                let msg = format!("station {x} lies on an interface; moved to {y}");
                log::warn!("{msg}");
                grid.warnings.push(msg);
            }
            grid.layer.push(super::alignment::reference_layer(y, layers));
            grid.xhat.push(y);
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.xhat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xhat.is_empty()
    }

    /// Interpolates station values at reference coordinate `x` within layer
    /// `k`: piecewise linear between the layer's stations, constant beyond.
    pub fn interpolate(&self, values: &[f64], x: f64, k: usize) -> Result<f64> {
        let lo = self.layer.partition_point(|&l| l < k);
        let hi = self.layer.partition_point(|&l| l <= k);
        if lo == hi {
            return Err(Error::Domain(format!("layer {k} has no stations")));
        }
        let (xs, vs) = (&self.xhat[lo..hi], &values[lo..hi]);
        if x <= xs[0] {
            return Ok(vs[0]);
        }
        if x >= xs[xs.len() - 1] {
            return Ok(vs[vs.len() - 1]);
        }
        let i = xs.partition_point(|&s| s < x);
        let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        Ok(vs[i - 1] + t * (vs[i] - vs[i - 1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_layers() -> LayeredProfile {
        let map = AlignmentMap::new(vec![0.0, -100.0, -300.0]).unwrap();
        let centers = vec![-25.0, -75.0, -150.0, -250.0];
        LayeredProfile::new(map, centers, vec![0, 0, 1, 1], vec![1.0, 2.0, 10.0, 20.0]).unwrap()
    }

    #[test]
    fn interpolation_stays_inside_each_layer() {
        let p = two_layers();
        assert_eq!(p.value_at(-50.0).unwrap(), 1.5);
        assert_eq!(p.value_at(-99.0).unwrap(), 2.0);
        assert_eq!(p.value_at(-100.0).unwrap(), 10.0);
        assert_eq!(p.value_at(-200.0).unwrap(), 15.0);
        assert_eq!(p.value_across_layers(-100.0), 2.0 + 8.0 * 25.0 / 75.0);
    }

    #[test]
    fn uniform_stations_avoid_interfaces() {
        let s = StationGrid::uniform(3, 40);
        assert_eq!(s.len(), 120);
        for (&x, &k) in s.xhat.iter().zip(&s.layer) {
            assert!(x > k as f64 / 3.0 && x < (k + 1) as f64 / 3.0);
        }
    }

    #[test]
    fn stations_on_interfaces_move_inward() {
        let s = StationGrid::from_positions(2, &[0.0, 0.25, 0.5, 1.0]).unwrap();
        assert_eq!(s.warnings.len(), 3);
        assert_eq!(s.layer, vec![0, 0, 1, 1]);
        assert_eq!(s.xhat[2], 0.5 + STATION_EPS);
        assert_eq!(s.xhat[3], 1.0 - STATION_EPS);
    }

    #[test]
    fn resampling_uses_the_profile_interfaces() {
        let p = two_layers();
        let s = StationGrid::from_positions(2, &[0.25, 0.75]).unwrap();
        assert_eq!(p.resample(&s).unwrap(), vec![1.5, 15.0]);
    }
}
