//! Two-step surrogates: interface depths first, then fields at fixed
//! reference positions between them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{ParameterSpace, ScenarioConfig};
use crate::sparse_grid::{SparseGrid, SparseGridSurrogate, SurrogateDocument};

use super::alignment::AlignmentMap;
use super::model::ModelRun;
use super::profile::{interpolate_descending, Field, LayeredProfile, StationGrid};

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

/// Output labels `psi_1 .. psi_{K+1}` for interfaces `0 .. K`.
pub fn interface_labels(count: usize) -> Vec<String> {
    (1..=count).map(|k| format!("psi_{k}")).collect()
}

/// Interface depths predicted at one parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfacePrediction {
    pub depths: Vec<f64>,
    /// False if the raw surrogate values were not strictly decreasing.
    pub ordered: bool,
}

impl InterfacePrediction {
    /// Alignment map of the prediction. Out-of-order predictions are sorted
    /// and separated by a tiny gap (nearest valid ordering).
    pub fn alignment(&self) -> Result<AlignmentMap> {
        if self.ordered {
            return AlignmentMap::new(self.depths.clone());
        }
        let mut d = self.depths.clone();
        d.sort_by(|a, b| b.total_cmp(a));
        for k in 1..d.len() {
            let gap = 1e-9 * d[k - 1].abs().max(1.0);
            if d[k] > d[k - 1] - gap {
                d[k] = d[k - 1] - gap;
            }
        }
        AlignmentMap::new(d)
    }
}

#[derive(Clone, Debug)]
pub struct InterfaceSurrogate {
    pub surrogate: SparseGridSurrogate,
    /// Material id of each layer, from the top down.
    pub layer_materials: Vec<String>,
}

impl InterfaceSurrogate {
    /// Surrogate of the interface depths of `runs`, which must follow the
    /// collocation order of `grid`.
    pub fn from_runs(grid: SparseGrid, space: ParameterSpace, runs: &[ModelRun], cfg: &ScenarioConfig) -> Result<Self> {
        let count = cfg.layer_count() + 1;
        if let Some(r) = runs.iter().find(|r| r.interfaces.len() != count) {
            return Err(Error::LayerCount {
                expected: count - 1,
                found: r.interfaces.len() - 1,
            });
        }
        let values = runs.iter().map(|r| r.interfaces.clone()).collect();
        let surrogate = SparseGridSurrogate::from_values(grid, space, interface_labels(count), values)?;
        let mut layer_materials = cfg.layer_materials();
        layer_materials.reverse();
        Ok(InterfaceSurrogate {
            surrogate,
            layer_materials,
        })
    }

    pub fn layers(&self) -> usize {
        self.surrogate.outputs() - 1
    }

    pub fn predict(&self, p: &[f64]) -> Result<InterfacePrediction> {
        let depths = self.surrogate.evaluate(p)?;
        let ordered = depths.windows(2).all(|w| w[1] < w[0]);
        if !ordered {
            log::warn!("interface surrogate out of order at {p:?}: {depths:?}");
        }
        Ok(InterfacePrediction { depths, ordered })
    }

    pub fn alignment(&self, p: &[f64]) -> Result<AlignmentMap> {
        self.predict(p)?.alignment()
    }

    /// Layer (from the top) predicted to contain `z` at `p`.
    pub fn classify_layer(&self, z: f64, p: &[f64]) -> Result<usize> {
        self.alignment(p)?.layer_of(z)
    }

    /// Material id predicted at depth `z` for parameters `p`.
    pub fn classify_material(&self, z: f64, p: &[f64]) -> Result<&str> {
        Ok(&self.layer_materials[self.classify_layer(z, p)?])
    }
}

/// Field surrogates at fixed reference stations.
#[derive(Clone, Debug)]
pub struct AlignedFieldSurrogate {
    pub field: Field,
    pub stations: StationGrid,
    pub surrogate: SparseGridSurrogate,
}

impl AlignedFieldSurrogate {
    /// Each profile is resampled at the stations through its own interfaces;
    /// profiles follow the collocation order of `grid`.
    pub fn from_profiles(
        grid: SparseGrid,
        space: ParameterSpace,
        field: Field,
        stations: StationGrid,
        profiles: &[LayeredProfile],
    ) -> Result<Self> {
        let values = profiles.iter().map(|p| p.resample(&stations)).collect::<Result<Vec<_>>>()?;
        let names = (0..stations.len()).map(|i| format!("{}@{i}", field.name())).collect();
        let surrogate = SparseGridSurrogate::from_values(grid, space, names, values)?;
        Ok(AlignedFieldSurrogate {
            field,
            stations,
            surrogate,
        })
    }

    pub fn station_values(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.surrogate.evaluate(p)
    }

    /// Field at reference coordinate `x` inside layer `k`.
    pub fn evaluate_reference(&self, x: f64, k: usize, p: &[f64]) -> Result<f64> {
        self.stations.interpolate(&self.station_values(p)?, x, k)
    }
}

/// Field at `z` for parameters `p`: predicted interfaces, their alignment
/// map, the reference coordinate of `z`, and the station surrogates there.
pub fn predict_field(z: f64, p: &[f64], interfaces: &InterfaceSurrogate, field: &AlignedFieldSurrogate) -> Result<f64> {
    let map = interfaces.alignment(p)?;
    let x = map.to_reference(z)?;
    field.evaluate_reference(x, map.layer_of(z)?, p)
}

/// Field surrogates at fixed physical depths, ignoring the layering. Used
/// as the baseline that the aligned surrogate improves on.
#[derive(Clone, Debug)]
pub struct PlainFieldSurrogate {
    pub field: Field,
    /// Strictly decreasing depths.
    pub depths: Vec<f64>,
    pub surrogate: SparseGridSurrogate,
}

impl PlainFieldSurrogate {
    pub fn from_profiles(
        grid: SparseGrid,
        space: ParameterSpace,
        field: Field,
        depths: Vec<f64>,
        profiles: &[LayeredProfile],
    ) -> Result<Self> {
        if depths.is_empty() || depths.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Domain("plain surrogate depths must be strictly decreasing".into()));
        }
        let values = profiles
            .iter()
            .map(|pr| depths.iter().map(|&z| pr.value_across_layers(z)).collect())
            .collect();
        let names = (0..depths.len()).map(|i| format!("{}@{i}", field.name())).collect();
        let surrogate = SparseGridSurrogate::from_values(grid, space, names, values)?;
        Ok(PlainFieldSurrogate {
            field,
            depths,
            surrogate,
        })
    }

    pub fn evaluate(&self, z: f64, p: &[f64]) -> Result<f64> {
        Ok(interpolate_descending(&self.depths, &self.surrogate.evaluate(p)?, z))
    }
}

/// Interface surrogate together with aligned field surrogates built from
/// the same collocation runs.
#[derive(Clone, Debug)]
pub struct TwoStepSurrogate {
    pub interfaces: InterfaceSurrogate,
    pub fields: Vec<AlignedFieldSurrogate>,
}

impl TwoStepSurrogate {
    pub fn from_runs(
        grid: &SparseGrid,
        cfg: &ScenarioConfig,
        runs: &[ModelRun],
        fields: &[Field],
        stations: &StationGrid,
    ) -> Result<Self> {
        let space = cfg.parameter_space();
        let interfaces = InterfaceSurrogate::from_runs(grid.clone(), space.clone(), runs, cfg)?;
        let fields = fields
            .iter()
            .map(|&f| {
                let profiles = runs.iter().map(|r| r.profile(f, cfg)).collect::<Result<Vec<_>>>()?;
                AlignedFieldSurrogate::from_profiles(grid.clone(), space.clone(), f, stations.clone(), &profiles)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TwoStepSurrogate { interfaces, fields })
    }

    pub fn field(&self, f: Field) -> Option<&AlignedFieldSurrogate> {
        self.fields.iter().find(|s| s.field == f)
    }

    pub fn predict(&self, f: Field, z: f64, p: &[f64]) -> Result<f64> {
        let s = self
            .field(f)
            .ok_or_else(|| Error::Domain(format!("no surrogate for field {}", f.name())))?;
        predict_field(z, p, &self.interfaces, s)
    }

    pub fn to_document(&self) -> BundleDocument {
        BundleDocument {
            format_version: BUNDLE_FORMAT_VERSION,
            layer_materials: self.interfaces.layer_materials.clone(),
            interfaces: self.interfaces.surrogate.to_document(),
            fields: self
                .fields
                .iter()
                .map(|f| FieldDocument {
                    field: f.field,
                    stations: f.stations.clone(),
                    surrogate: f.surrogate.to_document(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: BundleDocument) -> Result<Self> {
        if doc.format_version != BUNDLE_FORMAT_VERSION {
            return Err(Error::Domain(format!("unsupported bundle format version {}", doc.format_version)));
        }
        let interfaces = InterfaceSurrogate {
            surrogate: SparseGridSurrogate::from_document(doc.interfaces)?,
            layer_materials: doc.layer_materials,
        };
        let fields = doc
            .fields
            .into_iter()
            .map(|f| {
                Ok(AlignedFieldSurrogate {
                    field: f.field,
                    stations: f.stations,
                    surrogate: SparseGridSurrogate::from_document(f.surrogate)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TwoStepSurrogate { interfaces, fields })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_document())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_document(serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldDocument {
    pub field: Field,
    pub stations: StationGrid,
    pub surrogate: SurrogateDocument,
}

/// Persisted form of a [`TwoStepSurrogate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleDocument {
    pub format_version: u32,
    pub layer_materials: Vec<String>,
    pub interfaces: SurrogateDocument,
    pub fields: Vec<FieldDocument>,
}
