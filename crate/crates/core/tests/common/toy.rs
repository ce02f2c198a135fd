use basin_uq::aligned::{
    predict_field, AlignedFieldSurrogate, AlignmentMap, Field, InterfaceSurrogate, LayeredProfile, PlainFieldSurrogate,
    StationGrid,
};
use basin_uq::sparse_grid::{KnotFamily, MultiIndexSet, SparseGrid, SparseGridSurrogate};
use basin_uq::ParameterSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two layers in [0, -100] m separated by an interface that is a quadratic
/// polynomial of two parameters.
pub fn toy_interface(p: &[f64]) -> f64 {
    -50.0 + 12.0 * p[0] - 6.0 * p[1] * p[1] + 4.0 * p[0] * p[1]
}

pub const TOY_A: f64 = 1.0;
pub const TOY_B: f64 = 3.0;

pub fn toy_value(z: f64, psi: f64) -> f64 {
    if z > psi {
        TOY_A
    } else {
        TOY_B
    }
}

/// Profile of the toy field on a fine mesh with a node on the interface.
pub fn toy_profile(p: &[f64]) -> LayeredProfile {
    let psi = toy_interface(p);
    let map = AlignmentMap::new(vec![0.0, psi, -100.0]).unwrap();
    let (mut centers, mut layer, mut values) = (Vec::new(), Vec::new(), Vec::new());
    for (k, (top, bottom)) in [(0.0, psi), (psi, -100.0)].into_iter().enumerate() {
        let n = 50;
        for i in 0..n {
            let z = top + (bottom - top) * (i as f64 + 0.5) / n as f64;
            centers.push(z);
            layer.push(k);
            values.push(toy_value(z, psi));
        }
    }
    LayeredProfile::new(map, centers, layer, values).unwrap()
}

pub fn toy_space() -> ParameterSpace {
    ParameterSpace::new(vec![(-1.0, 1.0), (-1.0, 1.0)]).unwrap()
}

pub fn toy_grid(w: f64) -> SparseGrid {
    SparseGrid::new(MultiIndexSet::isotropic(2, w), KnotFamily::gauss_legendre()).unwrap()
}

/// Largest errors of the aligned and the plain depth-based surrogates of
/// the toy field, sampled within 3 m of the interface.
pub fn toy_separation(w: f64, samples: usize, seed: u64) -> (f64, f64) {
    let space = toy_space();
    let grid = toy_grid(w);
    let points = SparseGridSurrogate::collocation_points(&grid, &space);
    let profiles: Vec<LayeredProfile> = points.iter().map(|p| toy_profile(p)).collect();
    let iface_values = points.iter().map(|p| vec![0.0, toy_interface(p), -100.0]).collect();
    let names = vec!["a".into(), "b".into(), "c".into()];
    let interfaces = InterfaceSurrogate {
        surrogate: SparseGridSurrogate::from_values(grid.clone(), space.clone(), names, iface_values).unwrap(),
        layer_materials: vec!["top".into(), "bottom".into()],
    };
    let stations = StationGrid::uniform(2, 40);
    let aligned = AlignedFieldSurrogate::from_profiles(grid.clone(), space.clone(), Field::Porosity, stations, &profiles).unwrap();
    let depths: Vec<f64> = (0..=200).map(|i| -0.5 * i as f64).collect();
    let plain = PlainFieldSurrogate::from_profiles(grid, space, Field::Porosity, depths, &profiles).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut aligned_err, mut plain_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..samples {
        let p = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let psi = toy_interface(&p);
        for dz in [-3.0, -1.0, -0.3, 0.3, 1.0, 3.0] {
            let z = psi + dz;
            let truth = toy_value(z, psi);
            let a = predict_field(z, &p, &interfaces, &aligned).unwrap();
            aligned_err = aligned_err.max((a - truth).abs());
            plain_err = plain_err.max((plain.evaluate(z, &p).unwrap() - truth).abs());
        }
    }
    (aligned_err, plain_err)
}
