//! Per-lithology constants and the pointwise constitutive laws shared by the
//! forward solver and the post-processing layers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::KELVIN_OFFSET;

const LN_10: f64 = std::f64::consts::LN_10;

/// Constitutive constants of one sediment type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialProperties {
    /// Name used by depositional events to refer to this material.
    pub id: String,
    /// Solid density, kg/m^3.
    pub rho_s: f64,
    /// Solid specific heat capacity, J/(K kg).
    pub c_s: f64,
    /// Solid thermal conductivity, W/(K m).
    pub lambda_s: f64,
    /// Porosity at deposition.
    pub phi0: f64,
    /// Residual porosity reachable by mechanical compaction alone.
    pub phi_f: f64,
    /// Slope of log10 permeability in porosity.
    pub k1: f64,
    /// Offset of log10 permeability.
    pub k2: f64,
    /// Uniaxial vertical compressibility, 1/Pa.
    pub beta: f64,
    /// Whether quartz cementation acts in this material (sand-rich sediments).
    #[serde(default)]
    pub quartz_cementation: bool,
}

impl MaterialProperties {
    pub fn validate(&self, errors: &mut Vec<String>) {
        let id = &self.id;
        if !(0.0 < self.phi_f && self.phi_f < self.phi0 && self.phi0 < 1.0) {
            errors.push(format!(
                "material `{id}`: require 0 < phi_f < phi0 < 1 (phi_f = {}, phi0 = {})",
                self.phi_f, self.phi0
            ));
        }
        if !(self.beta > 0.0) {
            errors.push(format!("material `{id}`: beta must be positive"));
        }
        if !(self.rho_s > 0.0) {
            errors.push(format!("material `{id}`: rho_s must be positive"));
        }
        if !(self.c_s > 0.0 && self.lambda_s > 0.0) {
            errors.push(format!("material `{id}`: c_s and lambda_s must be positive"));
        }
        if !(self.k1.is_finite() && self.k2.is_finite()) {
            errors.push(format!("material `{id}`: k1 and k2 must be finite"));
        }
    }

    /// Bulk density of the saturated sediment at porosity `phi`.
    pub fn bulk_density(&self, phi: f64, fluid: &FluidProperties) -> f64 {
        phi * fluid.rho_l + (1.0 - phi) * self.rho_s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluidProperties {
    /// Pore-fluid density, kg/m^3.
    pub rho_l: f64,
    /// Seawater density, kg/m^3.
    pub rho_sea: f64,
    /// Dynamic viscosity, Pa s.
    pub mu_l: f64,
    /// Fluid specific heat capacity, J/(K kg).
    pub c_l: f64,
    /// Fluid thermal conductivity, W/(K m).
    pub lambda_l: f64,
}

impl FluidProperties {
    pub fn validate(&self, errors: &mut Vec<String>) {
        for (name, v) in [
            ("rho_l", self.rho_l),
            ("rho_sea", self.rho_sea),
            ("mu_l", self.mu_l),
            ("c_l", self.c_l),
            ("lambda_l", self.lambda_l),
        ] {
            if !(v > 0.0) {
                errors.push(format!("fluid: {name} must be positive (got {v})"));
            }
        }
    }
}

/// Quartz precipitation kinetics (Walderhaug-type law).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuartzKinetics {
    /// Quartz density, kg/m^3.
    pub rho_q: f64,
    /// Quartz molar mass, kg/mol.
    pub molar_mass: f64,
    /// Specific surface at activation, 1/m.
    pub a0: f64,
    /// Rate prefactor, mol/(m^2 s).
    pub a_q: f64,
    /// Temperature exponent, 1/degC.
    pub b_q: f64,
    /// Activation temperature, K.
    pub t_c: f64,
}

impl QuartzKinetics {
    pub fn validate(&self, errors: &mut Vec<String>) {
        for (name, v) in [
            ("rho_q", self.rho_q),
            ("molar_mass", self.molar_mass),
            ("a0", self.a0),
            ("a_q", self.a_q),
            ("b_q", self.b_q),
            ("t_c", self.t_c),
        ] {
            if !(v > 0.0) {
                errors.push(format!("quartz: {name} must be positive (got {v})"));
            }
        }
        if self.t_c > 0.0 && !(353.0..=373.15).contains(&self.t_c) {
            log::warn!(
                "quartz activation temperature {} K is outside the usual [353, 373] K range",
                self.t_c
            );
        }
    }

    /// Rate coefficient per unit of `phi / phi_act`, in 1/s.
    fn rate_prefactor(&self, t_kelvin: f64) -> f64 {
        self.a0 * self.molar_mass / self.rho_q
            * self.a_q
            * 10f64.powf(self.b_q * (t_kelvin - KELVIN_OFFSET))
    }
}

/// Permeability in m^2 from the log-linear porosity law.
pub fn permeability(phi: f64, mat: &MaterialProperties) -> Result<f64> {
    if !(0.0..1.0).contains(&phi) {
        return Err(Error::Domain(format!(
            "porosity {phi} outside [0, 1) in permeability law"
        )));
    }
    Ok(permeability_unchecked(phi, mat))
}

pub(crate) fn permeability_unchecked(phi: f64, mat: &MaterialProperties) -> f64 {
    10f64.powf(mat.k1 * phi - mat.k2 - 15.0)
}

/// d K / d phi.
pub(crate) fn permeability_derivative(phi: f64, mat: &MaterialProperties) -> f64 {
    LN_10 * mat.k1 * permeability_unchecked(phi, mat)
}

/// Porosity in drained equilibrium with effective stress `sigma_c` (Pa),
/// i.e. the closed-form integral of the mechanical compaction law from a
/// stress-free depositional state.
pub fn mech_equilibrium_porosity(sigma_c: f64, mat: &MaterialProperties) -> f64 {
    mat.phi_f + (mat.phi0 - mat.phi_f) * (-mat.beta * sigma_c).exp()
}

/// Quartz-fraction growth rate d(phi_Q)/dt in 1/s.
///
/// `phi_act` is the porosity recorded when the cell first reached the
/// activation temperature; `None` means the cell never activated. The
/// exponent uses the temperature in degrees Celsius.
pub fn quartz_rate(phi: f64, phi_act: Option<f64>, t_kelvin: f64, kin: &QuartzKinetics) -> f64 {
    match phi_act {
        Some(phi_act) if t_kelvin >= kin.t_c && phi_act > 0.0 => {
            kin.rate_prefactor(t_kelvin) * phi / phi_act
        }
        _ => 0.0,
    }
}

/// Rate over a time step for an activation porosity that already accounts
/// for the part of the step spent above the activation temperature; the
/// temperature gate is not applied again.
pub(crate) fn quartz_step_rate(phi: f64, phi_act: Option<f64>, t_kelvin: f64, kin: &QuartzKinetics) -> f64 {
    quartz_step_rate_dphi(phi_act, t_kelvin, kin) * phi
}

/// d(quartz_step_rate)/d(phi) at fixed temperature.
pub(crate) fn quartz_step_rate_dphi(phi_act: Option<f64>, t_kelvin: f64, kin: &QuartzKinetics) -> f64 {
    match phi_act {
        Some(phi_act) if phi_act > 0.0 => kin.rate_prefactor(t_kelvin) / phi_act,
        _ => 0.0,
    }
}

/// Effective volumetric heat capacity and thermal conductivity of the
/// saturated medium: arithmetic mixing for capacity, geometric for
/// conductivity.
pub fn thermal_coefficients(
    phi: f64,
    mat: &MaterialProperties,
    fluid: &FluidProperties,
) -> (f64, f64) {
    let c_t = phi * fluid.rho_l * fluid.c_l + (1.0 - phi) * mat.rho_s * mat.c_s;
    let k_t = fluid.lambda_l.powf(phi) * mat.lambda_s.powf(1.0 - phi);
    (c_t, k_t)
}

/// Sandstone/shale permeability blend used by the solver robustness study:
/// `alpha = 1` is the permeable end member, `alpha = 0` the tight one.
pub fn blend_permeability_coefficients(alpha: f64) -> (f64, f64) {
    let k1 = 14.9 * alpha + 1.94 * (1.0 - alpha);
    let k2 = 7.7 * alpha + 8.0 * (1.0 - alpha);
    (k1, k2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn sandstone() -> MaterialProperties {
        MaterialProperties {
            id: "sand".into(),
            rho_s: 2648.0,
            c_s: 741.0,
            lambda_s: 3.0,
            phi0: 0.5,
            phi_f: 0.14,
            k1: 14.9,
            k2: 1.94,
            beta: 4e-8,
            quartz_cementation: true,
        }
    }

    fn fluid() -> FluidProperties {
        FluidProperties {
            rho_l: 999.0,
            rho_sea: 1025.0,
            mu_l: 1.001e-3,
            c_l: 4186.0,
            lambda_l: 0.6,
        }
    }

    fn kinetics() -> QuartzKinetics {
        QuartzKinetics {
            rho_q: 2650.0,
            molar_mass: 6.008e-2,
            a0: 1e4,
            a_q: 5e-19,
            b_q: 0.022,
            t_c: 373.15,
        }
    }

    #[test]
    fn permeability_values() {
        let mut m = sandstone();
        m.k2 = 8.0;
        assert_relative_eq!(permeability(0.0, &m).unwrap(), 1e-23, max_relative = 1e-12);

        let m = sandstone();
        assert_relative_eq!(
            permeability(0.5, &m).unwrap(),
            10f64.powf(-9.49),
            max_relative = 1e-12
        );

        let (k1, k2) = blend_permeability_coefficients(0.5);
        assert_relative_eq!(k1, 8.42, epsilon = 1e-12);
        assert_relative_eq!(k2, 7.85, epsilon = 1e-12);
        let blended = MaterialProperties { k1, k2, ..sandstone() };
        assert_relative_eq!(
            permeability(0.3, &blended).unwrap(),
            10f64.powf(-20.324),
            max_relative = 1e-10
        );
    }

    #[test]
    fn permeability_rejects_out_of_range_porosity() {
        assert!(permeability(1.0, &sandstone()).is_err());
        assert!(permeability(-0.01, &sandstone()).is_err());
    }

    #[test]
    fn permeability_derivative_matches_difference() {
        let m = sandstone();
        let phi = 0.31;
        let d = 1e-6;
        let fd = (permeability_unchecked(phi + d, &m) - permeability_unchecked(phi - d, &m))
            / (2.0 * d);
        assert_relative_eq!(permeability_derivative(phi, &m), fd, max_relative = 1e-8);
    }

    #[test]
    fn equilibrium_porosity_values() {
        let m = sandstone();
        assert_eq!(mech_equilibrium_porosity(0.0, &m), m.phi0);
        assert_relative_eq!(mech_equilibrium_porosity(1e12, &m), m.phi_f, epsilon = 1e-12);
        assert_relative_eq!(
            mech_equilibrium_porosity(1e7, &m),
            0.14 + 0.36 * (-0.4f64).exp(),
            epsilon = 1e-14
        );
        assert_relative_eq!(mech_equilibrium_porosity(1e7, &m), 0.38131, epsilon = 1e-5);
    }

    #[test]
    fn quartz_rate_values() {
        let kin = kinetics();
        assert_eq!(quartz_rate(0.3, Some(0.3), 360.0, &kin), 0.0);
        assert_eq!(quartz_rate(0.3, None, 400.0, &kin), 0.0);

        let r = quartz_rate(0.3, Some(0.3), 373.15, &kin);
        let expected = 1e4 * (6.008e-2 / 2650.0) * 5e-19 * 10f64.powf(0.022 * 100.0);
        assert_relative_eq!(r, expected, max_relative = 1e-12);
        assert_relative_eq!(r, 1.797e-17, max_relative = 1e-3);

        let doubled = quartz_rate(0.6, Some(0.3), 373.15, &kin);
        assert_relative_eq!(doubled, 2.0 * r, max_relative = 1e-14);
    }

    #[test]
    fn thermal_end_members() {
        let m = sandstone();
        let f = fluid();
        let (c, k) = thermal_coefficients(0.0, &m, &f);
        assert_relative_eq!(c, m.rho_s * m.c_s);
        assert_relative_eq!(k, m.lambda_s);
        let (c, k) = thermal_coefficients(1.0, &m, &f);
        assert_relative_eq!(c, f.rho_l * f.c_l);
        assert_relative_eq!(k, f.lambda_l);
        let (_, k) = thermal_coefficients(0.5, &m, &f);
        assert_relative_eq!(k, 1.8f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(k, 1.3416, epsilon = 1e-4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn permeability_increasing(a in 0.0f64..0.98, d in 1e-4f64..0.01, k1 in 0.1f64..20.0) {
                let m = MaterialProperties { k1, ..sandstone() };
                prop_assert!(permeability(a + d, &m).unwrap() > permeability(a, &m).unwrap());
            }

            #[test]
            fn equilibrium_porosity_decreasing_and_bounded(s in 0.0f64..1e8, d in 1.0f64..1e6) {
                let m = sandstone();
                let p = mech_equilibrium_porosity(s, &m);
                let q = mech_equilibrium_porosity(s + d, &m);
                prop_assert!(q < p);
                prop_assert!(p <= m.phi0 && p >= m.phi_f);
            }

            #[test]
            fn quartz_rate_zero_below_activation(phi in 0.01f64..0.9, t in 250.0f64..373.0) {
                prop_assert_eq!(quartz_rate(phi, Some(0.3), t, &kinetics()), 0.0);
            }

            #[test]
            fn conductivity_between_end_members(phi in 0.0f64..=1.0) {
                let m = sandstone();
                let f = fluid();
                let (_, k) = thermal_coefficients(phi, &m, &f);
                prop_assert!(k >= f.lambda_l.min(m.lambda_s) - 1e-12);
                prop_assert!(k <= f.lambda_l.max(m.lambda_s) + 1e-12);
            }
        }
    }
}
