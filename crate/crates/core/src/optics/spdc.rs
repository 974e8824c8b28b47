use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockState, ModeRegistry, Pol};
use crate::state::{PolarizationState, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrystalGeometry {
    /// One type-I crystal: a V pump photon converts into an |H,H⟩ pair.
    SingleCrystal,
    /// Two identical crystals with orthogonal optic axes; the second converts
    /// an H pump photon into |V,V⟩.
    CrossedPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpdcSourceSpec {
    pub geometry: CrystalGeometry,
    /// Pump wavelength in meters.
    pub pump_wavelength: f64,
    /// Pair probability per pump pulse, in `(0, 1]`.
    pub emission_probability: f64,
    /// Phase of the |V,V⟩ branch relative to |H,H⟩, in radians.
    pub relative_phase: f64,
}

impl Default for SpdcSourceSpec {
    fn default() -> Self {
        Self {
            geometry: CrystalGeometry::SingleCrystal,
            pump_wavelength: 351e-9,
            emission_probability: 0.05,
            relative_phase: 0.0,
        }
    }
}

impl SpdcSourceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.emission_probability > 0.0 && self.emission_probability <= 1.0) {
            return Err(Error::InvalidValue {
                param: "emission_probability".into(),
                message: format!("{} not in (0, 1]", self.emission_probability),
            });
        }
        if !(self.pump_wavelength > 0.0 && self.pump_wavelength.is_finite()) {
            return Err(Error::InvalidValue {
                param: "pump_wavelength".into(),
                message: format!("{} must be positive", self.pump_wavelength),
            });
        }
        if !self.relative_phase.is_finite() {
            return Err(Error::InvalidValue {
                param: "relative_phase".into(),
                message: "must be finite".into(),
            });
        }
        Ok(())
    }
}

/// The pair-emission branch of one pump pulse. Its probability is
/// `|amplitude|²`; with the complementary probability no pair is emitted.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionBranch {
    pub amplitude: C64,
    pub state: FockState,
}

impl EmissionBranch {
    pub fn probability(&self) -> f64 {
        self.amplitude.norm_sqr()
    }
}

/// Down-converts a normalized pump `α|H⟩ + β|V⟩` into a photon pair on the
/// `signal` and `idler` paths.
///
/// * single crystal: `|H,H⟩` with amplitude `√p·β`
/// * crossed pair: `β|H,H⟩ + α·e^{iφ}|V,V⟩` with amplitude `√p`
pub fn spdc_emit(
    spec: &SpdcSourceSpec,
    pump: &PolarizationState,
    signal: &str,
    idler: &str,
) -> Result<EmissionBranch> {
    spec.validate()?;
    pump.check_normalized()?;
    let registry = Arc::new(ModeRegistry::from_paths([signal, idler])?);
    let sh = registry.require(signal, Pol::H)?;
    let sv = registry.require(signal, Pol::V)?;
    let ih = registry.require(idler, Pol::H)?;
    let iv = registry.require(idler, Pol::V)?;
    let sqrt_p = C64::new(spec.emission_probability.sqrt(), 0.0);
    let one = C64::new(1.0, 0.0);
    match spec.geometry {
        CrystalGeometry::SingleCrystal => Ok(EmissionBranch {
            amplitude: sqrt_p * pump.beta,
            state: FockState::from_creations(registry, &[(one, vec![sh, ih])])?,
        }),
        CrystalGeometry::CrossedPair => {
            let vv = pump.alpha * C64::from_polar(1.0, spec.relative_phase);
            let state = FockState::from_creations(
                registry,
                &[(pump.beta, vec![sh, ih]), (vv, vec![sv, iv])],
            )?
            .normalized()?;
            Ok(EmissionBranch {
                amplitude: sqrt_p,
                state,
            })
        }
    }
}
