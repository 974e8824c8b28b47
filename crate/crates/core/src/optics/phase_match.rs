use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Refractive indices of a birefringent crystal at one angular frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefractiveIndexPoint {
    pub n_ordinary: f64,
    pub n_extraordinary: f64,
    /// rad/s
    pub omega: f64,
}

impl RefractiveIndexPoint {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_ordinary > 1.0 && self.n_extraordinary > 1.0) {
            return Err(Error::InvalidValue {
                param: "refractive index".into(),
                message: format!(
                    "indices must exceed 1 (got n_o = {}, n_e = {})",
                    self.n_ordinary, self.n_extraordinary
                ),
            });
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidFrequencies(format!(
                "ω = {} must be positive",
                self.omega
            )));
        }
        Ok(())
    }

    pub fn from_wavelength(wavelength: f64, n_ordinary: f64, n_extraordinary: f64) -> Self {
        Self {
            n_ordinary,
            n_extraordinary,
            omega: 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / wavelength,
        }
    }
}

/// Which index a wave sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ray {
    Ordinary,
    Extraordinary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub point: RefractiveIndexPoint,
    pub ray: Ray,
}

impl Wave {
    pub fn new(point: RefractiveIndexPoint, ray: Ray) -> Self {
        Self { point, ray }
    }

    fn index(&self) -> f64 {
        match self.ray {
            Ray::Ordinary => self.point.n_ordinary,
            Ray::Extraordinary => self.point.n_extraordinary,
        }
    }

    /// Wavenumber `n(ω)·ω/c`, rad/m.
    pub fn wavenumber(&self) -> f64 {
        self.index() * self.point.omega / SPEED_OF_LIGHT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatch {
    pub matched: bool,
    /// `|k₂ + k₃ − k₁|` in rad/m.
    pub mismatch: f64,
}

/// Collinear momentum balance for down-conversion of `pump` (ω₁) into
/// `signal` (ω₂) and `idler` (ω₃).
pub fn phase_match(pump: &Wave, signal: &Wave, idler: &Wave, tolerance: f64) -> Result<PhaseMatch> {
    for w in [pump, signal, idler] {
        w.point.validate()?;
    }
    let (w1, w2, w3) = (pump.point.omega, signal.point.omega, idler.point.omega);
    if ((w2 + w3) - w1).abs() > 1e-9 * w1 {
        return Err(Error::InvalidFrequencies(format!(
            "ω₂ + ω₃ = {} differs from ω₁ = {w1}",
            w2 + w3
        )));
    }
    let mismatch = (signal.wavenumber() + idler.wavenumber() - pump.wavenumber()).abs();
    Ok(PhaseMatch {
        matched: mismatch <= tolerance,
        mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const N_O: f64 = 1.6776;
    const N_E: f64 = 1.5534;

    fn degenerate(pump_n: (f64, f64), pair_n: (f64, f64)) -> (Wave, Wave) {
        let pump = RefractiveIndexPoint::from_wavelength(351e-9, pump_n.0, pump_n.1);
        let pair = RefractiveIndexPoint {
            n_ordinary: pair_n.0,
            n_extraordinary: pair_n.1,
            omega: pump.omega / 2.0,
        };
        (
            Wave::new(pump, Ray::Extraordinary),
            Wave::new(pair, Ray::Ordinary),
        )
    }

    #[test]
    fn equal_indices_match_exactly() {
        let (p, s) = degenerate((1.6, 1.6), (1.6, 1.6));
        let r = phase_match(&p, &s, &s, 0.0).unwrap();
        assert!(r.matched);
        assert_eq!(r.mismatch, 0.0);
    }

    #[test]
    fn type_one_birefringent_match() {
        // n_o at the doubled wavelength equals n_e at the pump wavelength
        let (p, s) = degenerate((N_O, N_E), (N_E, 1.5));
        let r = phase_match(&p, &s, &s, 1e-6).unwrap();
        assert!(r.matched, "mismatch {}", r.mismatch);
    }

    #[test]
    fn ordinary_pump_is_rejected() {
        let (mut p, s) = degenerate((N_O, N_E), (N_E, N_E));
        p.ray = Ray::Ordinary;
        let r = phase_match(&p, &s, &s, 1.0).unwrap();
        let expected = (N_O - N_E) * p.point.omega / SPEED_OF_LIGHT;
        assert!((r.mismatch - expected).abs() < 1e-9 * expected);
        assert!(!r.matched);
    }

    #[test]
    fn energy_violation_is_error() {
        let (p, mut s) = degenerate((1.6, 1.6), (1.6, 1.6));
        s.point.omega *= 1.01;
        assert!(matches!(
            phase_match(&p, &s, &s, 1.0),
            Err(Error::InvalidFrequencies(_))
        ));
    }

    proptest! {
        #[test]
        fn monotone_in_tolerance(n1 in 1.4f64..1.8, n2 in 1.4f64..1.8, t in 0.0f64..1e7, extra in 0.0f64..1e7) {
            let (p, s) = degenerate((n1, n1), (n2, n2));
            let a = phase_match(&p, &s, &s, t).unwrap();
            let b = phase_match(&p, &s, &s, t + extra).unwrap();
            prop_assert!(!a.matched || b.matched);
        }
    }
}
