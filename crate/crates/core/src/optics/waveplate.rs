use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::state::{c, Jones, C64};

/// Real rotation of the polarization frame by `theta`.
pub fn rotation(theta: f64) -> Jones {
    let (s, co) = theta.sin_cos();
    Jones::new(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0))
}

/// Half-wave plate with fast axis at `theta`:
/// `[[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]`.
pub fn jones_hwp(theta: f64) -> Jones {
    let (s, co) = (2.0 * theta).sin_cos();
    Jones::new(c(co, 0.0), c(s, 0.0), c(s, 0.0), c(-co, 0.0))
}

/// Linear retarder of retardance `delta` with its axis at `theta`, phases
/// split symmetrically: `R(θ)·diag(e^{iδ/2}, e^{−iδ/2})·R(−θ)`.
pub fn jones_retarder(theta: f64, delta: f64) -> Jones {
    let r = rotation(theta);
    let d = Jones::new(
        C64::from_polar(1.0, delta / 2.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        C64::from_polar(1.0, -delta / 2.0),
    );
    r * d * r.transpose()
}

/// Quarter-wave plate at `theta`. `QWP(θ)² = i·HWP(θ)`.
pub fn jones_qwp(theta: f64) -> Jones {
    jones_retarder(theta, FRAC_PI_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveplateKind {
    Half,
    Quarter,
    General { retardance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveplateSpec {
    pub kind: WaveplateKind,
    /// Fast-axis angle in radians, kept in `[0, π)`.
    pub theta: f64,
}

impl WaveplateSpec {
    pub fn new(kind: WaveplateKind, theta: f64) -> Self {
        Self {
            kind,
            theta: theta.rem_euclid(PI),
        }
    }

    pub fn jones(&self) -> Jones {
        match self.kind {
            WaveplateKind::Half => jones_hwp(self.theta),
            WaveplateKind::Quarter => jones_qwp(self.theta),
            WaveplateKind::General { retardance } => jones_retarder(self.theta, retardance),
        }
    }
}
