use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::waveplate::{jones_hwp, rotation};
use crate::error::{Error, Result};
use crate::fock::{ModeRegistry, ModeUnitary};
use crate::state::{Jones, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PbsBasis {
    HV,
    DA,
}

/// Polarizing beam splitter. In the HV basis H is transmitted (`in_k → out_k`)
/// and V is reflected (`in1 → out2`, `in2 → out1`) with `reflection_phase`.
/// The DA basis wraps the same splitter in 22.5° half-wave plates on all four
/// ports. `angle` rotates the whole splitter about the beam axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PbsSpec {
    pub basis: PbsBasis,
    pub reflection_phase: C64,
    pub angle: f64,
}

impl Default for PbsSpec {
    fn default() -> Self {
        Self {
            basis: PbsBasis::HV,
            reflection_phase: C64::new(0.0, 1.0),
            angle: 0.0,
        }
    }
}

impl PbsSpec {
    pub fn hv() -> Self {
        Self::default()
    }

    pub fn da() -> Self {
        Self {
            basis: PbsBasis::DA,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if (self.reflection_phase.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidValue {
                param: "reflection_phase".into(),
                message: format!("|{}| must be 1", self.reflection_phase),
            });
        }
        if !self.angle.is_finite() {
            return Err(Error::InvalidValue {
                param: "angle".into(),
                message: "must be finite".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PbsPorts {
    pub in1: String,
    pub in2: String,
    pub out1: String,
    pub out2: String,
}

fn per_port(j: &Jones) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(4, 4);
    for port in 0..2 {
        for r in 0..2 {
            for c in 0..2 {
                m[(2 * port + r, 2 * port + c)] = j[(r, c)];
            }
        }
    }
    m
}

/// 4×4 scattering block. Columns: `in1.H, in1.V, in2.H, in2.V`;
/// rows: `out1.H, out1.V, out2.H, out2.V`.
pub fn pbs_block(spec: &PbsSpec) -> DMatrix<C64> {
    let one = C64::new(1.0, 0.0);
    let r = spec.reflection_phase;
    let mut b = DMatrix::<C64>::zeros(4, 4);
    b[(0, 0)] = one; // in1.H → out1.H
    b[(3, 1)] = r; // in1.V → out2.V
    b[(2, 2)] = one; // in2.H → out2.H
    b[(1, 3)] = r; // in2.V → out1.V
    if spec.basis == PbsBasis::DA {
        let w = per_port(&jones_hwp(std::f64::consts::FRAC_PI_8));
        b = &w * b * &w;
    }
    if spec.angle != 0.0 {
        let fwd = per_port(&rotation(spec.angle));
        let back = per_port(&rotation(-spec.angle));
        b = fwd * b * back;
    }
    b
}

pub fn pbs_mode_unitary(
    spec: &PbsSpec,
    ports: &PbsPorts,
    registry: Arc<ModeRegistry>,
) -> Result<ModeUnitary> {
    spec.validate()?;
    ModeUnitary::routing(
        registry,
        &[&ports.in1, &ports.in2],
        &[&ports.out1, &ports.out2],
        &pbs_block(spec),
    )
}
