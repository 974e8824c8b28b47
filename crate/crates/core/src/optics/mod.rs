//! Physics of the individual bench components.

mod detector;
mod pbs;
mod phase_match;
mod qhq;
mod spdc;
mod waveplate;

pub use detector::{click_distribution, detect, DetectorSpec};
pub use pbs::{pbs_block, pbs_mode_unitary, PbsBasis, PbsPorts, PbsSpec};
pub use phase_match::{phase_match, PhaseMatch, Ray, RefractiveIndexPoint, Wave, SPEED_OF_LIGHT};
pub use qhq::{qhq_decompose, qhq_unitary, QhqAngles, QhqDecomposition};
pub use spdc::{spdc_emit, CrystalGeometry, EmissionBranch, SpdcSourceSpec};
pub use waveplate::{jones_hwp, jones_qwp, jones_retarder, rotation, WaveplateKind, WaveplateSpec};
