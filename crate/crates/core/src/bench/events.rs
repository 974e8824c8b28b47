use serde::{Deserialize, Serialize};

use crate::state::{BlochVector, PolarizationState};

/// Reduced polarization of one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSnapshot {
    pub path: String,
    /// Probability that the path holds at least one photon.
    pub occupation: f64,
    /// Probability that it holds exactly one.
    pub single_photon: f64,
    /// Stokes vector conditioned on a single photon; shorter than 1 when
    /// the photon is entangled with others.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloch: Option<BlochVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<PolarizationState>,
}

/// Causally ordered record of what a shot did. Exact traces use shot 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    PhotonEmitted {
        shot: u64,
        source: String,
        paths: Vec<PathSnapshot>,
    },
    SegmentTraversed {
        shot: u64,
        /// `from->to`
        link: String,
    },
    PlateCrossed {
        shot: u64,
        component: String,
        bloch: BlochVector,
        purity: f64,
    },
    Detection {
        shot: u64,
        detector: String,
        clicks: u32,
    },
    Herald {
        shot: u64,
        heralded: bool,
        /// Clicking detectors joined with `&`.
        pattern: String,
    },
}

impl Event {
    pub fn shot(&self) -> u64 {
        match self {
            Event::PhotonEmitted { shot, .. }
            | Event::SegmentTraversed { shot, .. }
            | Event::PlateCrossed { shot, .. }
            | Event::Detection { shot, .. }
            | Event::Herald { shot, .. } => *shot,
        }
    }

    pub(crate) fn with_shot(&self, n: u64) -> Event {
        let mut e = self.clone();
        match &mut e {
            Event::PhotonEmitted { shot, .. }
            | Event::SegmentTraversed { shot, .. }
            | Event::PlateCrossed { shot, .. }
            | Event::Detection { shot, .. }
            | Event::Herald { shot, .. } => *shot = n,
        }
        e
    }
}
