use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::two_qubit::TwoQubitState;
use crate::bench::{
    propagate_exact, propagate_sampled, CompiledScene, Event, InputAssignment, SampleOptions,
};
use crate::error::{Error, Result};
use crate::fock::{FockState, Pol};
use crate::measure::{
    chsh_value, correlation_e, tomography_reconstruct, AnalyzerSetting, CountsTable, JointCounts,
    PortCounts, TomographySettings,
};
use crate::optics::QhqAngles;
use crate::scene::{builtin_scene, Scene};
use crate::state::{fidelity, BlochVector, PolarizationState, C64};

fn source_input(id: &str, state: &PolarizationState) -> InputAssignment {
    let mut inputs = InputAssignment::new();
    inputs.insert(id.into(), *state);
    inputs
}

/// Puts `angles` on a quarter–half–quarter triple. The photon crosses
/// `first` (γ), then `middle` (β), then `last` (α).
fn set_qhq(scene: &mut Scene, [first, middle, last]: [&str; 3], angles: &QhqAngles) -> Result<()> {
    scene.set_angle(first, "angle", angles.gamma.to_degrees(), false)?;
    scene.set_angle(middle, "angle", angles.beta.to_degrees(), false)?;
    scene.set_angle(last, "angle", angles.alpha.to_degrees(), false)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeraldedConfig {
    /// Laser polarization angle in degrees; the pump takes the splitter's
    /// reflected (V) port.
    pub laser_polarization: f64,
    /// Pump half-wave plate angle in degrees.
    pub pump_hwp: f64,
}

impl Default for HeraldedConfig {
    fn default() -> Self {
        Self {
            laser_polarization: 90.0,
            pump_hwp: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeraldedReport {
    pub counts: CountsTable,
    /// Sampled heralds per pulse.
    pub herald_rate: f64,
    /// Exact herald probability per pulse.
    pub herald_probability: f64,
    /// Mean number of signal photons in the fiber given a herald click.
    pub signal_photons_per_herald: Option<f64>,
    /// Polarization of the heralded signal photon.
    pub signal_state: Option<PolarizationState>,
}

pub fn heralded_scene(config: &HeraldedConfig) -> Result<Scene> {
    let mut s = builtin_scene("heralded")?;
    s.set_param(
        "laser",
        "polarization",
        Value::from(config.laser_polarization),
    )?;
    s.set_angle("hwp_pump", "angle", config.pump_hwp, false)?;
    Ok(s)
}

/// Pulses the laser `shots` times and tallies herald clicks.
pub fn run_heralded(config: &HeraldedConfig, shots: u64, seed: u64) -> Result<HeraldedReport> {
    let scene = heralded_scene(config)?;
    let none = InputAssignment::new();
    let exact = propagate_exact(&scene, &none)?;
    let herald_probability = exact.herald_probability().unwrap_or(0.0);
    let mut signal_state = None;
    let mut signal_photons_per_herald = None;
    if let Some(b) = exact.main_branch().filter(|b| !b.emitted.is_empty()) {
        signal_state = exact.snapshot("bbo.signal").and_then(|s| s.state);
        let reg = exact.compiled.registry();
        let herald = [
            reg.require("bbo.idler", Pol::H)?,
            reg.require("bbo.idler", Pol::V)?,
        ];
        let signal = [
            reg.require("smf.out", Pol::H)?,
            reg.require("smf.out", Pol::V)?,
        ];
        let (mut p, mut n) = (0.0, 0.0);
        for (occ, a) in b.state.terms() {
            if FockState::count_on(occ, &herald) == 1 {
                p += a.norm_sqr();
                n += a.norm_sqr() * FockState::count_on(occ, &signal) as f64;
            }
        }
        if p > 0.0 {
            signal_photons_per_herald = Some(n / p);
        }
    }
    let run = propagate_sampled(&scene, &none, &SampleOptions::new(shots, seed))?;
    let heralds = run.counts.heralds.unwrap_or(0);
    Ok(HeraldedReport {
        herald_rate: heralds as f64 / shots as f64,
        counts: run.counts,
        herald_probability,
        signal_photons_per_herald,
        signal_state,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub angles: QhqAngles,
    pub input: PolarizationState,
    pub output: PolarizationState,
    /// Bloch vector after each plate, in crossing order.
    pub trajectory: Vec<BlochVector>,
}

/// Sends `input` through the quarter–half–quarter bench.
pub fn run_single_qubit_gate(angles: &QhqAngles, input: &PolarizationState) -> Result<GateReport> {
    input.check_normalized()?;
    let mut scene = builtin_scene("single-qubit-gate")?;
    set_qhq(&mut scene, ["qwp1", "hwp1", "qwp2"], angles)?;
    let run = propagate_exact(&scene, &source_input("source", input))?;
    let output = run
        .snapshot("qwp2.out")
        .and_then(|s| s.state)
        .ok_or_else(|| Error::Configuration("gate output is not a single photon".into()))?;
    let trajectory = run
        .trace()
        .into_iter()
        .filter_map(|e| match e {
            Event::PlateCrossed { bloch, .. } => Some(bloch),
            _ => None,
        })
        .collect();
    Ok(GateReport {
        angles: *angles,
        input: *input,
        output,
        trajectory,
    })
}

pub fn projective_scene(prep: &QhqAngles, analysis: &AnalyzerSetting) -> Result<Scene> {
    let mut scene = builtin_scene("projective-measurement")?;
    set_qhq(&mut scene, ["qwp1", "hwp1", "qwp2"], prep)?;
    scene.set_angle("qwp_analysis", "angle", analysis.qwp.to_degrees(), false)?;
    scene.set_angle("hwp_analysis", "angle", analysis.hwp.to_degrees(), false)?;
    Ok(scene)
}

/// Prepares `source` (|H⟩ by default) with the QHQ triple and counts both
/// splitter ports, `apd_h` and `apd_v`.
pub fn run_projective(
    prep: &QhqAngles,
    analysis: &AnalyzerSetting,
    source: Option<&PolarizationState>,
    shots: u64,
    seed: u64,
) -> Result<CountsTable> {
    let scene = projective_scene(prep, analysis)?;
    let inputs = source
        .map(|s| source_input("source", s))
        .unwrap_or_default();
    Ok(propagate_sampled(&scene, &inputs, &SampleOptions::new(shots, seed))?.counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntangledReport {
    /// Pump power reaching the crystals times the pair probability.
    pub emission_probability: f64,
    /// Signal ⊗ idler polarization state, absent when nothing is emitted.
    pub state: Option<TwoQubitState>,
    pub concurrence: f64,
}

pub fn entangled_scene(pump_pbs_angle: f64, hwp_angle: f64) -> Result<Scene> {
    let mut s = builtin_scene("entangled-pair")?;
    s.set_param("pbs_pump", "angle", Value::from(pump_pbs_angle))?;
    s.set_angle("hwp_pump", "angle", hwp_angle, false)?;
    Ok(s)
}

/// Two-photon state leaving the crossed crystals. Angles in degrees.
pub fn run_entangled_source(pump_pbs_angle: f64, hwp_angle: f64) -> Result<EntangledReport> {
    let scene = entangled_scene(pump_pbs_angle, hwp_angle)?;
    let compiled = CompiledScene::new(&scene, &InputAssignment::new())?;
    let emitter = compiled
        .emitters()
        .first()
        .map(|&(id, p)| (id.to_string(), p));
    let Some((id, p)) = emitter.filter(|e| e.1 > 0.0) else {
        return Ok(EntangledReport {
            emission_probability: 0.0,
            state: None,
            concurrence: 0.0,
        });
    };
    let psi = compiled.initial_state(&[0])?;
    let reg = compiled.registry();
    let mut amps = [C64::default(); 4];
    for (i, ps) in Pol::BOTH.iter().enumerate() {
        for (j, pi) in Pol::BOTH.iter().enumerate() {
            let mut occ = vec![0u8; reg.len()];
            occ[reg.require(&format!("{id}.signal"), *ps)?] += 1;
            occ[reg.require(&format!("{id}.idler"), *pi)?] += 1;
            amps[2 * i + j] = psi.amplitude(&occ);
        }
    }
    let state = TwoQubitState::new(amps).normalized()?.canonical();
    Ok(EntangledReport {
        emission_probability: p,
        concurrence: state.concurrence(),
        state: Some(state),
    })
}

/// Concurrence of the crossed-crystal pair versus pump polarization angle
/// (degrees, set through the pump half-wave plate) in `step` increments
/// over `[0, 180)`.
pub fn concurrence_sweep(step: f64) -> Result<Vec<(f64, f64)>> {
    if !(step > 0.0) {
        return Err(Error::InvalidValue {
            param: "step".into(),
            message: "must be positive".into(),
        });
    }
    let n = (180.0 / step).ceil() as usize;
    (0..n)
        .map(|k| {
            let pump = k as f64 * step;
            Ok((pump, run_entangled_source(0.0, pump / 2.0)?.concurrence))
        })
        .collect()
}

/// Analyzer angles (degrees) of the two CHSH settings per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshAngles {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl Default for ChshAngles {
    fn default() -> Self {
        Self {
            a: 0.0,
            a_prime: 45.0,
            b: 22.5,
            b_prime: 67.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshReport {
    pub angles: ChshAngles,
    pub shots_per_setting: u64,
    /// `E(a,b), E(a,b′), E(a′,b), E(a′,b′)`
    pub correlations: [f64; 4],
    pub coincidences: u64,
    pub s: f64,
}

/// Sampled CHSH value on the entangled-pair bench. The pair probability is
/// raised to 1 so every pulse gives a coincidence; each analyzer half-wave
/// plate sits at half the analyzer angle.
pub fn run_chsh(angles: &ChshAngles, shots_per_setting: u64, seed: u64) -> Result<ChshReport> {
    let mut base = builtin_scene("entangled-pair")?;
    base.set_param("bbo", "emission_probability", Value::from(1.0))?;
    let settings = [
        (angles.a, angles.b),
        (angles.a, angles.b_prime),
        (angles.a_prime, angles.b),
        (angles.a_prime, angles.b_prime),
    ];
    let mut correlations = [0.0; 4];
    let mut coincidences = 0;
    for (k, (a, b)) in settings.into_iter().enumerate() {
        let mut s = base.clone();
        s.set_angle("hwp_a", "angle", a / 2.0, false)?;
        s.set_angle("hwp_b", "angle", b / 2.0, false)?;
        let opts = SampleOptions::new(shots_per_setting, seed.wrapping_add(k as u64));
        let counts = propagate_sampled(&s, &InputAssignment::new(), &opts)?.counts;
        let joint = JointCounts::from_table(&counts, "a_plus", "a_minus", "b_plus", "b_minus");
        coincidences += joint.total() as u64;
        correlations[k] = correlation_e(&joint)?;
    }
    Ok(ChshReport {
        angles: *angles,
        shots_per_setting,
        correlations,
        coincidences,
        s: chsh_value(correlations),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyReport {
    pub prep: PolarizationState,
    /// `None` for exact port probabilities.
    pub shots_per_setting: Option<u64>,
    pub seed: Option<u64>,
    pub counts: [PortCounts; 3],
    pub stokes: [f64; 3],
    /// Rows of the reconstructed density matrix, entries as `[re, im]`.
    pub density_matrix: [[C64; 2]; 2],
    pub fidelity: f64,
}

/// Reconstructs `prep` from the three standard analyzer settings, sampled
/// on the projective bench or, with `shots = None`, from exact port
/// probabilities. Setting `k` uses seed `seed + k`.
pub fn run_tomography(
    prep: &PolarizationState,
    shots: Option<u64>,
    seed: u64,
) -> Result<TomographyReport> {
    prep.check_normalized()?;
    let settings = TomographySettings::default();
    let mut counts = [PortCounts::new(0.0, 0.0); 3];
    for (k, setting) in settings.settings.iter().enumerate() {
        counts[k] = match shots {
            None => PortCounts::exact(prep, setting),
            Some(0) => return Err(Error::InsufficientData("zero shots per setting".into())),
            Some(n) => {
                let ident = QhqAngles::new(0.0, 0.0, 0.0);
                let t =
                    run_projective(&ident, setting, Some(prep), n, seed.wrapping_add(k as u64))?;
                PortCounts::from_table(&t, "apd_h", "apd_v")
            }
        };
    }
    let rho = tomography_reconstruct(&counts, &settings)?;
    Ok(TomographyReport {
        prep: *prep,
        shots_per_setting: shots,
        seed: shots.map(|_| seed),
        counts,
        stokes: rho.stokes(),
        density_matrix: [
            [rho.m[(0, 0)], rho.m[(0, 1)]],
            [rho.m[(1, 0)], rho.m[(1, 1)]],
        ],
        fidelity: fidelity(&rho, prep),
    })
}
