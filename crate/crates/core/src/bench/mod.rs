//! Photon propagation through a scene.
//!
//! A scene compiles into a mode registry (two polarization modes per optical
//! path), a list of emitters and one mode unitary per passive component in
//! topological order. Exact propagation enumerates which emitters fire and
//! pushes each branch through the stages; sampled propagation draws shots
//! from those exact branches.

mod events;
mod sample;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nalgebra::{DMatrix, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockState, ModeRegistry, ModeUnitary, Pol};
use crate::optics::{
    click_distribution, jones_hwp, jones_qwp, pbs_block, pbs_mode_unitary, spdc_emit, DetectorSpec,
    PbsPorts,
};
use crate::scene::{ComponentKind, ComponentParams, Endpoint, Scene};
use crate::state::{BlochVector, DensityMatrix2, PolarizationState, C64};

pub use events::{Event, PathSnapshot};
pub use sample::{propagate_sampled, SampleOptions, SampledRun, Sampler};

/// Polarization states overriding photon sources, keyed by component id.
pub type InputAssignment = BTreeMap<String, PolarizationState>;

/// Probability below which a path counts as empty.
const PRESENCE: f64 = 1e-12;
/// More uncertain emitters than this would make branch enumeration explode.
const MAX_UNCERTAIN_EMITTERS: usize = 10;

#[derive(Debug, Clone)]
pub(crate) struct Stage {
    pub component: String,
    pub kind: ComponentKind,
    pub unitary: ModeUnitary,
    /// Incoming links (for trace events) with the path each one carries.
    pub incoming: Vec<(String, String)>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone)]
pub(crate) struct Emitter {
    pub id: String,
    pub probability: f64,
    /// Normalized emitted state over the global registry.
    pub state: FockState,
    pub paths: Vec<String>,
}

#[derive(Debug, Clone)]
pub(crate) struct Detector {
    pub id: String,
    pub modes: [usize; 2],
    pub spec: DetectorSpec,
    pub link: Option<String>,
}

/// A scene lowered onto a mode registry.
#[derive(Debug, Clone)]
pub struct CompiledScene {
    scene: Scene,
    registry: Arc<ModeRegistry>,
    pub(crate) stages: Vec<Stage>,
    pub(crate) emitters: Vec<Emitter>,
    pub(crate) detectors: Vec<Detector>,
    /// Herald groups as indices into `detectors`.
    pub(crate) herald_groups: Vec<Vec<usize>>,
    dangling: Vec<(String, [usize; 2])>,
    terminals: Vec<String>,
}

fn path_of(e: &Endpoint) -> String {
    e.to_string()
}

impl CompiledScene {
    pub fn new(scene: &Scene, inputs: &InputAssignment) -> Result<Self> {
        scene.validate()?;
        let mut scene = scene.clone();
        for (id, psi) in inputs {
            psi.check_normalized()?;
            match &mut scene.component_mut(id)?.params {
                ComponentParams::PhotonSource(p) => p.state = *psi,
                other => {
                    return Err(Error::Configuration(format!(
                        "input assigned to {id:?}, a {}, not a photon source",
                        other.kind()
                    )))
                }
            }
        }
        let classical = scene.classify()?;

        // registry: declaration order, outputs then unlinked inputs
        let mut paths = Vec::new();
        let mut dangling_paths = Vec::new();
        let mut terminals = Vec::new();
        for c in &scene.components {
            if classical.contains(&c.id) {
                continue;
            }
            for port in c.kind().outputs() {
                let e = Endpoint::new(&c.id, *port);
                if scene.link_from(&e).is_none() {
                    if c.kind() == ComponentKind::Smf {
                        terminals.push(path_of(&e));
                    } else {
                        dangling_paths.push(path_of(&e));
                    }
                }
                paths.push(path_of(&e));
            }
            if c.kind() != ComponentKind::Bbo {
                for port in c.kind().inputs() {
                    let e = Endpoint::new(&c.id, *port);
                    if scene.link_to(&e).is_none() {
                        paths.push(path_of(&e));
                    }
                }
            }
        }
        let registry = Arc::new(ModeRegistry::from_paths(&paths)?);
        let input_path = |id: &str, port: &str| -> String {
            let e = Endpoint::new(id, port);
            match scene.link_to(&e) {
                Some(l) => path_of(&l.from),
                None => path_of(&e),
            }
        };
        let incoming = |id: &str, kind: ComponentKind| -> Vec<(String, String)> {
            kind.inputs()
                .iter()
                .filter_map(|port| {
                    scene
                        .link_to(&Endpoint::new(id, *port))
                        .map(|l| (l.to_string(), path_of(&l.from)))
                })
                .collect()
        };

        let mut stages = Vec::new();
        for i in scene.topological_order()? {
            let c = &scene.components[i];
            if classical.contains(&c.id) {
                continue;
            }
            let out = |port: &str| path_of(&Endpoint::new(&c.id, port));
            let unitary = match &c.params {
                ComponentParams::Hwp(p) => ModeUnitary::jones(
                    registry.clone(),
                    &input_path(&c.id, "in"),
                    &out("out"),
                    &jones_hwp(p.radians()),
                )?,
                ComponentParams::Qwp(p) => ModeUnitary::jones(
                    registry.clone(),
                    &input_path(&c.id, "in"),
                    &out("out"),
                    &jones_qwp(p.radians()),
                )?,
                ComponentParams::Smf | ComponentParams::Prism => ModeUnitary::jones(
                    registry.clone(),
                    &input_path(&c.id, "in"),
                    &out("out"),
                    &nalgebra::Matrix2::identity(),
                )?,
                ComponentParams::Pbs(p) => pbs_mode_unitary(
                    &p.spec(),
                    &PbsPorts {
                        in1: input_path(&c.id, "in1"),
                        in2: input_path(&c.id, "in2"),
                        out1: out("out1"),
                        out2: out("out2"),
                    },
                    registry.clone(),
                )?,
                _ => continue,
            };
            stages.push(Stage {
                component: c.id.clone(),
                kind: c.kind(),
                unitary,
                incoming: incoming(&c.id, c.kind()),
                outputs: c.kind().outputs().iter().map(|p| out(p)).collect(),
            });
        }

        let pumps = pump_field(&scene)?;
        let mut emitters = Vec::new();
        for s in &scene.sources {
            let c = scene.component(s)?;
            match &c.params {
                ComponentParams::PhotonSource(p) => {
                    let path = format!("{s}.out");
                    let local = Arc::new(ModeRegistry::from_paths([&path])?);
                    let state =
                        FockState::single_photon(local, &path, &p.state)?.embed(&registry)?;
                    emitters.push(Emitter {
                        id: s.clone(),
                        probability: 1.0,
                        state,
                        paths: vec![path],
                    });
                }
                ComponentParams::BellSource(p) => {
                    let (a, b) = (format!("{s}.out1"), format!("{s}.out2"));
                    let local = Arc::new(ModeRegistry::from_paths([&a, &b])?);
                    let [ah, av] = local.path_modes(&a)?;
                    let [bh, bv] = local.path_modes(&b)?;
                    let amps = p.state.amplitudes();
                    let state = FockState::from_creations(
                        local,
                        &[
                            (amps[0], vec![ah, bh]),
                            (amps[1], vec![ah, bv]),
                            (amps[2], vec![av, bh]),
                            (amps[3], vec![av, bv]),
                        ],
                    )?
                    .embed(&registry)?;
                    emitters.push(Emitter {
                        id: s.clone(),
                        probability: 1.0,
                        state,
                        paths: vec![a, b],
                    });
                }
                ComponentParams::Laser(_) => {
                    for (bbo, field) in pumps.iter().filter(|(_, (laser, _))| laser == s) {
                        let ComponentParams::Bbo(spec) = &scene.component(bbo)?.params else {
                            unreachable!("pump targets are crystals");
                        };
                        let field = field.1;
                        let intensity = field.norm_squared();
                        let pump = if intensity > PRESENCE {
                            PolarizationState::normalized(field[0], field[1])?
                        } else {
                            PolarizationState::V
                        };
                        let (signal, idler) = (format!("{bbo}.signal"), format!("{bbo}.idler"));
                        let branch = spdc_emit(&spec.spec(), &pump, &signal, &idler)?;
                        let probability = if intensity > PRESENCE {
                            (branch.probability() * intensity).min(1.0)
                        } else {
                            0.0
                        };
                        // a zero-amplitude branch still needs a valid state
                        let state = if branch.amplitude.norm() > 0.0 {
                            branch.state.embed(&registry)?
                        } else {
                            FockState::vacuum(registry.clone())
                        };
                        emitters.push(Emitter {
                            id: bbo.clone(),
                            probability,
                            state,
                            paths: vec![signal, idler],
                        });
                    }
                }
                _ => unreachable!("validated source kinds"),
            }
        }

        let mut detectors = Vec::new();
        for d in &scene.detectors {
            let ComponentParams::Apd(p) = &scene.component(d)?.params else {
                unreachable!("validated detector kinds");
            };
            let path = input_path(d, "in");
            detectors.push(Detector {
                id: d.clone(),
                modes: registry.path_modes(&path)?,
                spec: p.spec(),
                link: scene
                    .link_to(&Endpoint::new(d, "in"))
                    .map(|l| l.to_string()),
            });
        }
        let herald_groups = scene
            .herald_groups()
            .into_iter()
            .map(|(_, ids)| {
                ids.iter()
                    .map(|id| {
                        detectors
                            .iter()
                            .position(|d| &d.id == id)
                            .expect("listed detector")
                    })
                    .collect()
            })
            .collect();
        let dangling = dangling_paths
            .into_iter()
            .map(|p| {
                let modes = registry.path_modes(&p)?;
                Ok((p, modes))
            })
            .collect::<Result<_>>()?;

        Ok(Self {
            scene,
            registry,
            stages,
            emitters,
            detectors,
            herald_groups,
            dangling,
            terminals,
        })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    /// Component ids of the stages in application order.
    pub fn stage_components(&self) -> Vec<&str> {
        self.stages.iter().map(|s| s.component.as_str()).collect()
    }

    /// Paths ending in an unlinked fibre output: photons there leave the
    /// bench without being detected.
    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn detector_ids(&self) -> Vec<&str> {
        self.detectors.iter().map(|d| d.id.as_str()).collect()
    }

    /// `(id, emission probability)` of each emitter, in trigger order.
    pub fn emitters(&self) -> Vec<(&str, f64)> {
        self.emitters
            .iter()
            .map(|e| (e.id.as_str(), e.probability))
            .collect()
    }

    /// Emission patterns with their probabilities; each entry lists the
    /// emitters that fire.
    pub fn emission_branches(&self) -> Result<Vec<(Vec<usize>, f64)>> {
        let uncertain: Vec<usize> = (0..self.emitters.len())
            .filter(|&i| {
                let p = self.emitters[i].probability;
                p > 0.0 && p < 1.0
            })
            .collect();
        if uncertain.len() > MAX_UNCERTAIN_EMITTERS {
            return Err(Error::Configuration(format!(
                "{} probabilistic emitters exceed the supported {MAX_UNCERTAIN_EMITTERS}",
                uncertain.len()
            )));
        }
        let certain: Vec<usize> = (0..self.emitters.len())
            .filter(|&i| self.emitters[i].probability >= 1.0)
            .collect();
        let mut out = Vec::new();
        for mask in 0u32..(1 << uncertain.len()) {
            let mut fired = certain.clone();
            let mut weight = 1.0;
            for (bit, &i) in uncertain.iter().enumerate() {
                let p = self.emitters[i].probability;
                if mask & (1 << bit) != 0 {
                    fired.push(i);
                    weight *= p;
                } else {
                    weight *= 1.0 - p;
                }
            }
            fired.sort_unstable();
            out.push((fired, weight));
        }
        Ok(out)
    }

    /// Product of the emitted states of `fired` (vacuum when empty).
    pub fn initial_state(&self, fired: &[usize]) -> Result<FockState> {
        let mut state = FockState::vacuum(self.registry.clone());
        for &i in fired {
            state = product(&state, &self.emitters[i].state)?;
        }
        Ok(state)
    }

    /// Applies stages `range` in order.
    pub fn apply_stages(
        &self,
        state: &FockState,
        range: std::ops::Range<usize>,
    ) -> Result<FockState> {
        let mut s = state.clone();
        for stage in &self.stages[range] {
            s = s.apply(&stage.unitary)?;
        }
        Ok(s)
    }

    fn check_dangling(&self, state: &FockState) -> Result<()> {
        for (path, [h, v]) in &self.dangling {
            let p: f64 = state
                .terms()
                .filter(|(occ, _)| occ[*h] + occ[*v] > 0)
                .map(|(_, a)| a.norm_sqr())
                .sum();
            if p > PRESENCE {
                return Err(Error::DanglingPath(path.clone()));
            }
        }
        Ok(())
    }

    fn snapshot(&self, state: &FockState, path: &str) -> Result<PathSnapshot> {
        let [h, v] = self.registry.path_modes(path)?;
        let occupied: f64 = state
            .terms()
            .filter(|(occ, _)| occ[h] + occ[v] > 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        let rho = state.path_polarization(path)?;
        let single = rho.trace().re;
        let (bloch, purity, pure) = if single > PRESENCE {
            let rho = DensityMatrix2 {
                m: rho / C64::new(single, 0.0),
            };
            let s = rho.stokes();
            let purity = rho.purity().min(1.0);
            let pure = if purity > 1.0 - 1e-9 {
                crate::state::state_from_bloch(&BlochVector::new(s[0], s[1], s[2]).normalized())
                    .ok()
            } else {
                None
            };
            (Some(BlochVector::new(s[0], s[1], s[2])), Some(purity), pure)
        } else {
            (None, None, None)
        };
        Ok(PathSnapshot {
            path: path.to_string(),
            occupation: occupied.min(1.0),
            single_photon: single.min(1.0),
            bloch,
            purity,
            state: pure,
        })
    }

    fn presence(&self, state: &FockState, path: &str) -> Result<f64> {
        let [h, v] = self.registry.path_modes(path)?;
        Ok(state
            .terms()
            .filter(|(occ, _)| occ[h] + occ[v] > 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Propagates one emission pattern, collecting snapshots and the
    /// deterministic part of the event trace.
    pub(crate) fn run_branch(&self, fired: Vec<usize>, weight: f64) -> Result<Branch> {
        let mut state = self.initial_state(&fired)?;
        let mut events = Vec::new();
        let mut snapshots = Vec::new();
        for &i in &fired {
            let e = &self.emitters[i];
            let snaps = e
                .paths
                .iter()
                .map(|p| self.snapshot(&state, p))
                .collect::<Result<Vec<_>>>()?;
            snapshots.extend(snaps.iter().cloned());
            events.push(Event::PhotonEmitted {
                shot: 0,
                source: e.id.clone(),
                paths: snaps,
            });
        }
        for stage in &self.stages {
            let mut entered = false;
            for (link, path) in &stage.incoming {
                if self.presence(&state, path)? > PRESENCE {
                    entered = true;
                    events.push(Event::SegmentTraversed {
                        shot: 0,
                        link: link.clone(),
                    });
                }
            }
            state = state.apply(&stage.unitary)?;
            for out in &stage.outputs {
                let snap = self.snapshot(&state, out)?;
                if entered && matches!(stage.kind, ComponentKind::Hwp | ComponentKind::Qwp) {
                    if let (Some(bloch), Some(purity)) = (snap.bloch, snap.purity) {
                        events.push(Event::PlateCrossed {
                            shot: 0,
                            component: stage.component.clone(),
                            bloch,
                            purity,
                        });
                    }
                }
                snapshots.push(snap);
            }
        }
        for d in &self.detectors {
            if let Some(link) = &d.link {
                let [h, v] = d.modes;
                let p: f64 = state
                    .terms()
                    .filter(|(occ, _)| occ[h] + occ[v] > 0)
                    .map(|(_, a)| a.norm_sqr())
                    .sum();
                if p > PRESENCE {
                    events.push(Event::SegmentTraversed {
                        shot: 0,
                        link: link.clone(),
                    });
                }
            }
        }
        self.check_dangling(&state)?;
        Ok(Branch {
            emitted: fired.iter().map(|&i| self.emitters[i].id.clone()).collect(),
            fired,
            weight,
            state,
            snapshots,
            events,
        })
    }

    /// Photon counts on each detector for one occupation vector.
    pub(crate) fn detector_photons(&self, occ: &[u8]) -> Vec<u32> {
        self.detectors
            .iter()
            .map(|d| FockState::count_on(occ, &d.modes))
            .collect()
    }

    pub(crate) fn herald(&self, clicks: &[u32]) -> Option<bool> {
        if self.herald_groups.is_empty() {
            None
        } else {
            Some(
                self.herald_groups
                    .iter()
                    .all(|g| g.iter().map(|&i| clicks[i]).sum::<u32>() == 1),
            )
        }
    }
}

/// Bosonic product of two states over the same registry whose photons sit
/// on disjoint modes.
fn product(a: &FockState, b: &FockState) -> Result<FockState> {
    let mut terms = Vec::new();
    for (oa, x) in a.terms() {
        for (ob, y) in b.terms() {
            if oa.iter().zip(ob).any(|(&p, &q)| p > 0 && q > 0) {
                return Err(Error::Configuration("emitters share an output mode".into()));
            }
            let occ: Vec<u8> = oa.iter().zip(ob).map(|(&p, &q)| p + q).collect();
            terms.push((occ, x * y));
        }
    }
    FockState::from_terms(a.registry().clone(), terms)
}

/// Classical pump field reaching each crystal: `bbo id → (laser id, Jones
/// vector)`. The vector is unnormalized; its squared norm is the fraction of
/// the laser power that arrives.
fn pump_field(scene: &Scene) -> Result<BTreeMap<String, (String, Vector2<C64>)>> {
    let mut out: BTreeMap<String, (String, Vector2<C64>)> = BTreeMap::new();
    for laser in &scene.sources {
        let c = scene.component(laser)?;
        let ComponentParams::Laser(p) = &c.params else {
            continue;
        };
        let (s, co) = p.polarization.to_radians().sin_cos();
        let mut stack = vec![(
            Endpoint::new(laser.as_str(), "out"),
            Vector2::new(C64::new(co, 0.0), C64::new(s, 0.0)),
        )];
        let mut visited = BTreeSet::new();
        while let Some((from, field)) = stack.pop() {
            if field.norm_squared() < 1e-30 {
                continue;
            }
            let Some(link) = scene.link_from(&from) else {
                continue; // beam dump
            };
            if !visited.insert(link.to.clone()) {
                continue;
            }
            let next = scene.component(&link.to.component)?;
            let id = next.id.as_str();
            match &next.params {
                ComponentParams::Bbo(_) => {
                    let entry = out
                        .entry(id.to_string())
                        .or_insert((laser.clone(), Vector2::zeros()));
                    entry.1 += field;
                }
                ComponentParams::Hwp(pl) => {
                    stack.push((Endpoint::new(id, "out"), jones_hwp(pl.radians()) * field))
                }
                ComponentParams::Qwp(pl) => {
                    stack.push((Endpoint::new(id, "out"), jones_qwp(pl.radians()) * field))
                }
                ComponentParams::Prism => stack.push((Endpoint::new(id, "out"), field)),
                ComponentParams::Pbs(pp) => {
                    let b: DMatrix<C64> = pbs_block(&pp.spec());
                    let offset = if link.to.port == "in1" { 0 } else { 2 };
                    for (k, port) in ["out1", "out2"].iter().enumerate() {
                        let mut v = Vector2::zeros();
                        for r in 0..2 {
                            for col in 0..2 {
                                v[r] += b[(2 * k + r, offset + col)] * field[col];
                            }
                        }
                        stack.push((Endpoint::new(id, *port), v));
                    }
                }
                other => {
                    return Err(Error::Scene(format!(
                        "pump light reaches {id:?}, a {}",
                        other.kind()
                    )))
                }
            }
        }
    }
    Ok(out)
}

/// One emission pattern pushed through the whole bench.
#[derive(Debug, Clone)]
pub struct Branch {
    /// Ids of the emitters that fired.
    pub emitted: Vec<String>,
    pub(crate) fired: Vec<usize>,
    /// Probability of this emission pattern.
    pub weight: f64,
    /// Final state, normalized within the branch.
    pub state: FockState,
    /// Reduced polarization of every path as the light leaves each source
    /// or component.
    pub snapshots: Vec<PathSnapshot>,
    pub(crate) events: Vec<Event>,
}

/// Exact detector-click pattern with its probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    /// Clicks of every clicking detector.
    pub clicks: BTreeMap<String, u32>,
    pub probability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heralded: Option<bool>,
}

impl Outcome {
    pub fn pattern(&self) -> String {
        self.clicks.keys().cloned().collect::<Vec<_>>().join("&")
    }
}

#[derive(Debug, Clone)]
pub struct ExactRun {
    pub compiled: CompiledScene,
    pub branches: Vec<Branch>,
}

impl ExactRun {
    /// The branch in which every emitter fires, if it can happen.
    pub fn main_branch(&self) -> Option<&Branch> {
        self.branches
            .iter()
            .filter(|b| b.weight > 0.0)
            .max_by_key(|b| b.fired.len())
    }

    /// Deterministic trace of the main branch: emissions, traversed
    /// segments and the Bloch vector after every plate.
    pub fn trace(&self) -> Vec<Event> {
        self.main_branch()
            .map(|b| b.events.clone())
            .unwrap_or_default()
    }

    /// Snapshot of `path` in the main branch.
    pub fn snapshot(&self, path: &str) -> Option<&PathSnapshot> {
        self.main_branch()?
            .snapshots
            .iter()
            .find(|s| s.path == path)
    }

    /// Exact distribution of detector click patterns, detector response
    /// included. Patterns are sorted by their key.
    pub fn outcomes(&self) -> Vec<Outcome> {
        let c = &self.compiled;
        let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for b in &self.branches {
            if b.weight == 0.0 {
                continue;
            }
            for (occ, a) in b.state.terms() {
                let p = b.weight * a.norm_sqr();
                let photons = c.detector_photons(occ);
                let dists: Vec<Vec<f64>> = photons
                    .iter()
                    .zip(&c.detectors)
                    .map(|(&n, d)| click_distribution(&d.spec, n))
                    .collect();
                // expand the product of per-detector distributions
                let mut partial: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), p)];
                for dist in &dists {
                    let mut next = Vec::new();
                    for (clicks, q) in &partial {
                        for (k, &pk) in dist.iter().enumerate() {
                            if pk > 0.0 {
                                let mut cl = clicks.clone();
                                cl.push(k as u32);
                                next.push((cl, q * pk));
                            }
                        }
                    }
                    partial = next;
                }
                for (clicks, q) in partial {
                    *acc.entry(clicks).or_default() += q;
                }
            }
        }
        let mut out: Vec<Outcome> = acc
            .into_iter()
            .map(|(clicks, probability)| Outcome {
                heralded: c.herald(&clicks),
                clicks: c
                    .detectors
                    .iter()
                    .zip(&clicks)
                    .filter(|(_, &k)| k > 0)
                    .map(|(d, &k)| (d.id.clone(), k))
                    .collect(),
                probability,
            })
            .collect();
        out.sort_by(|a, b| a.pattern().cmp(&b.pattern()).then(a.clicks.cmp(&b.clicks)));
        out
    }

    /// Probability that the herald rule passes, `None` without herald groups.
    pub fn herald_probability(&self) -> Option<f64> {
        if self.compiled.herald_groups.is_empty() {
            return None;
        }
        Some(
            self.outcomes()
                .iter()
                .filter(|o| o.heralded == Some(true))
                .map(|o| o.probability)
                .sum(),
        )
    }
}

/// Exact amplitudes for every emission pattern of `scene`.
pub fn propagate_exact(scene: &Scene, inputs: &InputAssignment) -> Result<ExactRun> {
    let compiled = CompiledScene::new(scene, inputs)?;
    let branches = compiled
        .emission_branches()?
        .into_iter()
        .map(|(fired, w)| compiled.run_branch(fired, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExactRun { compiled, branches })
}

/// The two polarization modes of `path`, `(H, V)`.
pub fn path_modes(registry: &ModeRegistry, path: &str) -> Result<(usize, usize)> {
    Ok((
        registry.require(path, Pol::H)?,
        registry.require(path, Pol::V)?,
    ))
}
