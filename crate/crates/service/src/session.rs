//! Session state machine, free of any transport concerns.

use std::ops::Range;
use std::time::Duration;

use qbench_core::bench::{
    propagate_exact, propagate_sampled, Event, InputAssignment, PathSnapshot, SampleOptions,
};
use qbench_core::measure::CountsTable;
use qbench_core::rng::PRNG_ID;
use qbench_core::scene::Scene;
use qbench_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const API_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    /// Sessions untouched for this long are dropped.
    pub idle_timeout: Duration,
    /// Shots per fire that stream individual events; the rest of the fire
    /// is reported as one batch event.
    pub detailed_shots: u64,
    pub max_shots_per_fire: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            idle_timeout: Duration::from_secs(30 * 60),
            detailed_shots: 50,
            max_shots_per_fire: 10_000_000,
        }
    }
}

/// A recorded mutation or fire; replaying the log of a session rebuilds its
/// event stream exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Command {
    SetParam {
        component: String,
        param: String,
        value: Value,
        #[serde(default)]
        interactive: bool,
    },
    Fire {
        shots: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub seed: u64,
    pub scene: Scene,
    pub detailed_shots: u64,
    pub commands: Vec<Command>,
}

/// Session-level events interleaved with the per-shot bench events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    SessionCreated {
        seed: u64,
        prng: String,
        scene_hash: String,
    },
    ParamChanged {
        component: String,
        param: String,
        value: Value,
        scene_hash: String,
    },
    FireStarted {
        first_shot: u64,
        shots: u64,
    },
    /// Shots reported only as tallies.
    Batch {
        first_shot: u64,
        shots: u64,
        counts: CountsTable,
    },
    FireCompleted {
        shots: u64,
        total_shots: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EventBody {
    Shot(Event),
    Session(SessionEvent),
}

impl EventBody {
    pub fn type_name(&self) -> String {
        let v = serde_json::to_value(self).expect("events serialize");
        v["type"].as_str().unwrap_or("event").to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEvent {
    pub seq: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub schema_version: String,
    pub id: String,
    pub seed: u64,
    /// Sequence number of the latest event.
    pub sequence: u64,
    pub shots_fired: u64,
    pub scene: Scene,
    pub scene_hash: String,
    pub counts: CountsTable,
    /// Polarization of every path in the exact main branch.
    pub snapshots: Vec<PathSnapshot>,
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    seed: u64,
    initial: Scene,
    scene: Scene,
    counts: CountsTable,
    next_shot: u64,
    events: Vec<StreamEvent>,
    log: Vec<Command>,
    snapshots: Vec<PathSnapshot>,
    detailed_shots: u64,
    max_shots: u64,
}

fn snapshots(scene: &Scene) -> Result<Vec<PathSnapshot>> {
    let run = propagate_exact(scene, &InputAssignment::new())?;
    Ok(run
        .main_branch()
        .map(|b| b.snapshots.clone())
        .unwrap_or_default())
}

impl Session {
    pub fn new(
        id: impl Into<String>,
        scene: Scene,
        seed: u64,
        config: &ServiceConfig,
    ) -> Result<Self> {
        scene.validate()?;
        let snapshots = snapshots(&scene)?;
        let heralded = !scene.herald_groups().is_empty();
        let mut s = Self {
            id: id.into(),
            seed,
            initial: scene.clone(),
            counts: CountsTable::new(&scene.detectors, heralded, seed),
            scene,
            next_shot: 0,
            events: Vec::new(),
            log: Vec::new(),
            snapshots,
            detailed_shots: config.detailed_shots,
            max_shots: config.max_shots_per_fire,
        };
        s.push(EventBody::Session(SessionEvent::SessionCreated {
            seed,
            prng: PRNG_ID.into(),
            scene_hash: s.scene.hash(),
        }));
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn sequence(&self) -> u64 {
        self.events.last().map_or(0, |e| e.seq)
    }

    fn push(&mut self, body: EventBody) {
        let seq = self.sequence() + 1;
        self.events.push(StreamEvent { seq, body });
    }

    /// Events with sequence number greater than `after`.
    pub fn events_after(&self, after: u64) -> &[StreamEvent] {
        // sequence numbers are dense and start at 1
        let start = (after as usize).min(self.events.len());
        &self.events[start..]
    }

    pub fn apply(&mut self, cmd: &Command) -> Result<Range<u64>> {
        let before = self.sequence();
        match cmd {
            Command::SetParam {
                component,
                param,
                value,
                interactive,
            } => {
                self.set_param(component, param, value.clone(), *interactive)?;
            }
            Command::Fire { shots } => {
                self.fire(*shots)?;
            }
        }
        Ok(before + 1..self.sequence() + 1)
    }

    /// Sets a parameter; interactive angle changes snap to the component's
    /// angle step. Returns the stored value.
    pub fn set_param(
        &mut self,
        component: &str,
        param: &str,
        value: Value,
        interactive: bool,
    ) -> Result<Value> {
        let mut next = self.scene.clone();
        let is_angle = next
            .component(component)?
            .params
            .angle_params()
            .contains(&param);
        let stored = if interactive && is_angle {
            let deg = value.as_f64().ok_or_else(|| Error::InvalidValue {
                param: param.into(),
                message: "angle must be a number".into(),
            })?;
            Value::from(next.set_angle(component, param, deg, true)?)
        } else {
            next.set_param(component, param, value.clone())?;
            value.clone()
        };
        let snapshots = snapshots(&next)?;
        self.scene = next;
        self.snapshots = snapshots;
        self.log.push(Command::SetParam {
            component: component.into(),
            param: param.into(),
            value,
            interactive,
        });
        let scene_hash = self.scene.hash();
        self.push(EventBody::Session(SessionEvent::ParamChanged {
            component: component.into(),
            param: param.into(),
            value: stored.clone(),
            scene_hash,
        }));
        Ok(stored)
    }

    /// Fires `shots` shots continuing the session's shot counter.
    pub fn fire(&mut self, shots: u64) -> Result<()> {
        if shots == 0 || shots > self.max_shots {
            return Err(Error::InvalidValue {
                param: "shots".into(),
                message: format!("must be between 1 and {}", self.max_shots),
            });
        }
        let opts = SampleOptions {
            first_shot: self.next_shot,
            detailed_shots: self.detailed_shots.min(shots),
            ..SampleOptions::new(shots, self.seed)
        };
        let run = propagate_sampled(&self.scene, &InputAssignment::new(), &opts)?;
        self.log.push(Command::Fire { shots });
        self.push(EventBody::Session(SessionEvent::FireStarted {
            first_shot: self.next_shot,
            shots,
        }));
        for e in run.events {
            self.push(EventBody::Shot(e));
        }
        if let Some(batch) = run.batch {
            self.push(EventBody::Session(SessionEvent::Batch {
                first_shot: self.next_shot + opts.detailed_shots,
                shots: batch.shots,
                counts: batch,
            }));
        }
        self.counts.merge(&run.counts);
        self.next_shot += shots;
        self.push(EventBody::Session(SessionEvent::FireCompleted {
            shots,
            total_shots: self.next_shot,
        }));
        Ok(())
    }

    pub fn state(&self) -> SessionState {
        SessionState {
            schema_version: API_VERSION.into(),
            id: self.id.clone(),
            seed: self.seed,
            sequence: self.sequence(),
            shots_fired: self.next_shot,
            scene_hash: self.scene.hash(),
            scene: self.scene.clone(),
            counts: self.counts.clone(),
            snapshots: self.snapshots.clone(),
        }
    }

    pub fn log(&self) -> SessionLog {
        SessionLog {
            seed: self.seed,
            scene: self.initial.clone(),
            detailed_shots: self.detailed_shots,
            commands: self.log.clone(),
        }
    }
}

/// Rebuilds a session from its log.
pub fn replay(id: &str, log: &SessionLog, config: &ServiceConfig) -> Result<Session> {
    let config = ServiceConfig {
        detailed_shots: log.detailed_shots,
        ..config.clone()
    };
    let mut s = Session::new(id, log.scene.clone(), log.seed, &config)?;
    for c in &log.commands {
        s.apply(c)?;
    }
    Ok(s)
}

/// Per-detector clicks folded from an event sequence: detection events
/// plus batch tallies, starting from zero for every listed detector.
pub fn fold_counts<S: AsRef<str>>(
    detectors: &[S],
    events: &[StreamEvent],
) -> std::collections::BTreeMap<String, u64> {
    let mut out: std::collections::BTreeMap<String, u64> = detectors
        .iter()
        .map(|d| (d.as_ref().to_string(), 0))
        .collect();
    for e in events {
        match &e.body {
            EventBody::Shot(Event::Detection {
                detector, clicks, ..
            }) => {
                *out.entry(detector.clone()).or_default() += *clicks as u64;
            }
            EventBody::Session(SessionEvent::Batch { counts, .. }) => {
                for (d, n) in &counts.per_detector {
                    *out.entry(d.clone()).or_default() += n;
                }
            }
            _ => {}
        }
    }
    out
}
