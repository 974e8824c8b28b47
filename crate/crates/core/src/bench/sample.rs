use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Branch, CompiledScene, Event, InputAssignment};
use crate::error::{Error, Result};
use crate::measure::{CountsTable, ShotOutcome};
use crate::optics::detect;
use crate::rng::shot_rng;
use crate::scene::Scene;

/// Shots per parallel work unit.
const CHUNK: u64 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleOptions {
    pub shots: u64,
    pub seed: u64,
    /// Index of the first shot; a run split into consecutive calls draws
    /// exactly the same shots as one long run.
    pub first_shot: u64,
    /// Leading shots that produce a full event trace.
    pub detailed_shots: u64,
}

impl SampleOptions {
    pub fn new(shots: u64, seed: u64) -> Self {
        Self {
            shots,
            seed,
            first_shot: 0,
            detailed_shots: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampledRun {
    pub counts: CountsTable,
    /// Events of the detailed shots, in shot order.
    pub events: Vec<Event>,
    /// Tallies of the shots after the detailed ones, if any.
    pub batch: Option<CountsTable>,
}

struct BranchTable {
    cumulative: Vec<f64>,
    photons: Vec<Vec<u32>>,
    events: Vec<Event>,
}

/// Precomputed per-branch distributions for fast shot sampling.
pub struct Sampler<'a> {
    compiled: &'a CompiledScene,
    /// `(emitter index, probability)` for emitters that may or may not fire.
    uncertain: Vec<(usize, f64)>,
    certain: Vec<usize>,
    tables: std::collections::BTreeMap<Vec<usize>, BranchTable>,
}

impl<'a> Sampler<'a> {
    pub fn new(compiled: &'a CompiledScene) -> Result<Self> {
        let mut tables = std::collections::BTreeMap::new();
        for (fired, weight) in compiled.emission_branches()? {
            let b: Branch = compiled.run_branch(fired.clone(), weight)?;
            let mut cumulative = Vec::with_capacity(b.state.len());
            let mut photons = Vec::with_capacity(b.state.len());
            let mut acc = 0.0;
            for (occ, a) in b.state.terms() {
                acc += a.norm_sqr();
                cumulative.push(acc);
                photons.push(compiled.detector_photons(occ));
            }
            tables.insert(
                fired,
                BranchTable {
                    cumulative,
                    photons,
                    events: b.events,
                },
            );
        }
        let uncertain = compiled
            .emitters
            .iter()
            .enumerate()
            .filter(|(_, e)| e.probability > 0.0 && e.probability < 1.0)
            .map(|(i, e)| (i, e.probability))
            .collect();
        let certain = compiled
            .emitters
            .iter()
            .enumerate()
            .filter(|(_, e)| e.probability >= 1.0)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            compiled,
            uncertain,
            certain,
            tables,
        })
    }

    /// Draws one shot. Emission draws come first (trigger order), then the
    /// Born-rule draw over the branch's occupation vectors, then detector
    /// response in detector order.
    pub fn shot(&self, seed: u64, shot: u64, events: Option<&mut Vec<Event>>) -> ShotOutcome {
        let mut rng = shot_rng(seed, shot);
        let mut fired = self.certain.clone();
        for &(i, p) in &self.uncertain {
            if rng.random::<f64>() < p {
                fired.push(i);
            }
        }
        fired.sort_unstable();
        let table = &self.tables[&fired];
        let u: f64 = rng.random();
        let photons: &[u32] = match table.cumulative.last() {
            Some(&total) if total > 0.0 => {
                let target = u * total;
                let k = table
                    .cumulative
                    .partition_point(|&c| c <= target)
                    .min(table.cumulative.len() - 1);
                &table.photons[k]
            }
            _ => &[],
        };
        let clicks: Vec<u32> = self
            .compiled
            .detectors
            .iter()
            .enumerate()
            .map(|(k, d)| detect(&d.spec, photons.get(k).copied().unwrap_or(0), &mut rng))
            .collect();
        let herald = self.compiled.herald(&clicks);
        let outcome = ShotOutcome {
            shot,
            clicks: self
                .compiled
                .detectors
                .iter()
                .zip(&clicks)
                .map(|(d, &n)| (d.id.clone(), n))
                .collect(),
            herald,
        };
        if let Some(events) = events {
            events.extend(table.events.iter().map(|e| e.with_shot(shot)));
            for (d, &n) in self.compiled.detectors.iter().zip(&clicks) {
                if n > 0 {
                    events.push(Event::Detection {
                        shot,
                        detector: d.id.clone(),
                        clicks: n,
                    });
                }
            }
            if let Some(heralded) = herald {
                events.push(Event::Herald {
                    shot,
                    heralded,
                    pattern: outcome.pattern(),
                });
            }
        }
        outcome
    }

    fn empty_table(&self, seed: u64) -> CountsTable {
        let mut t = CountsTable::new(
            &self.compiled.detector_ids(),
            !self.compiled.herald_groups.is_empty(),
            seed,
        );
        t.scene_hash = Some(self.compiled.scene().hash());
        t
    }

    /// Tallies shots `range` in parallel; the result does not depend on the
    /// thread count.
    pub fn tally(&self, seed: u64, range: std::ops::Range<u64>) -> CountsTable {
        let chunks: Vec<(u64, u64)> = (range.start..range.end)
            .step_by(CHUNK as usize)
            .map(|s| (s, (s + CHUNK).min(range.end)))
            .collect();
        let parts: Vec<CountsTable> = chunks
            .par_iter()
            .map(|&(a, b)| {
                let mut t = self.empty_table(seed);
                for shot in a..b {
                    t.record(&self.shot(seed, shot, None));
                }
                t
            })
            .collect();
        let mut total = self.empty_table(seed);
        for p in &parts {
            total.merge(p);
        }
        total
    }
}

/// Monte-Carlo run of `scene`; identical options give identical results.
pub fn propagate_sampled(
    scene: &Scene,
    inputs: &InputAssignment,
    options: &SampleOptions,
) -> Result<SampledRun> {
    if options.shots == 0 {
        return Err(Error::InvalidValue {
            param: "shots".into(),
            message: "must be at least 1".into(),
        });
    }
    let compiled = CompiledScene::new(scene, inputs)?;
    let sampler = Sampler::new(&compiled)?;
    let start = options.first_shot;
    let end = start + options.shots;
    let detailed_end = start + options.detailed_shots.min(options.shots);
    let mut counts = sampler.empty_table(options.seed);
    let mut events = Vec::new();
    for shot in start..detailed_end {
        counts.record(&sampler.shot(options.seed, shot, Some(&mut events)));
    }
    let batch = (detailed_end < end).then(|| sampler.tally(options.seed, detailed_end..end));
    if let Some(b) = &batch {
        counts.merge(b);
    }
    Ok(SampledRun {
        counts,
        events,
        batch,
    })
}
