//! Training pools and batch mixing.

use std::collections::BTreeSet;

use rand::Rng;

use crate::config::MixtureConfig;
use crate::error::Result;
use crate::policy::features::{arith_question, decimal_text, locate_instruction, ArithOp};
use crate::policy::{AgentInput, Conditioning, Featurizer, TaskInput};
use crate::reward::GroundTruth;
use crate::sim::{ElementKind, Screen, ScreenId, StepRef, TaskId, World};

use super::{Bucket, TrainItem};

/// Featurized items by pool. Candidate sets do not depend on the weights,
/// so they are built once.
#[derive(Debug, Clone, Default)]
pub struct Pools {
    pub low: Vec<TrainItem>,
    pub high: Vec<TrainItem>,
    pub scenario: Vec<TrainItem>,
    pub point: Vec<TrainItem>,
    pub bbox: Vec<TrainItem>,
    pub other: Vec<TrainItem>,
}

impl Pools {
    /// Agent, grounding and arithmetic pools from the given tasks.
    pub fn build(world: &World, tasks: &[TaskId], featurizer: &Featurizer) -> Result<Self> {
        let refs: Vec<StepRef> = world.step_refs().into_iter().filter(|r| tasks.contains(&r.task_id)).collect();
        let mut pools = Pools::default();
        for &r in &refs {
            pools.low.push(agent_item(world, r, Conditioning::Low, featurizer)?);
            pools.high.push(agent_item(world, r, Conditioning::High, featurizer)?);
        }
        let screens: BTreeSet<ScreenId> =
            refs.iter().map(|r| world.step_spec(*r).map(|s| s.screen_id)).collect::<Result<_>>()?;
        for id in screens {
            let screen = world.screen(id)?;
            pools.point.extend(point_items(screen, featurizer)?);
            pools.bbox.extend(bbox_items(screen, featurizer)?);
            pools.other.extend(other_items(screen, featurizer)?);
        }
        Ok(pools)
    }

    pub fn get(&self, pool: Pool) -> &[TrainItem] {
        match pool {
            Pool::Low => &self.low,
            Pool::High => &self.high,
            Pool::Scenario => &self.scenario,
            Pool::Point => &self.point,
            Pool::Bbox => &self.bbox,
            Pool::Other => &self.other,
        }
    }

    pub fn len(&self) -> usize {
        Pool::ALL.iter().map(|p| self.get(*p).len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pool {
    Low,
    High,
    Scenario,
    Point,
    Bbox,
    Other,
}

impl Pool {
    pub const ALL: [Pool; 6] = [Pool::Low, Pool::High, Pool::Scenario, Pool::Point, Pool::Bbox, Pool::Other];
}

/// Teacher-forced agent item for a ground-truth step.
pub fn agent_item(world: &World, r: StepRef, mode: Conditioning, featurizer: &Featurizer) -> Result<TrainItem> {
    let spec = world.step_spec(r)?;
    let input = AgentInput::for_step(world, r, mode)?;
    Ok(TrainItem {
        set: featurizer.agent(&input)?,
        truth: GroundTruth::agent(spec.gt_action.clone(), Some(world.target_bbox(r)?), Some(spec.subgoal.clone())),
        bucket: match mode {
            Conditioning::Low => Bucket::Low,
            Conditioning::High => Bucket::High,
        },
    })
}

fn point_items(screen: &Screen, featurizer: &Featurizer) -> Result<Vec<TrainItem>> {
    screen
        .elements
        .iter()
        .map(|e| {
            let input = TaskInput::PointGrounding { screen: screen.clone(), instruction: locate_instruction(e.kind, &e.label) };
            Ok(TrainItem { set: featurizer.candidates(&input)?, truth: GroundTruth::point(e.bbox), bucket: Bucket::Grounding })
        })
        .collect()
}

fn bbox_items(screen: &Screen, featurizer: &Featurizer) -> Result<Vec<TrainItem>> {
    screen
        .elements
        .iter()
        .map(|e| {
            let input = TaskInput::BboxGrounding { screen: screen.clone(), instruction: locate_instruction(e.kind, &e.label) };
            Ok(TrainItem { set: featurizer.candidates(&input)?, truth: GroundTruth::bbox(e.bbox), bucket: Bucket::Grounding })
        })
        .collect()
}

/// Arithmetic questions over every ordered pair of value labels.
fn other_items(screen: &Screen, featurizer: &Featurizer) -> Result<Vec<TrainItem>> {
    let values: Vec<(&str, i64)> = screen
        .elements
        .iter()
        .filter(|e| e.kind == ElementKind::Label)
        .filter_map(|e| {
            let (w, n) = e.label.split_once(' ')?;
            Some((w, n.parse().ok()?))
        })
        .collect();
    let mut out = Vec::new();
    for (i, &(wa, a)) in values.iter().enumerate() {
        for (j, &(wb, b)) in values.iter().enumerate() {
            if i == j {
                continue;
            }
            for op in ArithOp::ALL {
                let Some(v) = op.apply(a, b) else { continue };
                let input = TaskInput::Other { screen: screen.clone(), question: arith_question(wa, op, wb) };
                out.push(TrainItem {
                    set: featurizer.candidates(&input)?,
                    truth: GroundTruth::other(decimal_text(v)),
                    bucket: Bucket::Other,
                });
            }
        }
    }
    Ok(out)
}

/// Items drawn for one update.
#[derive(Debug, Clone, Default)]
pub struct TrainBatch<'a> {
    pub items: Vec<&'a TrainItem>,
}

impl TrainBatch<'_> {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixer {
    pub mixture: MixtureConfig,
}

impl Mixer {
    pub fn new(mixture: MixtureConfig) -> Self {
        Self { mixture }
    }

    fn weight(&self, pool: Pool) -> f64 {
        let m = &self.mixture;
        match pool {
            Pool::Low => m.agent * m.low_fraction,
            Pool::High => m.agent * (1.0 - m.low_fraction),
            Pool::Scenario => m.scenario,
            Pool::Point => m.point,
            Pool::Bbox => m.bbox,
            Pool::Other => m.other,
        }
    }

    /// Items per pool, apportioned by largest remainder over the non-empty
    /// pools; ties go to the earlier pool.
    pub fn counts(&self, pools: &Pools, batch_size: usize) -> [usize; 6] {
        let w: Vec<f64> = Pool::ALL
            .iter()
            .map(|p| if pools.get(*p).is_empty() { 0.0 } else { self.weight(*p) })
            .collect();
        let total: f64 = w.iter().sum();
        let mut counts = [0usize; 6];
        if total <= 0.0 {
            return counts;
        }
        let quotas: Vec<f64> = w.iter().map(|v| v / total * batch_size as f64).collect();
        for (c, q) in counts.iter_mut().zip(&quotas) {
            *c = q.floor() as usize;
        }
        let mut rest: Vec<usize> = (0..6).filter(|&i| w[i] > 0.0).collect();
        rest.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())).then(a.cmp(&b)));
        let missing = batch_size - counts.iter().sum::<usize>();
        for &i in rest.iter().cycle().take(missing) {
            counts[i] += 1;
        }
        counts
    }

    /// Uniform draws with replacement inside each pool.
    pub fn sample<'a, R: Rng + ?Sized>(&self, pools: &'a Pools, batch_size: usize, rng: &mut R) -> TrainBatch<'a> {
        let counts = self.counts(pools, batch_size);
        let mut items = Vec::with_capacity(batch_size);
        for (pool, n) in Pool::ALL.iter().zip(counts) {
            let src = pools.get(*pool);
            for _ in 0..n {
                items.push(&src[rng.gen_range(0..src.len())]);
            }
        }
        TrainBatch { items }
    }
}
