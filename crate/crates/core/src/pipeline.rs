//! Stage orchestration shared by the CLI and the examples.

use crate::config::Config;
use crate::distill::{
    bottleneck_records, action_examples, rejection_filter, sft_examples, sft_records, teacher_dataset, BottleneckRecord,
    SftRecord, TeacherSample,
};
use crate::error::Result;
use crate::policy::features::action_feature_mask;
use crate::policy::{Conditioning, Policy};
use crate::reward::LexicalScorer;
use crate::scenario::{forge_scenarios, identify_prone_steps, scenario_item, Forged, ProneStepRecord, Scenario};
use crate::sim::{StepRecord, StepRef, TaskId, World};
use crate::train::{behavior_clone, behavior_clone_masked, train, Pools, RlContext, TrainLog};

pub fn episodes(world: &World, tasks: &[TaskId]) -> Result<Vec<StepRecord>> {
    world
        .step_refs()
        .into_iter()
        .filter(|r| tasks.contains(&r.task_id))
        .map(|r| StepRecord::from_world(world, r))
        .collect()
}

pub fn step_refs(world: &World, tasks: &[TaskId]) -> Vec<StepRef> {
    world.step_refs().into_iter().filter(|r| tasks.contains(&r.task_id)).collect()
}

pub fn fresh_policy(cfg: &Config) -> Policy {
    Policy { max_candidates: cfg.max_candidates, ..Policy::zeros() }
}

/// Base model: a reactive actor. Short behavior cloning on the action
/// labels of sub-goal-conditioned steps, with the reasoning features left
/// at zero.
pub fn pretrain_base(world: &World, tasks: &[TaskId], cfg: &Config) -> Result<Policy> {
    let mut policy = fresh_policy(cfg);
    let ex = action_examples(world, &step_refs(world, tasks), Conditioning::Low, &policy.featurizer())?;
    behavior_clone_masked(&mut policy, &ex, cfg.pretrain.epochs, cfg.pretrain.lr, &action_feature_mask());
    Ok(policy)
}

pub struct Distilled {
    pub bottlenecks: Vec<BottleneckRecord>,
    pub samples: Vec<TeacherSample>,
    pub accepted: Vec<SftRecord>,
}

impl Distilled {
    pub fn bottleneck_steps(&self) -> Vec<StepRef> {
        self.bottlenecks.iter().filter(|b| b.verdict).map(|b| b.step).collect()
    }
}

/// Bottleneck search, teacher generation on the bottleneck steps and
/// rejection filtering.
pub fn distill(base: &Policy, world: &World, tasks: &[TaskId], cfg: &Config) -> Result<Distilled> {
    let bottlenecks = bottleneck_records(base, world, &episodes(world, tasks)?)?;
    let steps: Vec<StepRef> = bottlenecks.iter().filter(|b| b.verdict).map(|b| b.step).collect();
    let samples = teacher_dataset(world, &steps, cfg.distill.noise_rate, cfg.seed)?;
    let kept = rejection_filter(world, samples.clone())?;
    let accepted = sft_records(world, &kept)?;
    Ok(Distilled { bottlenecks, samples, accepted })
}

/// Behavior cloning on the supervised set, starting from `base`.
pub fn reasoning_sft(base: &Policy, world: &World, records: &[SftRecord], cfg: &Config) -> Result<Policy> {
    let mut policy = base.clone();
    let ex = sft_examples(world, records, &policy.featurizer())?;
    behavior_clone(&mut policy, &ex, cfg.distill.sft.epochs, cfg.distill.sft.lr);
    Ok(policy)
}

pub struct ForgeOutcome {
    pub prone: Vec<ProneStepRecord>,
    pub forged: Forged,
}

pub fn forge(policy: &Policy, world: &World, tasks: &[TaskId], cfg: &Config) -> Result<ForgeOutcome> {
    let prone = identify_prone_steps(
        policy,
        world,
        &episodes(world, tasks)?,
        cfg.forge.n_sample,
        cfg.forge.temperature,
        cfg.seed,
    )?;
    let forged = forge_scenarios(world, &prone, cfg.seed)?;
    Ok(ForgeOutcome { prone, forged })
}

/// Stage-2 RL over the mixed pools, with scenario items when given.
pub fn stage2(
    policy: &Policy,
    world: &World,
    tasks: &[TaskId],
    scenarios: &[Scenario],
    cfg: &Config,
) -> Result<(Policy, TrainLog)> {
    let mut policy = policy.clone();
    let featurizer = policy.featurizer();
    let mut pools = Pools::build(world, tasks, &featurizer)?;
    pools.scenario = scenarios.iter().map(|s| scenario_item(world, s, &featurizer)).collect::<Result<_>>()?;
    let ctx = RlContext { rl: &cfg.rl, reward: &cfg.reward, scorer: &LexicalScorer };
    let log = train(&mut policy, &pools, &cfg.mixture, ctx, cfg.seed)?;
    Ok((policy, log))
}
