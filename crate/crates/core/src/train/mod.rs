//! Behavior cloning and RLOO policy-gradient training.

pub mod data;
mod rloo;
mod supervised;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{MixtureConfig, RlConfig};
use crate::error::{Error, Result};
use crate::policy::{render, sample_index, CandidateSet, Policy, MIN_TEMPERATURE};
use crate::reward::{reward_total_with, GroundTruth, RewardConfig, SubgoalScorer};
use crate::sim::{load_records, save_records};

pub use data::{Mixer, Pool, Pools, TrainBatch};
pub use rloo::{reinforce_gradient, rloo_advantages, rloo_gradient};
pub use supervised::{
    behavior_clone, behavior_clone_masked, supervised_loss, supervised_update, supervised_update_masked,
    SupervisedExample,
};

/// Which reward column an item contributes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    Low,
    High,
    Scenario,
    Grounding,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainItem {
    pub set: CandidateSet,
    pub truth: GroundTruth,
    pub bucket: Bucket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub step: usize,
    pub reward_overall: f64,
    pub reward_low: Option<f64>,
    pub reward_high: Option<f64>,
    pub reward_grounding: Option<f64>,
    pub reward_other: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_scenario: Option<f64>,
    pub grad_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Append-only log of update records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<TrainRecord>,
}

impl TrainLog {
    pub fn push(&mut self, r: TrainRecord) {
        self.records.push(r);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Trailing mean of overall reward over `window` records ending at each step.
    pub fn moving_average(&self, window: usize) -> Vec<f64> {
        let w = window.max(1);
        let v: Vec<f64> = self.records.iter().map(|r| r.reward_overall).collect();
        (0..v.len())
            .map(|i| {
                let lo = (i + 1).saturating_sub(w);
                v[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
            })
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_records(path, &self.records)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self { records: load_records(path)? })
    }
}

/// Settings of one RL update.
#[derive(Clone, Copy)]
pub struct RlContext<'a> {
    pub rl: &'a RlConfig,
    pub reward: &'a RewardConfig,
    pub scorer: &'a dyn SubgoalScorer,
}

struct ItemOutcome {
    grad: Vec<f64>,
    mean_reward: f64,
    bucket: Bucket,
}

fn rollout(policy: &Policy, item: &TrainItem, ctx: RlContext<'_>, seed: u64) -> Result<ItemOutcome> {
    let t = ctx.rl.temperature.max(MIN_TEMPERATURE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = policy.probabilities(&item.set, t);
    let dim = policy.dim();
    let mut mean_phi = vec![0.0; dim];
    for (c, pj) in item.set.candidates.iter().zip(&p) {
        for (m, f) in mean_phi.iter_mut().zip(&c.features) {
            *m += pj * f;
        }
    }
    let mut rewards = Vec::with_capacity(ctx.rl.k);
    let mut grads = Vec::with_capacity(ctx.rl.k);
    for _ in 0..ctx.rl.k {
        let i = sample_index(&p, &mut rng);
        let c = &item.set.candidates[i];
        let corrupt = ctx.rl.corruption_rate > 0.0 && rng.gen_bool(ctx.rl.corruption_rate);
        let text = if corrupt { render::corrupt(&c.text) } else { c.text.clone() };
        rewards.push(reward_total_with(&text, &item.truth, ctx.reward, ctx.scorer).total);
        grads.push(c.features.iter().zip(&mean_phi).map(|(f, m)| (f - m) / t).collect());
    }
    let grad = rloo_gradient(&rewards, &grads)?;
    Ok(ItemOutcome { grad, mean_reward: rewards.iter().sum::<f64>() / rewards.len() as f64, bucket: item.bucket })
}

fn bucket_mean(outcomes: &[ItemOutcome], b: Bucket) -> Option<f64> {
    let v: Vec<f64> = outcomes.iter().filter(|o| o.bucket == b).map(|o| o.mean_reward).collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Sample k rollouts per item, score them, and take one ascent step along
/// the batch-mean RLOO gradient.
pub fn rl_update<R: Rng + ?Sized>(
    policy: &mut Policy,
    batch: &TrainBatch<'_>,
    step: usize,
    ctx: RlContext<'_>,
    rng: &mut R,
) -> Result<TrainRecord> {
    if ctx.rl.k < 2 {
        return Err(Error::Estimator(format!("rollout count must be at least 2, got {}", ctx.rl.k)));
    }
    if batch.is_empty() {
        return Ok(TrainRecord {
            step,
            reward_overall: 0.0,
            reward_low: None,
            reward_high: None,
            reward_grounding: None,
            reward_other: None,
            reward_scenario: None,
            grad_norm: 0.0,
            warning: Some("empty batch; parameters unchanged".into()),
        });
    }
    let seeds: Vec<u64> = batch.items.iter().map(|_| rng.gen()).collect();
    let snapshot = &*policy;
    let outcomes: Vec<ItemOutcome> = batch
        .items
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(item, seed)| rollout(snapshot, item, ctx, *seed))
        .collect::<Result<_>>()?;

    let mut grad = vec![0.0; policy.dim()];
    for o in &outcomes {
        for (g, v) in grad.iter_mut().zip(&o.grad) {
            *g += v;
        }
    }
    let n = outcomes.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    policy.apply_gradient(&grad, ctx.rl.lr);

    Ok(TrainRecord {
        step,
        reward_overall: outcomes.iter().map(|o| o.mean_reward).sum::<f64>() / n,
        reward_low: bucket_mean(&outcomes, Bucket::Low),
        reward_high: bucket_mean(&outcomes, Bucket::High),
        reward_grounding: bucket_mean(&outcomes, Bucket::Grounding),
        reward_other: bucket_mean(&outcomes, Bucket::Other),
        reward_scenario: bucket_mean(&outcomes, Bucket::Scenario),
        grad_norm: grad.iter().map(|g| g * g).sum::<f64>().sqrt(),
        warning: None,
    })
}

/// `rl.steps` updates over freshly mixed batches.
pub fn train(
    policy: &mut Policy,
    pools: &Pools,
    mixture: &MixtureConfig,
    ctx: RlContext<'_>,
    seed: u64,
) -> Result<TrainLog> {
    let mixer = Mixer::new(mixture.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = TrainLog::default();
    for step in 0..ctx.rl.steps {
        let batch = mixer.sample(pools, ctx.rl.batch_size, &mut rng);
        log.push(rl_update(policy, &batch, step, ctx, &mut rng)?);
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{Candidate, Output, FEATURE_DIM};
    use crate::reward::LexicalScorer;

    fn answer_item(answers: &[&str], gt: &str) -> TrainItem {
        let candidates = answers
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let mut f = vec![0.0; FEATURE_DIM];
                f[i] = 1.0;
                Candidate { output: Output::Answer(a.to_string()), text: render::answer("q", a), features: f }
            })
            .collect();
        TrainItem { set: CandidateSet { candidates }, truth: GroundTruth::other(gt), bucket: Bucket::Other }
    }

    #[test]
    fn equal_rewards_leave_weights_unchanged() {
        let item = answer_item(&["1", "1.0", "2/2"], "1");
        let batch = TrainBatch { items: vec![&item, &item] };
        let rl = RlConfig::default();
        let ctx = RlContext { rl: &rl, reward: &RewardConfig::default(), scorer: &LexicalScorer };
        let mut p = Policy::zeros();
        let rec = rl_update(&mut p, &batch, 0, ctx, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(p, Policy::zeros());
        assert_eq!(rec.reward_overall, 1.0);
        assert_eq!(rec.reward_other, Some(1.0));
        assert_eq!(rec.reward_low, None);
    }

    #[test]
    fn empty_batch_is_a_warned_noop() {
        let rl = RlConfig::default();
        let ctx = RlContext { rl: &rl, reward: &RewardConfig::default(), scorer: &LexicalScorer };
        let mut p = Policy::zeros();
        let rec = rl_update(&mut p, &TrainBatch::default(), 3, ctx, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(rec.warning.is_some());
        assert_eq!(p, Policy::zeros());
    }

    #[test]
    fn corrupted_rollouts_score_zero() {
        let item = answer_item(&["1"; 1], "1");
        let batch = TrainBatch { items: vec![&item] };
        let rl = RlConfig { corruption_rate: 1.0, ..RlConfig::default() };
        let ctx = RlContext { rl: &rl, reward: &RewardConfig::default(), scorer: &LexicalScorer };
        let rec = rl_update(&mut Policy::zeros(), &batch, 0, ctx, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(rec.reward_overall, 0.0);
    }

    #[test]
    fn fixed_seed_is_reproducible_and_learns() {
        let item = answer_item(&["3", "4", "5"], "4");
        let pools = Pools { other: vec![item], ..Pools::default() };
        let rl = RlConfig { steps: 200, batch_size: 4, lr: 0.5, ..RlConfig::default() };
        let ctx = RlContext { rl: &rl, reward: &RewardConfig::default(), scorer: &LexicalScorer };
        let mut a = Policy::zeros();
        let mut b = Policy::zeros();
        let la = train(&mut a, &pools, &MixtureConfig::default(), ctx, 9).unwrap();
        let lb = train(&mut b, &pools, &MixtureConfig::default(), ctx, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        assert_eq!(la.len(), 200);
        assert!(a.probabilities(&pools.other[0].set, 1.0)[1] > 0.9);
        let ma = la.moving_average(50);
        assert!(ma[199] > ma[49]);
    }

    #[test]
    fn log_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let mut log = TrainLog::default();
        for step in 0..3 {
            log.push(TrainRecord {
                step,
                reward_overall: 0.5,
                reward_low: Some(0.25),
                reward_high: None,
                reward_grounding: Some(1.0),
                reward_other: None,
                reward_scenario: None,
                grad_norm: 0.125,
                warning: None,
            });
        }
        log.save(&path).unwrap();
        assert_eq!(TrainLog::load(&path).unwrap(), log);
        assert_eq!(log.moving_average(2), vec![0.5, 0.5, 0.5]);
    }
}
