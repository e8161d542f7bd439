//! Error-recovery scenarios: find steps the policy sometimes fails under
//! heightened temperature, then build escape (leave the error screen with
//! `back`) and back-on-track (redo the correct action) records.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distill::is_correct_at;
use crate::error::{Error, Result};
use crate::policy::{AgentInput, Conditioning, Featurizer, Policy};
use crate::reward::GroundTruth;
use crate::seed::derive_rng;
use crate::sim::{
    load_records, replay, save_records, step, Action, ScreenId, StepRecord, StepRef, World,
};
use crate::text::RECOVERY_SUBGOAL;
use crate::train::{Bucket, TrainItem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProneStepRecord {
    pub step: StepRef,
    pub n_samples: usize,
    pub temperature: f64,
    pub successes: usize,
    pub p_success: f64,
    pub wrong_actions: Vec<Action>,
}

impl ProneStepRecord {
    pub fn is_prone(&self) -> bool {
        self.p_success > 0.0 && self.p_success < 1.0
    }
}

/// Draw `n` single-step actions from the goal-only policy at `temperature`
/// and count the correct ones.
pub fn estimate_success_rate<R: Rng + ?Sized>(
    policy: &Policy,
    world: &World,
    r: StepRef,
    n: usize,
    temperature: f64,
    rng: &mut R,
) -> Result<ProneStepRecord> {
    if n < 2 {
        return Err(Error::Config(format!("success estimation needs at least 2 samples, got {n}")));
    }
    if !(temperature > 0.0) {
        return Err(Error::Config(format!("sampling temperature must be positive, got {temperature}")));
    }
    let set = policy.featurizer().agent(&AgentInput::for_step(world, r, Conditioning::High)?)?;
    let mut successes = 0;
    let mut wrong_actions = Vec::new();
    for i in policy.sample_k(&set, n, temperature, rng) {
        let a = set.candidates[i].output.action().cloned().ok_or(Error::MissingTarget)?;
        if is_correct_at(world, r, &a)? {
            successes += 1;
        } else {
            wrong_actions.push(a);
        }
    }
    Ok(ProneStepRecord { step: r, n_samples: n, temperature, successes, p_success: successes as f64 / n as f64, wrong_actions })
}

/// Records with `0 < p_success < 1`, in episode order. Each step samples
/// from its own stream derived from `seed`.
pub fn identify_prone_steps(
    policy: &Policy,
    world: &World,
    episodes: &[StepRecord],
    n: usize,
    temperature: f64,
    seed: u64,
) -> Result<Vec<ProneStepRecord>> {
    let all: Vec<ProneStepRecord> = episodes
        .par_iter()
        .map(|e| {
            let r = e.step_ref();
            let mut rng = derive_rng(seed, &[u64::from(r.task_id.0), r.step_index as u64]);
            estimate_success_rate(policy, world, r, n, temperature, &mut rng)
        })
        .collect::<Result<_>>()?;
    Ok(all.into_iter().filter(ProneStepRecord::is_prone).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Escape,
    BackOnTrack,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub observation: ScreenId,
    pub history: Vec<Action>,
    pub goal: String,
    pub target_action: Action,
    pub origin: StepRef,
    pub err_action: Action,
}

impl Scenario {
    /// Sub-goal the target action serves.
    pub fn subgoal(&self, world: &World) -> Result<String> {
        match self.kind {
            ScenarioKind::Escape => Ok(RECOVERY_SUBGOAL.to_string()),
            ScenarioKind::BackOnTrack => Ok(world.step_spec(self.origin)?.subgoal.clone()),
        }
    }
}

/// Sampled wrong actions that move the agent off the step screen. Typing or
/// answering wrong text leaves the screen unchanged, and `back` would leave
/// nothing to escape from, so neither yields a scenario.
fn screen_changing_errors(world: &World, record: &ProneStepRecord) -> Result<Vec<(Action, ScreenId)>> {
    let history = world.gt_history(record.step)?;
    let state = replay(world, record.step.task_id, &history)?;
    let mut out: Vec<(Action, ScreenId)> = Vec::new();
    for a in &record.wrong_actions {
        if matches!(a, Action::Back) || out.iter().any(|(b, _)| b == a) {
            continue;
        }
        if is_correct_at(world, record.step, a)? {
            return Err(Error::Scenario(format!("{a} is correct at {}", record.step)));
        }
        let after = step(world, &state, a)?;
        if after.screen != state.screen {
            out.push((a.clone(), after.screen));
        }
    }
    Ok(out)
}

fn pick_error<R: Rng + ?Sized>(world: &World, record: &ProneStepRecord, rng: &mut R) -> Result<(Action, ScreenId)> {
    if !record.is_prone() {
        return Err(Error::Scenario(format!("{} is not prone to error", record.step)));
    }
    screen_changing_errors(world, record)?
        .choose(rng)
        .cloned()
        .ok_or_else(|| Error::Scenario(format!("no sampled error at {} leaves the screen", record.step)))
}

fn escape_from(world: &World, record: &ProneStepRecord, err: Action, observation: ScreenId) -> Result<Scenario> {
    let mut history = world.gt_history(record.step)?;
    history.push(err.clone());
    Ok(Scenario {
        kind: ScenarioKind::Escape,
        observation,
        history,
        goal: world.task(record.step.task_id)?.goal.clone(),
        target_action: Action::Back,
        origin: record.step,
        err_action: err,
    })
}

fn back_on_track_from(world: &World, record: &ProneStepRecord, err: Action) -> Result<Scenario> {
    let spec = world.step_spec(record.step)?;
    let mut history = world.gt_history(record.step)?;
    history.push(err.clone());
    history.push(Action::Back);
    Ok(Scenario {
        kind: ScenarioKind::BackOnTrack,
        observation: spec.screen_id,
        history,
        goal: world.task(record.step.task_id)?.goal.clone(),
        target_action: spec.gt_action.clone(),
        origin: record.step,
        err_action: err,
    })
}

pub fn build_escape_scenario<R: Rng + ?Sized>(world: &World, record: &ProneStepRecord, rng: &mut R) -> Result<Scenario> {
    let (err, obs) = pick_error(world, record, rng)?;
    escape_from(world, record, err, obs)
}

pub fn build_back_on_track_scenario<R: Rng + ?Sized>(
    world: &World,
    record: &ProneStepRecord,
    rng: &mut R,
) -> Result<Scenario> {
    let (err, _) = pick_error(world, record, rng)?;
    back_on_track_from(world, record, err)
}

/// Escape and back-on-track scenarios sharing one sampled error.
pub fn build_scenario_pair<R: Rng + ?Sized>(
    world: &World,
    record: &ProneStepRecord,
    rng: &mut R,
) -> Result<[Scenario; 2]> {
    let (err, obs) = pick_error(world, record, rng)?;
    Ok([escape_from(world, record, err.clone(), obs)?, back_on_track_from(world, record, err)?])
}

/// Scenarios forged from prone steps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Forged {
    pub scenarios: Vec<Scenario>,
    /// Prone steps without a usable error, with the reason.
    pub skipped: Vec<(StepRef, String)>,
}

/// One scenario pair per prone record.
pub fn forge_scenarios(world: &World, records: &[ProneStepRecord], seed: u64) -> Result<Forged> {
    let mut out = Forged::default();
    for rec in records {
        let mut rng = derive_rng(seed, &[u64::from(rec.step.task_id.0), rec.step.step_index as u64, 1]);
        match build_scenario_pair(world, rec, &mut rng) {
            Ok(pair) => out.scenarios.extend(pair),
            Err(Error::Scenario(msg)) => out.skipped.push((rec.step, msg)),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Episode record plus the scenario annotation. `screen_id` is the
/// observation and `gt_action` the target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    #[serde(flatten)]
    pub step: StepRecord,
    pub scenario: ScenarioKind,
    pub err_action: Action,
}

impl ScenarioRecord {
    pub fn new(world: &World, s: &Scenario) -> Result<Self> {
        Ok(Self {
            step: StepRecord {
                task_id: s.origin.task_id,
                step_index: s.origin.step_index,
                screen_id: s.observation,
                goal: s.goal.clone(),
                subgoal: s.subgoal(world)?,
                gt_action: s.target_action.clone(),
                history: s.history.clone(),
            },
            scenario: s.kind,
            err_action: s.err_action.clone(),
        })
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            kind: self.scenario,
            observation: self.step.screen_id,
            history: self.step.history.clone(),
            goal: self.step.goal.clone(),
            target_action: self.step.gt_action.clone(),
            origin: self.step.step_ref(),
            err_action: self.err_action.clone(),
        }
    }
}

pub fn emit_scenarios(world: &World, scenarios: &[Scenario], path: impl AsRef<Path>) -> Result<usize> {
    let records = scenarios.iter().map(|s| ScenarioRecord::new(world, s)).collect::<Result<Vec<_>>>()?;
    save_records(path, &records)?;
    Ok(records.len())
}

pub fn load_scenarios(path: impl AsRef<Path>) -> Result<Vec<Scenario>> {
    Ok(load_records::<ScenarioRecord>(path)?.iter().map(ScenarioRecord::scenario).collect())
}

/// Goal-only agent input at the scenario's observation and history.
pub fn scenario_input(world: &World, s: &Scenario) -> Result<AgentInput> {
    AgentInput::at(world, s.origin, world.screen(s.observation)?, s.history.clone(), None)
}

pub fn scenario_truth(world: &World, s: &Scenario) -> Result<GroundTruth> {
    let target = match s.kind {
        ScenarioKind::Escape => None,
        ScenarioKind::BackOnTrack => Some(world.target_bbox(s.origin)?),
    };
    Ok(GroundTruth::agent(s.target_action.clone(), target, Some(s.subgoal(world)?)))
}

pub fn scenario_item(world: &World, s: &Scenario, featurizer: &Featurizer) -> Result<TrainItem> {
    Ok(TrainItem {
        set: featurizer.agent(&scenario_input(world, s)?)?,
        truth: scenario_truth(world, s)?,
        bucket: Bucket::Scenario,
    })
}

/// Replaying the history from reset lands on the observation.
pub fn replays_to_observation(world: &World, s: &Scenario) -> Result<bool> {
    Ok(replay(world, s.origin.task_id, &s.history)?.screen == s.observation)
}

/// Mean probability mass the policy puts on `back` (any sub-goal) over the
/// escape scenarios in `scenarios`, sampling at `temperature`. `None` when
/// there are no escapes.
pub fn back_probability(policy: &Policy, world: &World, scenarios: &[Scenario], temperature: f64) -> Result<Option<f64>> {
    let featurizer = policy.featurizer();
    let escapes: Vec<&Scenario> = scenarios.iter().filter(|s| s.kind == ScenarioKind::Escape).collect();
    if escapes.is_empty() {
        return Ok(None);
    }
    let mut total = 0.0;
    for s in &escapes {
        let set = featurizer.agent(&scenario_input(world, s)?)?;
        let p = policy.probabilities(&set, temperature);
        total += set
            .candidates
            .iter()
            .zip(&p)
            .filter(|(c, _)| c.output.action() == Some(&Action::Back))
            .map(|(_, q)| q)
            .sum::<f64>();
    }
    Ok(Some(total / escapes.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::{reward_total, RewardConfig};
    use crate::sim::{generate_world, WorldParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn world() -> World {
        generate_world(7, WorldParams::default()).unwrap()
    }

    fn episodes(w: &World) -> Vec<StepRecord> {
        w.step_refs().into_iter().map(|r| StepRecord::from_world(w, r).unwrap()).collect()
    }

    #[test]
    fn uniform_policy_is_mostly_prone() {
        let w = world();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = w.step_refs()[0];
        let rec = estimate_success_rate(&Policy::zeros(), &w, r, 16, 1.5, &mut rng).unwrap();
        assert_eq!(rec.successes + rec.wrong_actions.len(), 16);
        assert!(estimate_success_rate(&Policy::zeros(), &w, r, 1, 1.5, &mut rng).is_err());
        assert!(estimate_success_rate(&Policy::zeros(), &w, r, 4, 0.0, &mut rng).is_err());
    }

    #[test]
    fn prone_steps_idempotent_and_scenarios_consistent() {
        let w = world();
        let eps = episodes(&w);
        let a = identify_prone_steps(&Policy::zeros(), &w, &eps, 16, 1.5, 4).unwrap();
        let b = identify_prone_steps(&Policy::zeros(), &w, &eps, 16, 1.5, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(ProneStepRecord::is_prone));
        let forged = forge_scenarios(&w, &a, 4).unwrap();
        assert!(!forged.scenarios.is_empty());
        let cfg = RewardConfig::default();
        for s in &forged.scenarios {
            assert!(replays_to_observation(&w, s).unwrap());
            let spec = w.step_spec(s.origin).unwrap();
            match s.kind {
                ScenarioKind::Escape => {
                    assert_eq!(s.target_action, Action::Back);
                    assert_eq!(s.history.last(), Some(&s.err_action));
                    assert_ne!(Some(s.observation), w.task(s.origin.task_id).unwrap().steps.get(s.origin.step_index + 1).map(|n| n.screen_id));
                    let item = scenario_item(&w, s, &Featurizer::default()).unwrap();
                    let text = |a: &Action| {
                        item.set.candidates.iter().find(|c| c.output.action() == Some(a)).map(|c| c.text.clone())
                    };
                    let back = reward_total(&text(&Action::Back).unwrap(), &item.truth, &cfg);
                    assert_eq!(back.param, Some(1.0));
                    let original = crate::reward::reward_param(&spec.gt_action, &Action::Back, None);
                    assert_eq!(original, 0.0);
                    if let Some(t) = text(&spec.gt_action) {
                        assert_eq!(reward_total(&t, &item.truth, &cfg).param, Some(0.0));
                    }
                }
                ScenarioKind::BackOnTrack => {
                    assert_eq!(s.observation, spec.screen_id);
                    assert_eq!(&s.history[s.history.len() - 2..], &[s.err_action.clone(), Action::Back]);
                    assert_eq!(s.target_action, spec.gt_action);
                }
            }
        }
    }

    #[test]
    fn scenario_file_round_trip() {
        let w = world();
        let eps = episodes(&w);
        let prone = identify_prone_steps(&Policy::zeros(), &w, &eps, 16, 1.5, 9).unwrap();
        let forged = forge_scenarios(&w, &prone, 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        assert_eq!(emit_scenarios(&w, &forged.scenarios, &path).unwrap(), forged.scenarios.len());
        assert_eq!(load_scenarios(&path).unwrap(), forged.scenarios);
        let escapes = forged.scenarios.iter().filter(|s| s.kind == ScenarioKind::Escape).count();
        assert_eq!(escapes * 2, forged.scenarios.len());
        assert_eq!(escapes + forged.skipped.len(), prone.len());
        let line = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
        assert!(v["scenario"] == "escape" || v["scenario"] == "back_on_track");
    }

    #[test]
    fn non_prone_record_is_rejected() {
        let w = world();
        let rec = ProneStepRecord {
            step: w.step_refs()[0],
            n_samples: 4,
            temperature: 1.5,
            successes: 4,
            p_success: 1.0,
            wrong_actions: vec![],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(build_escape_scenario(&w, &rec, &mut rng), Err(Error::Scenario(_))));
    }

    #[test]
    fn back_probability_tracks_the_back_weight() {
        let w = world();
        let prone = identify_prone_steps(&Policy::zeros(), &w, &episodes(&w), 16, 1.5, 2).unwrap();
        let forged = forge_scenarios(&w, &prone, 2).unwrap();
        let uniform = back_probability(&Policy::zeros(), &w, &forged.scenarios, 1.0).unwrap().unwrap();
        let mut p = Policy::zeros();
        p.weights[crate::policy::Feature::KindBack as usize] = 20.0;
        let backish = back_probability(&p, &w, &forged.scenarios, 1.0).unwrap().unwrap();
        assert!(uniform > 0.0 && uniform < 0.5);
        assert!(backish > 0.999);
        assert_eq!(back_probability(&p, &w, &[], 1.0).unwrap(), None);
    }
}
