//! Reasoning injection: find bottleneck steps, script teacher reasoning from
//! spatial descriptions, keep correct samples and build a supervised set.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::features::enumerate_actions;
use crate::policy::{AgentInput, Conditioning, Featurizer, Policy};
use crate::reward::{extract_subgoal, reward_param};
use crate::seed::derive_rng;
use crate::sim::{
    load_records, render_spatial_description, save_records, Action, Screen, StepRecord, StepRef, StepSpec, World,
};
use crate::train::SupervisedExample;

/// Parameter match against the step's ground truth, clicks by containment
/// in the target element.
pub fn is_correct(pred: &Action, step: &StepSpec, screen: &Screen) -> bool {
    let target = screen.element(step.target).map(|e| e.bbox);
    reward_param(pred, &step.gt_action, target.as_ref()) == 1.0
}

/// [`is_correct`] for a step of `world`.
pub fn is_correct_at(world: &World, r: StepRef, pred: &Action) -> Result<bool> {
    let spec = world.step_spec(r)?;
    Ok(is_correct(pred, spec, world.screen(spec.screen_id)?))
}

/// Greedy teacher-forced action of `policy` at a step.
pub fn predict(policy: &Policy, world: &World, r: StepRef, mode: Conditioning) -> Result<Action> {
    let set = policy.featurizer().agent(&AgentInput::for_step(world, r, mode)?)?;
    let i = policy.greedy(&set);
    set.candidates[i].output.action().cloned().ok_or(Error::MissingTarget)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottleneckRecord {
    pub step: StepRef,
    pub a_high: Action,
    pub a_low: Action,
    pub verdict: bool,
}

/// High- and low-conditioned predictions with the bottleneck verdict for
/// every episode step, in episode order.
pub fn bottleneck_records(policy: &Policy, world: &World, episodes: &[StepRecord]) -> Result<Vec<BottleneckRecord>> {
    if !policy.subgoal_conditioning {
        return Err(Error::Capability("bottleneck identification needs a sub-goal-conditioned model".into()));
    }
    episodes
        .par_iter()
        .map(|e| {
            let r = e.step_ref();
            let a_high = predict(policy, world, r, Conditioning::High)?;
            let a_low = predict(policy, world, r, Conditioning::Low)?;
            let verdict = !is_correct_at(world, r, &a_high)? && is_correct_at(world, r, &a_low)?;
            Ok(BottleneckRecord { step: r, a_high, a_low, verdict })
        })
        .collect()
}

/// Steps failed without the sub-goal but solved with it.
pub fn identify_bottlenecks(policy: &Policy, world: &World, episodes: &[StepRecord]) -> Result<Vec<StepRef>> {
    Ok(bottleneck_records(policy, world, episodes)?.into_iter().filter(|b| b.verdict).map(|b| b.step).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherSample {
    pub step: StepRef,
    pub spatial: String,
    pub goal: String,
    pub reasoning: String,
    pub action: Action,
    pub accepted: bool,
}

fn justification(action: &Action) -> String {
    match action {
        Action::Click(_) => "Clicking it moves to the screen the sub-goal asks for.".into(),
        Action::Type(t) => format!("Typing {t} into it and submitting completes the sub-goal."),
        Action::Answer(t) => format!("Its text {t} answers the goal."),
        Action::Back => "Going back returns to the previous screen.".into(),
    }
}

/// Scripted teacher: restate the goal, state the ground-truth sub-goal,
/// locate the target by label and center, justify the action. With
/// probability `noise_rate` the action is replaced by a uniformly chosen
/// wrong one.
pub fn teacher_generate<R: Rng + ?Sized>(world: &World, r: StepRef, noise_rate: f64, rng: &mut R) -> Result<TeacherSample> {
    let task = world.task(r.task_id)?;
    let spec = world.step_spec(r)?;
    let screen = world.screen(spec.screen_id)?;
    let target = screen.element(spec.target).ok_or(Error::UnknownStep { task: r.task_id, step: r.step_index })?;
    let c = target.bbox.center();
    let mut action = spec.gt_action.clone();
    if noise_rate > 0.0 && rng.gen_bool(noise_rate.min(1.0)) {
        let wrong: Vec<Action> =
            enumerate_actions(screen, &spec.text_vocab).into_iter().filter(|a| !is_correct(a, spec, screen)).collect();
        if let Some(a) = wrong.choose(rng) {
            action = a.clone();
        }
    }
    let reasoning = format!(
        "The goal is: {}\nSub-goal: {}\nThe target is the {} '{}' at ({}, {}).\n{}",
        task.goal,
        spec.subgoal,
        target.kind.as_str(),
        target.label,
        c.x,
        c.y,
        justification(&action)
    );
    Ok(TeacherSample {
        step: r,
        spatial: render_spatial_description(screen),
        goal: task.goal.clone(),
        reasoning,
        action,
        accepted: false,
    })
}

/// One teacher sample per step, each from its own derived stream.
pub fn teacher_dataset(world: &World, steps: &[StepRef], noise_rate: f64, seed: u64) -> Result<Vec<TeacherSample>> {
    steps
        .par_iter()
        .map(|r| {
            let mut rng = derive_rng(seed, &[u64::from(r.task_id.0), r.step_index as u64]);
            teacher_generate(world, *r, noise_rate, &mut rng)
        })
        .collect()
}

/// Keep exactly the samples whose action is correct, marking them accepted.
pub fn rejection_filter(world: &World, samples: Vec<TeacherSample>) -> Result<Vec<TeacherSample>> {
    let mut kept = Vec::with_capacity(samples.len());
    for mut s in samples {
        if is_correct_at(world, s.step, &s.action)? {
            s.accepted = true;
            kept.push(s);
        }
    }
    Ok(kept)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftTarget {
    pub reasoning: String,
    pub action: Action,
}

/// Episode record plus the teacher target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    #[serde(flatten)]
    pub step: StepRecord,
    pub target: SftTarget,
}

pub fn sft_records(world: &World, samples: &[TeacherSample]) -> Result<Vec<SftRecord>> {
    samples
        .iter()
        .filter(|s| s.accepted)
        .map(|s| {
            Ok(SftRecord {
                step: StepRecord::from_world(world, s.step)?,
                target: SftTarget { reasoning: s.reasoning.clone(), action: s.action.clone() },
            })
        })
        .collect()
}

/// Write accepted samples; returns the number written.
pub fn emit_sft_dataset(world: &World, samples: &[TeacherSample], path: impl AsRef<Path>) -> Result<usize> {
    let records = sft_records(world, samples)?;
    save_records(path, &records)?;
    Ok(records.len())
}

pub fn load_sft_dataset(path: impl AsRef<Path>) -> Result<Vec<SftRecord>> {
    load_records(path)
}

/// Goal-only inputs whose target is the teacher action paired with the
/// sub-goal its reasoning states.
pub fn sft_examples(world: &World, records: &[SftRecord], featurizer: &Featurizer) -> Result<Vec<SupervisedExample>> {
    records
        .iter()
        .map(|rec| {
            let input = AgentInput::for_step(world, rec.step.step_ref(), Conditioning::High)?;
            let set = featurizer.agent(&input)?;
            let sub = extract_subgoal(&rec.target.reasoning).ok_or(Error::MissingTarget)?;
            let target = set.find_agent(&rec.target.action, &sub).ok_or(Error::MissingTarget)?;
            Ok(SupervisedExample::single(set, target))
        })
        .collect()
}

/// Action-only labels: every candidate carrying the ground-truth action is
/// a target, whatever sub-goal its reasoning states.
pub fn action_examples(world: &World, steps: &[StepRef], mode: Conditioning, featurizer: &Featurizer) -> Result<Vec<SupervisedExample>> {
    steps
        .iter()
        .map(|&r| {
            let spec = world.step_spec(r)?;
            let set = featurizer.agent(&AgentInput::for_step(world, r, mode)?)?;
            let targets: Vec<usize> = set
                .candidates
                .iter()
                .enumerate()
                .filter(|(_, c)| c.output.action() == Some(&spec.gt_action))
                .map(|(i, _)| i)
                .collect();
            if targets.is_empty() {
                return Err(Error::MissingTarget);
            }
            Ok(SupervisedExample { set, targets })
        })
        .collect()
}

/// Greedy accuracy over `steps` under `mode`.
pub fn step_accuracy(policy: &Policy, world: &World, steps: &[StepRef], mode: Conditioning) -> Result<f64> {
    if steps.is_empty() {
        return Ok(0.0);
    }
    let hits = steps
        .par_iter()
        .map(|&r| Ok(is_correct_at(world, r, &predict(policy, world, r, mode)?)?))
        .collect::<Result<Vec<bool>>>()?;
    Ok(hits.iter().filter(|h| **h).count() as f64 / steps.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_world, parse_spatial_description, Point, WorldParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn world() -> World {
        generate_world(7, WorldParams::default()).unwrap()
    }

    #[test]
    fn correctness_uses_containment() {
        let w = world();
        let r = w.step_refs().into_iter().find(|r| matches!(w.step_spec(*r).unwrap().gt_action, Action::Click(_))).unwrap();
        let spec = w.step_spec(r).unwrap();
        let b = w.target_bbox(r).unwrap();
        assert!(is_correct_at(&w, r, &spec.gt_action).unwrap());
        assert!(is_correct_at(&w, r, &Action::Click(Point::new(b.x_min + 1, b.y_max - 1))).unwrap());
        assert!(!is_correct_at(&w, r, &Action::Back).unwrap());
    }

    #[test]
    fn teacher_noise_extremes_and_template() {
        let w = world();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for r in w.step_refs() {
            let clean = teacher_generate(&w, r, 0.0, &mut rng).unwrap();
            assert_eq!(clean.action, w.step_spec(r).unwrap().gt_action);
            assert_eq!(extract_subgoal(&clean.reasoning).as_deref(), Some(w.step_spec(r).unwrap().subgoal.as_str()));
            let c = w.target_bbox(r).unwrap().center();
            let pair = format!("({}, {})", c.x, c.y);
            assert!(clean.reasoning.contains(&pair));
            assert!(clean.spatial.contains(&format!("at {pair}")));
            parse_spatial_description(&clean.spatial).unwrap();
            let noisy = teacher_generate(&w, r, 1.0, &mut rng).unwrap();
            assert!(!is_correct_at(&w, r, &noisy.action).unwrap());
        }
    }

    #[test]
    fn filter_keeps_correct_samples() {
        let w = world();
        let steps = w.step_refs();
        let all = teacher_dataset(&w, &steps, 0.0, 1).unwrap();
        let kept = rejection_filter(&w, all.clone()).unwrap();
        assert_eq!(kept.len(), all.len());
        assert!(kept.iter().all(|s| s.accepted));
        assert!(rejection_filter(&w, vec![]).unwrap().is_empty());
        assert_eq!(teacher_dataset(&w, &steps, 0.3, 5).unwrap(), teacher_dataset(&w, &steps, 0.3, 5).unwrap());
    }

    #[test]
    fn capability_error_without_subgoal_conditioning() {
        let w = world();
        let eps: Vec<StepRecord> = w.step_refs().into_iter().map(|r| StepRecord::from_world(&w, r).unwrap()).collect();
        let p = Policy { subgoal_conditioning: false, ..Policy::zeros() };
        assert!(matches!(identify_bottlenecks(&p, &w, &eps), Err(Error::Capability(_))));
    }

    #[test]
    fn sft_round_trip_and_targets() {
        let w = world();
        let steps = w.step_refs();
        let samples = rejection_filter(&w, teacher_dataset(&w, &steps, 0.5, 2).unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sft.jsonl");
        let n = emit_sft_dataset(&w, &samples, &path).unwrap();
        assert_eq!(n, samples.len());
        let back = load_sft_dataset(&path).unwrap();
        assert_eq!(back, sft_records(&w, &samples).unwrap());
        let ex = sft_examples(&w, &back, &Featurizer::default()).unwrap();
        for (e, rec) in ex.iter().zip(&back) {
            let out = &e.set.candidates[e.targets[0]].output;
            assert_eq!(out.action(), Some(&rec.target.action));
            assert_eq!(out.subgoal(), Some(rec.step.subgoal.as_str()));
        }
        let first = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
        assert!(v.get("target").is_some() && v.get("goal").is_some());
    }
}
