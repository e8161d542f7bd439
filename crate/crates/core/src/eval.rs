//! Teacher-forced step metrics (Type, Grounding, SR) under low and high
//! conditioning, plus a supplementary full-rollout task success rate.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{Actor, AgentInput, Conditioning, DecisionContext};
use crate::reward::{parse_output, reward_param, reward_total, reward_type, GroundTruth, RewardConfig};
use crate::sim::{reset, step, Action, StepRef, TaskId, World};
use crate::train::TrainLog;

/// One greedy decision of the evaluated actor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub step: StepRef,
    pub raw: String,
    pub action: Action,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub steps: usize,
    pub click_steps: usize,
    pub type_correct: usize,
    pub grounding_correct: usize,
    pub success: usize,
}

impl Counts {
    fn add(&mut self, o: &Counts) {
        self.steps += o.steps;
        self.click_steps += o.click_steps;
        self.type_correct += o.type_correct;
        self.grounding_correct += o.grounding_correct;
        self.success += o.success;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskBreakdown {
    pub task_id: TaskId,
    pub counts: Counts,
    /// Whether a closed-loop rollout from reset finished the task.
    pub rollout_success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: Conditioning,
    pub type_acc: f64,
    /// Over click steps only.
    pub grounding_acc: f64,
    pub step_sr: f64,
    pub task_sr: f64,
    pub counts: Counts,
    pub per_task: Vec<TaskBreakdown>,
    /// Set when the task set was empty.
    pub empty: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transcript: Vec<TranscriptEntry>,
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

fn decide(actor: &dyn Actor, world: &World, input: &AgentInput, origin: StepRef) -> Result<(String, Action)> {
    let set = actor.featurizer().agent(input)?;
    let ctx = DecisionContext { input, candidates: &set, step: world.step_spec(origin)? };
    let c = set.candidates.get(actor.choose(&ctx)).ok_or(Error::MissingTarget)?;
    let action = c.output.action().cloned().ok_or(Error::MissingTarget)?;
    Ok((c.text.clone(), action))
}

fn subgoal_for(world: &World, r: StepRef, mode: Conditioning) -> Result<Option<String>> {
    Ok((mode == Conditioning::Low).then(|| world.step_spec(r).map(|s| s.subgoal.clone())).transpose()?)
}

/// Closed-loop run from reset with a budget of twice the task length.
pub fn rollout_task(actor: &dyn Actor, world: &World, task: TaskId, mode: Conditioning) -> Result<bool> {
    let len = world.task(task)?.steps.len();
    let mut state = reset(world, task)?;
    for _ in 0..2 * len {
        let origin = StepRef { task_id: task, step_index: state.step_index.min(len - 1) };
        let input =
            AgentInput::at(world, origin, world.screen(state.screen)?, state.history.clone(), subgoal_for(world, origin, mode)?)?;
        let (_, action) = decide(actor, world, &input, origin)?;
        state = step(world, &state, &action)?;
        if state.finished {
            return Ok(true);
        }
    }
    Ok(false)
}

fn score_step(world: &World, entry: &TranscriptEntry) -> Result<Counts> {
    let spec = world.step_spec(entry.step)?;
    let target = world.target_bbox(entry.step)?;
    let is_click = matches!(spec.gt_action, Action::Click(_));
    let grounded = is_click && matches!(entry.action, Action::Click(p) if target.contains(p));
    Ok(Counts {
        steps: 1,
        click_steps: usize::from(is_click),
        type_correct: usize::from(reward_type(&entry.action, &spec.gt_action) == 1.0),
        grounding_correct: usize::from(grounded),
        success: usize::from(reward_param(&entry.action, &spec.gt_action, Some(&target)) == 1.0),
    })
}

/// Greedy teacher-forced evaluation of every step of `tasks`.
pub fn evaluate(actor: &dyn Actor, world: &World, tasks: &[TaskId], mode: Conditioning) -> Result<EvalReport> {
    let per: Vec<(TaskBreakdown, Vec<TranscriptEntry>)> = tasks
        .par_iter()
        .map(|&t| {
            let n = world.task(t)?.steps.len();
            let mut counts = Counts::default();
            let mut transcript = Vec::with_capacity(n);
            for i in 0..n {
                let r = StepRef { task_id: t, step_index: i };
                let (raw, action) = decide(actor, world, &AgentInput::for_step(world, r, mode)?, r)?;
                let entry = TranscriptEntry { step: r, raw, action };
                counts.add(&score_step(world, &entry)?);
                transcript.push(entry);
            }
            let rollout_success = rollout_task(actor, world, t, mode)?;
            Ok((TaskBreakdown { task_id: t, counts, rollout_success }, transcript))
        })
        .collect::<Result<_>>()?;

    let mut counts = Counts::default();
    let mut per_task = Vec::with_capacity(per.len());
    let mut transcript = Vec::new();
    for (b, t) in per {
        counts.add(&b.counts);
        per_task.push(b);
        transcript.extend(t);
    }
    let finished = per_task.iter().filter(|b| b.rollout_success).count();
    Ok(EvalReport {
        mode,
        type_acc: ratio(counts.type_correct, counts.steps),
        grounding_acc: ratio(counts.grounding_correct, counts.click_steps),
        step_sr: ratio(counts.success, counts.steps),
        task_sr: ratio(finished, per_task.len()),
        empty: tasks.is_empty(),
        counts,
        per_task,
        transcript,
    })
}

/// Recompute step counts by passing the transcript's raw text through the
/// reward engine.
pub fn rescore_transcript(world: &World, transcript: &[TranscriptEntry], cfg: &RewardConfig) -> Result<Counts> {
    let mut counts = Counts::default();
    for e in transcript {
        let spec = world.step_spec(e.step)?;
        let target = world.target_bbox(e.step)?;
        let truth = GroundTruth::agent(spec.gt_action.clone(), Some(target), Some(spec.subgoal.clone()));
        let b = reward_total(&e.raw, &truth, cfg);
        let is_click = matches!(spec.gt_action, Action::Click(_));
        let point = parse_output(&e.raw).and_then(|p| p.point);
        counts.add(&Counts {
            steps: 1,
            click_steps: usize::from(is_click),
            type_correct: usize::from(b.type_ == Some(1.0)),
            grounding_correct: usize::from(is_click && point.is_some_and(|p| target.contains(p))),
            success: usize::from(b.param == Some(1.0)),
        });
    }
    Ok(counts)
}

fn pct(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

/// Plain-text table, one row per report, percentages to one decimal.
pub fn format_table(reports: &[EvalReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<6} {:>7} {:>10} {:>7} {:>8} {:>6}", "mode", "Type", "Grounding", "SR", "Task SR", "steps");
    for r in reports {
        let _ = writeln!(
            s,
            "{:<6} {:>7} {:>10} {:>7} {:>8} {:>6}",
            r.mode.as_str(),
            pct(r.type_acc),
            pct(r.grounding_acc),
            pct(r.step_sr),
            pct(r.task_sr),
            r.counts.steps
        );
    }
    s
}

pub fn save_reports(reports: &[EvalReport], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(reports)?)?;
    Ok(())
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with columns step, overall, low, high, grounding; empty cells for
/// buckets absent from a batch.
pub fn emit_curve(log: &TrainLog, path: impl AsRef<Path>) -> Result<()> {
    let mut s = String::from("step,overall,low,high,grounding\n");
    for r in &log.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.step,
            r.reward_overall,
            cell(r.reward_low),
            cell(r.reward_high),
            cell(r.reward_grounding)
        );
    }
    std::fs::write(path, s)?;
    Ok(())
}
