use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::{Action, Screen, StepRef, World};

/// Whether an agent input carries the step's ground-truth sub-goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// Goal and sub-goal.
    Low,
    /// Goal only.
    High,
}

impl Conditioning {
    pub fn as_str(&self) -> &'static str {
        match self {
            Conditioning::Low => "low",
            Conditioning::High => "high",
        }
    }
}

/// Everything an agent sees at one decision point.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentInput {
    pub screen: Screen,
    pub goal: String,
    /// Present only under low-level conditioning.
    pub subgoal: Option<String>,
    pub history: Vec<Action>,
    pub subgoal_candidates: Vec<String>,
    pub text_vocab: Vec<String>,
}

impl AgentInput {
    /// Teacher-forced input for a ground-truth step.
    pub fn for_step(world: &World, r: StepRef, mode: Conditioning) -> Result<Self> {
        let task = world.task(r.task_id)?;
        let spec = world.step_spec(r)?;
        Ok(Self {
            screen: world.screen(spec.screen_id)?.clone(),
            goal: task.goal.clone(),
            subgoal: (mode == Conditioning::Low).then(|| spec.subgoal.clone()),
            history: world.gt_history(r)?,
            subgoal_candidates: spec.subgoal_candidates.clone(),
            text_vocab: spec.text_vocab.clone(),
        })
    }

    /// Input at an arbitrary screen and history, keeping the candidate sets
    /// of the step `origin`.
    pub fn at(
        world: &World,
        origin: StepRef,
        screen: &Screen,
        history: Vec<Action>,
        subgoal: Option<String>,
    ) -> Result<Self> {
        let task = world.task(origin.task_id)?;
        let spec = world.step_spec(origin)?;
        Ok(Self {
            screen: screen.clone(),
            goal: task.goal.clone(),
            subgoal,
            history,
            subgoal_candidates: spec.subgoal_candidates.clone(),
            text_vocab: spec.text_vocab.clone(),
        })
    }

    pub fn conditioning(&self) -> Conditioning {
        if self.subgoal.is_some() {
            Conditioning::Low
        } else {
            Conditioning::High
        }
    }
}

/// Input for any task kind in the training mixture.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskInput {
    Agent(AgentInput),
    PointGrounding { screen: Screen, instruction: String },
    BboxGrounding { screen: Screen, instruction: String },
    Other { screen: Screen, question: String },
}
