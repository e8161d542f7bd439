//! Candidate-scoring policies and the actors built on them.

pub mod features;
mod input;
mod model;
pub mod render;

pub use features::{Candidate, CandidateSet, Feature, Featurizer, Output, FEATURE_DIM, FEATURE_NAMES};
pub use input::{AgentInput, Conditioning, TaskInput};
pub use model::{sample_index, Policy, MIN_TEMPERATURE};

use crate::sim::{Action, StepSpec};

/// One agent decision: the input, its candidates, and the reference step
/// (used only by privileged actors).
pub struct DecisionContext<'a> {
    pub input: &'a AgentInput,
    pub candidates: &'a CandidateSet,
    pub step: &'a StepSpec,
}

pub trait Actor: Sync {
    /// Index of the chosen candidate.
    fn choose(&self, ctx: &DecisionContext<'_>) -> usize;

    fn featurizer(&self) -> Featurizer {
        Featurizer::default()
    }
}

impl Actor for Policy {
    fn choose(&self, ctx: &DecisionContext<'_>) -> usize {
        self.greedy(ctx.candidates)
    }

    fn featurizer(&self) -> Featurizer {
        Policy::featurizer(self)
    }
}

/// Emits the reference action with the reference sub-goal.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleActor;

impl Actor for OracleActor {
    fn choose(&self, ctx: &DecisionContext<'_>) -> usize {
        ctx.candidates
            .find_agent(&ctx.step.gt_action, &ctx.step.subgoal)
            .or_else(|| ctx.candidates.candidates.iter().position(|c| c.output.action() == Some(&ctx.step.gt_action)))
            .unwrap_or(0)
    }
}

/// Always goes back.
#[derive(Debug, Clone, Copy, Default)]
pub struct BackActor;

impl Actor for BackActor {
    fn choose(&self, ctx: &DecisionContext<'_>) -> usize {
        ctx.candidates
            .candidates
            .iter()
            .position(|c| c.output.action() == Some(&Action::Back))
            .unwrap_or(0)
    }
}
