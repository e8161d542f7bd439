//! Rule-based rewards over raw model output.
//!
//! The total reward gates accuracy on format: a response without exactly
//! one leading `<think>…</think>` block scores 0, otherwise
//! `w_f + w_a · R_acc`, where `R_acc` depends on the task kind:
//!
//! * agent steps: `w_t·R_type + w_p·R_param` when all parameters match,
//!   else `w_t·R_type + w_s·R_subgoal`;
//! * point grounding: 1 when the point lies inside the target box;
//! * box grounding: 1 when IoU ≥ τ, else IoU/τ;
//! * other: exact match or equal rational values.

mod parse;
mod subgoal;

pub use parse::{answer_text, parse_action, parse_bbox, parse_output, parse_point, ParsedOutput};
pub use subgoal::{
    extract_subgoal, reward_subgoal, score_subgoal, token_f1, LexicalScorer, SubgoalScorer,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Action, Point, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub w_f: f64,
    pub w_a: f64,
    pub w_t: f64,
    pub w_p: f64,
    pub w_s: f64,
    pub tau_iou: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { w_f: 0.1, w_a: 0.9, w_t: 0.2, w_p: 0.8, w_s: 0.2, tau_iou: 0.7 }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.w_f, self.w_a, self.w_t, self.w_p, self.w_s];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("reward weights must be non-negative".into()));
        }
        if (self.w_f + self.w_a - 1.0).abs() > 1e-9 || (self.w_t + self.w_p - 1.0).abs() > 1e-9 {
            return Err(Error::Config("w_f + w_a and w_t + w_p must both equal 1".into()));
        }
        if self.w_s > self.w_p {
            return Err(Error::Config("w_s must not exceed w_p".into()));
        }
        if !(self.tau_iou > 0.0 && self.tau_iou <= 1.0) {
            return Err(Error::Config("tau_iou must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Agent,
    PointGrounding,
    BboxGrounding,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub task_kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_action: Option<Action>,
    /// Target box; for agent clicks it also defines parameter equality.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_bbox: Option<Rect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_subgoal: Option<String>,
}

impl GroundTruth {
    pub fn agent(action: Action, target: Option<Rect>, subgoal: Option<String>) -> Self {
        Self {
            task_kind: TaskKind::Agent,
            gt_action: Some(action),
            gt_bbox: target,
            gt_answer: None,
            gt_subgoal: subgoal,
        }
    }

    pub fn point(bbox: Rect) -> Self {
        Self { task_kind: TaskKind::PointGrounding, gt_bbox: Some(bbox), ..Self::empty() }
    }

    pub fn bbox(bbox: Rect) -> Self {
        Self { task_kind: TaskKind::BboxGrounding, gt_bbox: Some(bbox), ..Self::empty() }
    }

    pub fn other(answer: impl Into<String>) -> Self {
        Self { task_kind: TaskKind::Other, gt_answer: Some(answer.into()), ..Self::empty() }
    }

    fn empty() -> Self {
        Self {
            task_kind: TaskKind::Other,
            gt_action: None,
            gt_bbox: None,
            gt_answer: None,
            gt_subgoal: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.task_kind {
            TaskKind::Agent => self.gt_action.is_some(),
            TaskKind::PointGrounding | TaskKind::BboxGrounding => self.gt_bbox.is_some(),
            TaskKind::Other => self.gt_answer.is_some(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("ground truth for {:?} is missing fields", self.task_kind)))
        }
    }
}

/// Per-component breakdown of one scored response. Components that were
/// not evaluated are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub format: f64,
    #[serde(rename = "type")]
    pub type_: Option<f64>,
    pub param: Option<f64>,
    pub subgoal_raw: Option<u8>,
    pub subgoal: Option<f64>,
    pub acc: f64,
    pub total: f64,
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn reward_format(raw: &str) -> f64 {
    indicator(parse_output(raw).is_some())
}

pub fn reward_type(pred: &Action, gt: &Action) -> f64 {
    indicator(pred.kind() == gt.kind())
}

/// Full parameter match. Clicks match by containment in `gt_target` when
/// given, else by exact point; texts match after trimming, case-sensitive.
pub fn reward_param(pred: &Action, gt: &Action, gt_target: Option<&Rect>) -> f64 {
    let m = match (pred, gt) {
        (Action::Click(p), Action::Click(g)) => match gt_target {
            Some(b) => b.contains(*p),
            None => p == g,
        },
        (Action::Type(a), Action::Type(b)) | (Action::Answer(a), Action::Answer(b)) => {
            a.trim() == b.trim()
        }
        (Action::Back, Action::Back) => true,
        _ => false,
    };
    indicator(m)
}

pub fn reward_point(point: Point, gt_bbox: &Rect) -> f64 {
    indicator(gt_bbox.contains(point))
}

pub fn reward_bbox(pred: &Rect, gt: &Rect, tau: f64) -> f64 {
    let iou = pred.iou(gt);
    if iou >= tau {
        1.0
    } else {
        iou / tau
    }
}

/// Parse a number written as an integer, decimal or `a/b` fraction.
pub fn parse_rational(s: &str) -> Option<f64> {
    let s = s.trim();
    let plain = |t: &str| -> Option<f64> {
        let t = t.trim();
        let ok = !t.is_empty()
            && t.chars().all(|c| c.is_ascii_digit() || c == '.' || c == '-' || c == '+');
        if ok {
            t.parse::<f64>().ok().filter(|v| v.is_finite())
        } else {
            None
        }
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let d = plain(d)?;
            (d != 0.0).then_some(plain(n)? / d)
        }
        None => plain(s),
    }
}

pub fn reward_other(ans: &str, gt: &str) -> f64 {
    if ans.trim() == gt.trim() {
        return 1.0;
    }
    match (parse_rational(ans), parse_rational(gt)) {
        (Some(a), Some(b)) => indicator((a - b).abs() <= 1e-9),
        _ => 0.0,
    }
}

/// Agent reward with sub-goal guidance on parameter misses.
pub fn reward_agent(pred: &Action, gt: &Action, gt_target: Option<&Rect>, subgoal_reward: f64, cfg: &RewardConfig) -> f64 {
    let r_type = reward_type(pred, gt);
    let r_param = reward_param(pred, gt, gt_target);
    agent_formula(r_type, r_param, subgoal_reward, cfg)
}

fn agent_formula(r_type: f64, r_param: f64, subgoal_reward: f64, cfg: &RewardConfig) -> f64 {
    if r_param == 1.0 {
        cfg.w_t * r_type + cfg.w_p * r_param
    } else {
        cfg.w_t * r_type + cfg.w_s * subgoal_reward
    }
}

pub fn reward_total(raw: &str, gt: &GroundTruth, cfg: &RewardConfig) -> RewardBreakdown {
    reward_total_with(raw, gt, cfg, &LexicalScorer)
}

/// [`reward_total`] with a caller-supplied sub-goal scorer.
pub fn reward_total_with(
    raw: &str,
    gt: &GroundTruth,
    cfg: &RewardConfig,
    scorer: &dyn SubgoalScorer,
) -> RewardBreakdown {
    let mut out = RewardBreakdown {
        format: 0.0,
        type_: None,
        param: None,
        subgoal_raw: None,
        subgoal: None,
        acc: 0.0,
        total: 0.0,
    };
    let Some(parsed) = parse_output(raw) else {
        return out;
    };
    out.format = 1.0;
    out.acc = match gt.task_kind {
        TaskKind::Agent => match (&parsed.action, &gt.gt_action) {
            (Some(pred), Some(truth)) => {
                let r_type = reward_type(pred, truth);
                let r_param = reward_param(pred, truth, gt.gt_bbox.as_ref());
                let raw_score = gt.gt_subgoal.as_deref().map_or(0, |g| scorer.score(&parsed.think, g));
                let r_sub = reward_subgoal(raw_score);
                out.type_ = Some(r_type);
                out.param = Some(r_param);
                out.subgoal_raw = Some(raw_score);
                out.subgoal = Some(r_sub);
                agent_formula(r_type, r_param, r_sub, cfg)
            }
            _ => 0.0,
        },
        TaskKind::PointGrounding => match (parsed.point, &gt.gt_bbox) {
            (Some(p), Some(b)) => reward_point(p, b),
            _ => 0.0,
        },
        TaskKind::BboxGrounding => match (&parsed.bbox, &gt.gt_bbox) {
            (Some(p), Some(b)) => reward_bbox(p, b, cfg.tau_iou),
            _ => 0.0,
        },
        TaskKind::Other => match &gt.gt_answer {
            Some(g) => reward_other(&answer_text(&parsed.answer), g),
            None => 0.0,
        },
    };
    out.total = cfg.w_f * out.format + cfg.w_a * out.acc;
    out
}
