//! Sub-goal extraction and the 0–10 quality score.

use std::collections::BTreeMap;

use crate::text::tokenize;

const MARKER: &str = "Sub-goal:";

/// Text after the first line starting with `Sub-goal:`, trimmed.
pub fn extract_subgoal(think: &str) -> Option<String> {
    think
        .lines()
        .find_map(|l| l.trim_start().strip_prefix(MARKER))
        .map(|rest| rest.trim().to_string())
}

/// Multiset token F1 between two strings.
pub fn token_f1(a: &str, b: &str) -> f64 {
    let ta = tokenize(a);
    let tb = tokenize(b);
    if ta.is_empty() || tb.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &tb {
        *counts.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &ta {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let p = common as f64 / ta.len() as f64;
    let r = common as f64 / tb.len() as f64;
    2.0 * p * r / (p + r)
}

/// Raw score: 0 when nothing was extracted, otherwise `round(10·F1)`
/// clamped to 1..=10.
pub fn score_subgoal(extracted: Option<&str>, gt: &str) -> u8 {
    match extracted {
        None => 0,
        Some(e) => ((10.0 * token_f1(e, gt)).round() as u8).clamp(1, 10),
    }
}

pub fn reward_subgoal(raw: u8) -> f64 {
    f64::from(raw.min(10)) / 10.0
}

/// Rates the sub-goal implied by a reasoning block against the reference.
/// Implementations return the raw 0–10 score, 0 meaning "no sub-goal found".
pub trait SubgoalScorer: Send + Sync {
    fn score(&self, think: &str, gt_subgoal: &str) -> u8;
}

/// Marker extraction plus lexical F1.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalScorer;

impl SubgoalScorer for LexicalScorer {
    fn score(&self, think: &str, gt_subgoal: &str) -> u8 {
        score_subgoal(extract_subgoal(think).as_deref(), gt_subgoal)
    }
}
