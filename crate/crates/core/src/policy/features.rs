//! Candidate enumeration and the hand-built feature map.
//!
//! Every input is turned into a finite list of complete responses. An agent
//! response pairs an action with the sub-goal its reasoning states; the
//! policy scores each pair with a dot product against these features.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::sim::{Action, ElementKind, Point, Rect, Screen, CANVAS_SIZE};
use crate::text::{content_tokens, coverage, goal_clauses, tokenize, RECOVERY_SUBGOAL};

use super::input::{AgentInput, TaskInput};
use super::render;

macro_rules! features {
    ($($name:ident),* $(,)?) => {
        #[allow(non_camel_case_types, clippy::upper_case_acronyms)]
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        #[repr(usize)]
        pub enum Feature { $($name),* }

        pub const FEATURE_NAMES: &[&str] = &[$(stringify!($name)),*];
    };
}

features! {
    KindClick,
    KindType,
    KindAnswer,
    KindBack,
    ClickGoal,
    ClickProvided,
    ClickChosen,
    ClickRepeatsError,
    ClickOnLabel,
    TypeGoal,
    TypeProvided,
    TypeChosen,
    TypeHasField,
    AnswerGoal,
    AnswerProvided,
    AnswerChosen,
    AnswerOnScreen,
    BackOffGoal,
    SubgoalProvided,
    SubgoalInGoal,
    SubgoalOnScreen,
    SubgoalInOrder,
    SubgoalRecovery,
    SubgoalRecoveryOffGoal,
    PointLabel,
    PointKind,
    BoxLabel,
    BoxExact,
    BoxDistortion,
    ArithOpMatch,
    ArithOperand,
}

pub const FEATURE_DIM: usize = FEATURE_NAMES.len();

/// Indices of the features that read the provided sub-goal.
pub const SUBGOAL_FEATURES: &[Feature] = &[
    Feature::ClickProvided,
    Feature::TypeProvided,
    Feature::AnswerProvided,
    Feature::SubgoalProvided,
];

/// Features that depend on which sub-goal the reasoning states. A reactive
/// actor, which acts without reasoning, has zero weight on all of them.
pub const REASONING_FEATURES: &[Feature] = &[
    Feature::ClickChosen,
    Feature::TypeChosen,
    Feature::AnswerChosen,
    Feature::SubgoalProvided,
    Feature::SubgoalInGoal,
    Feature::SubgoalOnScreen,
    Feature::SubgoalInOrder,
    Feature::SubgoalRecovery,
    Feature::SubgoalRecoveryOffGoal,
];

/// `true` for every feature outside [`REASONING_FEATURES`].
pub fn action_feature_mask() -> Vec<bool> {
    let mut m = vec![true; FEATURE_DIM];
    for f in REASONING_FEATURES {
        m[*f as usize] = false;
    }
    m
}

/// A complete response the policy can emit.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Agent { action: Action, subgoal: String },
    Point(Point),
    Bbox(Rect),
    Answer(String),
}

impl Output {
    pub fn action(&self) -> Option<&Action> {
        match self {
            Output::Agent { action, .. } => Some(action),
            _ => None,
        }
    }

    pub fn subgoal(&self) -> Option<&str> {
        match self {
            Output::Agent { subgoal, .. } => Some(subgoal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub output: Output,
    /// Well-formed rendering: think block, then the answer.
    pub text: String,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.candidates.first().map_or(0, |c| c.features.len())
    }

    /// First candidate whose action and stated sub-goal equal the given ones.
    pub fn find_agent(&self, action: &Action, subgoal: &str) -> Option<usize> {
        self.candidates.iter().position(|c| {
            matches!(&c.output, Output::Agent { action: a, subgoal: s } if a == action && s == subgoal)
        })
    }

    /// Candidates grouped by action: (action, indices) in first-seen order.
    pub fn actions(&self) -> Vec<(Action, Vec<usize>)> {
        let mut out: Vec<(Action, Vec<usize>)> = Vec::new();
        for (i, c) in self.candidates.iter().enumerate() {
            if let Some(a) = c.output.action() {
                match out.iter_mut().find(|(b, _)| b == a) {
                    Some((_, idx)) => idx.push(i),
                    None => out.push((a.clone(), vec![i])),
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Featurizer {
    pub max_candidates: usize,
    /// When false the provided sub-goal is never read.
    pub subgoal_conditioning: bool,
}

impl Default for Featurizer {
    fn default() -> Self {
        Self { max_candidates: 512, subgoal_conditioning: true }
    }
}

/// Agent actions in enumeration order: clicks on every element center,
/// typed texts, back, answered texts.
pub fn enumerate_actions(screen: &Screen, text_vocab: &[String]) -> Vec<Action> {
    let mut actions: Vec<Action> =
        screen.elements.iter().map(|e| Action::Click(e.bbox.center())).collect();
    actions.extend(text_vocab.iter().map(|t| Action::Type(t.clone())));
    actions.push(Action::Back);
    actions.extend(text_vocab.iter().map(|t| Action::Answer(t.clone())));
    actions
}

/// Stack depth implied by a history: clicks and typing push, back pops.
pub fn history_depth(history: &[Action]) -> usize {
    history.iter().fold(0usize, |d, a| match a {
        Action::Click(_) | Action::Type(_) => d + 1,
        Action::Back => d.saturating_sub(1),
        Action::Answer(_) => d,
    })
}

/// The click that was just undone, if the last action was `back`.
fn undone_click(history: &[Action]) -> Option<Point> {
    match history {
        [.., Action::Click(p), Action::Back] => Some(*p),
        _ => None,
    }
}

struct AgentContext {
    goal: BTreeSet<String>,
    clauses: Vec<BTreeSet<String>>,
    provided: Option<BTreeSet<String>>,
    provided_text: Option<String>,
    screen_labels: BTreeSet<String>,
    exact_labels: BTreeSet<String>,
    off_goal: f64,
    depth: usize,
    undone: Option<Point>,
    has_field: bool,
}

impl AgentContext {
    fn new(input: &AgentInput, use_subgoal: bool) -> Self {
        let goal = content_tokens(&input.goal);
        let screen_labels: BTreeSet<String> =
            input.screen.elements.iter().flat_map(|e| content_tokens(&e.label)).collect();
        let relevant = input
            .screen
            .elements
            .iter()
            .any(|e| coverage(&content_tokens(&e.label), &goal) > 0.0);
        let provided_text = input.subgoal.clone().filter(|_| use_subgoal);
        Self {
            clauses: goal_clauses(&input.goal),
            provided: provided_text.as_deref().map(content_tokens),
            provided_text,
            exact_labels: input.screen.elements.iter().map(|e| e.label.clone()).collect(),
            screen_labels,
            off_goal: if relevant { 0.0 } else { 1.0 },
            depth: history_depth(&input.history),
            undone: undone_click(&input.history),
            has_field: input.screen.text_field().is_some(),
            goal,
        }
    }

    fn clause_of(&self, tokens: &BTreeSet<String>) -> Option<usize> {
        self.clauses.iter().position(|c| c.intersection(tokens).next().is_some())
    }
}

impl Featurizer {
    pub fn candidates(&self, input: &TaskInput) -> Result<CandidateSet> {
        let set = match input {
            TaskInput::Agent(a) => self.agent_candidates(a),
            TaskInput::PointGrounding { screen, instruction } => point_candidates(screen, instruction),
            TaskInput::BboxGrounding { screen, instruction } => bbox_candidates(screen, instruction),
            TaskInput::Other { screen, question } => other_candidates(screen, question),
        };
        if set.len() > self.max_candidates {
            return Err(Error::TooManyCandidates { count: set.len(), limit: self.max_candidates });
        }
        Ok(set)
    }

    pub fn agent(&self, input: &AgentInput) -> Result<CandidateSet> {
        self.candidates(&TaskInput::Agent(input.clone()))
    }

    fn agent_candidates(&self, input: &AgentInput) -> CandidateSet {
        let ctx = AgentContext::new(input, self.subgoal_conditioning);
        let actions = enumerate_actions(&input.screen, &input.text_vocab);
        let subgoals: Vec<(String, BTreeSet<String>)> = input
            .subgoal_candidates
            .iter()
            .map(|s| (s.clone(), content_tokens(s)))
            .collect();

        let mut candidates = Vec::with_capacity(actions.len() * subgoals.len());
        for action in &actions {
            let action_part = action_features(&ctx, &input.screen, action);
            for (subgoal, sub_tokens) in &subgoals {
                let mut f = vec![0.0; FEATURE_DIM];
                for (i, v) in &action_part {
                    f[*i as usize] = *v;
                }
                let target_tokens = action_tokens(&input.screen, action);
                let chosen = applicable(&ctx, action) * overlap(&target_tokens, sub_tokens);
                match action {
                    Action::Click(_) => f[Feature::ClickChosen as usize] = chosen,
                    Action::Type(_) => f[Feature::TypeChosen as usize] = chosen,
                    Action::Answer(_) => f[Feature::AnswerChosen as usize] = chosen,
                    Action::Back => {}
                }
                if ctx.provided_text.as_deref() == Some(subgoal.as_str()) {
                    f[Feature::SubgoalProvided as usize] = 1.0;
                }
                f[Feature::SubgoalInGoal as usize] = coverage(sub_tokens, &ctx.goal);
                f[Feature::SubgoalOnScreen as usize] = coverage(sub_tokens, &ctx.screen_labels);
                if !sub_tokens.is_empty() && ctx.clause_of(sub_tokens) == Some(ctx.depth) {
                    f[Feature::SubgoalInOrder as usize] = 1.0;
                }
                if subgoal == RECOVERY_SUBGOAL {
                    f[Feature::SubgoalRecovery as usize] = 1.0;
                    f[Feature::SubgoalRecoveryOffGoal as usize] = ctx.off_goal;
                }
                candidates.push(Candidate {
                    text: render::agent(&input.goal, subgoal, action),
                    output: Output::Agent { action: action.clone(), subgoal: subgoal.clone() },
                    features: f,
                });
            }
        }
        CandidateSet { candidates }
    }
}

/// 1 when the sets share a token.
fn overlap(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.intersection(b).next().is_some() {
        1.0
    } else {
        0.0
    }
}

fn action_tokens(screen: &Screen, action: &Action) -> BTreeSet<String> {
    match action {
        Action::Click(p) => screen.element_at(*p).map(|e| content_tokens(&e.label)).unwrap_or_default(),
        Action::Type(t) | Action::Answer(t) => content_tokens(t),
        Action::Back => BTreeSet::new(),
    }
}

/// Text matches only count when the action can take effect here: typing
/// needs a field, answering needs the text on screen.
fn applicable(ctx: &AgentContext, action: &Action) -> f64 {
    let ok = match action {
        Action::Type(_) => ctx.has_field,
        Action::Answer(t) => ctx.exact_labels.contains(t),
        Action::Click(_) | Action::Back => true,
    };
    if ok {
        1.0
    } else {
        0.0
    }
}

fn action_features(ctx: &AgentContext, screen: &Screen, action: &Action) -> Vec<(Feature, f64)> {
    let tokens = action_tokens(screen, action);
    let gate = applicable(ctx, action);
    let goal = gate * overlap(&tokens, &ctx.goal);
    let provided = gate * ctx.provided.as_ref().map_or(0.0, |p| overlap(&tokens, p));
    match action {
        Action::Click(p) => {
            let on_label = screen.element_at(*p).is_some_and(|e| e.kind == ElementKind::Label);
            vec![
                (Feature::KindClick, 1.0),
                (Feature::ClickGoal, goal),
                (Feature::ClickProvided, provided),
                (Feature::ClickRepeatsError, if ctx.undone == Some(*p) { 1.0 } else { 0.0 }),
                (Feature::ClickOnLabel, if on_label { 1.0 } else { 0.0 }),
            ]
        }
        Action::Type(_) => vec![
            (Feature::KindType, 1.0),
            (Feature::TypeGoal, goal),
            (Feature::TypeProvided, provided),
            (Feature::TypeHasField, if ctx.has_field { 1.0 } else { 0.0 }),
        ],
        Action::Answer(t) => vec![
            (Feature::KindAnswer, 1.0),
            (Feature::AnswerGoal, goal),
            (Feature::AnswerProvided, provided),
            (Feature::AnswerOnScreen, if ctx.exact_labels.contains(t) { 1.0 } else { 0.0 }),
        ],
        Action::Back => vec![(Feature::KindBack, 1.0), (Feature::BackOffGoal, ctx.off_goal)],
    }
}

/// Instruction for locating an element.
pub fn locate_instruction(kind: ElementKind, label: &str) -> String {
    let kind = match kind {
        ElementKind::Button => "button",
        ElementKind::TextField => "text field",
        ElementKind::Icon => "icon",
        ElementKind::Label => "label",
    };
    format!("Locate the {label} {kind}")
}

fn kind_word(kind: ElementKind) -> &'static str {
    match kind {
        ElementKind::Button => "button",
        ElementKind::TextField => "field",
        ElementKind::Icon => "icon",
        ElementKind::Label => "label",
    }
}

fn locate_features(screen_kind: ElementKind, label: &str, instruction: &str) -> (f64, f64) {
    let inst = content_tokens(instruction);
    let words: BTreeSet<String> = tokenize(instruction).into_iter().collect();
    (
        coverage(&content_tokens(label), &inst),
        if words.contains(kind_word(screen_kind)) { 1.0 } else { 0.0 },
    )
}

fn point_candidates(screen: &Screen, instruction: &str) -> CandidateSet {
    let candidates = screen
        .elements
        .iter()
        .map(|e| {
            let (label, kind) = locate_features(e.kind, &e.label, instruction);
            let mut f = vec![0.0; FEATURE_DIM];
            f[Feature::PointLabel as usize] = label;
            f[Feature::PointKind as usize] = kind;
            let p = e.bbox.center();
            Candidate { text: render::point(instruction, p), output: Output::Point(p), features: f }
        })
        .collect();
    CandidateSet { candidates }
}

fn clamp_rect(r: Rect) -> Option<Rect> {
    let r = Rect::new(
        r.x_min.clamp(0, CANVAS_SIZE),
        r.y_min.clamp(0, CANVAS_SIZE),
        r.x_max.clamp(0, CANVAS_SIZE),
        r.y_max.clamp(0, CANVAS_SIZE),
    );
    r.is_valid().then_some(r)
}

/// The exact box plus two distortions: shrunk around the center and
/// shifted right by 40% of the width.
fn box_variants(b: Rect) -> Vec<(Rect, bool, f64)> {
    let (w, h) = (b.width(), b.height());
    let mut out = vec![(b, true, 0.0)];
    let shrunk = Rect::new(b.x_min + w * 3 / 20, b.y_min + h * 3 / 20, b.x_max - w * 3 / 20, b.y_max - h * 3 / 20);
    let shifted = Rect::new(b.x_min + w * 2 / 5, b.y_min, b.x_max + w * 2 / 5, b.y_max);
    for r in [shrunk, shifted] {
        if let Some(r) = clamp_rect(r) {
            if r != b {
                out.push((r, false, 1.0 - r.iou(&b)));
            }
        }
    }
    out
}

fn bbox_candidates(screen: &Screen, instruction: &str) -> CandidateSet {
    let mut candidates = Vec::new();
    for e in &screen.elements {
        let (label, _) = locate_features(e.kind, &e.label, instruction);
        for (r, exact, distortion) in box_variants(e.bbox) {
            let mut f = vec![0.0; FEATURE_DIM];
            f[Feature::BoxLabel as usize] = label;
            f[Feature::BoxExact as usize] = if exact { 1.0 } else { 0.0 };
            f[Feature::BoxDistortion as usize] = distortion;
            candidates.push(Candidate { text: render::bbox(instruction, r), output: Output::Bbox(r), features: f });
        }
    }
    CandidateSet { candidates }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Plus,
    Minus,
    Times,
    DividedBy,
}

impl ArithOp {
    pub const ALL: [ArithOp; 4] = [ArithOp::Plus, ArithOp::Minus, ArithOp::Times, ArithOp::DividedBy];

    pub fn word(&self) -> &'static str {
        match self {
            ArithOp::Plus => "plus",
            ArithOp::Minus => "minus",
            ArithOp::Times => "times",
            ArithOp::DividedBy => "divided by",
        }
    }

    /// Exact result as a reduced fraction (numerator, denominator > 0).
    pub fn apply(&self, a: i64, b: i64) -> Option<(i64, i64)> {
        let (n, d) = match self {
            ArithOp::Plus => (a + b, 1),
            ArithOp::Minus => (a - b, 1),
            ArithOp::Times => (a * b, 1),
            ArithOp::DividedBy if b != 0 => (a, b),
            ArithOp::DividedBy => return None,
        };
        let g = gcd(n.abs(), d.abs()).max(1);
        let s = if d < 0 { -1 } else { 1 };
        Some((s * n / g, s * d / g))
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `n` or `n/d`.
pub fn fraction_text((n, d): (i64, i64)) -> String {
    if d == 1 {
        n.to_string()
    } else {
        format!("{n}/{d}")
    }
}

/// Decimal text when the fraction terminates within six places, else `n/d`.
pub fn decimal_text((n, d): (i64, i64)) -> String {
    let mut dd = d;
    for p in [2, 5] {
        while dd % p == 0 {
            dd /= p;
        }
    }
    if dd != 1 {
        return fraction_text((n, d));
    }
    let v = n as f64 / d as f64;
    let s = format!("{v:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn arith_question(a_word: &str, op: ArithOp, b_word: &str) -> String {
    format!("What is {a_word} {} {b_word}?", op.word())
}

/// Operand values and operator of an arithmetic question about screen
/// labels of the form `word N`.
pub fn parse_arith(screen: &Screen, question: &str) -> Option<(i64, ArithOp, i64)> {
    let words = tokenize(question);
    let op = ArithOp::ALL.into_iter().find(|op| words.iter().any(|w| w == op.word().split(' ').next().unwrap_or("")))?;
    let value_of = |w: &str| -> Option<i64> {
        screen.elements.iter().find_map(|e| {
            let (word, num) = e.label.split_once(' ')?;
            (word == w).then(|| num.parse().ok()).flatten()
        })
    };
    let values: Vec<i64> = words.iter().filter_map(|w| value_of(w).or_else(|| w.parse().ok())).collect();
    match values.as_slice() {
        [a, b, ..] => Some((*a, op, *b)),
        _ => None,
    }
}

fn other_candidates(screen: &Screen, question: &str) -> CandidateSet {
    let Some((a, op, b)) = parse_arith(screen, question) else {
        return CandidateSet::default();
    };
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut push = |text: String, op_match: bool, operand: bool| {
        if candidates.iter().any(|c| c.output == Output::Answer(text.clone())) {
            return;
        }
        let mut f = vec![0.0; FEATURE_DIM];
        f[Feature::ArithOpMatch as usize] = if op_match { 1.0 } else { 0.0 };
        f[Feature::ArithOperand as usize] = if operand { 1.0 } else { 0.0 };
        candidates.push(Candidate { text: render::answer(question, &text), output: Output::Answer(text), features: f });
    };
    for o in ArithOp::ALL {
        if let Some(v) = o.apply(a, b) {
            push(fraction_text(v), o == op, false);
        }
    }
    push(a.to_string(), false, true);
    push(b.to_string(), false, true);
    CandidateSet { candidates }
}
