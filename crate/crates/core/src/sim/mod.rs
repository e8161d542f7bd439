//! Deterministic simulated GUI: screens, elements, tasks and the transition
//! engine that agents act in.

mod env;
mod episodes;
mod generate;
mod spatial;

pub use env::{replay, reset, step, EnvState, Frame};
pub use episodes::{load_episodes, load_records, save_episodes, save_records, StepRecord};
pub use generate::{generate_world, WorldParams};
pub use spatial::{parse_spatial_description, render_spatial_description, SpatialLine};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side length of the square logical canvas, in pixels.
pub const CANVAS_SIZE: i32 = 1000;

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(ScreenId, "s");
id_type!(ElementId, "e");
id_type!(TaskId, "t");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

/// Integer pixel rectangle. Containment is boundary-inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: i32,
    pub y_min: i32,
    pub x_max: i32,
    pub y_max: i32,
}

impl Rect {
    pub const fn new(x_min: i32, y_min: i32, x_max: i32, y_max: i32) -> Self {
        Self { x_min, y_min, x_max, y_max }
    }

    pub fn is_valid(&self) -> bool {
        self.x_min < self.x_max && self.y_min < self.y_max
    }

    pub fn width(&self) -> i32 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> i32 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        f64::from(self.width().max(0)) * f64::from(self.height().max(0))
    }

    pub fn center(&self) -> Point {
        Point::new((self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn within_canvas(&self) -> bool {
        self.x_min >= 0 && self.y_min >= 0 && self.x_max <= CANVAS_SIZE && self.y_max <= CANVAS_SIZE
    }

    /// Intersection over union; 0 for disjoint or degenerate boxes.
    pub fn iou(&self, other: &Rect) -> f64 {
        let ix = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0);
        let iy = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0);
        let inter = f64::from(ix) * f64::from(iy);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Button,
    TextField,
    Icon,
    Label,
}

impl ElementKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ElementKind::Button => "button",
            ElementKind::TextField => "text_field",
            ElementKind::Icon => "icon",
            ElementKind::Label => "label",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "button" => ElementKind::Button,
            "text_field" => ElementKind::TextField,
            "icon" => ElementKind::Icon,
            "label" => ElementKind::Label,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub id: ElementId,
    pub kind: ElementKind,
    pub label: String,
    pub bbox: Rect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Screen {
    pub id: ScreenId,
    pub elements: Vec<Element>,
}

impl Screen {
    /// First element (in element order) whose box contains `p`.
    pub fn element_at(&self, p: Point) -> Option<&Element> {
        self.elements.iter().find(|e| e.bbox.contains(p))
    }

    pub fn element(&self, id: ElementId) -> Option<&Element> {
        self.elements.iter().find(|e| e.id == id)
    }

    pub fn text_field(&self) -> Option<&Element> {
        self.elements.iter().find(|e| e.kind == ElementKind::TextField)
    }

    /// Checks the element invariants: valid in-canvas boxes, unique ids,
    /// pairwise distinct boxes, at least one element.
    pub fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::Config(format!("screen {} has no elements", self.id)));
        }
        for (i, e) in self.elements.iter().enumerate() {
            if !e.bbox.is_valid() || !e.bbox.within_canvas() {
                return Err(Error::Config(format!("element {} on {} has a bad box", e.id, self.id)));
            }
            for other in &self.elements[..i] {
                if other.id == e.id || other.bbox == e.bbox {
                    return Err(Error::Config(format!(
                        "duplicate element {} on screen {}",
                        e.id, self.id
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Click,
    Type,
    Back,
    Answer,
}

impl ActionKind {
    pub const ALL: [ActionKind; 4] =
        [ActionKind::Click, ActionKind::Type, ActionKind::Back, ActionKind::Answer];

    pub fn as_str(&self) -> &'static str {
        match self {
            ActionKind::Click => "click",
            ActionKind::Type => "type",
            ActionKind::Back => "back",
            ActionKind::Answer => "answer",
        }
    }
}

/// An agent action. Serialized as `{"kind":…, "point":[x,y]?, "text":…?}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ActionRepr", into = "ActionRepr")]
pub enum Action {
    Click(Point),
    Type(String),
    Back,
    Answer(String),
}

impl Action {
    pub fn click(x: i32, y: i32) -> Self {
        Action::Click(Point::new(x, y))
    }

    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Click(_) => ActionKind::Click,
            Action::Type(_) => ActionKind::Type,
            Action::Back => ActionKind::Back,
            Action::Answer(_) => ActionKind::Answer,
        }
    }

    pub fn point(&self) -> Option<Point> {
        match self {
            Action::Click(p) => Some(*p),
            _ => None,
        }
    }

    pub fn text(&self) -> Option<&str> {
        match self {
            Action::Type(t) | Action::Answer(t) => Some(t),
            _ => None,
        }
    }

    /// Build from the loose field representation, enforcing the
    /// per-kind parameter rules.
    pub fn from_parts(kind: ActionKind, point: Option<Point>, text: Option<String>) -> Result<Self> {
        match (kind, point, text) {
            (ActionKind::Click, Some(p), None) => Ok(Action::Click(p)),
            (ActionKind::Type, None, Some(t)) => Ok(Action::Type(t)),
            (ActionKind::Answer, None, Some(t)) => Ok(Action::Answer(t)),
            (ActionKind::Back, None, None) => Ok(Action::Back),
            (kind, point, text) => Err(Error::MalformedAction(format!(
                "{} with point={point:?} text={text:?}",
                kind.as_str()
            ))),
        }
    }
}

impl fmt::Display for Action {
    /// The textual form agents emit after their reasoning block.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Click(p) => write!(f, "click({}, {})", p.x, p.y),
            Action::Type(t) => write!(f, "type({t})"),
            Action::Back => write!(f, "back()"),
            Action::Answer(t) => write!(f, "answer({t})"),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ActionRepr {
    kind: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    point: Option<[i32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
}

impl TryFrom<ActionRepr> for Action {
    type Error = Error;

    fn try_from(r: ActionRepr) -> Result<Self> {
        Action::from_parts(r.kind, r.point.map(|[x, y]| Point::new(x, y)), r.text)
    }
}

impl From<Action> for ActionRepr {
    fn from(a: Action) -> Self {
        let kind = a.kind();
        match a {
            Action::Click(p) => ActionRepr { kind, point: Some([p.x, p.y]), text: None },
            Action::Type(t) | Action::Answer(t) => ActionRepr { kind, point: None, text: Some(t) },
            Action::Back => ActionRepr { kind, point: None, text: None },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSpec {
    pub screen_id: ScreenId,
    pub subgoal: String,
    pub gt_action: Action,
    /// Element the ground-truth action acts on (click target, typed field or
    /// the label being read).
    pub target: ElementId,
    pub subgoal_candidates: Vec<String>,
    /// Texts the agent may type or answer at this step.
    #[serde(default)]
    pub text_vocab: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub goal: String,
    pub steps: Vec<StepSpec>,
}

/// Reference to one step of one task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StepRef {
    pub task_id: TaskId,
    pub step_index: usize,
}

impl fmt::Display for StepRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.task_id, self.step_index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub screen: ScreenId,
    pub element: ElementId,
    pub target: ScreenId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: i32,
    pub height: i32,
}

/// The whole simulated application. Immutable after generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub seed: u64,
    pub params: WorldParams,
    pub canvas: Canvas,
    pub screens: BTreeMap<ScreenId, Screen>,
    #[serde(with = "transition_list")]
    pub transitions: BTreeMap<(ScreenId, ElementId), ScreenId>,
    /// Screens that advance by typing into their text field, and where the
    /// submission leads.
    pub submit: BTreeMap<ScreenId, ScreenId>,
    /// Error screen reached by a wrong click on each application screen.
    pub distractor_of: BTreeMap<ScreenId, ScreenId>,
    pub tasks: Vec<Task>,
}

mod transition_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &BTreeMap<(ScreenId, ElementId), ScreenId>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let list: Vec<Transition> = map
            .iter()
            .map(|(&(screen, element), &target)| Transition { screen, element, target })
            .collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BTreeMap<(ScreenId, ElementId), ScreenId>, D::Error> {
        let list = Vec::<Transition>::deserialize(d)?;
        Ok(list.into_iter().map(|t| ((t.screen, t.element), t.target)).collect())
    }
}

impl World {
    pub fn screen(&self, id: ScreenId) -> Result<&Screen> {
        self.screens.get(&id).ok_or(Error::UnknownScreen(id))
    }

    pub fn task(&self, id: TaskId) -> Result<&Task> {
        self.tasks.iter().find(|t| t.id == id).ok_or(Error::UnknownTask(id))
    }

    pub fn step_spec(&self, r: StepRef) -> Result<&StepSpec> {
        self.task(r.task_id)?
            .steps
            .get(r.step_index)
            .ok_or(Error::UnknownStep { task: r.task_id, step: r.step_index })
    }

    pub fn is_distractor(&self, id: ScreenId) -> bool {
        self.distractor_of.values().any(|&d| d == id)
    }

    /// Every step of every task, in task order.
    pub fn step_refs(&self) -> Vec<StepRef> {
        self.tasks
            .iter()
            .flat_map(|t| {
                (0..t.steps.len()).map(move |i| StepRef { task_id: t.id, step_index: i })
            })
            .collect()
    }

    /// Deterministic split into (train, held-out) task ids; the last
    /// `ceil(fraction * n)` tasks are held out.
    pub fn split_tasks(&self, holdout_fraction: f64) -> (Vec<TaskId>, Vec<TaskId>) {
        let n = self.tasks.len();
        let held = ((holdout_fraction.clamp(0.0, 1.0) * n as f64).ceil() as usize).min(n);
        let ids: Vec<TaskId> = self.tasks.iter().map(|t| t.id).collect();
        let (a, b) = ids.split_at(n - held);
        (a.to_vec(), b.to_vec())
    }

    /// Bounding box of the element the step's ground-truth action targets.
    pub fn target_bbox(&self, r: StepRef) -> Result<Rect> {
        let spec = self.step_spec(r)?;
        let screen = self.screen(spec.screen_id)?;
        screen
            .element(spec.target)
            .map(|e| e.bbox)
            .ok_or_else(|| Error::Config(format!("step {r} targets a missing element")))
    }

    /// Ground-truth history before step `r`.
    pub fn gt_history(&self, r: StepRef) -> Result<Vec<Action>> {
        let task = self.task(r.task_id)?;
        Ok(task.steps[..r.step_index.min(task.steps.len())]
            .iter()
            .map(|s| s.gt_action.clone())
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let w: World = serde_json::from_str(s)?;
        w.validate()?;
        Ok(w)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks the structural invariants: valid screens, a transition for
    /// every element, and ground-truth chains that follow the table.
    pub fn validate(&self) -> Result<()> {
        for screen in self.screens.values() {
            screen.validate()?;
            for e in &screen.elements {
                if !self.transitions.contains_key(&(screen.id, e.id)) {
                    return Err(Error::Config(format!("no transition for {}/{}", screen.id, e.id)));
                }
            }
        }
        for task in &self.tasks {
            if task.steps.is_empty() {
                return Err(Error::Config(format!("task {} has no steps", task.id)));
            }
            for (i, spec) in task.steps.iter().enumerate() {
                let screen = self.screen(spec.screen_id)?;
                if screen.element(spec.target).is_none() {
                    return Err(Error::Config(format!("task {} step {i} target missing", task.id)));
                }
                if spec.subgoal_candidates.iter().filter(|c| **c == spec.subgoal).count() != 1 {
                    return Err(Error::Config(format!(
                        "task {} step {i}: sub-goal must appear once among candidates",
                        task.id
                    )));
                }
                if let Some(next) = task.steps.get(i + 1) {
                    let reached = match &spec.gt_action {
                        Action::Click(_) => self.transitions.get(&(spec.screen_id, spec.target)),
                        Action::Type(_) => self.submit.get(&spec.screen_id),
                        _ => None,
                    };
                    if reached != Some(&next.screen_id) {
                        return Err(Error::Config(format!(
                            "task {} step {i} does not lead to step {}",
                            task.id,
                            i + 1
                        )));
                    }
                }
            }
            let last = task.steps.last().map(|s| s.gt_action.kind());
            if !matches!(last, Some(ActionKind::Answer | ActionKind::Click)) {
                return Err(Error::Config(format!("task {} ends with {last:?}", task.id)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_json_shape() {
        let a = Action::click(3, 4);
        assert_eq!(serde_json::to_string(&a).unwrap(), r#"{"kind":"click","point":[3,4]}"#);
        let t = Action::Type("hi".into());
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"{"kind":"type","text":"hi"}"#);
        assert_eq!(serde_json::to_string(&Action::Back).unwrap(), r#"{"kind":"back"}"#);
    }

    #[test]
    fn action_invariants_enforced_on_load() {
        assert!(serde_json::from_str::<Action>(r#"{"kind":"click"}"#).is_err());
        assert!(serde_json::from_str::<Action>(r#"{"kind":"back","text":"x"}"#).is_err());
        assert!(serde_json::from_str::<Action>(r#"{"kind":"type","point":[1,2],"text":"x"}"#).is_err());
        assert_eq!(
            serde_json::from_str::<Action>(r#"{"kind":"answer","text":"42"}"#).unwrap(),
            Action::Answer("42".into())
        );
    }

    #[test]
    fn rect_geometry() {
        let r = Rect::new(10, 10, 50, 30);
        assert_eq!(r.center(), Point::new(30, 20));
        assert_eq!((r.width(), r.height()), (40, 20));
        assert!(r.contains(Point::new(10, 10)));
        assert!(r.contains(Point::new(50, 30)));
        assert!(!r.contains(Point::new(9, 20)));
        assert_eq!(r.iou(&r), 1.0);
        assert_eq!(r.iou(&Rect::new(60, 60, 70, 70)), 0.0);
    }
}
