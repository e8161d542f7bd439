use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::{
    Action, Canvas, Element, ElementId, ElementKind, Rect, Screen, ScreenId, StepSpec, Task,
    TaskId, World, CANVAS_SIZE,
};
use crate::error::{Error, Result};
use crate::text::{
    FIELD_WORDS, NAV_WORDS, NOISE_WORDS, QUERY_WORDS, RECOVERY_SUBGOAL, VALUE_WORDS,
};

const GRID_COLS: i32 = 4;
const GRID_ROWS: i32 = 5;
const MAX_TASK_STEPS: usize = 8;
const TYPE_SCREEN_RATE: f64 = 0.2;
/// Chance that a screen also shows the next screen's forward label on a
/// wrong element, so the goal alone does not identify the target.
const LOOKAHEAD_DECOY_RATE: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldParams {
    pub n_screens: usize,
    pub n_tasks: usize,
    pub min_elements: usize,
    pub max_elements: usize,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self { n_screens: 10, n_tasks: 5, min_elements: 4, max_elements: 8 }
    }
}

impl WorldParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_screens < 2 {
            return Err(Error::Config("at least two screens are required".into()));
        }
        if self.n_tasks < 1 {
            return Err(Error::Config("at least one task is required".into()));
        }
        if self.min_elements < 2 || self.max_elements > 20 || self.min_elements > self.max_elements
        {
            return Err(Error::Config(format!(
                "element range {}..={} must lie within 2..=20",
                self.min_elements, self.max_elements
            )));
        }
        Ok(())
    }
}

/// How an application screen moves the user forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Forward {
    Click { element: ElementId, to: ScreenId },
    Submit { field: ElementId, to: ScreenId },
    Terminal,
}

struct AppScreen {
    screen: Screen,
    forward: Forward,
}

/// Generate a world deterministically from `seed`.
///
/// Application screens form a forward DAG: each non-terminal screen has one
/// way forward (a click target or a submitted text field), every other
/// element routes to that screen's private distractor screen. Tasks are
/// paths through the DAG, 2–8 steps long.
pub fn generate_world(seed: u64, params: WorldParams) -> Result<World> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.n_screens;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    // forward target by application screen index
    let mut next: Vec<Option<usize>> = vec![None; n];
    for pos in 0..n - 1 {
        let hi = (pos + 3).min(n - 1);
        next[order[pos]] = Some(order[rng.gen_range(pos + 1..=hi)]);
    }

    let mut apps = Vec::with_capacity(n);
    for i in 0..n {
        let submit = next[i].is_some() && rng.gen_bool(TYPE_SCREEN_RATE);
        apps.push(app_screen(&mut rng, &params, i, next[i], submit));
    }
    for i in 0..n {
        let Some(j) = next[i] else { continue };
        if !rng.gen_bool(LOOKAHEAD_DECOY_RATE) {
            continue;
        }
        let Some(label) = forward_label(&apps[j]) else { continue };
        let own = forward_element(&apps[i]);
        let screen = &apps[i].screen;
        if screen.elements.iter().any(|e| e.label == label) {
            continue;
        }
        let slots: Vec<usize> = (0..screen.elements.len())
            .filter(|&k| Some(screen.elements[k].id) != own && screen.elements[k].kind != ElementKind::Label)
            .collect();
        if let Some(&k) = slots.choose(&mut rng) {
            apps[i].screen.elements[k].label = label;
        }
    }

    let mut screens = BTreeMap::new();
    let mut transitions = BTreeMap::new();
    let mut submit = BTreeMap::new();
    let mut distractor_of = BTreeMap::new();
    for (i, app) in apps.iter().enumerate() {
        let id = app.screen.id;
        let distractor = noise_screen(&mut rng, &params, ScreenId((n + i) as u32));
        for e in &app.screen.elements {
            let to = match app.forward {
                Forward::Click { element, to } if element == e.id => to,
                _ => distractor.id,
            };
            transitions.insert((id, e.id), to);
        }
        if let Forward::Submit { to, .. } = app.forward {
            submit.insert(id, to);
        }
        for e in &distractor.elements {
            transitions.insert((distractor.id, e.id), distractor.id);
        }
        distractor_of.insert(id, distractor.id);
        screens.insert(distractor.id, distractor);
    }
    for app in &apps {
        screens.insert(app.screen.id, app.screen.clone());
    }

    let mut tasks = Vec::with_capacity(params.n_tasks);
    let mut seen = BTreeSet::new();
    for t in 0..params.n_tasks {
        let mut task = None;
        for _attempt in 0..64 {
            let candidate = make_task(&mut rng, &apps, &next, TaskId(t as u32));
            let key = (candidate.steps[0].screen_id, candidate.steps.len(), candidate.goal.clone());
            task = Some(candidate);
            if seen.insert(key) {
                break;
            }
        }
        tasks.push(task.expect("at least one attempt"));
    }

    let world = World {
        seed,
        params,
        canvas: Canvas { width: CANVAS_SIZE, height: CANVAS_SIZE },
        screens,
        transitions,
        submit,
        distractor_of,
        tasks,
    };
    world.validate()?;
    Ok(world)
}

fn layout(rng: &mut ChaCha8Rng, count: usize) -> Vec<Rect> {
    let cell_w = CANVAS_SIZE / GRID_COLS;
    let cell_h = CANVAS_SIZE / GRID_ROWS;
    let mut cells: Vec<i32> = (0..GRID_COLS * GRID_ROWS).collect();
    cells.shuffle(rng);
    cells.truncate(count);
    cells.sort_unstable();
    cells
        .into_iter()
        .map(|c| {
            let (x0, y0) = ((c % GRID_COLS) * cell_w, (c / GRID_COLS) * cell_h);
            Rect::new(
                x0 + rng.gen_range(4..40),
                y0 + rng.gen_range(4..40),
                x0 + cell_w - rng.gen_range(4..40),
                y0 + cell_h - rng.gen_range(4..40),
            )
        })
        .collect()
}

fn pick_distinct<'a>(rng: &mut ChaCha8Rng, words: &[&'a str], count: usize) -> Vec<&'a str> {
    words.choose_multiple(rng, count).copied().collect()
}

fn value_label(rng: &mut ChaCha8Rng, word: &str) -> String {
    format!("{word} {}", rng.gen_range(1..100))
}

fn app_screen(
    rng: &mut ChaCha8Rng,
    params: &WorldParams,
    index: usize,
    next: Option<usize>,
    submit: bool,
) -> AppScreen {
    let id = ScreenId(index as u32);
    let count = rng.gen_range(params.min_elements..=params.max_elements);
    let boxes = layout(rng, count);
    let mut nav = pick_distinct(rng, NAV_WORDS, count).into_iter();
    let mut values = pick_distinct(rng, VALUE_WORDS, count).into_iter();

    // slot 0 moves forward (if anything does), slot 1 is a value label
    let mut specs: Vec<(ElementKind, String)> = Vec::with_capacity(count);
    let forward_kind = match (next, submit) {
        (Some(_), true) => Some(ElementKind::TextField),
        (Some(_), false) => Some(if rng.gen_bool(0.5) { ElementKind::Button } else { ElementKind::Icon }),
        (None, _) => None,
    };
    if let Some(kind) = forward_kind {
        let label = if kind == ElementKind::TextField {
            FIELD_WORDS.choose(rng).expect("non-empty").to_string()
        } else {
            nav.next().expect("vocabulary large enough").to_string()
        };
        specs.push((kind, label));
    }
    specs.push((ElementKind::Label, value_label(rng, values.next().expect("vocabulary"))));
    while specs.len() < count {
        if rng.gen_bool(0.25) {
            specs.push((ElementKind::Label, value_label(rng, values.next().expect("vocabulary"))));
        } else {
            let kind = if rng.gen_bool(0.6) { ElementKind::Button } else { ElementKind::Icon };
            specs.push((kind, nav.next().expect("vocabulary").to_string()));
        }
    }

    let mut slots: Vec<usize> = (0..count).collect();
    slots.shuffle(rng);
    let elements: Vec<Element> = slots
        .iter()
        .zip(boxes)
        .enumerate()
        .map(|(pos, (&slot, bbox))| Element {
            id: ElementId(pos as u32),
            kind: specs[slot].0,
            label: specs[slot].1.clone(),
            bbox,
        })
        .collect();
    let forward_id = slots.iter().position(|&s| s == 0).map(|p| ElementId(p as u32));

    let forward = match (next, forward_kind, forward_id) {
        (Some(to), Some(ElementKind::TextField), Some(field)) => {
            Forward::Submit { field, to: ScreenId(to as u32) }
        }
        (Some(to), Some(_), Some(element)) => Forward::Click { element, to: ScreenId(to as u32) },
        _ => Forward::Terminal,
    };
    AppScreen { screen: Screen { id, elements }, forward }
}

fn forward_element(app: &AppScreen) -> Option<ElementId> {
    match app.forward {
        Forward::Click { element, .. } | Forward::Submit { field: element, .. } => Some(element),
        Forward::Terminal => None,
    }
}

fn forward_label(app: &AppScreen) -> Option<String> {
    match app.forward {
        Forward::Click { element, .. } => app.screen.element(element).map(|e| e.label.clone()),
        _ => None,
    }
}

fn noise_screen(rng: &mut ChaCha8Rng, params: &WorldParams, id: ScreenId) -> Screen {
    let count = rng.gen_range(params.min_elements..=params.max_elements);
    let boxes = layout(rng, count);
    let words = pick_distinct(rng, NOISE_WORDS, count);
    let elements = boxes
        .into_iter()
        .zip(words)
        .enumerate()
        .map(|(i, (bbox, w))| Element {
            id: ElementId(i as u32),
            kind: if rng.gen_bool(0.5) { ElementKind::Button } else { ElementKind::Icon },
            label: w.to_string(),
            bbox,
        })
        .collect();
    Screen { id, elements }
}

struct Draft {
    screen: ScreenId,
    action: Action,
    target: ElementId,
    subgoal: String,
    clause: String,
    vocab: Vec<String>,
}

fn click_subgoal(rng: &mut ChaCha8Rng, label: &str) -> String {
    match rng.gen_range(0..4) {
        0 => format!("open {label}"),
        1 => format!("tap the {label} button"),
        2 => format!("go to the {label} page"),
        _ => format!("select {label}"),
    }
}

fn make_task(rng: &mut ChaCha8Rng, apps: &[AppScreen], next: &[Option<usize>], id: TaskId) -> Task {
    let starts: Vec<usize> = (0..apps.len()).filter(|&i| next[i].is_some()).collect();
    let start = *starts.choose(rng).expect("the forward DAG has at least one edge");
    let mut path = vec![start];
    while path.len() < MAX_TASK_STEPS {
        match next[*path.last().expect("non-empty")] {
            Some(n) => path.push(n),
            None => break,
        }
    }

    // Ending on a screen without a forward click makes the last step a read.
    let answer_ends: Vec<usize> = (1..path.len())
        .filter(|&i| !matches!(apps[path[i]].forward, Forward::Click { .. }))
        .collect();
    let len = match answer_ends.choose(rng) {
        Some(&i) if rng.gen_bool(0.5) => i + 1,
        _ => rng.gen_range(2..=path.len()),
    };
    path.truncate(len);

    let mut drafts = Vec::with_capacity(len);
    for (i, &s) in path.iter().enumerate() {
        let app = &apps[s];
        let last = i + 1 == len;
        let draft = match app.forward {
            Forward::Click { element, .. } => {
                let e = app.screen.element(element).expect("forward element exists");
                Draft {
                    screen: app.screen.id,
                    action: Action::Click(e.bbox.center()),
                    target: element,
                    subgoal: click_subgoal(rng, &e.label),
                    clause: e.label.clone(),
                    vocab: Vec::new(),
                }
            }
            Forward::Submit { field, .. } if !last => {
                let e = app.screen.element(field).expect("field exists");
                let mut queries = pick_distinct(rng, QUERY_WORDS, 3);
                let query = queries[0].to_string();
                queries.shuffle(rng);
                Draft {
                    screen: app.screen.id,
                    action: Action::Type(query.clone()),
                    target: field,
                    subgoal: format!("type {query} in the {} field", e.label),
                    clause: format!("search {query}"),
                    vocab: queries.into_iter().map(String::from).collect(),
                }
            }
            _ => {
                let labels: Vec<&Element> =
                    app.screen.elements.iter().filter(|e| e.kind == ElementKind::Label).collect();
                let e = *labels.choose(rng).expect("every screen has a value label");
                let word = e.label.split(' ').next().expect("value labels have a word");
                let mut vocab: Vec<String> = labels.iter().map(|l| l.label.clone()).collect();
                let taken: BTreeSet<&str> =
                    labels.iter().filter_map(|l| l.label.split(' ').next()).collect();
                let decoy = VALUE_WORDS
                    .iter()
                    .filter(|w| !taken.contains(**w))
                    .collect::<Vec<_>>()
                    .choose(rng)
                    .map(|w| value_label(rng, w));
                vocab.extend(decoy);
                vocab.shuffle(rng);
                Draft {
                    screen: app.screen.id,
                    action: Action::Answer(e.label.clone()),
                    target: e.id,
                    subgoal: format!("read the {word} value"),
                    clause: format!("read {word}"),
                    vocab,
                }
            }
        };
        drafts.push(draft);
    }

    let goal = format!(
        "Go to {}",
        drafts.iter().map(|d| d.clause.as_str()).collect::<Vec<_>>().join(", then ")
    );
    let all_subgoals: Vec<String> = drafts.iter().map(|d| d.subgoal.clone()).collect();

    let steps = drafts
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let screen = &apps[path[i]].screen;
            let size = rng.gen_range(4..=8);
            let mut cands: Vec<String> = vec![d.subgoal.clone(), RECOVERY_SUBGOAL.to_string()];
            let mut others: Vec<&String> =
                all_subgoals.iter().filter(|s| **s != d.subgoal).collect();
            others.shuffle(rng);
            for s in others.into_iter().take(3) {
                if cands.len() < size && !cands.contains(s) {
                    cands.push(s.clone());
                }
            }
            let mut decoy_labels: Vec<&str> = screen
                .elements
                .iter()
                .filter(|e| e.id != d.target && e.kind != ElementKind::Label)
                .map(|e| e.label.as_str())
                .collect();
            decoy_labels.shuffle(rng);
            let mut fallback = pick_distinct(rng, NAV_WORDS, 8).into_iter();
            while cands.len() < size {
                let label = decoy_labels.pop().or_else(|| fallback.next()).expect("vocabulary");
                let s = click_subgoal(rng, label);
                if !cands.contains(&s) {
                    cands.push(s);
                }
            }
            cands.shuffle(rng);
            StepSpec {
                screen_id: d.screen,
                subgoal: d.subgoal.clone(),
                gt_action: d.action.clone(),
                target: d.target,
                subgoal_candidates: cands,
                text_vocab: d.vocab.clone(),
            }
        })
        .collect();

    Task { id, goal, steps }
}
