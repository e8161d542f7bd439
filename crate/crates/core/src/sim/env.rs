use serde::{Deserialize, Serialize};

use super::{Action, ScreenId, TaskId, World, CANVAS_SIZE};
use crate::error::{Error, Result};

/// A screen pushed by a transition, restored by `back`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub screen: ScreenId,
    pub step_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvState {
    pub task_id: TaskId,
    pub screen: ScreenId,
    pub step_index: usize,
    pub stack: Vec<Frame>,
    pub history: Vec<Action>,
    pub finished: bool,
}

impl EnvState {
    /// True while the agent sits on the screen its current step expects.
    pub fn on_track(&self, world: &World) -> bool {
        !self.finished
            && world
                .task(self.task_id)
                .ok()
                .and_then(|t| t.steps.get(self.step_index))
                .is_some_and(|s| s.screen_id == self.screen)
    }
}

pub fn reset(world: &World, task_id: TaskId) -> Result<EnvState> {
    let task = world.task(task_id)?;
    Ok(EnvState {
        task_id,
        screen: task.steps[0].screen_id,
        step_index: 0,
        stack: Vec::new(),
        history: Vec::new(),
        finished: false,
    })
}

fn check_action(action: &Action) -> Result<()> {
    match action {
        Action::Click(p) if !(0..=CANVAS_SIZE).contains(&p.x) || !(0..=CANVAS_SIZE).contains(&p.y) => {
            Err(Error::MalformedAction(format!("click at ({}, {}) is off canvas", p.x, p.y)))
        }
        Action::Type(t) | Action::Answer(t) if t.trim().is_empty() => {
            Err(Error::MalformedAction("empty text".into()))
        }
        _ => Ok(()),
    }
}

/// Apply one action. Pure: the input state is left untouched.
///
/// Clicks follow the transition table and push the current screen; only the
/// step's own target advances the step index. Typing or answering the
/// expected text advances; other text is a no-op. `back` pops the stack and
/// is a no-op on the root screen.
pub fn step(world: &World, state: &EnvState, action: &Action) -> Result<EnvState> {
    if state.finished {
        return Err(Error::TaskFinished);
    }
    check_action(action)?;
    let task = world.task(state.task_id)?;
    let spec = task.steps.get(state.step_index);
    let on_track = state.on_track(world);
    let mut next = state.clone();
    next.history.push(action.clone());

    let frame = Frame { screen: state.screen, step_index: state.step_index };
    let advance = |next: &mut EnvState| {
        next.step_index += 1;
        next.finished = next.step_index == task.steps.len();
    };

    match action {
        Action::Click(p) => {
            let screen = world.screen(state.screen)?;
            if let Some(e) = screen.element_at(*p) {
                let to = *world
                    .transitions
                    .get(&(screen.id, e.id))
                    .ok_or_else(|| Error::Config(format!("no transition for {}/{}", screen.id, e.id)))?;
                next.stack.push(frame);
                next.screen = to;
                if on_track && spec.is_some_and(|s| s.target == e.id && matches!(s.gt_action, Action::Click(_))) {
                    advance(&mut next);
                }
            }
        }
        Action::Type(text) => {
            if let (true, Some(s)) = (on_track, spec) {
                if let Action::Type(expected) = &s.gt_action {
                    if expected.trim() == text.trim() {
                        let to = *world
                            .submit
                            .get(&state.screen)
                            .ok_or_else(|| Error::Config(format!("{} has no submit", state.screen)))?;
                        next.stack.push(frame);
                        next.screen = to;
                        advance(&mut next);
                    }
                }
            }
        }
        Action::Answer(text) => {
            if let (true, Some(Action::Answer(expected))) = (on_track, spec.map(|s| &s.gt_action)) {
                if expected.trim() == text.trim() {
                    advance(&mut next);
                }
            }
        }
        Action::Back => {
            if let Some(f) = next.stack.pop() {
                next.screen = f.screen;
                next.step_index = f.step_index;
            }
        }
    }
    Ok(next)
}

/// Reset and apply `history` in order.
pub fn replay(world: &World, task_id: TaskId, history: &[Action]) -> Result<EnvState> {
    history.iter().try_fold(reset(world, task_id)?, |s, a| step(world, &s, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_world, WorldParams};

    fn world() -> World {
        generate_world(7, WorldParams::default()).unwrap()
    }

    #[test]
    fn reset_starts_at_first_screen() {
        let w = world();
        let t = &w.tasks[0];
        let s = reset(&w, t.id).unwrap();
        assert_eq!(s.screen, t.steps[0].screen_id);
        assert!(s.history.is_empty() && s.stack.is_empty());
        assert_eq!(s.step_index, 0);
        assert!(matches!(reset(&w, TaskId(999)), Err(Error::UnknownTask(_))));
    }

    #[test]
    fn gt_chain_reaches_the_end() {
        let w = world();
        for t in &w.tasks {
            let mut s = reset(&w, t.id).unwrap();
            for (i, spec) in t.steps.iter().enumerate() {
                assert_eq!(s.screen, spec.screen_id);
                assert_eq!(s.step_index, i);
                s = step(&w, &s, &spec.gt_action).unwrap();
            }
            assert!(s.finished);
            assert_eq!(s.history.len(), t.steps.len());
            assert!(matches!(step(&w, &s, &Action::Back), Err(Error::TaskFinished)));
        }
    }

    #[test]
    fn wrong_click_then_back_restores_screen() {
        let w = world();
        let t = &w.tasks[0];
        let spec = &t.steps[0];
        let s0 = reset(&w, t.id).unwrap();
        let wrong = w
            .screen(spec.screen_id)
            .unwrap()
            .elements
            .iter()
            .find(|e| e.id != spec.target)
            .unwrap();
        let err = Action::Click(wrong.bbox.center());
        let s1 = step(&w, &s0, &err).unwrap();
        assert_ne!(s1.screen, s0.screen);
        let s2 = step(&w, &s1, &Action::Back).unwrap();
        assert_eq!(s2.screen, s0.screen);
        assert_eq!(s2.history, vec![err, Action::Back]);
        assert!(s2.on_track(&w));
    }

    #[test]
    fn click_on_empty_space_is_a_no_op() {
        let w = world();
        let s0 = reset(&w, w.tasks[0].id).unwrap();
        // cell gutters are never covered
        let s1 = step(&w, &s0, &Action::click(0, 0)).unwrap();
        assert_eq!(s1.screen, s0.screen);
        assert_eq!(s1.history.len(), 1);
    }

    #[test]
    fn back_on_root_is_a_no_op() {
        let w = world();
        let s0 = reset(&w, w.tasks[0].id).unwrap();
        let s1 = step(&w, &s0, &Action::Back).unwrap();
        assert_eq!(s1.screen, s0.screen);
        assert_eq!(s1.step_index, 0);
    }

    #[test]
    fn malformed_actions_rejected() {
        let w = world();
        let s0 = reset(&w, w.tasks[0].id).unwrap();
        assert!(matches!(step(&w, &s0, &Action::click(-1, 5)), Err(Error::MalformedAction(_))));
        assert!(matches!(step(&w, &s0, &Action::Type("  ".into())), Err(Error::MalformedAction(_))));
    }
}
