//! Generate a world, walk one task with its reference actions, and show a
//! wrong click followed by `back`.

use gui_reasoner::sim::{generate_world, render_spatial_description, reset, step, Action, WorldParams};

fn main() -> gui_reasoner::Result<()> {
    let world = generate_world(7, WorldParams::default())?;
    println!("{} screens, {} tasks", world.screens.len(), world.tasks.len());

    let task = &world.tasks[0];
    println!("goal: {}", task.goal);
    let mut state = reset(&world, task.id)?;
    for spec in &task.steps {
        println!("  screen {:>3}  sub-goal: {:<40} action: {}", state.screen, spec.subgoal, spec.gt_action);
        state = step(&world, &state, &spec.gt_action)?;
    }
    println!("finished: {}", state.finished);

    let first = &task.steps[0];
    let screen = world.screen(first.screen_id)?;
    println!("\nspatial description of screen {}:\n{}", first.screen_id, render_spatial_description(screen));

    let target = world.target_bbox(gui_reasoner::sim::StepRef { task_id: task.id, step_index: 0 })?;
    if let Some(wrong) = screen.elements.iter().find(|e| e.bbox != target) {
        let s0 = reset(&world, task.id)?;
        let c = wrong.bbox.center();
        let err = step(&world, &s0, &Action::click(c.x, c.y))?;
        let back = step(&world, &err, &Action::Back)?;
        println!("wrong click on '{}' -> screen {}, back -> screen {}", wrong.label, err.screen, back.screen);
    }
    Ok(())
}
