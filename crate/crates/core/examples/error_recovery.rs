//! Prone-to-error steps and the escape / back-on-track scenarios built
//! from them, checked by replaying each history through the simulator.

use gui_reasoner::pipeline;
use gui_reasoner::policy::Policy;
use gui_reasoner::scenario::{replays_to_observation, ScenarioKind};
use gui_reasoner::sim::generate_world;
use gui_reasoner::Config;

fn main() -> gui_reasoner::Result<()> {
    let cfg = Config::default();
    let world = generate_world(cfg.seed, cfg.world)?;
    let (train, _) = world.split_tasks(cfg.eval.holdout_fraction);
    let base = pipeline::pretrain_base(&world, &train, &cfg)?;

    for (name, policy) in [("uniform", Policy::zeros()), ("base", base)] {
        let f = pipeline::forge(&policy, &world, &train, &cfg)?;
        println!(
            "{name}: {}/{} steps prone at T={}, {} scenarios, {} skipped",
            f.prone.len(),
            pipeline::step_refs(&world, &train).len(),
            cfg.forge.temperature,
            f.forged.scenarios.len(),
            f.forged.skipped.len()
        );
        let replay_ok = f.forged.scenarios.iter().filter(|s| replays_to_observation(&world, s).unwrap_or(false)).count();
        println!("  {replay_ok} of {} replay to their observation", f.forged.scenarios.len());
        for s in f.forged.scenarios.iter().take(2) {
            let kind = match s.kind {
                ScenarioKind::Escape => "escape",
                ScenarioKind::BackOnTrack => "back-on-track",
            };
            println!("  {kind:<14} at {} after {} -> target {} ({})", s.observation, s.err_action, s.target_action, s.subgoal(&world)?);
        }
    }
    Ok(())
}
