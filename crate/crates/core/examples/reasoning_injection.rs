//! Stage 1: a reactive base policy, its bottleneck steps, teacher
//! reasoning on them, rejection filtering and reasoning SFT.

use gui_reasoner::distill::step_accuracy;
use gui_reasoner::pipeline;
use gui_reasoner::policy::Conditioning;
use gui_reasoner::sim::{generate_world, WorldParams};
use gui_reasoner::Config;

fn main() -> gui_reasoner::Result<()> {
    let cfg = Config { world: WorldParams { n_screens: 30, n_tasks: 50, ..WorldParams::default() }, ..Config::default() };
    let world = generate_world(cfg.seed, cfg.world)?;
    let (train, _) = world.split_tasks(cfg.eval.holdout_fraction);

    let base = pipeline::pretrain_base(&world, &train, &cfg)?;
    let d = pipeline::distill(&base, &world, &train, &cfg)?;
    let bn = d.bottleneck_steps();
    println!("{} training steps, {} bottlenecks", d.bottlenecks.len(), bn.len());
    println!("teacher samples {}, accepted {}", d.samples.len(), d.accepted.len());
    if let Some(r) = d.accepted.first() {
        println!("\nteacher target for task {} step {}:\n{}\n-> {}\n", r.step.task_id, r.step.step_index, r.target.reasoning, r.target.action);
    }

    let sft = pipeline::reasoning_sft(&base, &world, &d.accepted, &cfg)?;
    for (name, p) in [("base", &base), ("sft", &sft)] {
        println!(
            "{name:<5} goal-only accuracy on bottlenecks {:.1}%, with sub-goal {:.1}%",
            100.0 * step_accuracy(p, &world, &bn, Conditioning::High)?,
            100.0 * step_accuracy(p, &world, &bn, Conditioning::Low)?
        );
    }
    Ok(())
}
