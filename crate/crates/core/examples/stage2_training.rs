//! Stage 2: RLOO over the mixed pools (agent low/high, scenarios, point and
//! box grounding, arithmetic), with and without forged scenarios.

use gui_reasoner::pipeline;
use gui_reasoner::scenario::back_probability;
use gui_reasoner::sim::generate_world;
use gui_reasoner::Config;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = Config::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/desk.toml"))?;
    let world = generate_world(cfg.seed, cfg.world)?;
    let (train, held) = world.split_tasks(cfg.eval.holdout_fraction);
    let base = pipeline::pretrain_base(&world, &train, &cfg)?;
    let d = pipeline::distill(&base, &world, &train, &cfg)?;
    let sft = pipeline::reasoning_sft(&base, &world, &d.accepted, &cfg)?;
    let forged = pipeline::forge(&sft, &world, &train, &cfg)?.forged.scenarios;
    let probe = pipeline::forge(&sft, &world, &held, &cfg)?.forged.scenarios;

    for (name, scenarios) in [("with scenarios", &forged[..]), ("without", &[][..])] {
        let (policy, log) = pipeline::stage2(&sft, &world, &train, scenarios, &cfg)?;
        let ma = log.moving_average(50);
        println!("{name}: {} updates, reward MA50 at step 50 {:.3}, final {:.3}", log.len(), ma[49], ma[ma.len() - 1]);
        for step in (0..log.len()).step_by(log.len() / 5) {
            let r = &log.records[step];
            println!(
                "  step {step:>4}  overall {:.3}  low {:.3}  high {:.3}  grounding {:.3}",
                r.reward_overall,
                r.reward_low.unwrap_or(f64::NAN),
                r.reward_high.unwrap_or(f64::NAN),
                r.reward_grounding.unwrap_or(f64::NAN)
            );
        }
        let pb = back_probability(&policy, &world, &probe, cfg.rl.temperature)?.unwrap_or(f64::NAN);
        println!("  P(back) on held-out escape inputs {pb:.3}");
    }
    Ok(())
}
