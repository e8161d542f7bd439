//! Teacher-forced Type / Grounding / SR for reference, always-back and
//! untrained actors, low and high conditioning.

use gui_reasoner::eval::{evaluate, format_table};
use gui_reasoner::policy::{Actor, BackActor, Conditioning, OracleActor, Policy};
use gui_reasoner::sim::generate_world;
use gui_reasoner::Config;

fn main() -> gui_reasoner::Result<()> {
    let cfg = Config::default();
    let world = generate_world(cfg.seed, cfg.world)?;
    let all: Vec<_> = world.tasks.iter().map(|t| t.id).collect();
    let uniform = Policy::zeros();
    let actors: [(&str, &dyn Actor); 3] = [("oracle", &OracleActor), ("always back", &BackActor), ("untrained", &uniform)];
    for (name, actor) in actors {
        let reports = [Conditioning::Low, Conditioning::High]
            .into_iter()
            .map(|m| evaluate(actor, &world, &all, m))
            .collect::<gui_reasoner::Result<Vec<_>>>()?;
        println!("{name}\n{}", format_table(&reports));
    }
    Ok(())
}
