//! Every stage through the file formats the CLI uses: world JSON, SFT and
//! scenario JSONL, policy JSON, training log JSONL, reward curve CSV and
//! the evaluation report.

use gui_reasoner::distill::{emit_sft_dataset, load_sft_dataset};
use gui_reasoner::eval::{emit_curve, evaluate, format_table, save_reports};
use gui_reasoner::pipeline;
use gui_reasoner::policy::{Conditioning, Policy};
use gui_reasoner::scenario::{emit_scenarios, load_scenarios};
use gui_reasoner::sim::{generate_world, World};
use gui_reasoner::Config;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("gui-reasoner-run"));
    std::fs::create_dir_all(&dir)?;
    let cfg = Config::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/desk.toml"))?;

    generate_world(cfg.seed, cfg.world)?.save(dir.join("world.json"))?;
    let world = World::load(dir.join("world.json"))?;
    let (train, held) = world.split_tasks(cfg.eval.holdout_fraction);

    pipeline::pretrain_base(&world, &train, &cfg)?.save(dir.join("base.json"))?;
    let base = Policy::load(dir.join("base.json"))?;

    let d = pipeline::distill(&base, &world, &train, &cfg)?;
    let kept: Vec<_> = d.samples.iter().filter(|s| s.accepted).cloned().collect();
    emit_sft_dataset(&world, &kept, dir.join("sft.jsonl"))?;
    let sft_set = load_sft_dataset(dir.join("sft.jsonl"))?;
    let sft = pipeline::reasoning_sft(&base, &world, &sft_set, &cfg)?;

    let f = pipeline::forge(&sft, &world, &train, &cfg)?;
    emit_scenarios(&world, &f.forged.scenarios, dir.join("scenarios.jsonl"))?;
    let scenarios = load_scenarios(dir.join("scenarios.jsonl"))?;

    let (policy, log) = pipeline::stage2(&sft, &world, &train, &scenarios, &cfg)?;
    policy.save(dir.join("policy.json"))?;
    log.save(dir.join("train_log.jsonl"))?;
    emit_curve(&log, dir.join("curve.csv"))?;

    let mut reports = Vec::new();
    for (name, p) in [("base", &base), ("sft", &sft), ("rl", &policy)] {
        reports = vec![evaluate(p, &world, &held, Conditioning::Low)?, evaluate(p, &world, &held, Conditioning::High)?];
        print!("{name} on held-out tasks\n{}", format_table(&reports));
    }
    save_reports(&reports, dir.join("report.json"))?;
    println!("artifacts in {}", dir.display());
    Ok(())
}
