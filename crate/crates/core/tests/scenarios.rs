use gui_reasoner::pipeline;
use gui_reasoner::reward::{reward_total, RewardConfig};
use gui_reasoner::scenario::{scenario_item, ScenarioKind};
use gui_reasoner::sim::{generate_world, Action};
use gui_reasoner::Config;

#[test]
fn escape_items_reward_back_over_the_original_action() {
    let cfg = Config::default();
    let world = generate_world(cfg.seed, cfg.world).unwrap();
    let (train, _) = world.split_tasks(cfg.eval.holdout_fraction);
    let base = pipeline::pretrain_base(&world, &train, &cfg).unwrap();
    let f = pipeline::forge(&base, &world, &train, &cfg).unwrap();
    let featurizer = base.featurizer();
    let rc = RewardConfig::default();
    let mut compared = 0;
    for s in f.forged.scenarios.iter().filter(|s| s.kind == ScenarioKind::Escape) {
        let item = scenario_item(&world, s, &featurizer).unwrap();
        let best = |a: &Action| {
            item.set
                .candidates
                .iter()
                .filter(|c| c.output.action() == Some(a))
                .map(|c| reward_total(&c.text, &item.truth, &rc).total)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let gt = &world.step_spec(s.origin).unwrap().gt_action;
        let back = best(&Action::Back);
        assert_eq!(back, 1.0);
        let original = best(gt);
        if original.is_finite() {
            assert!(back > original);
            compared += 1;
        }
    }
    assert!(compared > 0);
}

#[test]
fn pipeline_is_deterministic() {
    let cfg = Config { rl: gui_reasoner::config::RlConfig { steps: 30, ..Default::default() }, ..Config::default() };
    let run = || {
        let world = generate_world(cfg.seed, cfg.world).unwrap();
        let (train, _) = world.split_tasks(cfg.eval.holdout_fraction);
        let base = pipeline::pretrain_base(&world, &train, &cfg).unwrap();
        let d = pipeline::distill(&base, &world, &train, &cfg).unwrap();
        let sft = pipeline::reasoning_sft(&base, &world, &d.accepted, &cfg).unwrap();
        let f = pipeline::forge(&sft, &world, &train, &cfg).unwrap();
        let (p, log) = pipeline::stage2(&sft, &world, &train, &f.forged.scenarios, &cfg).unwrap();
        (p, log, f.forged.scenarios)
    };
    let (a, la, sa) = run();
    let (b, lb, sb) = run();
    assert_eq!(a, b);
    assert_eq!(la, lb);
    assert_eq!(sa, sb);
}
