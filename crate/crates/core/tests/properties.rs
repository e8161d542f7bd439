use gui_reasoner::policy::{AgentInput, Conditioning, Policy, FEATURE_DIM};
use gui_reasoner::reward::{
    reward_agent, reward_bbox, reward_format, reward_point, reward_total, score_subgoal, GroundTruth, RewardConfig,
};
use gui_reasoner::sim::{generate_world, replay, step, Action, Rect, StepRef, WorldParams};
use gui_reasoner::train::rloo_advantages;
use proptest::prelude::*;

fn rect() -> impl Strategy<Value = Rect> {
    (0..200i32, 0..200i32, 1..120i32, 1..120i32).prop_map(|(x, y, w, h)| Rect::new(x, y, x + w, y + h))
}

fn action() -> impl Strategy<Value = Action> {
    prop_oneof![
        (0..300i32, 0..300i32).prop_map(|(x, y)| Action::click(x, y)),
        "[a-z]{1,6}".prop_map(Action::Type),
        "[a-z0-9]{1,6}".prop_map(Action::Answer),
        Just(Action::Back),
    ]
}

fn truth() -> impl Strategy<Value = GroundTruth> {
    prop_oneof![
        (action(), proptest::option::of(rect()), proptest::option::of("[a-z ]{1,20}"))
            .prop_map(|(a, r, s)| GroundTruth::agent(a, r, s)),
        rect().prop_map(GroundTruth::point),
        rect().prop_map(GroundTruth::bbox),
        "[0-9/.]{1,5}".prop_map(GroundTruth::other),
    ]
}

fn response() -> impl Strategy<Value = String> {
    let body = prop_oneof![
        action().prop_map(|a| a.to_string()),
        rect().prop_map(|r| format!("[{}, {}, {}, {}]", r.x_min, r.y_min, r.x_max, r.y_max)),
        "[ -~]{0,20}",
    ];
    (any::<bool>(), "[a-zA-Z:\\n -]{0,30}", body).prop_map(|(wrap, think, body)| {
        if wrap {
            format!("<think>{think}</think>{body}")
        } else {
            format!("{think}{body}")
        }
    })
}

proptest! {
    #[test]
    fn bbox_reward_is_symmetric_and_bounded(a in rect(), b in rect(), tau in 0.05f64..=1.0) {
        let r = reward_bbox(&a, &b, tau);
        prop_assert_eq!(r, reward_bbox(&b, &a, tau));
        prop_assert!((0.0..=1.0).contains(&r));
    }

    #[test]
    fn bbox_reward_is_monotone_in_iou(gt in rect(), a in rect(), b in rect()) {
        let (ia, ib) = (a.iou(&gt), b.iou(&gt));
        let (ra, rb) = (reward_bbox(&a, &gt, 0.7), reward_bbox(&b, &gt, 0.7));
        if ia <= ib {
            prop_assert!(ra <= rb);
        } else {
            prop_assert!(ra >= rb);
        }
    }

    #[test]
    fn total_reward_in_unit_interval_and_gated(raw in response(), gt in truth()) {
        let b = reward_total(&raw, &gt, &RewardConfig::default());
        prop_assert!((0.0..=1.0).contains(&b.total));
        prop_assert!((0.0..=1.0).contains(&b.acc));
        if reward_format(&raw) == 0.0 {
            prop_assert_eq!(b.total, 0.0);
        } else {
            prop_assert!(b.total >= 0.1 - 1e-12);
        }
    }

    #[test]
    fn unwrapped_text_scores_zero(body in "[ -~]{0,40}", gt in truth()) {
        prop_assume!(!body.contains("<think>"));
        prop_assert_eq!(reward_total(&body, &gt, &RewardConfig::default()).total, 0.0);
    }

    #[test]
    fn correct_params_ignore_subgoal_reward(gt in action(), s1 in 0.0f64..=1.0, s2 in 0.0f64..=1.0) {
        let cfg = RewardConfig::default();
        let a = reward_agent(&gt, &gt, None, s1, &cfg);
        prop_assert_eq!(a, reward_agent(&gt, &gt, None, s2, &cfg));
        prop_assert_eq!(a, 1.0);
    }

    #[test]
    fn subgoal_score_range(e in proptest::option::of("[a-z ]{0,20}"), g in "[a-z ]{1,20}") {
        let s = score_subgoal(e.as_deref(), &g);
        prop_assert!(s <= 10);
        prop_assert_eq!(s == 0, e.is_none());
    }

    #[test]
    fn rloo_advantages_sum_to_zero(r in proptest::collection::vec(-5.0f64..5.0, 2..20)) {
        let a = rloo_advantages(&r).unwrap();
        prop_assert!(a.iter().sum::<f64>().abs() < 1e-9);
    }
}

#[test]
fn point_reward_boundary_is_inclusive() {
    let b = Rect::new(10, 10, 14, 13);
    for x in 8..=16 {
        for y in 8..=15 {
            let inside = (10..=14).contains(&x) && (10..=13).contains(&y);
            assert_eq!(reward_point(gui_reasoner::sim::Point::new(x, y), &b), f64::from(u8::from(inside)), "({x},{y})");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wrong_click_then_back_restores_the_screen(seed in 0u64..1000) {
        let world = generate_world(seed, WorldParams::default()).unwrap();
        for r in world.step_refs() {
            let history = world.gt_history(r).unwrap();
            let state = replay(&world, r.task_id, &history).unwrap();
            let spec = world.step_spec(r).unwrap();
            let target = world.target_bbox(r).ok();
            for e in &world.screen(spec.screen_id).unwrap().elements {
                if Some(e.bbox) == target {
                    continue;
                }
                let c = e.bbox.center();
                let err = step(&world, &state, &Action::click(c.x, c.y)).unwrap();
                let back = step(&world, &err, &Action::Back).unwrap();
                prop_assert_eq!(back.screen, state.screen);
            }
        }
    }

    #[test]
    fn worlds_are_reproducible(seed in 0u64..1000) {
        let a = generate_world(seed, WorldParams::default()).unwrap();
        let b = generate_world(seed, WorldParams::default()).unwrap();
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        a.validate().unwrap();
    }

    #[test]
    fn probabilities_are_normalized(seed in 0u64..200, w in proptest::collection::vec(-3.0f64..3.0, FEATURE_DIM)) {
        let world = generate_world(seed, WorldParams::default()).unwrap();
        let policy = Policy { weights: w, ..Policy::zeros() };
        let r: StepRef = world.step_refs()[0];
        let set = policy.featurizer().agent(&AgentInput::for_step(&world, r, Conditioning::High).unwrap()).unwrap();
        for t in [0.1, 1.0, 3.0] {
            let p = policy.probabilities(&set, t);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|v| *v >= 0.0));
        }
    }
}
