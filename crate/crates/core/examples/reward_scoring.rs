//! Score raw responses with the rule-based rewards: format gate, agent
//! action with sub-goal fallback, point and box grounding, free answers.

use gui_reasoner::reward::{reward_total, GroundTruth, RewardConfig};
use gui_reasoner::sim::{Action, Rect};

fn main() {
    let cfg = RewardConfig::default();
    let target = Rect::new(100, 200, 300, 260);
    let agent = GroundTruth::agent(Action::click(200, 230), Some(target), Some("open the settings page".into()));

    let cases = [
        ("correct", "<think>\nSub-goal: open the settings page\n</think>\nclick(150, 240)", &agent),
        ("wrong point, good sub-goal", "<think>\nSub-goal: open the settings page\n</think>\nclick(10, 10)", &agent),
        ("wrong point, vague sub-goal", "<think>\nSub-goal: open something\n</think>\nclick(10, 10)", &agent),
        ("wrong kind, no sub-goal", "<think>hmm</think>back", &agent),
        ("no think block", "click(150, 240)", &agent),
    ];
    for (name, raw, gt) in cases {
        let b = reward_total(raw, gt, &cfg);
        println!("{name:<30} total {:.3}  format {} type {:?} param {:?} subgoal {:?}", b.total, b.format, b.type_, b.param, b.subgoal_raw);
    }

    let point = GroundTruth::point(target);
    let bbox = GroundTruth::bbox(target);
    let other = GroundTruth::other("1/2");
    for (raw, gt) in [
        ("<think>it is there</think>(120, 210)", &point),
        ("<think>it is there</think>(99, 210)", &point),
        ("<think>box</think>[100, 200, 300, 260]", &bbox),
        ("<think>box</think>[100, 200, 220, 260]", &bbox),
        ("<think>halve it</think>answer(0.5)", &other),
    ] {
        println!("{raw:<45} total {:.3}", reward_total(raw, gt, &cfg).total);
    }
}
