//! RLOO on a 3-armed bandit: one correct answer among three, k = 16
//! rollouts per update, plain gradient ascent.

use gui_reasoner::config::RlConfig;
use gui_reasoner::policy::{render, Candidate, CandidateSet, Output, Policy, FEATURE_DIM};
use gui_reasoner::reward::{GroundTruth, LexicalScorer, RewardConfig};
use gui_reasoner::train::{rloo_advantages, train, Bucket, Pools, RlContext, TrainItem};

fn main() -> gui_reasoner::Result<()> {
    println!("advantages of [1, 0, 0, 1]: {:?}", rloo_advantages(&[1.0, 0.0, 0.0, 1.0])?);

    let q = "What is 2 + 2?";
    let set = CandidateSet {
        candidates: ["3", "4", "5"]
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let mut features = vec![0.0; FEATURE_DIM];
                features[i] = 1.0;
                Candidate { output: Output::Answer(a.to_string()), text: render::answer(q, a), features }
            })
            .collect(),
    };
    let pools = Pools { other: vec![TrainItem { set, truth: GroundTruth::other("4"), bucket: Bucket::Other }], ..Pools::default() };
    let rl = RlConfig { steps: 2000, batch_size: 1, ..RlConfig::default() };
    let reward = RewardConfig::default();
    let ctx = RlContext { rl: &rl, reward: &reward, scorer: &LexicalScorer };
    let mut policy = Policy::zeros();
    let log = train(&mut policy, &pools, &Default::default(), ctx, 6)?;
    let ma = log.moving_average(100);
    for step in [0, 99, 499, 999, 1999] {
        println!("step {step:>4}  mean reward (100-step window) {:.3}", ma[step]);
    }
    let p = policy.probabilities(&pools.other[0].set, 1.0);
    println!("final arm probabilities {:.4?}", p);
    Ok(())
}
