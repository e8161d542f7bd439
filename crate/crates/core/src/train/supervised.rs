use crate::policy::{CandidateSet, Policy};

/// One behavior-cloning target. Several indices mean the label fixes only
/// part of the response (the action, say) and the likelihood is summed
/// over the matching candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedExample {
    pub set: CandidateSet,
    pub targets: Vec<usize>,
}

impl SupervisedExample {
    pub fn single(set: CandidateSet, target: usize) -> Self {
        Self { set, targets: vec![target] }
    }

    pub fn log_likelihood(&self, policy: &Policy) -> f64 {
        let p = policy.probabilities(&self.set, 1.0);
        self.targets.iter().map(|&i| p[i]).sum::<f64>().ln()
    }

    /// ∇ log Σ_{t} p_t = Σ_t (p_t / P) φ_t − Σ_j p_j φ_j.
    pub fn gradient(&self, policy: &Policy) -> Vec<f64> {
        let p = policy.probabilities(&self.set, 1.0);
        let mass: f64 = self.targets.iter().map(|&i| p[i]).sum();
        let mut g = vec![0.0; policy.dim()];
        for &t in &self.targets {
            for (gk, f) in g.iter_mut().zip(&self.set.candidates[t].features) {
                *gk += p[t] / mass * f;
            }
        }
        for (c, pj) in self.set.candidates.iter().zip(&p) {
            for (gk, f) in g.iter_mut().zip(&c.features) {
                *gk -= pj * f;
            }
        }
        g
    }
}

/// Mean negative log-likelihood of the targets at temperature 1.
pub fn supervised_loss(policy: &Policy, examples: &[SupervisedExample]) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    -examples.iter().map(|e| e.log_likelihood(policy)).sum::<f64>() / examples.len() as f64
}

/// One full-batch ascent step on the mean log-likelihood. Returns the loss
/// before the step.
pub fn supervised_update(policy: &mut Policy, examples: &[SupervisedExample], lr: f64) -> f64 {
    supervised_update_masked(policy, examples, lr, None)
}

/// [`supervised_update`] touching only the weights where `mask` is true.
pub fn supervised_update_masked(
    policy: &mut Policy,
    examples: &[SupervisedExample],
    lr: f64,
    mask: Option<&[bool]>,
) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let loss = supervised_loss(policy, examples);
    let mut grad = vec![0.0; policy.dim()];
    for e in examples {
        for (g, v) in grad.iter_mut().zip(e.gradient(policy)) {
            *g += v;
        }
    }
    let n = examples.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    if let Some(m) = mask {
        grad.iter_mut().zip(m).filter(|(_, keep)| !**keep).for_each(|(g, _)| *g = 0.0);
    }
    policy.apply_gradient(&grad, lr);
    loss
}

/// `epochs` supervised steps; returns the loss before each.
pub fn behavior_clone(policy: &mut Policy, examples: &[SupervisedExample], epochs: usize, lr: f64) -> Vec<f64> {
    (0..epochs).map(|_| supervised_update(policy, examples, lr)).collect()
}

pub fn behavior_clone_masked(
    policy: &mut Policy,
    examples: &[SupervisedExample],
    epochs: usize,
    lr: f64,
    mask: &[bool],
) -> Vec<f64> {
    (0..epochs).map(|_| supervised_update_masked(policy, examples, lr, Some(mask))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{Candidate, Output, FEATURE_DIM};

    fn set(range: std::ops::Range<usize>) -> CandidateSet {
        let cand = |i: usize| {
            let mut f = vec![0.0; FEATURE_DIM];
            f[i % FEATURE_DIM] = 1.0;
            f[(i + 3) % FEATURE_DIM] = 0.5;
            Candidate { output: Output::Answer(i.to_string()), text: String::new(), features: f }
        };
        CandidateSet { candidates: range.map(cand).collect() }
    }

    fn fixture() -> Vec<SupervisedExample> {
        vec![SupervisedExample::single(set(0..4), 1), SupervisedExample::single(set(2..7), 3)]
    }

    #[test]
    fn repeated_example_probability_rises_monotonically() {
        let ex = vec![fixture().remove(0)];
        let mut p = Policy::zeros();
        let mut last = p.probabilities(&ex[0].set, 1.0)[1];
        for _ in 0..50 {
            supervised_update(&mut p, &ex, 0.5);
            let now = p.probabilities(&ex[0].set, 1.0)[1];
            assert!(now > last);
            last = now;
        }
        assert!(last > 0.95);
    }

    #[test]
    fn zero_lr_keeps_weights_and_loss_decreases() {
        let ex = fixture();
        let mut p = Policy::zeros();
        supervised_update(&mut p, &ex, 0.0);
        assert_eq!(p, Policy::zeros());
        let before = supervised_loss(&p, &ex);
        supervised_update(&mut p, &ex, 1e-2);
        assert!(supervised_loss(&p, &ex) < before);
        let losses = behavior_clone(&mut p, &ex, 30, 0.1);
        assert!(losses.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn masked_weights_stay_put() {
        let ex = fixture();
        let mut p = Policy::zeros();
        let mut mask = vec![true; FEATURE_DIM];
        mask[1] = false;
        behavior_clone_masked(&mut p, &ex, 5, 0.5, &mask);
        assert_eq!(p.weights[1], 0.0);
        assert_ne!(p.weights[4], 0.0);
    }

    #[test]
    fn single_target_gradient_is_the_logprob_gradient() {
        let mut p = Policy::zeros();
        p.weights.iter_mut().enumerate().for_each(|(i, w)| *w = (i as f64 * 0.37).sin());
        let e = SupervisedExample::single(set(0..6), 2);
        let a = e.gradient(&p);
        let b = p.logprob_grad(&e.set, 2, 1.0);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn marginal_gradient_matches_finite_differences() {
        let mut p = Policy::zeros();
        p.weights.iter_mut().enumerate().for_each(|(i, w)| *w = (i as f64 * 0.61).cos());
        let e = SupervisedExample { set: set(0..6), targets: vec![1, 4] };
        let g = e.gradient(&p);
        let h = 1e-6;
        for k in 0..FEATURE_DIM {
            let (mut a, mut b) = (p.clone(), p.clone());
            a.weights[k] += h;
            b.weights[k] -= h;
            let fd = (e.log_likelihood(&a) - e.log_likelihood(&b)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-7);
        }
    }
}
