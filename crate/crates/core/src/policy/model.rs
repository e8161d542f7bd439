//! Linear softmax policy over a candidate set.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::features::{CandidateSet, Featurizer, FEATURE_DIM, FEATURE_NAMES};

/// Smallest temperature used; lower requests are clamped to it.
pub const MIN_TEMPERATURE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub weights: Vec<f64>,
    /// Whether the policy reads the provided sub-goal at all.
    #[serde(default = "yes")]
    pub subgoal_conditioning: bool,
    #[serde(default = "default_max_candidates")]
    pub max_candidates: usize,
}

fn yes() -> bool {
    true
}

fn default_max_candidates() -> usize {
    Featurizer::default().max_candidates
}

impl Default for Policy {
    fn default() -> Self {
        Self::zeros()
    }
}

impl Policy {
    /// Uniform policy.
    pub fn zeros() -> Self {
        Self { weights: vec![0.0; FEATURE_DIM], subgoal_conditioning: true, max_candidates: default_max_candidates() }
    }

    pub fn featurizer(&self) -> Featurizer {
        Featurizer { max_candidates: self.max_candidates, subgoal_conditioning: self.subgoal_conditioning }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn scores(&self, set: &CandidateSet) -> Vec<f64> {
        set.candidates
            .iter()
            .map(|c| c.features.iter().zip(&self.weights).map(|(f, w)| f * w).sum())
            .collect()
    }

    /// Softmax of scores / T, computed with the max subtracted.
    pub fn probabilities(&self, set: &CandidateSet, temperature: f64) -> Vec<f64> {
        let t = temperature.max(MIN_TEMPERATURE);
        let s = self.scores(set);
        let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = s.iter().map(|v| ((v - m) / t).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|v| v / z).collect()
    }

    pub fn logprob(&self, set: &CandidateSet, i: usize, temperature: f64) -> f64 {
        let t = temperature.max(MIN_TEMPERATURE);
        let s = self.scores(set);
        let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m / t + s.iter().map(|v| ((v - m) / t).exp()).sum::<f64>().ln();
        s[i] / t - lse
    }

    /// ∇_w log π(i) = (φ_i − Σ_j p_j φ_j) / T.
    pub fn logprob_grad(&self, set: &CandidateSet, i: usize, temperature: f64) -> Vec<f64> {
        let t = temperature.max(MIN_TEMPERATURE);
        let p = self.probabilities(set, temperature);
        let mut g = set.candidates[i].features.clone();
        for (c, pj) in set.candidates.iter().zip(&p) {
            for (gk, fk) in g.iter_mut().zip(&c.features) {
                *gk -= pj * fk;
            }
        }
        g.iter_mut().for_each(|v| *v /= t);
        g
    }

    /// Highest-scoring candidate; ties go to the earliest.
    pub fn greedy(&self, set: &CandidateSet) -> usize {
        let s = self.scores(set);
        let mut best = 0;
        for (i, v) in s.iter().enumerate() {
            if *v > s[best] {
                best = i;
            }
        }
        best
    }

    pub fn sample<R: Rng + ?Sized>(&self, set: &CandidateSet, temperature: f64, rng: &mut R) -> usize {
        sample_index(&self.probabilities(set, temperature), rng)
    }

    /// `k` independent draws.
    pub fn sample_k<R: Rng + ?Sized>(&self, set: &CandidateSet, k: usize, temperature: f64, rng: &mut R) -> Vec<usize> {
        let p = self.probabilities(set, temperature);
        (0..k).map(|_| sample_index(&p, rng)).collect()
    }

    pub fn apply_gradient(&mut self, grad: &[f64], lr: f64) {
        for (w, g) in self.weights.iter_mut().zip(grad) {
            *w += lr * g;
        }
    }

    /// Weights paired with feature names.
    pub fn named_weights(&self) -> Vec<(&'static str, f64)> {
        FEATURE_NAMES.iter().copied().zip(self.weights.iter().copied()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != FEATURE_DIM {
            return Err(Error::Config(format!(
                "policy has {} weights, expected {FEATURE_DIM}",
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("policy weights must be finite".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let p: Policy = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        p.validate()?;
        Ok(p)
    }
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, v) in p.iter().enumerate() {
        acc += v;
        if u < acc {
            return i;
        }
    }
    p.len().saturating_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::features::{Candidate, Output};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(rng: &mut ChaCha8Rng, n: usize) -> CandidateSet {
        CandidateSet {
            candidates: (0..n)
                .map(|i| Candidate {
                    output: Output::Answer(i.to_string()),
                    text: String::new(),
                    features: (0..FEATURE_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn probabilities_normalize() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = set(&mut rng, 7);
        let mut p = Policy::zeros();
        p.weights.iter_mut().for_each(|w| *w = rng.gen_range(-3.0..3.0));
        for t in [0.1, 1.0, 5.0] {
            let pr = p.probabilities(&s, t);
            assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (i, v) in pr.iter().enumerate() {
                assert!((v.ln() - p.logprob(&s, i, t)).abs() < 1e-9);
            }
        }
        assert!(Policy::zeros().probabilities(&s, 1.0).iter().all(|v| (v - 1.0 / 7.0).abs() < 1e-15));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = set(&mut rng, 5);
        let mut p = Policy::zeros();
        p.weights.iter_mut().for_each(|w| *w = rng.gen_range(-1.0..1.0));
        let g = p.logprob_grad(&s, 3, 0.7);
        let h = 1e-6;
        for k in 0..FEATURE_DIM {
            let mut a = p.clone();
            let mut b = p.clone();
            a.weights[k] += h;
            b.weights[k] -= h;
            let fd = (a.logprob(&s, 3, 0.7) - b.logprob(&s, 3, 0.7)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-6, "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn tiny_temperature_is_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = set(&mut rng, 6);
        let mut p = Policy::zeros();
        p.weights[0] = 1.0;
        let pr = p.probabilities(&s, 0.0);
        assert!(pr.iter().all(|v| v.is_finite()));
        assert!((pr[p.greedy(&s)] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        let mut p = Policy::zeros();
        p.weights[2] = 0.5;
        p.save(&path).unwrap();
        assert_eq!(Policy::load(&path).unwrap(), p);
        std::fs::write(&path, r#"{"weights":[1.0]}"#).unwrap();
        assert!(Policy::load(&path).is_err());
    }
}
