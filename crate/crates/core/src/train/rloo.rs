use crate::error::{Error, Result};

/// Leave-one-out advantages `R_i − mean_{j≠i} R_j`.
pub fn rloo_advantages(rewards: &[f64]) -> Result<Vec<f64>> {
    let k = rewards.len();
    if k < 2 {
        return Err(Error::Estimator(format!("leave-one-out baseline needs k >= 2, got {k}")));
    }
    let sum: f64 = rewards.iter().sum();
    Ok(rewards.iter().map(|r| r - (sum - r) / (k - 1) as f64).collect())
}

/// `(1/k) Σ_i A_i · grad_i` with leave-one-out advantages.
pub fn rloo_gradient(rewards: &[f64], grads: &[Vec<f64>]) -> Result<Vec<f64>> {
    let adv = rloo_advantages(rewards)?;
    weighted_mean(&adv, grads)
}

/// Plain REINFORCE, no baseline: `(1/k) Σ_i R_i · grad_i`.
pub fn reinforce_gradient(rewards: &[f64], grads: &[Vec<f64>]) -> Result<Vec<f64>> {
    if rewards.is_empty() {
        return Err(Error::Estimator("no samples".into()));
    }
    weighted_mean(rewards, grads)
}

fn weighted_mean(weights: &[f64], grads: &[Vec<f64>]) -> Result<Vec<f64>> {
    if weights.len() != grads.len() {
        return Err(Error::Estimator(format!("{} rewards for {} gradients", weights.len(), grads.len())));
    }
    let dim = grads.first().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for (w, g) in weights.iter().zip(grads) {
        if g.len() != dim {
            return Err(Error::Estimator("gradient dimensions differ".into()));
        }
        for (o, v) in out.iter_mut().zip(g) {
            *o += w * v;
        }
    }
    let k = weights.len() as f64;
    out.iter_mut().for_each(|v| *v /= k);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_advantages() {
        assert_eq!(rloo_advantages(&[1.0, 0.0]).unwrap(), vec![1.0, -1.0]);
        let a = rloo_advantages(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        for (x, y) in a.iter().zip([2.0 / 3.0, -2.0 / 3.0, -2.0 / 3.0, 2.0 / 3.0]) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(matches!(rloo_advantages(&[1.0]), Err(Error::Estimator(_))));
    }

    #[test]
    fn equal_rewards_give_zero_gradient() {
        let g = rloo_gradient(&[0.4; 3], &[vec![1.0, 2.0], vec![-3.0, 0.5], vec![0.0, 7.0]]).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn shape_errors() {
        assert!(rloo_gradient(&[1.0, 0.0], &[vec![1.0]]).is_err());
        assert!(reinforce_gradient(&[], &[]).is_err());
    }
}
