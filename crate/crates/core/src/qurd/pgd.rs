//! Untargeted projected gradient ascent in an ℓ∞ ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{softmax, ClassifierHandle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgdConfig {
    pub epsilon: f64,
    pub steps: usize,
    pub step_size: f64,
}

impl PgdConfig {
    pub const DEFAULT_STEPS: usize = 20;

    /// `steps = 20`, `step_size = ε / 8`.
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            steps: Self::DEFAULT_STEPS,
            step_size: epsilon / 8.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig("epsilon must be finite and non-negative".into()));
        }
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::InvalidConfig("step_size must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Maximises the cross-entropy of `model(u)` against the original label
/// `model(x)` with signed-gradient steps, projecting back onto
/// `‖u − x‖∞ ≤ ε` after every step.
pub fn pgd_untargeted(model: &ClassifierHandle, x: &[f64], cfg: &PgdConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    // Fails early for models without gradient access.
    let y0 = crate::model::argmax(&model.logits(x)?);
    let mut u = x.to_vec();
    if cfg.epsilon == 0.0 {
        return Ok(u);
    }
    for _ in 0..cfg.steps {
        let mut upstream = softmax(&model.logits(&u)?);
        upstream[y0] -= 1.0;
        let grad = model.logit_vjp(&u, &upstream)?;
        for ((ui, &xi), g) in u.iter_mut().zip(x).zip(grad) {
            let step = if g > 0.0 {
                cfg.step_size
            } else if g < 0.0 {
                -cfg.step_size
            } else {
                0.0
            };
            *ui = (*ui + step).clamp(xi - cfg.epsilon, xi + cfg.epsilon);
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FnClassifier;
    use crate::tinylearn::LinearClassifier;

    #[test]
    fn zero_radius_returns_the_seed() {
        let h = ClassifierHandle::new("lin", LinearClassifier::new(vec![vec![1.0, 1.0], vec![-1.0, 0.5]], vec![0.0, 0.0]));
        let x = [0.3, -0.7];
        assert_eq!(pgd_untargeted(&h, &x, &PgdConfig::with_epsilon(0.0)).unwrap(), x.to_vec());
    }

    #[test]
    fn label_only_model_is_rejected() {
        let h = ClassifierHandle::new("f", FnClassifier::new(2, 1, |_: &[f64]| 0));
        assert!(matches!(
            pgd_untargeted(&h, &[0.0], &PgdConfig::with_epsilon(0.1)),
            Err(Error::GradientRequired)
        ));
    }

    #[test]
    fn stays_inside_the_ball() {
        let h = ClassifierHandle::new("lin", LinearClassifier::new(vec![vec![2.0, -1.0, 0.5], vec![-1.0, 0.0, 3.0]], vec![0.1, -0.2]));
        let eps = 0.37;
        for k in 0..10 {
            let x = [k as f64 * 0.3 - 1.0, 0.5 - k as f64 * 0.1, 1.0];
            let u = pgd_untargeted(&h, &x, &PgdConfig::with_epsilon(eps)).unwrap();
            let dist = u.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(dist <= eps + 1e-12);
        }
    }
}
