use crate::model::{argmax, softmax, AccessLevel, Classifier};

/// Multinomial logistic model `softmax(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier {
    input_dim: usize,
    /// Row-major `C × d`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl LinearClassifier {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Self {
        assert!(weights.len() >= 2 && weights.len() == bias.len());
        let input_dim = weights[0].len();
        assert!(weights.iter().all(|r| r.len() == input_dim));
        Self {
            input_dim,
            weights: weights.concat(),
            bias,
        }
    }

    pub fn weight_row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.input_dim..(class + 1) * self.input_dim]
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.input_dim)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

impl Classifier for LinearClassifier {
    fn num_classes(&self) -> usize {
        self.bias.len()
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn access(&self) -> AccessLevel {
        AccessLevel::Gradients
    }

    fn probits(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(softmax(&self.affine(x)))
    }

    fn label(&self, x: &[f64]) -> usize {
        argmax(&self.affine(x))
    }

    fn logits(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.affine(x))
    }

    fn logit_vjp(&self, _x: &[f64], upstream: &[f64]) -> Option<Vec<f64>> {
        let mut g = vec![0.0; self.input_dim];
        for (row, u) in self.weights.chunks_exact(self.input_dim).zip(upstream) {
            for (acc, w) in g.iter_mut().zip(row) {
                *acc += u * w;
            }
        }
        Some(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClassifierHandle;

    #[test]
    fn gradient_is_weight_row() {
        let lin = LinearClassifier::new(vec![vec![1.0, -2.0], vec![0.5, 3.0], vec![0.0, 0.25]], vec![0.0, 1.0, -1.0]);
        let h = ClassifierHandle::new("lin", lin.clone());
        for c in 0..3 {
            assert_eq!(h.input_gradient(&[0.7, -0.1], c).unwrap(), lin.weight_row(c));
        }
    }
}
