//! Dense feed-forward network with hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{softmax, AccessLevel, Classifier};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Tanh),
            _ => None,
        }
    }
}

/// Architecture of an MLP: `[input, hidden.., classes]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden: &[usize], num_classes: usize, activation: Activation, seed: u64) -> Self {
        let mut layer_widths = Vec::with_capacity(hidden.len() + 2);
        layer_widths.push(input_dim);
        layer_widths.extend_from_slice(hidden);
        layer_widths.push(num_classes);
        Self {
            layer_widths,
            activation,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 3 {
            return Err(Error::InvalidConfig(
                "an MLP needs at least one hidden layer".into(),
            ));
        }
        if self.layer_widths.contains(&0) {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        if self.num_classes() < 2 {
            return Err(Error::InvalidConfig("need at least two output classes".into()));
        }
        Ok(())
    }
}

/// Fully connected layer; `weights` is row-major `out_dim × in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    /// Uniform initialisation in `±1/√fan_in` for weights and biases.
    pub fn init<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        let bias = (0..out_dim).map(|_| rng.random_range(-bound..=bound)).collect();
        Self {
            in_dim,
            out_dim,
            weights,
            bias,
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    /// `Wᵀ · delta`
    fn backward_input(&self, delta: &[f64]) -> Vec<f64> {
        let mut dx = vec![0.0; self.in_dim];
        for (row, d) in self.weights.chunks_exact(self.in_dim).zip(delta) {
            if *d == 0.0 {
                continue;
            }
            for (acc, w) in dx.iter_mut().zip(row) {
                *acc += w * d;
            }
        }
        dx
    }
}

/// Per-layer pre-activations and activations from one forward pass.
pub(crate) struct Trace {
    /// `inputs[l]` is the input fed to layer `l`.
    inputs: Vec<Vec<f64>>,
    /// `pre[l]` is layer `l`'s affine output.
    pre: Vec<Vec<f64>>,
}

impl Trace {
    pub(crate) fn logits(&self) -> &[f64] {
        self.pre.last().unwrap()
    }
}

/// Parameter gradients, shaped like the network.
#[derive(Debug, Clone)]
pub(crate) struct Grads {
    pub(crate) layers: Vec<Dense>,
}

impl Grads {
    pub(crate) fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            layers: mlp
                .layers
                .iter()
                .map(|l| Dense::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    pub(crate) fn clear(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
            l.bias.iter_mut().for_each(|b| *b = 0.0);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    activation: Activation,
    layers: Vec<Dense>,
}

impl Mlp {
    pub fn init(spec: &MlpSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = seed::rng(seed::derive(spec.seed, &[seed::label("init")]));
        let layers = spec
            .layer_widths
            .windows(2)
            .map(|w| Dense::init(w[0], w[1], &mut rng))
            .collect();
        Ok(Self {
            activation: spec.activation,
            layers,
        })
    }

    pub fn from_layers(activation: Activation, layers: Vec<Dense>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::InvalidConfig("an MLP needs at least one hidden layer".into()));
        }
        for l in &layers {
            if l.weights.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
                return Err(Error::InvalidConfig("layer buffer sizes do not match widths".into()));
            }
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::InvalidConfig("consecutive layer widths disagree".into()));
            }
        }
        Ok(Self { activation, layers })
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn layer_widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].in_dim];
        w.extend(self.layers.iter().map(|l| l.out_dim));
        w
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Replaces the output layer with a freshly initialised one of width `num_classes`.
    pub fn reset_head(&mut self, num_classes: usize, seed: u64) {
        let last = self.layers.last_mut().unwrap();
        let mut rng = seed::rng(seed::derive(seed, &[seed::label("head")]));
        *last = Dense::init(last.in_dim, num_classes, &mut rng);
    }

    pub(crate) fn trace(&self, x: &[f64]) -> Trace {
        assert_eq!(x.len(), self.layers[0].in_dim, "input dimension mismatch");
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        let mut current = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&current);
            let next = if l + 1 < n {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            } else {
                Vec::new()
            };
            inputs.push(std::mem::replace(&mut current, next));
            pre.push(z);
        }
        Trace { inputs, pre }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut current = x.to_vec();
        let n = self.layers.len();
        for (l, layer) in self.layers.iter().enumerate() {
            current = layer.forward(&current);
            if l + 1 < n {
                current.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
        }
        current
    }

    /// Backpropagates `dlogits` through a recorded trace.
    ///
    /// Accumulates parameter gradients into `grads` when given and returns
    /// the gradient with respect to the input.
    pub(crate) fn backward(&self, trace: &Trace, dlogits: &[f64], mut grads: Option<&mut Grads>) -> Vec<f64> {
        let mut delta = dlogits.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &trace.inputs[l];
            if let Some(g) = grads.as_deref_mut() {
                let gl = &mut g.layers[l];
                for (o, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    gl.bias[o] += d;
                    let row = &mut gl.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (acc, v) in row.iter_mut().zip(input) {
                        *acc += d * v;
                    }
                }
            }
            let mut dx = layer.backward_input(&delta);
            if l > 0 {
                let z = &trace.pre[l - 1];
                for ((g, &zi), &ai) in dx.iter_mut().zip(z).zip(input) {
                    *g *= self.activation.derivative(zi, ai);
                }
            }
            delta = dx;
        }
        delta
    }
}

impl Classifier for Mlp {
    fn num_classes(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    fn access(&self) -> AccessLevel {
        AccessLevel::Gradients
    }

    fn probits(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(softmax(&self.forward(x)))
    }

    fn label(&self, x: &[f64]) -> usize {
        crate::model::argmax(&self.forward(x))
    }

    fn logits(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.forward(x))
    }

    fn logit_vjp(&self, x: &[f64], upstream: &[f64]) -> Option<Vec<f64>> {
        let trace = self.trace(x);
        Some(self.backward(&trace, upstream, None))
    }

    fn as_mlp(&self) -> Option<&Mlp> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClassifierHandle;

    fn spec(act: Activation) -> MlpSpec {
        MlpSpec::new(3, &[5, 4], 3, act, 11)
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = Mlp::init(&spec(Activation::Relu)).unwrap();
        let b = Mlp::init(&spec(Activation::Relu)).unwrap();
        assert_eq!(a, b);
        for layer in a.layers() {
            let bound = 1.0 / (layer.in_dim as f64).sqrt();
            assert!(layer.weights.iter().all(|w| w.abs() <= bound));
        }
        assert_eq!(a.layer_widths(), vec![3, 5, 4, 3]);
    }

    #[test]
    fn spec_requires_hidden_layer() {
        let s = MlpSpec {
            layer_widths: vec![2, 2],
            activation: Activation::Relu,
            seed: 0,
        };
        assert!(Mlp::init(&s).is_err());
    }

    #[test]
    fn zero_network_has_zero_gradient() {
        let mut m = Mlp::init(&spec(Activation::Tanh)).unwrap();
        for l in m.layers_mut() {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
            l.bias.iter_mut().for_each(|b| *b = 0.0);
        }
        let h = ClassifierHandle::new("zero", m);
        for c in 0..3 {
            assert!(h.input_gradient(&[0.3, -1.0, 2.0], c).unwrap().iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn trace_logits_match_forward() {
        let m = Mlp::init(&spec(Activation::Relu)).unwrap();
        let x = [0.5, -0.25, 1.5];
        assert_eq!(m.trace(&x).logits(), m.forward(&x).as_slice());
    }
}
