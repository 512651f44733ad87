//! Dense multilayer perceptrons with hand-written backpropagation.

mod adam;
mod batch;
mod checkpoint;

use rand::Rng;
use thiserror::Error;

pub use adam::{Adam, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use batch::BatchCache;
pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("network shapes differ")]
    Shape,
    #[error("soft-update rate must lie in [0, 1], got {0}")]
    Tau(f64),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
            Activation::Tanh => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Tanh),
            _ => None,
        }
    }
}

/// Dot product with four independent partial sums, so the compiler can
/// keep several multiply-adds in flight.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in chunks_a.zip(chunks_b) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Affine layer followed by an elementwise activation.
///
/// `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    /// Uniform in `±1/sqrt(inputs)` for weights and biases.
    pub fn uniform<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut sample = || rng.random_range(-bound..bound);
        let weights = (0..inputs * outputs).map(|_| sample()).collect();
        let bias = (0..outputs).map(|_| sample()).collect();
        Self {
            inputs,
            outputs,
            weights,
            bias,
            activation,
        }
    }

    fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(row, b)| {
                    let z = b + dot(row, input);
                    self.activation.apply(z)
                }),
        );
    }

    fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Dense>,
}

/// Layer inputs and the final output of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// `activations[0]` is the network input, `activations[i + 1]` the output
    /// of layer `i`.
    pub activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations
            .last()
            .expect("cache holds at least the input")
    }
}

impl MlpParams {
    /// Builds a network over `dims` (input first) with `hidden` activation on
    /// every layer except the last, which uses `output`.
    pub fn new<R: Rng + ?Sized>(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(dims.len() >= 2, "need at least input and output sizes");
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, pair)| {
                let act = if i == last { output } else { hidden };
                Dense::uniform(pair[0], pair[1], act, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self, NeuralError> {
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(NeuralError::Dimension {
                    expected: pair[0].outputs,
                    found: pair[1].inputs,
                });
            }
        }
        for layer in &layers {
            if layer.weights.len() != layer.inputs * layer.outputs
                || layer.bias.len() != layer.outputs
            {
                return Err(NeuralError::Shape);
            }
        }
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Dense::parameter_count).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.parameters().all(f64::is_finite)
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn parameters(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
    }

    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn same_shape(&self, other: &MlpParams) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.inputs == b.inputs && a.outputs == b.outputs)
    }

    fn check_input(&self, input: &[f64]) -> Result<(), NeuralError> {
        if input.len() != self.input_dim() {
            return Err(NeuralError::Dimension {
                expected: self.input_dim(),
                found: input.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache), NeuralError> {
        self.check_input(input)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for layer in &self.layers {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.forward_into(activations.last().expect("non-empty"), &mut out);
            activations.push(out);
        }
        let cache = ForwardCache { activations };
        Ok((cache.output().to_vec(), cache))
    }

    /// Forward pass without keeping intermediate activations.
    pub fn infer(&self, input: &[f64]) -> Result<Vec<f64>, NeuralError> {
        self.check_input(input)?;
        let mut current = input.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward_into(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
        }
        Ok(current)
    }

    /// Reverse-mode gradients of `output · output_gradient`.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_gradient: &[f64],
    ) -> Result<(GradientSet, Vec<f64>), NeuralError> {
        let mut grads = GradientSet::zeros_like(self);
        let input_grad = self.backward_accumulate(cache, output_gradient, Some(&mut grads))?;
        Ok((grads, input_grad))
    }

    /// Like [`backward`](Self::backward) but adds parameter gradients into
    /// `grads` (or skips them when `None`) and returns the input gradient.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        output_gradient: &[f64],
        mut grads: Option<&mut GradientSet>,
    ) -> Result<Vec<f64>, NeuralError> {
        if cache.activations.len() != self.layers.len() + 1 {
            return Err(NeuralError::Shape);
        }
        if output_gradient.len() != self.output_dim() {
            return Err(NeuralError::Dimension {
                expected: self.output_dim(),
                found: output_gradient.len(),
            });
        }
        if let Some(g) = grads.as_deref() {
            if !g.matches(self) {
                return Err(NeuralError::Shape);
            }
        }
        let mut upstream = output_gradient.to_vec();
        for (index, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.activations[index];
            let output = &cache.activations[index + 1];
            if input.len() != layer.inputs || output.len() != layer.outputs {
                return Err(NeuralError::Shape);
            }
            // Gradient w.r.t. pre-activation.
            let delta: Vec<f64> = upstream
                .iter()
                .zip(output)
                .map(|(g, y)| g * layer.activation.derivative_from_output(*y))
                .collect();
            if let Some(g) = grads.as_deref_mut() {
                let (dw, db) = &mut g.layers[index];
                for ((row, d), b) in dw
                    .chunks_exact_mut(layer.inputs)
                    .zip(&delta)
                    .zip(db.iter_mut())
                {
                    *b += d;
                    if *d != 0.0 {
                        for (w, x) in row.iter_mut().zip(input) {
                            *w += d * x;
                        }
                    }
                }
            }
            let mut downstream = vec![0.0; layer.inputs];
            for (row, d) in layer.weights.chunks_exact(layer.inputs).zip(&delta) {
                if *d != 0.0 {
                    for (acc, w) in downstream.iter_mut().zip(row) {
                        *acc += d * w;
                    }
                }
            }
            upstream = downstream;
        }
        Ok(upstream)
    }

    /// `self <- tau * online + (1 - tau) * self`.
    pub fn soft_update(&mut self, online: &MlpParams, tau: f64) -> Result<(), NeuralError> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(NeuralError::Tau(tau));
        }
        if !self.same_shape(online) {
            return Err(NeuralError::Shape);
        }
        for (target, source) in self.layers.iter_mut().zip(&online.layers) {
            for (t, s) in target
                .weights
                .iter_mut()
                .zip(&source.weights)
                .chain(target.bias.iter_mut().zip(&source.bias))
            {
                *t = tau * s + (1.0 - tau) * *t;
            }
        }
        Ok(())
    }

    pub fn copy_from(&mut self, online: &MlpParams) -> Result<(), NeuralError> {
        if !self.same_shape(online) {
            return Err(NeuralError::Shape);
        }
        self.clone_from(online);
        Ok(())
    }
}

/// Per-parameter partial derivatives, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    /// `(weights, bias)` per layer.
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl GradientSet {
    pub fn zeros_like(net: &MlpParams) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
                .collect(),
        }
    }

    pub fn matches(&self, net: &MlpParams) -> bool {
        self.layers.len() == net.layers.len()
            && self
                .layers
                .iter()
                .zip(&net.layers)
                .all(|((w, b), l)| w.len() == l.weights.len() && b.len() == l.bias.len())
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|(w, b)| w.iter_mut().chain(b.iter_mut()))
    }

    pub fn scale(&mut self, factor: f64) {
        self.values_mut().for_each(|v| *v *= factor);
    }

    pub fn fill_zero(&mut self) {
        self.values_mut().for_each(|v| *v = 0.0);
    }

    pub fn is_zero(&self) -> bool {
        self.values().all(|v| v == 0.0)
    }
}
