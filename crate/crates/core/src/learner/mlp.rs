//! The feed-forward predictor: dense layers, forward evaluation and exact
//! batch backpropagation.
//!
//! The network maps the three input features to one output. The first hidden
//! layer uses Tanh, the remaining hidden layers ReLU, and the output layer is
//! linear. Weights are initialized with seeded fan-based uniform scaling, so
//! construction is deterministic per seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::LearnerError;

pub const INPUT_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    Linear,
}

impl Activation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Activation> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }

    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    /// Derivative with respect to the pre-activation. The ReLU subgradient
    /// at exactly 0 is defined as 0.
    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

/// One dense layer: `out_dim × in_dim` row-major weights plus biases.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    fn eval(&self, input: &[f64], pre: &mut Vec<f64>, post: &mut Vec<f64>) {
        pre.clear();
        post.clear();
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let z = self.biases[o] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
            pre.push(z);
            post.push(self.activation.apply(z));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

/// Gradient of the batch loss with respect to one layer's parameters,
/// shaped like the layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub d_weights: Vec<f64>,
    pub d_biases: Vec<f64>,
}

/// Build a predictor with the given hidden widths: dimensions chain
/// `3 → widths… → 1`, first hidden layer Tanh, later hidden layers ReLU,
/// linear output.
pub fn mlp_new(hidden_widths: &[usize], seed: u64) -> Result<Mlp, LearnerError> {
    if hidden_widths.contains(&0) {
        return Err(LearnerError::InvalidArchitecture(
            "hidden widths must be at least 1".into(),
        ));
    }
    let mut dims = Vec::with_capacity(hidden_widths.len() + 2);
    dims.push(INPUT_DIM);
    dims.extend_from_slice(hidden_widths);
    dims.push(1);

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for l in 0..dims.len() - 1 {
        let (fan_in, fan_out) = (dims[l], dims[l + 1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let weights = (0..fan_in * fan_out)
            .map(|_| rng.gen_range(-limit..limit))
            .collect();
        let activation = if l == dims.len() - 2 {
            Activation::Linear
        } else if l == 0 {
            Activation::Tanh
        } else {
            Activation::Relu
        };
        layers.push(DenseLayer {
            in_dim: fan_in,
            out_dim: fan_out,
            weights,
            biases: vec![0.0; fan_out],
            activation,
        });
    }
    Ok(Mlp { layers })
}

impl Mlp {
    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.out_dim)
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Evaluate the network on one input.
    pub fn forward(&self, x: &[f64; INPUT_DIM]) -> f64 {
        let mut current = x.to_vec();
        let (mut pre, mut post) = (Vec::new(), Vec::new());
        for layer in &self.layers {
            layer.eval(&current, &mut pre, &mut post);
            std::mem::swap(&mut current, &mut post);
        }
        current[0]
    }

    pub fn zero_gradients(&self) -> Vec<LayerGradients> {
        self.layers
            .iter()
            .map(|l| LayerGradients {
                d_weights: vec![0.0; l.weights.len()],
                d_biases: vec![0.0; l.biases.len()],
            })
            .collect()
    }
}

/// Exact gradients of the mean-squared-error over a batch, plus the batch
/// loss itself.
pub fn backward_batch(
    mlp: &Mlp,
    inputs: &[[f64; INPUT_DIM]],
    targets: &[f64],
) -> Result<(Vec<LayerGradients>, f64), LearnerError> {
    if inputs.len() != targets.len() || inputs.is_empty() {
        return Err(LearnerError::ShapeMismatch(format!(
            "{} inputs vs {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    let n = inputs.len() as f64;
    let depth = mlp.layers.len();
    let mut grads = mlp.zero_gradients();
    let mut loss = 0.0;

    // per-sample activation storage: activations[0] is the input
    let mut activations: Vec<Vec<f64>> = Vec::with_capacity(depth + 1);
    let mut pre_activations: Vec<Vec<f64>> = Vec::with_capacity(depth);

    for (x, &y) in inputs.iter().zip(targets) {
        activations.clear();
        pre_activations.clear();
        activations.push(x.to_vec());
        for layer in &mlp.layers {
            let (mut pre, mut post) = (Vec::new(), Vec::new());
            layer.eval(activations.last().unwrap(), &mut pre, &mut post);
            pre_activations.push(pre);
            activations.push(post);
        }
        let prediction = activations[depth][0];
        let residual = prediction - y;
        loss += residual * residual / n;

        // delta = dL/d(pre-activation), seeded at the output layer
        let mut delta = vec![2.0 * residual / n * mlp.layers[depth - 1].activation.derivative(pre_activations[depth - 1][0])];
        for l in (0..depth).rev() {
            let layer = &mlp.layers[l];
            let grad = &mut grads[l];
            let input = &activations[l];
            for o in 0..layer.out_dim {
                let d = delta[o];
                grad.d_biases[o] += d;
                let row = &mut grad.d_weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (gw, &a) in row.iter_mut().zip(input.iter()) {
                    *gw += d * a;
                }
            }
            if l > 0 {
                let mut next_delta = vec![0.0; layer.in_dim];
                for o in 0..layer.out_dim {
                    let d = delta[o];
                    let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (nd, &w) in next_delta.iter_mut().zip(row.iter()) {
                        *nd += d * w;
                    }
                }
                for (nd, &z) in next_delta.iter_mut().zip(pre_activations[l - 1].iter()) {
                    *nd *= mlp.layers[l - 1].activation.derivative(z);
                }
                delta = next_delta;
            }
        }
    }
    Ok((grads, loss))
}

// ── tests ───────────────────────────────────────────────────────────────────
