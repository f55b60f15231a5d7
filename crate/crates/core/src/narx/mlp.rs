//! Small dense feed-forward network with tanh hidden layers and a linear
//! output layer. Used as the function approximator for the process net and the
//! disturbance net of a NARX model.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    fn apply(&self, input: &[f64], output: &mut Vec<f64>) {
        debug_assert_eq!(input.len(), self.in_dim);
        output.clear();
        for r in 0..self.out_dim {
            let row = &self.weights[r * self.in_dim..(r + 1) * self.in_dim];
            let mut acc = self.biases[r];
            for (w, x) in row.iter().zip(input) {
                acc += w * x;
            }
            output.push(acc);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
    pub seed: u64,
}

/// Parameter gradients with the same layout as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub layers: Vec<LayerGradient>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub d_weights: Vec<f64>,
    pub d_biases: Vec<f64>,
}

impl MlpGradient {
    pub fn zeros_like(net: &Mlp) -> Self {
        MlpGradient {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradient {
                    d_weights: vec![0.0; l.weights.len()],
                    d_biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &MlpGradient) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.d_weights.iter_mut().zip(&b.d_weights) {
                *x += y;
            }
            for (x, y) in a.d_biases.iter_mut().zip(&b.d_biases) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            for x in &mut l.d_weights {
                *x *= factor;
            }
            for x in &mut l.d_biases {
                *x *= factor;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.d_weights.iter().chain(&l.d_biases))
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Mlp {
    /// Builds a network with the given layer sizes `[input, hidden.., output]`.
    /// Weights are seeded uniform in +-1/sqrt(fan_in), biases zero.
    pub fn new(sizes: &[usize], seed: u64) -> Self {
        assert!(sizes.len() >= 2, "network needs at least input and output sizes");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound);
                DenseLayer {
                    in_dim: fan_in,
                    out_dim: fan_out,
                    weights: (0..fan_in * fan_out).map(|_| dist.sample(&mut rng)).collect(),
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Mlp { layers, seed }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn zero_weights(&mut self) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
            l.biases.iter_mut().for_each(|b| *b = 0.0);
        }
    }

    /// Forward pass: tanh on every layer except the last, which stays linear.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut current = input.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&current, &mut next);
            if i != last {
                next.iter_mut().for_each(|v| *v = v.tanh());
            }
            std::mem::swap(&mut current, &mut next);
        }
        current
    }

    /// Forward pass keeping every layer's activation (index 0 is the input).
    pub fn forward_trace(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::new();
            layer.apply(activations.last().unwrap(), &mut out);
            if i != last {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            activations.push(out);
        }
        activations
    }

    /// Backpropagates `d_output` (dL/dy) through the trace produced by
    /// `forward_trace`, accumulating parameter gradients into `grad`.
    pub fn backward(&self, activations: &[Vec<f64>], d_output: &[f64], grad: &mut MlpGradient) {
        let mut delta = d_output.to_vec();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input = &activations[li];
            let g = &mut grad.layers[li];
            for r in 0..layer.out_dim {
                g.d_biases[r] += delta[r];
                let row = &mut g.d_weights[r * layer.in_dim..(r + 1) * layer.in_dim];
                for (c, x) in input.iter().enumerate() {
                    row[c] += delta[r] * x;
                }
            }
            if li == 0 {
                break;
            }
            // Propagate to the previous (tanh) layer: delta' = W^T delta * (1 - a^2).
            let mut prev = vec![0.0; layer.in_dim];
            for r in 0..layer.out_dim {
                let row = &layer.weights[r * layer.in_dim..(r + 1) * layer.in_dim];
                for (c, p) in prev.iter_mut().enumerate() {
                    *p += row[c] * delta[r];
                }
            }
            for (p, a) in prev.iter_mut().zip(&activations[li]) {
                *p *= 1.0 - a * a;
            }
            delta = prev;
        }
    }

    pub fn apply_gradient(&mut self, grad: &MlpGradient, learning_rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grad.layers) {
            for (w, d) in layer.weights.iter_mut().zip(&g.d_weights) {
                *w -= learning_rate * d;
            }
            for (b, d) in layer.biases.iter_mut().zip(&g.d_biases) {
                *b -= learning_rate * d;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }
}
