//! Trainable score backend: a small fully-connected net with manual
//! forward and reverse-mode passes.
//!
//! Noise conditioning follows the NCSN convention: σ is appended to the
//! input as an extra feature and the raw output is scaled by 1/σ, so the
//! net itself learns the bounded quantity σ·s(x, σ).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

// In test builds std is linked and f64's inherent methods shadow these.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::error::ScoreError;
use crate::rng::RngStream;
use crate::score::ScoreField;
use crate::state::StateVector;

/// Smooth elementwise nonlinearity for the hidden layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Softplus,
}

impl Activation {
    fn eval(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            // Numerically stable softplus: ln(1 + e^z).
            Activation::Softplus => {
                if z > 30.0 {
                    z
                } else if z < -30.0 {
                    z.exp()
                } else {
                    z.exp().ln_1p()
                }
            }
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Softplus => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Stable name used by checkpoint headers.
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Softplus => "softplus",
        }
    }

    /// Inverse of [`Activation::name`].
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tanh" => Some(Activation::Tanh),
            "softplus" => Some(Activation::Softplus),
            _ => None,
        }
    }
}

/// A fully-connected score network. Layer ℓ maps width[ℓ] → width[ℓ+1]
/// through a row-major weight matrix and a bias vector; hidden layers
/// apply the activation, the final layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpScoreNet {
    /// Full width list including the (dim + 1) conditioned input and the
    /// dim-sized output.
    widths: Vec<usize>,
    /// Per-layer weights, row-major: `weights[l][r * widths[l] + c]`.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    activation: Activation,
    dim: usize,
}

impl MlpScoreNet {
    /// A net for `dim`-dimensional states with the given hidden widths,
    /// randomly initialized (Xavier-uniform weights, zero biases).
    pub fn new(dim: usize, hidden: &[usize], activation: Activation, seed: u64) -> Self {
        let mut net = Self::zeros(dim, hidden, activation);
        let mut rng = RngStream::new(seed, 0);
        for l in 0..net.weights.len() {
            let (fan_in, fan_out) = (net.widths[l], net.widths[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in &mut net.weights[l] {
                *w = rng.uniform_range(-bound, bound);
            }
        }
        net
    }

    /// An all-zero net: forward output is identically zero.
    pub fn zeros(dim: usize, hidden: &[usize], activation: Activation) -> Self {
        assert!(dim >= 1, "net needs dim >= 1");
        let mut widths = vec![dim + 1];
        widths.extend_from_slice(hidden);
        widths.push(dim);
        let weights = (0..widths.len() - 1)
            .map(|l| vec![0.0; widths[l] * widths[l + 1]])
            .collect();
        let biases = (1..widths.len()).map(|l| vec![0.0; widths[l]]).collect();
        Self {
            widths,
            weights,
            biases,
            activation,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    /// Total parameter count (weights + biases).
    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Flattens all parameters: per layer, the row-major weight matrix
    /// followed by the bias vector.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in 0..self.n_layers() {
            out.extend_from_slice(&self.weights[l]);
            out.extend_from_slice(&self.biases[l]);
        }
        out
    }

    /// Loads parameters from the layout produced by [`MlpScoreNet::params`].
    pub fn set_params(&mut self, flat: &[f64]) -> Result<(), ScoreError> {
        if flat.len() != self.param_count() {
            return Err(ScoreError::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        if flat.iter().any(|p| !p.is_finite()) {
            return Err(ScoreError::ShapeMismatch(String::from(
                "non-finite parameter",
            )));
        }
        let mut off = 0;
        for l in 0..self.n_layers() {
            let nw = self.weights[l].len();
            self.weights[l].copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = self.biases[l].len();
            self.biases[l].copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    pub fn params_are_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .all(|v| v.iter().all(|p| p.is_finite()))
    }

    fn check_input(&self, x: &StateVector, sigma: f64) -> Result<(), ScoreError> {
        if x.dim() != self.dim {
            return Err(ScoreError::DimMismatch {
                expected: self.dim,
                actual: x.dim(),
            });
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(ScoreError::ShapeMismatch(format!(
                "noise level must be positive and finite, got {sigma}"
            )));
        }
        Ok(())
    }

    /// Forward pass keeping every layer's pre-activation and activation,
    /// as needed by the backward pass. `acts[0]` is the conditioned
    /// input; the returned output includes the 1/σ scale.
    fn forward_cached(&self, x: &[f64], sigma: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
        let mut input = Vec::with_capacity(self.dim + 1);
        input.extend_from_slice(x);
        input.push(sigma);

        let mut acts: Vec<Vec<f64>> = vec![input];
        let mut pres: Vec<Vec<f64>> = Vec::with_capacity(self.n_layers());
        for l in 0..self.n_layers() {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let prev = &acts[l];
            let mut z = self.biases[l].clone();
            for r in 0..n_out {
                let row = &self.weights[l][r * n_in..(r + 1) * n_in];
                let mut s = z[r];
                for c in 0..n_in {
                    s += row[c] * prev[c];
                }
                z[r] = s;
            }
            let a = if l + 1 == self.n_layers() {
                z.clone()
            } else {
                z.iter().map(|&v| self.activation.eval(v)).collect()
            };
            pres.push(z);
            acts.push(a);
        }
        let out = acts
            .last()
            .expect("at least one layer")
            .iter()
            .map(|&v| v / sigma)
            .collect();
        (acts, pres, out)
    }
}

/// Deterministic evaluation of the net at `(x, sigma)`, sigma > 0.
pub fn mlp_forward(
    net: &MlpScoreNet,
    x: &StateVector,
    sigma: f64,
) -> Result<StateVector, ScoreError> {
    net.check_input(x, sigma)?;
    let (_, _, out) = net.forward_cached(x.data(), sigma);
    StateVector::flat(out).map_err(|_| ScoreError::ShapeMismatch("non-finite output".into()))
}

/// Exact reverse-mode gradients of `upstream · mlp_forward(net, x, σ)`
/// with respect to every parameter, flattened in the same layout as
/// [`MlpScoreNet::params`].
pub fn mlp_backward(
    net: &MlpScoreNet,
    x: &StateVector,
    sigma: f64,
    upstream: &[f64],
) -> Result<Vec<f64>, ScoreError> {
    net.check_input(x, sigma)?;
    if upstream.len() != net.dim() {
        return Err(ScoreError::ShapeMismatch(format!(
            "upstream gradient has {} entries, output has {}",
            upstream.len(),
            net.dim()
        )));
    }
    let (acts, pres, _) = net.forward_cached(x.data(), sigma);

    // The output scale 1/σ folds into the seed gradient.
    let mut delta: Vec<f64> = upstream.iter().map(|&u| u / sigma).collect();

    let mut w_grads: Vec<Vec<f64>> = net.weights.iter().map(|w| vec![0.0; w.len()]).collect();
    let mut b_grads: Vec<Vec<f64>> = net.biases.iter().map(|b| vec![0.0; b.len()]).collect();

    for l in (0..net.n_layers()).rev() {
        let (n_in, n_out) = (net.widths[l], net.widths[l + 1]);
        // Hidden layers differentiate through the activation; the final
        // layer is linear.
        if l + 1 != net.n_layers() {
            for r in 0..n_out {
                delta[r] *= net.activation.derivative(pres[l][r]);
            }
        }
        let prev = &acts[l];
        for r in 0..n_out {
            b_grads[l][r] = delta[r];
            for c in 0..n_in {
                w_grads[l][r * n_in + c] = delta[r] * prev[c];
            }
        }
        if l > 0 {
            let mut next = vec![0.0; n_in];
            for (r, &d) in delta.iter().enumerate().take(n_out) {
                let row = &net.weights[l][r * n_in..(r + 1) * n_in];
                for c in 0..n_in {
                    next[c] += d * row[c];
                }
            }
            delta = next;
        }
    }

    let mut flat = Vec::with_capacity(net.param_count());
    for l in 0..net.n_layers() {
        flat.extend_from_slice(&w_grads[l]);
        flat.extend_from_slice(&b_grads[l]);
    }
    Ok(flat)
}

impl ScoreField for MlpScoreNet {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn score(&self, x: &StateVector, sigma: f64) -> Result<StateVector, ScoreError> {
        mlp_forward(self, x, sigma)
    }
}
