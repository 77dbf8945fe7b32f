//! Score functions s(x, σ): the vector field of log-density gradients at
//! each noise level. Two backends: an exact analytic one for Gaussian
//! mixtures and a small trainable MLP fit by denoising score matching.

mod dsm;
mod gmm;
mod mlp;

pub use dsm::{dsm_train, DsmConfig, LossTrace};
pub use gmm::{gmm_log_density, gmm_score, GaussianMixture};
pub use mlp::{mlp_backward, mlp_forward, Activation, MlpScoreNet};

use crate::error::ScoreError;
use crate::state::StateVector;

/// A score field: the estimated gradient of the log density of
/// σ-perturbed data, evaluated at a point and a noise level.
///
/// Evaluation is pure, so implementors are safe to share across threads.
pub trait ScoreField {
    /// Dimension of the state this field is defined over.
    fn dim(&self) -> usize;

    /// The score at `x` for noise level `sigma`.
    fn score(&self, x: &StateVector, sigma: f64) -> Result<StateVector, ScoreError>;
}

/// Adapts a plain function to [`ScoreField`]; handy for closed-form
/// fields in tests (for example `s(x) = -x`).
pub struct FnScore<F> {
    dim: usize,
    f: F,
}

impl<F> FnScore<F>
where
    F: Fn(&StateVector, f64) -> StateVector,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> ScoreField for FnScore<F>
where
    F: Fn(&StateVector, f64) -> StateVector,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn score(&self, x: &StateVector, sigma: f64) -> Result<StateVector, ScoreError> {
        if x.dim() != self.dim {
            return Err(ScoreError::DimMismatch {
                expected: self.dim,
                actual: x.dim(),
            });
        }
        Ok((self.f)(x, sigma))
    }
}
