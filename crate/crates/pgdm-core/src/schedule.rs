//! Noise ladders for annealed Langevin sampling.
//!
//! The canonical parameterization is variance-exploding: a strictly
//! increasing ladder sigma_1 < ... < sigma_T with per-level step sizes
//! gamma_t = sigma_t^2 / (2 sigma_T^2). The reverse loop walks t = T..1,
//! so the step size is strictly decreasing along the chain.
//!
//! Variance-preserving fields (beta_t, alpha_bar_t) can be attached for
//! reference and tests; sampling never consumes them. The two views are
//! linked through the denoiser identity eps_theta = -sigma_t * s_theta.

use alloc::format;
use alloc::vec::Vec;

// In test builds std is linked and f64's inherent methods shadow these.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::error::ConfigError;

/// The sigma-ladder plus derived step sizes. Levels are 1-based: `t` runs
/// from 1 (least noise) to `num_levels()` (most noise).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    sigmas: Vec<f64>,
    gammas: Vec<f64>,
    vp_betas: Option<Vec<f64>>,
    vp_alpha_bars: Option<Vec<f64>>,
}

impl NoiseSchedule {
    /// Geometric ladder from `sigma_min` (t=1) to `sigma_max` (t=T).
    pub fn geometric(sigma_min: f64, sigma_max: f64, t_levels: usize) -> Result<Self, ConfigError> {
        if !(sigma_min > 0.0 && sigma_min < sigma_max && sigma_max.is_finite()) {
            return Err(ConfigError::InvalidSchedule(format!(
                "need 0 < sigma_min < sigma_max, got {sigma_min} and {sigma_max}"
            )));
        }
        if t_levels < 2 {
            return Err(ConfigError::InvalidSchedule(format!(
                "need at least 2 levels, got {t_levels}"
            )));
        }
        let ratio = sigma_max / sigma_min;
        let mut sigmas: Vec<f64> = (0..t_levels)
            .map(|k| sigma_min * ratio.powf(k as f64 / (t_levels - 1) as f64))
            .collect();
        // Pin the endpoint so sigma_T is sigma_max bit-exactly.
        sigmas[t_levels - 1] = sigma_max;
        Self::from_sigmas(sigmas)
    }

    /// Build from an explicit strictly increasing sigma ladder.
    pub fn from_sigmas(sigmas: Vec<f64>) -> Result<Self, ConfigError> {
        if sigmas.len() < 2 {
            return Err(ConfigError::InvalidSchedule(format!(
                "need at least 2 levels, got {}",
                sigmas.len()
            )));
        }
        if sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(ConfigError::InvalidSchedule(
                "sigmas must be finite and positive".into(),
            ));
        }
        if sigmas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::InvalidSchedule(
                "sigmas must be strictly increasing".into(),
            ));
        }
        let denom_sigma = sigmas[sigmas.len() - 1];
        // gamma_T = s/(2s) with the same product s on both sides, which is
        // exactly 0.5 in IEEE arithmetic.
        let gammas = sigmas
            .iter()
            .map(|s| (s * s) / (2.0 * (denom_sigma * denom_sigma)))
            .collect();
        Ok(Self {
            sigmas,
            gammas,
            vp_betas: None,
            vp_alpha_bars: None,
        })
    }

    /// Attach variance-preserving reference fields; alpha_bar_t is the
    /// running product of (1 - beta_i).
    pub fn with_vp_betas(mut self, betas: Vec<f64>) -> Result<Self, ConfigError> {
        if betas.len() != self.sigmas.len() {
            return Err(ConfigError::InvalidSchedule(format!(
                "vp betas length {} does not match {} levels",
                betas.len(),
                self.sigmas.len()
            )));
        }
        if betas.iter().any(|b| !(*b > 0.0 && *b < 1.0)) {
            return Err(ConfigError::InvalidSchedule(
                "vp betas must lie in (0, 1)".into(),
            ));
        }
        let mut alpha_bars = Vec::with_capacity(betas.len());
        let mut prod = 1.0;
        for b in &betas {
            prod *= 1.0 - b;
            alpha_bars.push(prod);
        }
        self.vp_betas = Some(betas);
        self.vp_alpha_bars = Some(alpha_bars);
        Ok(self)
    }

    /// Number of noise levels T.
    pub fn num_levels(&self) -> usize {
        self.sigmas.len()
    }

    /// sigma_t for 1-based `t`.
    pub fn sigma(&self, t: usize) -> f64 {
        assert!(t >= 1 && t <= self.sigmas.len(), "level t={t} out of range");
        self.sigmas[t - 1]
    }

    /// gamma_t = sigma_t^2 / (2 sigma_T^2) for 1-based `t`.
    pub fn gamma(&self, t: usize) -> f64 {
        assert!(t >= 1 && t <= self.gammas.len(), "level t={t} out of range");
        self.gammas[t - 1]
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn vp_betas(&self) -> Option<&[f64]> {
        self.vp_betas.as_deref()
    }

    pub fn vp_alpha_bars(&self) -> Option<&[f64]> {
        self.vp_alpha_bars.as_deref()
    }
}

/// Free-function spelling of [`NoiseSchedule::geometric`].
pub fn make_geometric_schedule(
    sigma_min: f64,
    sigma_max: f64,
    t_levels: usize,
) -> Result<NoiseSchedule, ConfigError> {
    NoiseSchedule::geometric(sigma_min, sigma_max, t_levels)
}
