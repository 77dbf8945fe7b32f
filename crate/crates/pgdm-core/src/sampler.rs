//! Annealed Langevin sampling with per-step projection onto a
//! constraint set.
//!
//! One chain anneals through the noise schedule from the highest level
//! down: at each level it runs a fixed number of Langevin updates
//! `x ← x + γ·s(x, σ) + √(2γ)·ε`, each followed (when projections are
//! active) by a Euclidean projection onto the constraint set, and hands
//! the final iterate to the next level. Baseline variants skip the
//! projection entirely or apply it once at the very end; a corrector
//! variant replaces the schedule step size with a signal-to-noise
//! adaptive one.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

// In test builds std is linked and f64's inherent methods shadow these.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::error::SamplerError;
use crate::linalg::norm;
use crate::projections::ConstraintSet;
use crate::rng::RngStream;
use crate::schedule::NoiseSchedule;
use crate::score::ScoreField;
use crate::state::StateVector;

/// Any coordinate beyond this magnitude aborts the chain as diverged.
pub const DIVERGENCE_GUARD: f64 = 1e6;

/// Which sampling loop to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerVariant {
    /// Projection after every Langevin update, gated by
    /// `projection_start_level`.
    Projected,
    /// Plain annealed Langevin; the constraint is only measured for the
    /// trace, never applied.
    Unconstrained,
    /// Unconstrained run followed by a single projection of the final
    /// state.
    PostProject,
    /// Projected loop whose step size adapts to the noise-to-score
    /// ratio instead of following the schedule.
    SnrCorrector,
}

/// Full specification of a sampling run.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub schedule: NoiseSchedule,
    /// Langevin updates per noise level (the inner loop length).
    pub steps_per_level: usize,
    /// Projections are applied at levels `t ≤ projection_start_level`;
    /// the number of levels means "always", 0 means "never".
    pub projection_start_level: usize,
    pub variant: SamplerVariant,
    /// Target noise-to-score ratio; read only by
    /// [`SamplerVariant::SnrCorrector`].
    pub snr_r: f64,
    pub seed: u64,
    /// Record per-step diagnostics. Costs one constraint-distance
    /// evaluation per step (two when projecting), so heavy constraint
    /// solvers are better run with this off.
    pub record_trace: bool,
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.steps_per_level == 0 {
            return Err(SamplerError::Config(String::from(
                "steps_per_level must be at least 1",
            )));
        }
        let t = self.schedule.num_levels();
        if self.projection_start_level > t {
            return Err(SamplerError::Config(format!(
                "projection_start_level {} exceeds the {} schedule levels",
                self.projection_start_level, t
            )));
        }
        if self.variant == SamplerVariant::SnrCorrector
            && !(self.snr_r > 0.0 && self.snr_r.is_finite())
        {
            return Err(SamplerError::Config(format!(
                "snr_r must be positive and finite, got {}",
                self.snr_r
            )));
        }
        Ok(())
    }
}

/// One per-step diagnostic row: squared constraint distance before and
/// after the (possibly skipped) projection, score norm, and the step
/// size actually used. `level` runs from the number of levels down to 1;
/// a terminal projection of the final-state baseline is recorded with
/// `level = 0, step = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub level: usize,
    pub step: usize,
    pub pre_error: f64,
    pub post_error: f64,
    pub grad_norm: f64,
    pub gamma: f64,
}

/// Diagnostics for one chain. When the projection is inactive at a step,
/// `post_error` repeats `pre_error`. Distance measurements that fail
/// (a constraint solver refusing an unreachable state) are recorded as
/// NaN rather than aborting the chain.
#[derive(Debug, Clone, Default)]
pub struct ChainTrace {
    pub records: Vec<TraceRecord>,
    pub notes: Vec<String>,
}

/// Step size that equalises noise and score magnitudes at the target
/// ratio `r`: `2·(r·‖ε‖/‖g‖)²`.
pub fn snr_step_size(snr_r: f64, noise_norm: f64, grad_norm: f64) -> f64 {
    let ratio = snr_r * noise_norm / grad_norm;
    2.0 * ratio * ratio
}

/// One Langevin update `x + γ·s(x, σ) + √(2γ)·ε` with caller-supplied
/// noise (the deterministic core of [`update_step_u`]).
///
/// Coordinates beyond the divergence guard surface as
/// [`SamplerError::Divergence`] with zeroed level context; the sampling
/// loops re-tag the error with the real level and step.
pub fn update_step_with_noise(
    x: &StateVector,
    score: &dyn ScoreField,
    sigma: f64,
    gamma: f64,
    eps: &[f64],
) -> Result<StateVector, SamplerError> {
    assert!(gamma > 0.0, "step size must be positive");
    assert_eq!(eps.len(), x.dim(), "noise dimension mismatch");
    let s = score.score(x, sigma)?;
    let root = (2.0 * gamma).sqrt();
    let mut max_abs = 0.0f64;
    let data: Vec<f64> = x
        .data()
        .iter()
        .zip(s.data().iter().zip(eps))
        .map(|(xi, (si, ei))| {
            let v = xi + gamma * si + root * ei;
            max_abs = max_abs.max(v.abs());
            v
        })
        .collect();
    if !(max_abs <= DIVERGENCE_GUARD) {
        return Err(SamplerError::Divergence {
            t: 0,
            i: 0,
            max_abs,
        });
    }
    Ok(x.with_data(data).expect("guarded update stays finite"))
}

/// One Langevin update with a fresh standard-normal draw from `rng`.
pub fn update_step_u(
    x: &StateVector,
    score: &dyn ScoreField,
    sigma: f64,
    gamma: f64,
    rng: &mut RngStream,
) -> Result<StateVector, SamplerError> {
    let eps = rng.normal_vec(x.dim());
    update_step_with_noise(x, score, sigma, gamma, &eps)
}

/// A Langevin update followed by projection onto the constraint set:
/// the noise is drawn first, the projection always comes last.
pub fn projected_step(
    x: &StateVector,
    score: &dyn ScoreField,
    sigma: f64,
    gamma: f64,
    constraint: &dyn ConstraintSet,
    rng: &mut RngStream,
) -> Result<StateVector, SamplerError> {
    let updated = update_step_u(x, score, sigma, gamma, rng)?;
    Ok(constraint.project(&updated)?)
}

fn measure(constraint: &dyn ConstraintSet, x: &[f64]) -> f64 {
    match StateVector::flat(x.to_vec()) {
        Ok(state) => constraint.distance_sq(&state).unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    }
}

/// Runs a single chain. Chain `chain_id` draws from the RNG stream of
/// the same id under `config.seed`, so a chain's output is identical
/// whether it runs alone or as part of a batch.
pub fn sample_chain(
    config: &SamplerConfig,
    score: &dyn ScoreField,
    constraint: &dyn ConstraintSet,
    chain_id: u64,
) -> Result<(StateVector, ChainTrace), SamplerError> {
    config.validate()?;
    let dim = score.dim();
    if constraint.dim() != dim {
        return Err(SamplerError::Config(format!(
            "score dimension {} vs constraint dimension {}",
            dim,
            constraint.dim()
        )));
    }

    let schedule = &config.schedule;
    let levels = schedule.num_levels();
    let mut rng = RngStream::new(config.seed, chain_id);
    let sigma_max = schedule.sigma(levels);
    let mut x: Vec<f64> = rng.normal_vec(dim).iter().map(|e| sigma_max * e).collect();
    let mut trace = ChainTrace::default();
    let mut last_snr_gamma: Option<f64> = None;

    for t in (1..=levels).rev() {
        let sigma = schedule.sigma(t);
        let schedule_gamma = schedule.gamma(t);
        let project_now = match config.variant {
            SamplerVariant::Projected | SamplerVariant::SnrCorrector => {
                t <= config.projection_start_level
            }
            SamplerVariant::Unconstrained | SamplerVariant::PostProject => false,
        };
        for i in 1..=config.steps_per_level {
            let state = StateVector::flat(x.clone()).expect("chain state stays finite");
            let s = score
                .score(&state, sigma)
                .map_err(|_| SamplerError::NonFiniteScore { t, i })?;
            let grad_norm = norm(s.data());
            // Exactly one noise draw per inner iteration, before any
            // projection.
            let eps = rng.normal_vec(dim);
            let gamma = if config.variant == SamplerVariant::SnrCorrector {
                if grad_norm > 0.0 {
                    let g = snr_step_size(config.snr_r, norm(&eps), grad_norm);
                    last_snr_gamma = Some(g);
                    g
                } else if let Some(g) = last_snr_gamma {
                    g
                } else {
                    trace.notes.push(format!(
                        "level {t} step {i}: zero score gradient before any \
                         adaptive step, fell back to the schedule step size"
                    ));
                    schedule_gamma
                }
            } else {
                schedule_gamma
            };

            let root = (2.0 * gamma).sqrt();
            let mut max_abs = 0.0f64;
            for (xd, (sd, ed)) in x.iter_mut().zip(s.data().iter().zip(&eps)) {
                *xd += gamma * sd + root * ed;
                max_abs = max_abs.max(xd.abs());
            }
            // Negated comparison so NaN coordinates also trip the guard.
            if !(max_abs <= DIVERGENCE_GUARD) {
                return Err(SamplerError::Divergence { t, i, max_abs });
            }

            let pre_error = if config.record_trace {
                measure(constraint, &x)
            } else {
                0.0
            };
            if project_now {
                let state = StateVector::flat(x.clone()).expect("guarded state is finite");
                let projected = constraint.project(&state)?;
                x.copy_from_slice(projected.data());
            }
            if config.record_trace {
                let post_error = if project_now {
                    measure(constraint, &x)
                } else {
                    pre_error
                };
                trace.records.push(TraceRecord {
                    level: t,
                    step: i,
                    pre_error,
                    post_error,
                    grad_norm,
                    gamma,
                });
            }
        }
    }

    if config.variant == SamplerVariant::PostProject {
        let state = StateVector::flat(x.clone()).expect("guarded state is finite");
        let pre_error = if config.record_trace {
            measure(constraint, &x)
        } else {
            0.0
        };
        let projected = constraint.project(&state)?;
        x.copy_from_slice(projected.data());
        if config.record_trace {
            trace.records.push(TraceRecord {
                level: 0,
                step: 0,
                pre_error,
                post_error: measure(constraint, &x),
                grad_norm: 0.0,
                gamma: 0.0,
            });
        }
    }

    Ok((
        StateVector::flat(x).expect("final state is finite"),
        trace,
    ))
}

/// Runs `n_samples` independent chains (streams `0..n_samples`) and
/// collects their final states and traces. The first failing chain
/// aborts the batch; callers that want per-chain failure handling run
/// [`sample_chain`] directly.
pub fn sample(
    config: &SamplerConfig,
    score: &dyn ScoreField,
    constraint: &dyn ConstraintSet,
    n_samples: usize,
) -> Result<(Vec<StateVector>, Vec<ChainTrace>), SamplerError> {
    assert!(n_samples >= 1, "need at least one chain");
    let mut samples = Vec::with_capacity(n_samples);
    let mut traces = Vec::with_capacity(n_samples);
    for chain in 0..n_samples {
        let (x, trace) = sample_chain(config, score, constraint, chain as u64)?;
        samples.push(x);
        traces.push(trace);
    }
    Ok((samples, traces))
}

/// Runs the noise-to-score adaptive corrector: [`sample`] with the
/// variant forced to [`SamplerVariant::SnrCorrector`].
pub fn sample_sde_corrector(
    config: &SamplerConfig,
    score: &dyn ScoreField,
    constraint: &dyn ConstraintSet,
    n_samples: usize,
) -> Result<(Vec<StateVector>, Vec<ChainTrace>), SamplerError> {
    let mut forced = config.clone();
    forced.variant = SamplerVariant::SnrCorrector;
    sample(&forced, score, constraint, n_samples)
}
