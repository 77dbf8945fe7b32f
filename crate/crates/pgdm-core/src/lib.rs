//! Projected generative diffusion: annealed Langevin sampling with
//! per-step projection onto a constraint set.
//!
//! The crate is `no_std` (with `alloc`): it holds the numerical core —
//! noise schedules, score models, projection operators, the sampler,
//! statistical checks of the projection inequalities, and sample-quality
//! metrics. File formats, datasets, and the CLI live in the companion
//! `pgdm-harness` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
mod linalg;
pub mod metrics;
pub mod projections;
pub mod rng;
pub mod sampler;
pub mod schedule;
pub mod score;
pub mod state;
pub mod theory;

pub use error::{ConfigError, MetricsError, ProjectionError, SamplerError, ScoreError, TheoryError};
pub use projections::{
    disc_mask, project_affine, project_ball, project_box, project_halfspace,
    project_intersection_dykstra, project_object_position, project_porosity, project_trajectory,
    AffineSet, BallSet, BoxSet, Circle, ConstraintSet, HalfspaceSet, IdentityConstraint,
    IntersectionSet, ObjectPlacementConstraint, PorosityConstraint, TrajectoryConstraint,
};
pub use metrics::{
    path_length, porosity_measure, satisfaction_curve, sliced_wasserstein, success_rate,
    SatisfactionCurve, DEFAULT_SW_PROJECTIONS, SUCCESS_TOL,
};
pub use rng::{gaussian_noise, RngStream};
pub use sampler::{
    projected_step, sample, sample_chain, sample_sde_corrector, snr_step_size, update_step_u,
    update_step_with_noise, ChainTrace, SamplerConfig, SamplerVariant, TraceRecord,
};
pub use schedule::{make_geometric_schedule, NoiseSchedule};
pub use score::{
    dsm_train, gmm_log_density, gmm_score, mlp_backward, mlp_forward, Activation, DsmConfig,
    FnScore, GaussianMixture, LossTrace, MlpScoreNet, ScoreField,
};
pub use state::{ShapeTag, StateVector};
pub use theory::{
    compute_reach, verify_error_ordering, verify_error_vanishes, ErrorOrderingReport,
    LevelStepError, ProbeConstraint, ProbeStates, TheoremProbe, VanishingErrorReport,
    VANISHING_CHECK_CHAINS,
};
