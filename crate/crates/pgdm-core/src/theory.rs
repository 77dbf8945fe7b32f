//! Monte-Carlo checks of the projection analysis in the convex setting.
//!
//! Both checks run on a probe problem whose log-density is a unit
//! Gaussian centered at the origin, so the score is `-x` and the
//! unconstrained optimum is the origin, while the feasible set excludes
//! that optimum. [`verify_error_ordering`] estimates the expected
//! constraint error of one update step with and without projecting the
//! starting state first and checks that projecting never increases it.
//! [`verify_error_vanishes`] runs full projected annealed chains and
//! scans the per-step mean error for the first time it falls below a
//! requested bound and stays there.

// In test builds std is linked and f64's inherent methods shadow these.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::TheoryError;
use crate::linalg::norm;
use crate::projections::{BallSet, ConstraintSet, HalfspaceSet, IdentityConstraint};
use crate::rng::RngStream;
use crate::sampler::{sample, SamplerConfig, SamplerVariant};
use crate::schedule::NoiseSchedule;
use crate::score::GaussianMixture;
use crate::state::StateVector;

/// Chains averaged by [`verify_error_vanishes`].
pub const VANISHING_CHECK_CHAINS: usize = 100;

/// Candidate draws allowed per accepted trial state before the
/// generator is declared exhausted.
const MAX_DRAWS_PER_TRIAL: usize = 10_000;

/// Convex feasible regions with a closed-form optimal reach.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeConstraint {
    /// The half-line `{x ≥ c}` in one dimension, with `c > 0` so the
    /// optimum at the origin is infeasible.
    Halfspace { c: f64 },
    /// A Euclidean ball `‖x − center‖ ≤ radius` with `‖center‖ >
    /// radius`, so the optimum at the origin is infeasible.
    Ball { center: Vec<f64>, radius: f64 },
    /// The whole space. Degenerate member: the optimum itself is
    /// feasible and the optimal reach is zero. It exists to reduce the
    /// chain check to an unconstrained run.
    Unconstrained { dim: usize },
}

impl ProbeConstraint {
    /// Dimension of the states the region lives in.
    pub fn dim(&self) -> usize {
        match self {
            ProbeConstraint::Halfspace { .. } => 1,
            ProbeConstraint::Ball { center, .. } => center.len(),
            ProbeConstraint::Unconstrained { dim } => *dim,
        }
    }

    fn validate(&self) -> Result<(), TheoryError> {
        match self {
            ProbeConstraint::Halfspace { c } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(TheoryError::UnsupportedProbe(format!(
                        "half-line bound must be positive and finite, got {c}"
                    )));
                }
            }
            ProbeConstraint::Ball { center, radius } => {
                if center.is_empty() || center.iter().any(|v| !v.is_finite()) {
                    return Err(TheoryError::UnsupportedProbe(
                        "ball center must be a nonempty finite vector".into(),
                    ));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(TheoryError::UnsupportedProbe(format!(
                        "ball radius must be positive and finite, got {radius}"
                    )));
                }
                if norm(center) <= *radius {
                    return Err(TheoryError::UnsupportedProbe(
                        "ball must exclude the origin (‖center‖ > radius)".into(),
                    ));
                }
            }
            ProbeConstraint::Unconstrained { dim } => {
                if *dim == 0 {
                    return Err(TheoryError::UnsupportedProbe(
                        "dimension must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Builds the concrete projection-backed set for this region.
    pub fn build(&self) -> Box<dyn ConstraintSet + Send + Sync> {
        match self {
            ProbeConstraint::Halfspace { c } => {
                Box::new(HalfspaceSet::coordinate_at_least(1, 0, *c))
            }
            ProbeConstraint::Ball { center, radius } => {
                Box::new(BallSet::new(center.clone(), *radius))
            }
            ProbeConstraint::Unconstrained { dim } => Box::new(IdentityConstraint::new(*dim)),
        }
    }
}

/// One verification setting: the unit-Gaussian probe density (score
/// `-x`, optimum at the origin), a convex feasible region, and a step
/// size in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremProbe {
    constraint: ProbeConstraint,
    gamma: f64,
}

impl TheoremProbe {
    /// Validates the region geometry and the step size.
    pub fn new(constraint: ProbeConstraint, gamma: f64) -> Result<Self, TheoryError> {
        constraint.validate()?;
        if !(gamma.is_finite() && gamma > 0.0 && gamma < 1.0) {
            return Err(TheoryError::UnsupportedProbe(format!(
                "step size must lie in (0, 1), got {gamma}"
            )));
        }
        Ok(Self { constraint, gamma })
    }

    /// The feasible region under test.
    pub fn constraint(&self) -> &ProbeConstraint {
        &self.constraint
    }

    /// Step size γ of the update under test.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// State dimension.
    pub fn dim(&self) -> usize {
        self.constraint.dim()
    }

    /// Whether one deterministic gradient step from `x` lands at least
    /// as close to the optimum as the optimal reach of the feasible
    /// set — the regime the error-ordering inequality assumes.
    pub fn within_reach(&self, x: &[f64]) -> bool {
        norm(x) * (1.0 - self.gamma) <= compute_reach(self)
    }
}

/// Distance from the optimum to the closest point reachable via a
/// single deterministic gradient step `x ↦ x + γ·(−x)` started
/// anywhere in the feasible region. A step started at the region's
/// nearest point to the origin shrinks its norm by `1 − γ`, so the
/// reach is that nearest distance scaled by `1 − γ`.
pub fn compute_reach(probe: &TheoremProbe) -> f64 {
    let shrink = 1.0 - probe.gamma();
    match probe.constraint() {
        ProbeConstraint::Halfspace { c } => c * shrink,
        ProbeConstraint::Ball { center, radius } => (norm(center) - radius) * shrink,
        ProbeConstraint::Unconstrained { .. } => 0.0,
    }
}

/// How trial starting states are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeStates {
    /// Every trial starts from this exact state.
    Point(StateVector),
    /// Independent uniform draws from an axis-aligned box.
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
}

impl ProbeStates {
    /// Dimension of the generated states.
    pub fn dim(&self) -> usize {
        match self {
            ProbeStates::Point(x) => x.dim(),
            ProbeStates::UniformBox { lo, .. } => lo.len(),
        }
    }

    fn validate(&self) -> Result<(), TheoryError> {
        match self {
            ProbeStates::Point(_) => Ok(()),
            ProbeStates::UniformBox { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(TheoryError::InvalidArgument(
                        "box bounds must be nonempty and of equal length".into(),
                    ));
                }
                for (l, h) in lo.iter().zip(hi) {
                    if !(l.is_finite() && h.is_finite() && l <= h) {
                        return Err(TheoryError::InvalidArgument(format!(
                            "box bounds must be finite with lo ≤ hi, got [{l}, {h}]"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    fn draw(&self, rng: &mut RngStream) -> StateVector {
        match self {
            ProbeStates::Point(x) => x.clone(),
            ProbeStates::UniformBox { lo, hi } => {
                let data: Vec<f64> = lo
                    .iter()
                    .zip(hi)
                    .map(|(l, h)| rng.uniform_range(*l, *h))
                    .collect();
                StateVector::flat(data).expect("finite box bounds give finite draws")
            }
        }
    }
}

/// 95% Monte-Carlo estimates of the expected one-step constraint error
/// with and without projecting the starting state first.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorOrderingReport {
    /// Mean error of the update started from the raw state.
    pub unprojected_mean: f64,
    /// Mean error of the update started from the projected state.
    pub projected_mean: f64,
    /// 95% confidence half-width of `unprojected_mean`.
    pub unprojected_ci: f64,
    /// 95% confidence half-width of `projected_mean`.
    pub projected_ci: f64,
    /// Trials accumulated.
    pub n_trials: usize,
    /// Whether the ordering holds up to confidence width:
    /// `unprojected_mean + ci ≥ projected_mean − ci`.
    pub holds: bool,
}

/// Streaming mean/variance accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, value: f64) {
        self.n += 1;
        let delta = value - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (value - self.mean);
    }

    /// 95% confidence half-width of the mean estimate.
    fn ci_halfwidth(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let variance = self.m2 / (self.n - 1) as f64;
        1.96 * (variance / self.n as f64).sqrt()
    }
}

fn draw_within_reach(
    probe: &TheoremProbe,
    states: &ProbeStates,
    rng: &mut RngStream,
    accepted: usize,
    requested: usize,
) -> Result<StateVector, TheoryError> {
    for _ in 0..MAX_DRAWS_PER_TRIAL {
        let x = states.draw(rng);
        if probe.within_reach(x.data()) {
            return Ok(x);
        }
    }
    Err(TheoryError::StateGeneratorExhausted {
        accepted,
        requested,
    })
}

/// Estimates `E[error(update(x))]` and `E[error(update(project(x)))]`
/// over `n_trials` starting states and reports whether projecting
/// first never increases the expected error (up to the confidence
/// widths). Error is the squared distance to the feasible region.
///
/// Each trial draws its state from `states`, rejecting candidates
/// whose deterministic gradient step cannot reach the optimal-reach
/// ball (the inequality's working regime), then applies the same noise
/// draw to both starting points so the comparison is paired. Trials
/// use per-trial RNG streams, so the report is independent of
/// evaluation order.
pub fn verify_error_ordering(
    probe: &TheoremProbe,
    n_trials: usize,
    states: &ProbeStates,
    seed: u64,
) -> Result<ErrorOrderingReport, TheoryError> {
    if n_trials == 0 {
        return Err(TheoryError::InvalidArgument(
            "n_trials must be positive".into(),
        ));
    }
    states.validate()?;
    if states.dim() != probe.dim() {
        return Err(TheoryError::InvalidArgument(format!(
            "state generator dimension {} vs probe dimension {}",
            states.dim(),
            probe.dim()
        )));
    }

    let set = probe.constraint().build();
    let gamma = probe.gamma();
    let shrink = 1.0 - gamma;
    let root = (2.0 * gamma).sqrt();
    let mut unprojected = Welford::default();
    let mut projected = Welford::default();

    for trial in 0..n_trials {
        let mut rng = RngStream::new(seed, trial as u64);
        let x = draw_within_reach(probe, states, &mut rng, trial, n_trials)?;
        let eps = rng.normal_vec(probe.dim());
        let update = |start: &[f64]| -> StateVector {
            let data: Vec<f64> = start
                .iter()
                .zip(&eps)
                .map(|(s, e)| shrink * s + root * e)
                .collect();
            StateVector::flat(data).expect("finite update of a finite state")
        };

        let raw_end = update(x.data());
        let start_projected = set.project(&x)?;
        let projected_end = update(start_projected.data());
        unprojected.push(set.distance_sq(&raw_end)?);
        projected.push(set.distance_sq(&projected_end)?);
    }

    let unprojected_ci = unprojected.ci_halfwidth();
    let projected_ci = projected.ci_halfwidth();
    Ok(ErrorOrderingReport {
        unprojected_mean: unprojected.mean,
        projected_mean: projected.mean,
        unprojected_ci,
        projected_ci,
        n_trials,
        holds: unprojected.mean + unprojected_ci >= projected.mean - projected_ci,
    })
}

/// Mean constraint error of one (level, step) position, averaged over
/// chains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelStepError {
    /// Noise level, counting down from the top of the ladder.
    pub level: usize,
    /// Inner iteration within the level, from 1.
    pub step: usize,
    /// Pre-projection squared distance to the feasible region,
    /// averaged over chains.
    pub mean_error: f64,
}

/// Outcome of the vanishing-error scan along a projected annealed run.
#[derive(Debug, Clone, PartialEq)]
pub struct VanishingErrorReport {
    /// First (level, step) from which the mean error is ≤ the
    /// requested bound at that position and at every later one — the
    /// stable crossing, immune to one-position dips. `None` when the
    /// bound is never reached that way.
    pub first_below: Option<(usize, usize)>,
    /// Mean error at the final position of the run.
    pub final_error: f64,
    /// Mean error at every (level, step) position, in chain order.
    pub error_trace: Vec<LevelStepError>,
}

impl VanishingErrorReport {
    /// Mean error per level in chain order (highest level first),
    /// averaging the per-step means within each level.
    pub fn level_means(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        let mut count = 0usize;
        for record in &self.error_trace {
            match out.last_mut() {
                Some((level, acc)) if *level == record.level => {
                    *acc += record.mean_error;
                    count += 1;
                }
                _ => {
                    if let Some((_, acc)) = out.last_mut() {
                        *acc /= count as f64;
                    }
                    out.push((record.level, record.mean_error));
                    count = 1;
                }
            }
        }
        if let Some((_, acc)) = out.last_mut() {
            *acc /= count as f64;
        }
        out
    }
}

/// Runs [`VANISHING_CHECK_CHAINS`] projected annealed chains on the
/// probe problem, averages the pre-projection error at every (level,
/// step) position across chains, and scans for the stable crossing:
/// the first position from which that mean stays at or below `xi` for
/// the rest of the run. A bound that is never reached is reported
/// (`first_below = None`), not raised as an error.
pub fn verify_error_vanishes(
    probe: &TheoremProbe,
    schedule: &NoiseSchedule,
    steps_per_level: usize,
    xi: f64,
    seed: u64,
) -> Result<VanishingErrorReport, TheoryError> {
    if !(xi.is_finite() && xi > 0.0) {
        return Err(TheoryError::InvalidArgument(format!(
            "the error bound must be positive and finite, got {xi}"
        )));
    }

    let dim = probe.dim();
    let set = probe.constraint().build();
    let score = GaussianMixture::single(vec![0.0; dim], 1.0)
        .expect("unit-variance Gaussian at the origin is a valid density");
    let config = SamplerConfig {
        schedule: schedule.clone(),
        steps_per_level,
        projection_start_level: schedule.num_levels(),
        variant: SamplerVariant::Projected,
        snr_r: 0.2,
        seed,
        record_trace: true,
    };
    let (_, traces) = sample(&config, &score, set.as_ref(), VANISHING_CHECK_CHAINS)?;

    let n_records = traces[0].records.len();
    let mut error_trace = Vec::with_capacity(n_records);
    for j in 0..n_records {
        let mut mean = 0.0;
        for trace in &traces {
            mean += trace.records[j].pre_error;
        }
        mean /= traces.len() as f64;
        error_trace.push(LevelStepError {
            level: traces[0].records[j].level,
            step: traces[0].records[j].step,
            mean_error: mean,
        });
    }

    let mut first_idx = None;
    for (j, record) in error_trace.iter().enumerate().rev() {
        if record.mean_error <= xi {
            first_idx = Some(j);
        } else {
            break;
        }
    }
    let final_error = error_trace
        .last()
        .map(|r| r.mean_error)
        .expect("a run has at least one record");
    Ok(VanishingErrorReport {
        first_below: first_idx.map(|k| (error_trace[k].level, error_trace[k].step)),
        final_error,
        error_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::TheoryError;

    fn halfspace_probe(c: f64, gamma: f64) -> TheoremProbe {
        TheoremProbe::new(ProbeConstraint::Halfspace { c }, gamma).unwrap()
    }

    #[test]
    fn reach_matches_halfline_formula() {
        assert_eq!(compute_reach(&halfspace_probe(1.0, 0.5)), 0.5);
        assert_eq!(compute_reach(&halfspace_probe(2.0, 0.05)), 2.0 * 0.95);
        // Vanishing step: the reach tends to the nearest feasible point.
        let tiny = compute_reach(&halfspace_probe(1.0, 1e-12));
        assert!((tiny - 1.0).abs() < 1e-11);
    }

    /// Independent check of the ball formula: dense polar grid over the
    /// ball, minimizing the post-step distance to the origin.
    #[test]
    fn reach_matches_ball_grid_search() {
        let center = alloc::vec![2.0, 0.0];
        let radius = 1.0;
        let gamma = 0.3;
        let probe =
            TheoremProbe::new(ProbeConstraint::Ball { center: center.clone(), radius }, gamma)
                .unwrap();
        let analytic = compute_reach(&probe);
        assert!((analytic - 0.7).abs() < 1e-12);

        let mut best = f64::INFINITY;
        let n = 400;
        for i in 0..=n {
            let r = radius * i as f64 / n as f64;
            for j in 0..n {
                let theta = core::f64::consts::TAU * j as f64 / n as f64;
                let x = [center[0] + r * theta.cos(), center[1] + r * theta.sin()];
                best = best.min((1.0 - gamma) * norm(&x));
            }
        }
        assert!(
            (analytic - best).abs() < 3e-3,
            "analytic {analytic} vs grid {best}"
        );
    }

    #[test]
    fn degenerate_probes_are_rejected() {
        assert!(matches!(
            TheoremProbe::new(ProbeConstraint::Halfspace { c: 0.0 }, 0.3),
            Err(TheoryError::UnsupportedProbe(_))
        ));
        assert!(matches!(
            TheoremProbe::new(ProbeConstraint::Halfspace { c: 1.0 }, 1.0),
            Err(TheoryError::UnsupportedProbe(_))
        ));
        assert!(matches!(
            TheoremProbe::new(ProbeConstraint::Halfspace { c: 1.0 }, 0.0),
            Err(TheoryError::UnsupportedProbe(_))
        ));
        // Ball containing the origin: the optimum would be feasible.
        assert!(matches!(
            TheoremProbe::new(
                ProbeConstraint::Ball {
                    center: alloc::vec![0.5, 0.0],
                    radius: 1.0
                },
                0.3
            ),
            Err(TheoryError::UnsupportedProbe(_))
        ));
    }

    #[test]
    fn reach_criterion_accepts_near_optimal_states_only() {
        let probe = halfspace_probe(1.0, 0.3);
        assert!(probe.within_reach(&[0.5]));
        // Boundary state: equality holds exactly.
        assert!(probe.within_reach(&[1.0]));
        assert!(!probe.within_reach(&[1.5]));
        assert!(probe.within_reach(&[-0.9]));
    }

    /// A feasible starting point projects to itself, so with paired
    /// noise both sides of the comparison are identical.
    #[test]
    fn feasible_start_gives_identical_sides() {
        let probe = halfspace_probe(1.0, 0.3);
        let states = ProbeStates::Point(StateVector::flat(alloc::vec![1.0]).unwrap());
        let report = verify_error_ordering(&probe, 2_000, &states, 7).unwrap();
        assert_eq!(report.unprojected_mean, report.projected_mean);
        assert_eq!(report.unprojected_ci, report.projected_ci);
        assert!(report.holds);
    }

    /// Infeasible starts near the optimum: projecting first must
    /// strictly lower the expected error, beyond the confidence widths.
    #[test]
    fn infeasible_starts_order_strictly() {
        let probe = halfspace_probe(1.0, 0.3);
        let states = ProbeStates::UniformBox {
            lo: alloc::vec![0.2],
            hi: alloc::vec![0.8],
        };
        let report = verify_error_ordering(&probe, 100_000, &states, 11).unwrap();
        assert!(report.holds);
        assert!(
            report.unprojected_mean - report.unprojected_ci
                > report.projected_mean + report.projected_ci,
            "expected strict separation, got {report:?}"
        );
    }

    /// As the step size vanishes the unprojected side tends to the
    /// mean squared infeasibility of the start distribution — for
    /// U[0.2, 0.8] against {x ≥ 1} that is E[(1−x)²] = 0.28 — while
    /// the projected side tends to zero.
    #[test]
    fn vanishing_step_recovers_start_distance() {
        let probe = halfspace_probe(1.0, 1e-6);
        let states = ProbeStates::UniformBox {
            lo: alloc::vec![0.2],
            hi: alloc::vec![0.8],
        };
        let report = verify_error_ordering(&probe, 100_000, &states, 13).unwrap();
        assert!(
            (report.unprojected_mean - 0.28).abs() < 5e-3,
            "unprojected mean {}",
            report.unprojected_mean
        );
        assert!(report.projected_mean < 1e-3);
        assert!(report.holds);
    }

    /// The ordering holds across the whole step-size/offset grid the
    /// acceptance gate sweeps.
    #[test]
    fn ordering_holds_across_gamma_offset_grid() {
        for &gamma in &[0.05, 0.1, 0.3, 0.5] {
            for &c in &[0.5, 1.0, 2.0] {
                let probe = halfspace_probe(c, gamma);
                let states = ProbeStates::UniformBox {
                    lo: alloc::vec![0.2 * c],
                    hi: alloc::vec![0.8 * c],
                };
                let report = verify_error_ordering(&probe, 30_000, &states, 23).unwrap();
                assert!(report.holds, "gamma {gamma} c {c}: {report:?}");
            }
        }
    }

    #[test]
    fn ordering_report_is_deterministic() {
        let probe = halfspace_probe(1.0, 0.3);
        let states = ProbeStates::UniformBox {
            lo: alloc::vec![0.2],
            hi: alloc::vec![0.8],
        };
        let a = verify_error_ordering(&probe, 5_000, &states, 41).unwrap();
        let b = verify_error_ordering(&probe, 5_000, &states, 41).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unreachable_point_exhausts_the_generator() {
        let probe = halfspace_probe(1.0, 0.3);
        // 0.7 · 5 = 3.5 > reach 0.7: never accepted.
        let states = ProbeStates::Point(StateVector::flat(alloc::vec![5.0]).unwrap());
        match verify_error_ordering(&probe, 10, &states, 3) {
            Err(TheoryError::StateGeneratorExhausted {
                accepted,
                requested,
            }) => {
                assert_eq!((accepted, requested), (0, 10));
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let probe = TheoremProbe::new(
            ProbeConstraint::Ball {
                center: alloc::vec![2.0, 0.0],
                radius: 1.0,
            },
            0.3,
        )
        .unwrap();
        let states = ProbeStates::UniformBox {
            lo: alloc::vec![0.2],
            hi: alloc::vec![0.8],
        };
        assert!(matches!(
            verify_error_ordering(&probe, 10, &states, 3),
            Err(TheoryError::InvalidArgument(_))
        ));
    }

    #[test]
    fn ball_probe_ordering_holds_in_two_dimensions() {
        let probe = TheoremProbe::new(
            ProbeConstraint::Ball {
                center: alloc::vec![2.0, 0.0],
                radius: 1.0,
            },
            0.3,
        )
        .unwrap();
        // Box inside the unit disc: every draw passes the reach test.
        let states = ProbeStates::UniformBox {
            lo: alloc::vec![0.2, 0.2],
            hi: alloc::vec![0.6, 0.6],
        };
        let report = verify_error_ordering(&probe, 50_000, &states, 19).unwrap();
        assert!(report.holds, "{report:?}");
        assert!(report.unprojected_mean > report.projected_mean);
    }

    /// With the whole space feasible the error is identically zero, so
    /// the very first position already satisfies any positive bound.
    #[test]
    fn unconstrained_chain_reports_first_position() {
        let probe =
            TheoremProbe::new(ProbeConstraint::Unconstrained { dim: 2 }, 0.3).unwrap();
        let schedule = NoiseSchedule::geometric(0.05, 3.0, 6).unwrap();
        let report = verify_error_vanishes(&probe, &schedule, 4, 1e-9, 5).unwrap();
        assert_eq!(report.first_below, Some((6, 1)));
        assert_eq!(report.final_error, 0.0);
        assert!(report.error_trace.iter().all(|r| r.mean_error == 0.0));
    }

    /// A bound below what the coarse ladder's noise floor can reach is
    /// reported as never crossed, not raised as an error.
    #[test]
    fn unreachable_bound_reports_none() {
        let probe = halfspace_probe(1.0, 0.3);
        let schedule = NoiseSchedule::geometric(0.5, 3.0, 4).unwrap();
        let report =
            verify_error_vanishes(&probe, &schedule, 10, f64::EPSILON, 5).unwrap();
        assert_eq!(report.first_below, None);
        assert!(report.final_error > f64::EPSILON);
    }

    /// Long anneal on the half-line probe: the mean error crosses the
    /// bound well before the end, stays below it, collapses by three
    /// orders of magnitude level-over-level, and trends monotonically
    /// down across the final half of the ladder.
    #[test]
    fn halfline_chain_error_vanishes() {
        let probe = halfspace_probe(1.0, 0.3);
        let schedule = NoiseSchedule::geometric(0.05, 3.0, 50).unwrap();
        let report = verify_error_vanishes(&probe, &schedule, 100, 1e-3, 29).unwrap();

        let (first_level, _) = report.first_below.expect("bound must be crossed");
        assert!(
            first_level <= 25,
            "expected a crossing in the annealed half, got level {first_level}"
        );
        assert!(report.final_error <= 1e-3);

        let levels = report.level_means();
        assert_eq!(levels.len(), 50);
        let top = levels.first().unwrap().1;
        let bottom = levels.last().unwrap().1;
        assert!(
            bottom < 1e-3 * top,
            "final level {bottom} vs initial level {top}"
        );
        // Downward trend over the final 25 levels. Adjacent levels
        // wiggle within Monte-Carlo noise (ever fewer of the 100
        // chains touch the boundary as the error shrinks), so the
        // trend is asserted two ways: each 5-level block mean strictly
        // drops, and no level re-inflates past twice the running
        // minimum.
        let blocks: Vec<f64> = levels[25..]
            .chunks(5)
            .map(|c| c.iter().map(|(_, m)| m).sum::<f64>() / c.len() as f64)
            .collect();
        for pair in blocks.windows(2) {
            assert!(
                pair[1] < pair[0],
                "5-level block means must strictly decrease: {blocks:?}"
            );
        }
        let mut running_min = f64::INFINITY;
        for (level, mean) in &levels[25..] {
            assert!(
                *mean <= 2.0 * running_min,
                "level {level} mean {mean} re-inflated past the trend"
            );
            running_min = running_min.min(*mean);
        }
    }

    #[test]
    fn invalid_bound_is_rejected() {
        let probe = halfspace_probe(1.0, 0.3);
        let schedule = NoiseSchedule::geometric(0.05, 3.0, 4).unwrap();
        assert!(matches!(
            verify_error_vanishes(&probe, &schedule, 2, 0.0, 5),
            Err(TheoryError::InvalidArgument(_))
        ));
    }
}
