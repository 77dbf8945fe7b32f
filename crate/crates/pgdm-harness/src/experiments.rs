//! Experiment drivers: each turns a parsed configuration into a
//! deterministic artifact directory (CSV tables, JSON reports, SVG
//! plots) and a short human-readable summary.
//!
//! Every run is a pure function of (config, seed) at the byte level of
//! its artifacts: stage seeds are derived from the master seed, chains
//! draw from per-chain streams, and no wall-clock or path-dependent
//! value is ever written into an artifact.

use std::path::{Path, PathBuf};

use serde::Serialize;

use pgdm_core::{
    dsm_train, path_length, porosity_measure, sample, sample_chain, satisfaction_curve,
    sliced_wasserstein, verify_error_ordering, verify_error_vanishes, Activation, ConstraintSet,
    DsmConfig, GaussianMixture, HalfspaceSet, MlpScoreNet, PorosityConstraint, ProbeConstraint,
    ProbeStates, RngStream, SamplerVariant, ScoreField, StateVector, TheoremProbe, TraceRecord,
    TrajectoryConstraint, SUCCESS_TOL,
};

use crate::artifacts::{
    self, read_samples, read_table_csv, write_curve_csv, write_json, write_samples,
    write_table_csv, write_trace_csv,
};
use crate::checkpoint;
use crate::config::{stage_seeds, Experiment, ExperimentConfig};
use crate::dataset::{
    gen_ball_dataset, gen_texture_dataset, gen_trajectory_dataset, inference_obstacles,
    placement_constraint, topography_map, BallMotionSpec, TextureSpec, TopographySpec,
    MOON_GRAVITY_RATIO,
};
use crate::error::{HarnessError, Stage, StageExt};
use crate::plot::{self, PlotKind, Series};

/// What a command produced: where, under which config identity, and a
/// few lines for the terminal.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub config_sha256: String,
    pub lines: Vec<String>,
}

#[derive(Serialize)]
struct ConfigRecord {
    config_sha256: String,
    config: ExperimentConfig,
}

/// Writes `config.json`: the effective configuration (output directory
/// cleared, exactly the hashed form) plus its hash.
fn write_config_record(cfg: &ExperimentConfig, out: &Path) -> Result<String, HarnessError> {
    let hash = cfg.content_hash();
    let mut cleared = cfg.clone();
    cleared.out_dir = None;
    write_json(
        &out.join("config.json"),
        &ConfigRecord {
            config_sha256: hash.clone(),
            config: cleared,
        },
    )?;
    Ok(hash)
}

// ---------------------------------------------------------------------
// Score-model plumbing shared by the drivers.

enum ScoreModel {
    Analytic(GaussianMixture),
    Trained(MlpScoreNet),
}

impl ScoreModel {
    fn field(&self) -> &dyn ScoreField {
        match self {
            ScoreModel::Analytic(g) => g,
            ScoreModel::Trained(n) => n,
        }
    }
}

#[derive(Serialize, Clone, Debug)]
struct LossSummary {
    train_initial: f64,
    train_final: f64,
    holdout_initial: f64,
    holdout_final: f64,
    epochs: usize,
}

/// Trains the config's net on `data`, writes `net.ckpt` and `loss.csv`,
/// and returns the trained net with a loss summary.
fn train_net(
    cfg: &ExperimentConfig,
    data: &[StateVector],
    out: &Path,
) -> Result<(MlpScoreNet, LossSummary), HarnessError> {
    let dim = data
        .first()
        .ok_or_else(|| HarnessError::new(Stage::Train, "empty training set"))?
        .dim();
    let train_seed = stage_seeds::derive(cfg.seed, stage_seeds::TRAIN);
    let net = MlpScoreNet::new(
        dim,
        &cfg.mlp_hidden(),
        Activation::Tanh,
        stage_seeds::derive(train_seed, 1),
    );
    let dsm = DsmConfig {
        epochs: cfg.epochs(),
        batch_size: cfg.batch_size(),
        learning_rate: cfg.learning_rate(),
        seed: stage_seeds::derive(train_seed, 2),
    };
    let schedule = cfg.schedule()?;
    let (trained, trace) = dsm_train(&net, data, &schedule, &dsm).stage(Stage::Train)?;

    checkpoint::save(&trained, &out.join("net.ckpt"))?;
    write_table_csv(
        &out.join("loss.csv"),
        &["epoch", "train_loss", "holdout_loss"],
        (0..trace.train.len()).map(|e| vec![(e + 1) as f64, trace.train[e], trace.holdout[e + 1]]),
    )?;
    let summary = LossSummary {
        train_initial: trace.train[0],
        train_final: *trace.train.last().expect("at least one epoch"),
        holdout_initial: trace.holdout[0],
        holdout_final: *trace.holdout.last().expect("holdout recorded"),
        epochs: trace.train.len(),
    };
    Ok((trained, summary))
}

/// Re-runs chain 0 of a batch with tracing on; the per-chain RNG
/// streams make the traced chain identical to the batch's chain 0.
fn chain_zero_trace(
    cfg: &ExperimentConfig,
    variant: SamplerVariant,
    seed: u64,
    score: &dyn ScoreField,
    constraint: &dyn ConstraintSet,
) -> Result<Vec<TraceRecord>, HarnessError> {
    let sampler = cfg.sampler_config(variant, seed, true)?;
    let (_, trace) = sample_chain(&sampler, score, constraint, 0).stage(Stage::Sample)?;
    Ok(trace.records)
}

fn count_feasible(samples: &[StateVector], constraint: &dyn ConstraintSet, tol: f64) -> usize {
    samples
        .iter()
        .filter(|s| constraint.is_feasible(s, tol))
        .count()
}

// ---------------------------------------------------------------------
// Mixture construction and theory checks (shared by the gmm driver and
// the verify-theory command).

fn build_mixture(cfg: &ExperimentConfig) -> Result<GaussianMixture, HarnessError> {
    let weights = cfg.gmm_weights();
    let flat = cfg.gmm_means();
    let k = weights.len();
    if k == 0 || flat.is_empty() || flat.len() % k != 0 {
        return Err(HarnessError::new(
            Stage::Config,
            format!(
                "gmm_means has {} values, not divisible into {} component means",
                flat.len(),
                k
            ),
        ));
    }
    let dim = flat.len() / k;
    let means: Vec<Vec<f64>> = flat.chunks(dim).map(|c| c.to_vec()).collect();
    GaussianMixture::isotropic(weights, means, vec![cfg.gmm_variance(); k]).stage(Stage::Config)
}

#[derive(Serialize, Clone, Debug)]
struct TheoremCell {
    gamma: f64,
    offset: f64,
    unprojected_mean: f64,
    projected_mean: f64,
    unprojected_ci: f64,
    projected_ci: f64,
    n_trials: usize,
    holds: bool,
}

/// Ordering check over the full (step size, boundary offset) grid:
/// trial states drawn uniformly from the infeasible band between the
/// optimum and the boundary.
fn theorem_grid(cfg: &ExperimentConfig, out: &Path) -> Result<(Vec<TheoremCell>, bool), HarnessError> {
    let theory_seed = stage_seeds::derive(cfg.seed, stage_seeds::THEORY);
    let mut cells = Vec::new();
    let mut idx = 0u64;
    for &gamma in &cfg.theory_gammas() {
        for &c in &cfg.theory_offsets() {
            idx += 1;
            let probe = TheoremProbe::new(ProbeConstraint::Halfspace { c }, gamma)
                .stage(Stage::Theory)?;
            let states = ProbeStates::UniformBox {
                lo: vec![0.2 * c],
                hi: vec![0.8 * c],
            };
            let report = verify_error_ordering(
                &probe,
                cfg.theory_trials(),
                &states,
                stage_seeds::derive(theory_seed, idx),
            )
            .stage(Stage::Theory)?;
            cells.push(TheoremCell {
                gamma,
                offset: c,
                unprojected_mean: report.unprojected_mean,
                projected_mean: report.projected_mean,
                unprojected_ci: report.unprojected_ci,
                projected_ci: report.projected_ci,
                n_trials: report.n_trials,
                holds: report.holds,
            });
        }
    }
    let all_hold = cells.iter().all(|c| c.holds);
    write_table_csv(
        &out.join("theorem_grid.csv"),
        &[
            "gamma",
            "offset",
            "unprojected_mean",
            "projected_mean",
            "unprojected_ci",
            "projected_ci",
            "holds",
        ],
        cells.iter().map(|c| {
            vec![
                c.gamma,
                c.offset,
                c.unprojected_mean,
                c.projected_mean,
                c.unprojected_ci,
                c.projected_ci,
                if c.holds { 1.0 } else { 0.0 },
            ]
        }),
    )?;
    Ok((cells, all_hold))
}

#[derive(Serialize, Clone, Debug)]
struct CorollarySummary {
    halfspace_c: f64,
    xi: f64,
    first_below: Option<(usize, usize)>,
    final_error: f64,
    top_level_mean: f64,
    level1_mean: f64,
    /// level-1 mean divided by top-level mean.
    decay_ratio: f64,
}

/// Vanishing-error scan on the unit-offset halfspace probe at the
/// config's schedule; writes the per-position and per-level error
/// tables.
fn corollary_scan(cfg: &ExperimentConfig, out: &Path) -> Result<CorollarySummary, HarnessError> {
    let theory_seed = stage_seeds::derive(cfg.seed, stage_seeds::THEORY);
    let probe =
        TheoremProbe::new(ProbeConstraint::Halfspace { c: 1.0 }, 0.5).stage(Stage::Theory)?;
    let schedule = cfg.schedule()?;
    let report = verify_error_vanishes(
        &probe,
        &schedule,
        cfg.steps_per_level(),
        cfg.theory_xi(),
        stage_seeds::derive(theory_seed, 0),
    )
    .stage(Stage::Theory)?;

    write_table_csv(
        &out.join("error_trace.csv"),
        &["t", "i", "mean_error"],
        report
            .error_trace
            .iter()
            .map(|r| vec![r.level as f64, r.step as f64, r.mean_error]),
    )?;
    let level_means = report.level_means();
    write_table_csv(
        &out.join("level_means.csv"),
        &["level", "mean_error"],
        level_means.iter().map(|&(l, m)| vec![l as f64, m]),
    )?;
    let top = level_means.first().map(|&(_, m)| m).unwrap_or(f64::NAN);
    let last = level_means.last().map(|&(_, m)| m).unwrap_or(f64::NAN);
    Ok(CorollarySummary {
        halfspace_c: 1.0,
        xi: cfg.theory_xi(),
        first_below: report.first_below,
        final_error: report.final_error,
        top_level_mean: top,
        level1_mean: last,
        decay_ratio: last / top,
    })
}

// ---------------------------------------------------------------------
// Mixture + halfspace experiment.

#[derive(Serialize, Clone, Debug)]
struct VariantStats {
    variant: String,
    n_chains: usize,
    feasible_zero_tol: usize,
    feasible_fraction: f64,
    sliced_wasserstein: f64,
    reference: String,
}

#[derive(Serialize)]
struct TheoremSection {
    n_trials: usize,
    all_hold: bool,
    cells: Vec<TheoremCell>,
}

#[derive(Serialize)]
struct GmmReport {
    config_sha256: String,
    seed: u64,
    dim: usize,
    halfspace_coord: usize,
    halfspace_min: f64,
    feasible_mass_estimate: f64,
    n_reference: usize,
    variants: Vec<VariantStats>,
    theorem: TheoremSection,
    corollary: CorollarySummary,
}

fn run_gmm_theory(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, HarnessError> {
    let hash = write_config_record(cfg, out)?;
    let mixture = build_mixture(cfg)?;
    let dim = mixture.dim();
    if cfg.halfspace_coord() >= dim {
        return Err(HarnessError::new(
            Stage::Config,
            format!(
                "halfspace_coord {} out of range for dimension {dim}",
                cfg.halfspace_coord()
            ),
        ));
    }
    let constraint =
        HalfspaceSet::coordinate_at_least(dim, cfg.halfspace_coord(), cfg.halfspace_min());

    // Score model: closed-form mixture score, or a net trained on fresh
    // mixture draws.
    let model = match cfg.model() {
        "analytic" => ScoreModel::Analytic(mixture.clone()),
        _ => {
            let mut rng = RngStream::new(stage_seeds::derive(cfg.seed, stage_seeds::DATASET), 0);
            let data: Vec<StateVector> = (0..cfg.n_samples()).map(|_| mixture.sample(&mut rng)).collect();
            let (net, _loss) = train_net(cfg, &data, out)?;
            ScoreModel::Trained(net)
        }
    };
    let score = model.field();

    // Fresh-draw references: the full distribution, and the feasible
    // subset via rejection (the acceptance rate estimates the feasible
    // mass).
    let ref_seed = stage_seeds::derive(cfg.seed, stage_seeds::REFERENCE);
    let mut full_rng = RngStream::new(ref_seed, 0);
    let reference_full: Vec<StateVector> = (0..cfg.n_reference())
        .map(|_| mixture.sample(&mut full_rng))
        .collect();
    let mut feas_rng = RngStream::new(ref_seed, 1);
    let mut reference_feasible = Vec::with_capacity(cfg.n_reference());
    let mut drawn = 0usize;
    let max_draws = cfg.n_reference().saturating_mul(1000);
    while reference_feasible.len() < cfg.n_reference() {
        if drawn >= max_draws {
            return Err(HarnessError::new(
                Stage::Eval,
                format!(
                    "rejection sampling accepted only {}/{} after {drawn} draws; the \
                     constraint covers too little mass",
                    reference_feasible.len(),
                    cfg.n_reference()
                ),
            ));
        }
        let x = mixture.sample(&mut feas_rng);
        drawn += 1;
        if constraint.is_feasible(&x, 0.0) {
            reference_feasible.push(x);
        }
    }
    let feasible_mass = cfg.n_reference() as f64 / drawn as f64;
    write_samples(&out.join("reference_full.csv"), &reference_full, ref_seed, &hash)?;
    write_samples(
        &out.join("reference_feasible.csv"),
        &reference_feasible,
        ref_seed,
        &hash,
    )?;

    // The three sampler variants, each with its own seed stage and its
    // own distribution target.
    let runs: [(SamplerVariant, &str, u64, &[StateVector], &str); 3] = [
        (
            SamplerVariant::Projected,
            "projected",
            stage_seeds::SAMPLE_PROJECTED,
            &reference_feasible,
            "feasible_subset",
        ),
        (
            SamplerVariant::Unconstrained,
            "unconstrained",
            stage_seeds::SAMPLE_UNCONSTRAINED,
            &reference_full,
            "full",
        ),
        (
            SamplerVariant::PostProject,
            "post_project",
            stage_seeds::SAMPLE_POST,
            &reference_feasible,
            "feasible_subset",
        ),
    ];

    let metrics_seed = stage_seeds::derive(cfg.seed, stage_seeds::METRICS);
    let mut variants = Vec::new();
    let mut lines = Vec::new();
    for (vi, (variant, name, stage, reference, ref_name)) in runs.into_iter().enumerate() {
        let seed = stage_seeds::derive(cfg.seed, stage);
        let sampler = cfg.sampler_config(variant, seed, false)?;
        let (samples, _) =
            sample(&sampler, score, &constraint, cfg.n_chains()).stage(Stage::Sample)?;
        write_samples(&out.join(format!("samples_{name}.csv")), &samples, seed, &hash)?;
        let curve =
            satisfaction_curve(&samples, &constraint, &cfg.tolerances()).stage(Stage::Eval)?;
        write_curve_csv(
            &out.join(format!("satisfaction_{name}.csv")),
            &curve
                .tolerances
                .iter()
                .copied()
                .zip(curve.fraction_satisfied.iter().copied())
                .collect::<Vec<_>>(),
        )?;
        let mut sw_rng = RngStream::new(metrics_seed, vi as u64);
        let sw = sliced_wasserstein(&samples, reference, cfg.sw_projections(), &mut sw_rng)
            .stage(Stage::Eval)?;
        let feasible = count_feasible(&samples, &constraint, 0.0);
        lines.push(format!(
            "{name}: {feasible}/{} feasible at zero tolerance, \
             sliced-Wasserstein {sw:.4} vs {ref_name}",
            cfg.n_chains()
        ));
        variants.push(VariantStats {
            variant: name.to_string(),
            n_chains: cfg.n_chains(),
            feasible_zero_tol: feasible,
            feasible_fraction: feasible as f64 / cfg.n_chains() as f64,
            sliced_wasserstein: sw,
            reference: ref_name.to_string(),
        });
    }

    let trace = chain_zero_trace(
        cfg,
        SamplerVariant::Projected,
        stage_seeds::derive(cfg.seed, stage_seeds::SAMPLE_PROJECTED),
        score,
        &constraint,
    )?;
    write_trace_csv(&out.join("trace.csv"), &trace)?;

    let (cells, all_hold) = theorem_grid(cfg, out)?;
    let corollary = corollary_scan(cfg, out)?;
    lines.push(format!(
        "ordering bound holds on all {} grid cells: {all_hold}",
        cells.len()
    ));
    lines.push(format!(
        "constraint error decays {:.2e} -> {:.2e} across the ladder",
        corollary.top_level_mean, corollary.level1_mean
    ));

    let report = GmmReport {
        config_sha256: hash.clone(),
        seed: cfg.seed,
        dim,
        halfspace_coord: cfg.halfspace_coord(),
        halfspace_min: cfg.halfspace_min(),
        feasible_mass_estimate: feasible_mass,
        n_reference: cfg.n_reference(),
        variants,
        theorem: TheoremSection {
            n_trials: cfg.theory_trials(),
            all_hold,
            cells,
        },
        corollary,
    };
    write_json(&out.join("report.json"), &report)?;
    replot(cfg, out)?;
    Ok(RunSummary {
        out_dir: out.to_path_buf(),
        config_sha256: hash,
        lines,
    })
}

// ---------------------------------------------------------------------
// Falling-object video experiment.

#[derive(Serialize, Clone, Debug)]
struct ConstraintEval {
    constraint: String,
    n_chains: usize,
    feasible_zero_tol: usize,
    feasible_fraction: f64,
}

#[derive(Serialize)]
struct PhysicsReport {
    config_sha256: String,
    seed: u64,
    height: usize,
    width: usize,
    n_frames: usize,
    dim: usize,
    gravity_earth: f64,
    gravity_moon: f64,
    object_radius: f64,
    eval_start_row: f64,
    eval_start_col: f64,
    n_train: usize,
    n_test: usize,
    loss: LossSummary,
    evals: Vec<ConstraintEval>,
}

fn ball_spec(cfg: &ExperimentConfig) -> BallMotionSpec {
    BallMotionSpec {
        height: cfg.frame_size(),
        width: cfg.frame_size(),
        n_frames: cfg.n_frames(),
        gravity: cfg.gravity(),
        object_radius: cfg.object_radius(),
        n_samples: cfg.n_samples(),
        train_fraction: 0.9,
    }
}

fn run_physics_motion(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, HarnessError> {
    if cfg.model() == "analytic" {
        return Err(HarnessError::new(
            Stage::Config,
            "physics_motion has no closed-form score; set model = \"mlp\"",
        ));
    }
    let hash = write_config_record(cfg, out)?;
    let spec = ball_spec(cfg);
    let data = gen_ball_dataset(&spec, stage_seeds::derive(cfg.seed, stage_seeds::DATASET))?;
    let train_states = data.train_states();
    let (net, loss) = train_net(cfg, &train_states, out)?;

    let earth = placement_constraint(&spec, cfg.eval_start_row(), cfg.eval_start_col())?;
    let moon_spec = BallMotionSpec {
        gravity: spec.gravity * MOON_GRAVITY_RATIO,
        ..spec.clone()
    };
    let moon = placement_constraint(&moon_spec, cfg.eval_start_row(), cfg.eval_start_col())?;

    let runs: [(&str, SamplerVariant, u64, &dyn ConstraintSet); 3] = [
        (
            "earth",
            SamplerVariant::Projected,
            stage_seeds::SAMPLE_PROJECTED,
            &earth,
        ),
        (
            "moon",
            SamplerVariant::Projected,
            stage_seeds::SAMPLE_MOON,
            &moon,
        ),
        (
            "unconstrained",
            SamplerVariant::Unconstrained,
            stage_seeds::SAMPLE_UNCONSTRAINED,
            &earth,
        ),
    ];
    let mut evals = Vec::new();
    let mut lines = Vec::new();
    for (name, variant, stage, constraint) in runs {
        let seed = stage_seeds::derive(cfg.seed, stage);
        let sampler = cfg.sampler_config(variant, seed, false)?;
        let (samples, _) = sample(&sampler, &net, constraint, cfg.n_chains()).stage(Stage::Sample)?;
        write_samples(&out.join(format!("samples_{name}.csv")), &samples, seed, &hash)?;
        let curve =
            satisfaction_curve(&samples, constraint, &cfg.tolerances()).stage(Stage::Eval)?;
        write_curve_csv(
            &out.join(format!("satisfaction_{name}.csv")),
            &curve
                .tolerances
                .iter()
                .copied()
                .zip(curve.fraction_satisfied.iter().copied())
                .collect::<Vec<_>>(),
        )?;
        let feasible = count_feasible(&samples, constraint, 0.0);
        lines.push(format!(
            "{name}: {feasible}/{} feasible at zero tolerance",
            cfg.n_chains()
        ));
        evals.push(ConstraintEval {
            constraint: name.to_string(),
            n_chains: cfg.n_chains(),
            feasible_zero_tol: feasible,
            feasible_fraction: feasible as f64 / cfg.n_chains() as f64,
        });
    }

    let trace = chain_zero_trace(
        cfg,
        SamplerVariant::Projected,
        stage_seeds::derive(cfg.seed, stage_seeds::SAMPLE_PROJECTED),
        &net,
        &earth,
    )?;
    write_trace_csv(&out.join("trace.csv"), &trace)?;

    let report = PhysicsReport {
        config_sha256: hash.clone(),
        seed: cfg.seed,
        height: spec.height,
        width: spec.width,
        n_frames: spec.n_frames,
        dim: spec.height * spec.width * spec.n_frames,
        gravity_earth: spec.gravity,
        gravity_moon: moon_spec.gravity,
        object_radius: spec.object_radius,
        eval_start_row: cfg.eval_start_row(),
        eval_start_col: cfg.eval_start_col(),
        n_train: data.train.len(),
        n_test: data.test.len(),
        loss,
        evals,
    };
    write_json(&out.join("report.json"), &report)?;
    replot(cfg, out)?;
    Ok(RunSummary {
        out_dir: out.to_path_buf(),
        config_sha256: hash,
        lines,
    })
}

// ---------------------------------------------------------------------
// Path-planning experiment.

fn topography_spec(cfg: &ExperimentConfig) -> TopographySpec {
    let circles = |flat: &Option<Vec<f64>>, builtin: fn(u32) -> Vec<pgdm_core::Circle>| {
        flat.as_ref()
            .map(|v| {
                v.chunks_exact(3)
                    .map(|c| pgdm_core::Circle::new([c[0], c[1]], c[2]))
                    .collect()
            })
            .unwrap_or_else(|| builtin(cfg.map_id()))
    };
    TopographySpec {
        training_obstacles: circles(&cfg.train_obstacles, topography_map),
        inference_obstacles: circles(&cfg.infer_obstacles, inference_obstacles),
        n_points: cfg.n_points(),
        start_band: cfg.start_band(),
        goal_band: cfg.goal_band(),
    }
}

/// Post-processing baseline outcome for one chain.
struct PostOutcome {
    path: StateVector,
    solver_failed: bool,
}

/// Runs unconstrained chains and projects each final path once; a
/// solver failure keeps the raw path (it simply stays infeasible).
fn post_process_paths(
    cfg: &ExperimentConfig,
    seed: u64,
    score: &dyn ScoreField,
    constraint: &TrajectoryConstraint,
) -> Result<Vec<PostOutcome>, HarnessError> {
    let sampler = cfg.sampler_config(SamplerVariant::Unconstrained, seed, false)?;
    let mut outcomes = Vec::with_capacity(cfg.n_chains());
    for chain in 0..cfg.n_chains() {
        let (raw, _) =
            sample_chain(&sampler, score, constraint, chain as u64).stage(Stage::Sample)?;
        match constraint.project(&raw) {
            Ok(projected) => outcomes.push(PostOutcome {
                path: projected,
                solver_failed: false,
            }),
            Err(_) => outcomes.push(PostOutcome {
                path: raw,
                solver_failed: true,
            }),
        }
    }
    Ok(outcomes)
}

#[derive(Serialize, Clone, Debug)]
struct TrajVariantStats {
    variant: String,
    n_chains: usize,
    n_outputs: usize,
    n_feasible: usize,
    success_rate: f64,
    mean_feasible_path_length: Option<f64>,
    sampler_failures: usize,
    solver_failures: usize,
}

#[derive(Serialize)]
struct TrajectoriesReport {
    config_sha256: String,
    seed: u64,
    map_id: u32,
    n_points: usize,
    start: [f64; 2],
    goal: [f64; 2],
    training_obstacles: Vec<[f64; 3]>,
    inference_obstacles: Vec<[f64; 3]>,
    n_train_paths: usize,
    loss: LossSummary,
    pgdm: TrajVariantStats,
    post_process: TrajVariantStats,
    /// PGDM mean feasible length over the baseline's.
    path_length_ratio: Option<f64>,
}

fn mean_feasible_length(
    paths: &[StateVector],
    constraint: &TrajectoryConstraint,
) -> (usize, Option<f64>) {
    let feasible: Vec<f64> = paths
        .iter()
        .filter(|p| constraint.is_feasible(p, SUCCESS_TOL))
        .map(|p| path_length(p.data(), 2).expect("paths have even length"))
        .collect();
    if feasible.is_empty() {
        (0, None)
    } else {
        let mean = feasible.iter().sum::<f64>() / feasible.len() as f64;
        (feasible.len(), Some(mean))
    }
}

fn run_trajectories(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, HarnessError> {
    if cfg.model() == "analytic" {
        return Err(HarnessError::new(
            Stage::Config,
            "trajectories has no closed-form score; set model = \"mlp\"",
        ));
    }
    let hash = write_config_record(cfg, out)?;
    let spec = topography_spec(cfg);
    let train_paths = gen_trajectory_dataset(
        &spec,
        cfg.n_paths(),
        stage_seeds::derive(cfg.seed, stage_seeds::DATASET),
    )?;
    let preview: Vec<StateVector> = train_paths.iter().take(12).cloned().collect();
    write_samples(
        &out.join("train_paths.csv"),
        &preview,
        stage_seeds::derive(cfg.seed, stage_seeds::DATASET),
        &hash,
    )?;
    let (net, loss) = train_net(cfg, &train_paths, out)?;

    let mut all_obstacles = spec.training_obstacles.clone();
    all_obstacles.extend(spec.inference_obstacles.iter().cloned());
    let constraint = TrajectoryConstraint::new(
        all_obstacles,
        cfg.traj_start(),
        cfg.traj_goal(),
        cfg.n_points(),
    )
    .stage(Stage::Config)?;

    // Per-step projected chains, with per-chain failure accounting.
    let pgdm_seed = stage_seeds::derive(cfg.seed, stage_seeds::SAMPLE_PROJECTED);
    let sampler = cfg.sampler_config(SamplerVariant::Projected, pgdm_seed, false)?;
    let mut pgdm_paths = Vec::new();
    let mut pgdm_failures = 0usize;
    for chain in 0..cfg.n_chains() {
        match sample_chain(&sampler, &net, &constraint, chain as u64) {
            Ok((path, _)) => pgdm_paths.push(path),
            Err(_) => pgdm_failures += 1,
        }
    }
    if !pgdm_paths.is_empty() {
        write_samples(&out.join("samples_pgdm.csv"), &pgdm_paths, pgdm_seed, &hash)?;
    }

    // Post-processing baseline: unconstrained chains, one projection.
    let post_seed = stage_seeds::derive(cfg.seed, stage_seeds::SAMPLE_POST);
    let post = post_process_paths(cfg, post_seed, &net, &constraint)?;
    let post_paths: Vec<StateVector> = post.iter().map(|o| o.path.clone()).collect();
    let solver_failures = post.iter().filter(|o| o.solver_failed).count();
    write_samples(&out.join("samples_post.csv"), &post_paths, post_seed, &hash)?;

    let (pgdm_feasible, pgdm_mean) = mean_feasible_length(&pgdm_paths, &constraint);
    let (post_feasible, post_mean) = mean_feasible_length(&post_paths, &constraint);
    let pgdm_rate = pgdm_feasible as f64 / cfg.n_chains() as f64;
    let post_rate = post_feasible as f64 / cfg.n_chains() as f64;
    let ratio = match (pgdm_mean, post_mean) {
        (Some(a), Some(b)) => Some(a / b),
        _ => None,
    };

    write_table_csv(
        &out.join("summary.csv"),
        &["pgdm_success", "post_success", "pgdm_mean_pl", "post_mean_pl"],
        std::iter::once(vec![
            pgdm_rate,
            post_rate,
            pgdm_mean.unwrap_or(f64::NAN),
            post_mean.unwrap_or(f64::NAN),
        ]),
    )?;

    if !pgdm_paths.is_empty() {
        let trace = chain_zero_trace(cfg, SamplerVariant::Projected, pgdm_seed, &net, &constraint)?;
        write_trace_csv(&out.join("trace.csv"), &trace)?;
    }

    let as_triples = |obs: &[pgdm_core::Circle]| -> Vec<[f64; 3]> {
        obs.iter()
            .map(|o| [o.center[0], o.center[1], o.radius])
            .collect()
    };
    let lines = vec![
        format!(
            "pgdm: {pgdm_feasible}/{} feasible ({} sampler failures)",
            cfg.n_chains(),
            pgdm_failures
        ),
        format!(
            "post-process: {post_feasible}/{} feasible ({solver_failures} projection failures)",
            cfg.n_chains()
        ),
        match ratio {
            Some(r) => format!("path-length ratio (pgdm / post-process): {r:.3}"),
            None => "path-length ratio undefined (a variant had no feasible paths)".to_string(),
        },
    ];
    let report = TrajectoriesReport {
        config_sha256: hash.clone(),
        seed: cfg.seed,
        map_id: cfg.map_id(),
        n_points: cfg.n_points(),
        start: cfg.traj_start(),
        goal: cfg.traj_goal(),
        training_obstacles: as_triples(&spec.training_obstacles),
        inference_obstacles: as_triples(&spec.inference_obstacles),
        n_train_paths: train_paths.len(),
        loss,
        pgdm: TrajVariantStats {
            variant: "projected".to_string(),
            n_chains: cfg.n_chains(),
            n_outputs: pgdm_paths.len(),
            n_feasible: pgdm_feasible,
            success_rate: pgdm_rate,
            mean_feasible_path_length: pgdm_mean,
            sampler_failures: pgdm_failures,
            solver_failures: 0,
        },
        post_process: TrajVariantStats {
            variant: "post_process".to_string(),
            n_chains: cfg.n_chains(),
            n_outputs: post_paths.len(),
            n_feasible: post_feasible,
            success_rate: post_rate,
            mean_feasible_path_length: post_mean,
            sampler_failures: 0,
            solver_failures,
        },
        path_length_ratio: ratio,
    };
    write_json(&out.join("report.json"), &report)?;
    replot(cfg, out)?;
    Ok(RunSummary {
        out_dir: out.to_path_buf(),
        config_sha256: hash,
        lines,
    })
}

// ---------------------------------------------------------------------
// Texture porosity experiment.

#[derive(Serialize, Clone, Debug)]
struct PorosityStats {
    target_fraction: f64,
    target_count: usize,
    n_chains: usize,
    exact_matches: usize,
    feasible_zero_tol: usize,
    min_measured: usize,
    max_measured: usize,
}

#[derive(Serialize)]
struct MaterialsReport {
    config_sha256: String,
    seed: u64,
    patch_size: usize,
    dim: usize,
    threshold: f64,
    correlation_length: f64,
    n_textures: usize,
    loss: LossSummary,
    targets: Vec<PorosityStats>,
    all_exact: bool,
}

fn run_materials(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, HarnessError> {
    if cfg.model() == "analytic" {
        return Err(HarnessError::new(
            Stage::Config,
            "materials has no closed-form score; set model = \"mlp\"",
        ));
    }
    let hash = write_config_record(cfg, out)?;
    let spec = TextureSpec {
        size: cfg.patch_size(),
        correlation_length: cfg.correlation_length(),
        mean_offset: 0.0,
        threshold: cfg.porosity_threshold(),
    };
    let data = gen_texture_dataset(
        &spec,
        cfg.n_textures(),
        stage_seeds::derive(cfg.seed, stage_seeds::DATASET),
    )?;
    let (net, loss) = train_net(cfg, &data.images, out)?;

    let dim = spec.size * spec.size;
    let sample_seed_base = stage_seeds::derive(cfg.seed, stage_seeds::SAMPLE_PROJECTED);
    let mut stats = Vec::new();
    let mut lines = Vec::new();
    let mut rows = Vec::new();
    for (ti, &target) in cfg.porosity_targets().iter().enumerate() {
        let target_count = (target * dim as f64).floor() as usize;
        let constraint = PorosityConstraint::new(dim, cfg.porosity_threshold(), target_count)
            .stage(Stage::Config)?;
        let seed = stage_seeds::derive(sample_seed_base, ti as u64 + 1);
        let sampler = cfg.sampler_config(SamplerVariant::Projected, seed, false)?;
        let (samples, _) = sample(&sampler, &net, &constraint, cfg.n_chains()).stage(Stage::Sample)?;
        let pct = (target * 100.0).round() as usize;
        write_samples(&out.join(format!("samples_p{pct}.csv")), &samples, seed, &hash)?;

        let measured: Vec<usize> = samples
            .iter()
            .map(|s| porosity_measure(s.data(), cfg.porosity_threshold()))
            .collect();
        let exact = measured.iter().filter(|&&m| m == target_count).count();
        let feasible = count_feasible(&samples, &constraint, 0.0);
        let mean_measured = measured.iter().sum::<usize>() as f64 / measured.len() as f64;
        rows.push(vec![
            target,
            target_count as f64,
            cfg.n_chains() as f64,
            exact as f64,
            mean_measured,
        ]);
        lines.push(format!(
            "target {target:.2}: {exact}/{} exact pixel counts",
            cfg.n_chains()
        ));
        stats.push(PorosityStats {
            target_fraction: target,
            target_count,
            n_chains: cfg.n_chains(),
            exact_matches: exact,
            feasible_zero_tol: feasible,
            min_measured: *measured.iter().min().expect("chains exist"),
            max_measured: *measured.iter().max().expect("chains exist"),
        });
    }
    write_table_csv(
        &out.join("porosity.csv"),
        &[
            "target_fraction",
            "target_count",
            "n_chains",
            "exact_matches",
            "mean_measured",
        ],
        rows,
    )?;

    // Trace from the first target's chain 0.
    if let Some(&first) = cfg.porosity_targets().first() {
        let target_count = (first * dim as f64).floor() as usize;
        let constraint = PorosityConstraint::new(dim, cfg.porosity_threshold(), target_count)
            .stage(Stage::Config)?;
        let trace = chain_zero_trace(
            cfg,
            SamplerVariant::Projected,
            stage_seeds::derive(sample_seed_base, 1),
            &net,
            &constraint,
        )?;
        write_trace_csv(&out.join("trace.csv"), &trace)?;
    }

    let all_exact = stats
        .iter()
        .all(|s| s.exact_matches == s.n_chains);
    let report = MaterialsReport {
        config_sha256: hash.clone(),
        seed: cfg.seed,
        patch_size: spec.size,
        dim,
        threshold: cfg.porosity_threshold(),
        correlation_length: spec.correlation_length,
        n_textures: cfg.n_textures(),
        loss,
        targets: stats,
        all_exact,
    };
    write_json(&out.join("report.json"), &report)?;
    replot(cfg, out)?;
    Ok(RunSummary {
        out_dir: out.to_path_buf(),
        config_sha256: hash,
        lines,
    })
}

// ---------------------------------------------------------------------
// Entry points.

/// Runs the config's experiment end to end into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, HarnessError> {
    artifacts::ensure_dir(out)?;
    match cfg.experiment {
        Experiment::GmmTheory => run_gmm_theory(cfg, out),
        Experiment::PhysicsMotion => run_physics_motion(cfg, out),
        Experiment::Trajectories => run_trajectories(cfg, out),
        Experiment::Materials => run_materials(cfg, out),
    }
}

#[derive(Serialize)]
struct TheoryReport {
    config_sha256: String,
    seed: u64,
    n_trials: usize,
    all_hold: bool,
    cells: Vec<TheoremCell>,
    corollary: CorollarySummary,
}

/// Statistical verification of the projected-update bounds, standalone.
pub fn run_verify_theory(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, HarnessError> {
    artifacts::ensure_dir(out)?;
    let hash = write_config_record(cfg, out)?;
    let (cells, all_hold) = theorem_grid(cfg, out)?;
    let corollary = corollary_scan(cfg, out)?;
    let lines = vec![
        format!("ordering bound holds on all {} grid cells: {all_hold}", cells.len()),
        format!(
            "vanishing-error scan: first stable crossing {:?}, final error {:.3e}",
            corollary.first_below, corollary.final_error
        ),
    ];
    let report = TheoryReport {
        config_sha256: hash.clone(),
        seed: cfg.seed,
        n_trials: cfg.theory_trials(),
        all_hold,
        cells,
        corollary,
    };
    write_json(&out.join("report.json"), &report)?;
    replot(cfg, out)?;
    Ok(RunSummary {
        out_dir: out.to_path_buf(),
        config_sha256: hash,
        lines,
    })
}

#[derive(Serialize)]
struct SweepCell {
    value: f64,
    sliced_wasserstein: f64,
    feasible_fraction: f64,
}

#[derive(Serialize)]
struct SweepReport {
    config_sha256: String,
    seed: u64,
    param: String,
    n_chains: usize,
    cells: Vec<SweepCell>,
}

/// Sweeps `steps_per_level` or `projection_start_t` on the mixture
/// task, measuring distribution fidelity against a fixed feasible
/// reference.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, HarnessError> {
    if cfg.experiment != Experiment::GmmTheory {
        return Err(HarnessError::new(
            Stage::Sweep,
            "sweeps are defined on the gmm_theory experiment; set experiment = \"gmm_theory\"",
        ));
    }
    let param = cfg.sweep_param.clone().ok_or_else(|| {
        HarnessError::new(Stage::Sweep, "sweep requires sweep_param to be set")
    })?;
    let values = cfg.sweep_values.clone().unwrap_or_default();
    if values.is_empty() {
        return Err(HarnessError::new(
            Stage::Sweep,
            "sweep requires a nonempty sweep_values list",
        ));
    }
    artifacts::ensure_dir(out)?;
    let hash = write_config_record(cfg, out)?;

    let mixture = build_mixture(cfg)?;
    let dim = mixture.dim();
    let constraint =
        HalfspaceSet::coordinate_at_least(dim, cfg.halfspace_coord(), cfg.halfspace_min());
    if cfg.model() != "analytic" {
        return Err(HarnessError::new(
            Stage::Sweep,
            "sweeps run on the closed-form score; set model = \"analytic\"",
        ));
    }

    // One fixed feasible reference for every sweep point.
    let ref_seed = stage_seeds::derive(cfg.seed, stage_seeds::REFERENCE);
    let mut feas_rng = RngStream::new(ref_seed, 1);
    let mut reference = Vec::with_capacity(cfg.n_reference());
    let mut drawn = 0usize;
    let max_draws = cfg.n_reference().saturating_mul(1000);
    while reference.len() < cfg.n_reference() {
        if drawn >= max_draws {
            return Err(HarnessError::new(
                Stage::Sweep,
                "rejection sampling exhausted; the constraint covers too little mass",
            ));
        }
        let x = mixture.sample(&mut feas_rng);
        drawn += 1;
        if constraint.is_feasible(&x, 0.0) {
            reference.push(x);
        }
    }

    let sweep_seed = stage_seeds::derive(cfg.seed, stage_seeds::SWEEP);
    let mut cells = Vec::new();
    let mut lines = Vec::new();
    for (i, &value) in values.iter().enumerate() {
        if value <= 0.0 && param == "steps_per_level" {
            return Err(HarnessError::new(
                Stage::Sweep,
                format!("steps_per_level must be positive, got {value}"),
            ));
        }
        if value.fract() != 0.0 || value < 0.0 {
            return Err(HarnessError::new(
                Stage::Sweep,
                format!("sweep values must be nonnegative integers, got {value}"),
            ));
        }
        let mut patched = cfg.clone();
        match param.as_str() {
            "steps_per_level" => patched.steps_per_level = Some(value as usize),
            "projection_start_t" => patched.projection_start_t = Some(value as usize),
            other => {
                return Err(HarnessError::new(
                    Stage::Sweep,
                    format!(
                        "unknown sweep_param '{other}'; expected steps_per_level or \
                         projection_start_t"
                    ),
                ));
            }
        }
        let seed = stage_seeds::derive(sweep_seed, i as u64 + 1);
        let sampler = patched.sampler_config(SamplerVariant::Projected, seed, false)?;
        let (samples, _) =
            sample(&sampler, &mixture, &constraint, cfg.n_chains()).stage(Stage::Sweep)?;
        let mut sw_rng = RngStream::new(sweep_seed, 1000 + i as u64);
        let sw = sliced_wasserstein(&samples, &reference, cfg.sw_projections(), &mut sw_rng)
            .stage(Stage::Sweep)?;
        let feasible = count_feasible(&samples, &constraint, 0.0);
        lines.push(format!(
            "{param} = {value}: sliced-Wasserstein {sw:.4}, feasible {feasible}/{}",
            cfg.n_chains()
        ));
        cells.push(SweepCell {
            value,
            sliced_wasserstein: sw,
            feasible_fraction: feasible as f64 / cfg.n_chains() as f64,
        });
    }
    write_table_csv(
        &out.join("sweep.csv"),
        &["value", "sliced_wasserstein", "feasible_fraction"],
        cells
            .iter()
            .map(|c| vec![c.value, c.sliced_wasserstein, c.feasible_fraction]),
    )?;
    let report = SweepReport {
        config_sha256: hash.clone(),
        seed: cfg.seed,
        param: param.clone(),
        n_chains: cfg.n_chains(),
        cells,
    };
    write_json(&out.join("report.json"), &report)?;
    replot(cfg, out)?;
    Ok(RunSummary {
        out_dir: out.to_path_buf(),
        config_sha256: hash,
        lines,
    })
}

// ---------------------------------------------------------------------
// Dataset-only and model-only commands.

/// Generates the config's dataset and writes it as sample files.
pub fn run_gen_data(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, HarnessError> {
    artifacts::ensure_dir(out)?;
    let hash = write_config_record(cfg, out)?;
    let seed = stage_seeds::derive(cfg.seed, stage_seeds::DATASET);
    let lines = match cfg.experiment {
        Experiment::GmmTheory => {
            let mixture = build_mixture(cfg)?;
            let mut rng = RngStream::new(seed, 0);
            let draws: Vec<StateVector> =
                (0..cfg.n_samples()).map(|_| mixture.sample(&mut rng)).collect();
            write_samples(&out.join("dataset.csv"), &draws, seed, &hash)?;
            vec![format!("wrote {} mixture draws", draws.len())]
        }
        Experiment::PhysicsMotion => {
            let data = gen_ball_dataset(&ball_spec(cfg), seed)?;
            write_samples(&out.join("dataset_train.csv"), &data.train_states(), seed, &hash)?;
            write_samples(&out.join("dataset_test.csv"), &data.test_states(), seed, &hash)?;
            vec![format!(
                "wrote {} train / {} test frame stacks",
                data.train.len(),
                data.test.len()
            )]
        }
        Experiment::Trajectories => {
            let spec = topography_spec(cfg);
            let paths = gen_trajectory_dataset(&spec, cfg.n_paths(), seed)?;
            write_samples(&out.join("dataset_paths.csv"), &paths, seed, &hash)?;
            vec![format!("wrote {} feasible training paths", paths.len())]
        }
        Experiment::Materials => {
            let spec = TextureSpec {
                size: cfg.patch_size(),
                correlation_length: cfg.correlation_length(),
                mean_offset: 0.0,
                threshold: cfg.porosity_threshold(),
            };
            let data = gen_texture_dataset(&spec, cfg.n_textures(), seed)?;
            write_samples(&out.join("dataset_textures.csv"), &data.images, seed, &hash)?;
            write_table_csv(
                &out.join("dataset_porosity.csv"),
                &["image", "porosity_count"],
                data.porosities
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| vec![i as f64, p as f64]),
            )?;
            vec![format!("wrote {} texture fields", data.images.len())]
        }
    };
    Ok(RunSummary {
        out_dir: out.to_path_buf(),
        config_sha256: hash,
        lines,
    })
}

/// The training data each experiment's net learns from.
fn training_data(cfg: &ExperimentConfig) -> Result<Vec<StateVector>, HarnessError> {
    let seed = stage_seeds::derive(cfg.seed, stage_seeds::DATASET);
    match cfg.experiment {
        Experiment::GmmTheory => {
            let mixture = build_mixture(cfg)?;
            let mut rng = RngStream::new(seed, 0);
            Ok((0..cfg.n_samples()).map(|_| mixture.sample(&mut rng)).collect())
        }
        Experiment::PhysicsMotion => Ok(gen_ball_dataset(&ball_spec(cfg), seed)?.train_states()),
        Experiment::Trajectories => {
            gen_trajectory_dataset(&topography_spec(cfg), cfg.n_paths(), seed)
        }
        Experiment::Materials => {
            let spec = TextureSpec {
                size: cfg.patch_size(),
                correlation_length: cfg.correlation_length(),
                mean_offset: 0.0,
                threshold: cfg.porosity_threshold(),
            };
            Ok(gen_texture_dataset(&spec, cfg.n_textures(), seed)?.images)
        }
    }
}

#[derive(Serialize)]
struct TrainReport {
    config_sha256: String,
    seed: u64,
    dim: usize,
    n_train: usize,
    loss: LossSummary,
}

/// Trains the config's score net and writes the checkpoint.
pub fn run_train(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, HarnessError> {
    if cfg.model() == "analytic" {
        return Err(HarnessError::new(
            Stage::Train,
            "model = \"analytic\" is closed-form; nothing to train",
        ));
    }
    artifacts::ensure_dir(out)?;
    let hash = write_config_record(cfg, out)?;
    let data = training_data(cfg)?;
    let (net, loss) = train_net(cfg, &data, out)?;
    let report = TrainReport {
        config_sha256: hash.clone(),
        seed: cfg.seed,
        dim: net.dim(),
        n_train: data.len(),
        loss: loss.clone(),
    };
    write_json(&out.join("report.json"), &report)?;
    replot(cfg, out)?;
    Ok(RunSummary {
        out_dir: out.to_path_buf(),
        config_sha256: hash,
        lines: vec![format!(
            "trained on {} items: held-out loss {:.4} -> {:.4}",
            data.len(),
            loss.holdout_initial,
            loss.holdout_final
        )],
    })
}

/// The evaluation constraint each experiment samples under.
fn eval_constraint(cfg: &ExperimentConfig) -> Result<Box<dyn ConstraintSet>, HarnessError> {
    match cfg.experiment {
        Experiment::GmmTheory => {
            let mixture = build_mixture(cfg)?;
            Ok(Box::new(HalfspaceSet::coordinate_at_least(
                mixture.dim(),
                cfg.halfspace_coord(),
                cfg.halfspace_min(),
            )))
        }
        Experiment::PhysicsMotion => Ok(Box::new(placement_constraint(
            &ball_spec(cfg),
            cfg.eval_start_row(),
            cfg.eval_start_col(),
        )?)),
        Experiment::Trajectories => {
            let spec = topography_spec(cfg);
            let mut all = spec.training_obstacles.clone();
            all.extend(spec.inference_obstacles.iter().cloned());
            Ok(Box::new(
                TrajectoryConstraint::new(all, cfg.traj_start(), cfg.traj_goal(), cfg.n_points())
                    .stage(Stage::Config)?,
            ))
        }
        Experiment::Materials => {
            let dim = cfg.patch_size() * cfg.patch_size();
            let target = cfg
                .porosity_targets()
                .first()
                .copied()
                .unwrap_or(0.2);
            let count = (target * dim as f64).floor() as usize;
            Ok(Box::new(
                PorosityConstraint::new(dim, cfg.porosity_threshold(), count)
                    .stage(Stage::Config)?,
            ))
        }
    }
}

#[derive(Serialize)]
struct SampleReport {
    config_sha256: String,
    seed: u64,
    variant: String,
    n_chains: usize,
    feasible_zero_tol: usize,
    feasible_fraction: f64,
}

/// Samples the config's variant under the experiment's evaluation
/// constraint, reusing `net.ckpt` in the output directory when one
/// exists (training it afresh otherwise — same seeds, same net).
pub fn run_sample(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary, HarnessError> {
    artifacts::ensure_dir(out)?;
    let hash = write_config_record(cfg, out)?;
    let model = if cfg.model() == "analytic" {
        if cfg.experiment != Experiment::GmmTheory {
            return Err(HarnessError::new(
                Stage::Config,
                format!(
                    "{} has no closed-form score; set model = \"mlp\"",
                    cfg.experiment.name()
                ),
            ));
        }
        ScoreModel::Analytic(build_mixture(cfg)?)
    } else {
        let ckpt = out.join("net.ckpt");
        if ckpt.exists() {
            ScoreModel::Trained(checkpoint::load(&ckpt)?)
        } else {
            let data = training_data(cfg)?;
            ScoreModel::Trained(train_net(cfg, &data, out)?.0)
        }
    };
    let score = model.field();
    let constraint = eval_constraint(cfg)?;
    let variant = cfg.variant();
    let (variant_name, stage) = match variant {
        SamplerVariant::Projected => ("projected", stage_seeds::SAMPLE_PROJECTED),
        SamplerVariant::Unconstrained => ("unconstrained", stage_seeds::SAMPLE_UNCONSTRAINED),
        SamplerVariant::PostProject => ("post_project", stage_seeds::SAMPLE_POST),
        SamplerVariant::SnrCorrector => ("snr_corrector", stage_seeds::SAMPLE_PROJECTED),
    };
    let seed = stage_seeds::derive(cfg.seed, stage);
    let sampler = cfg.sampler_config(variant, seed, false)?;
    let (samples, _) =
        sample(&sampler, score, constraint.as_ref(), cfg.n_chains()).stage(Stage::Sample)?;
    write_samples(
        &out.join(format!("samples_{variant_name}.csv")),
        &samples,
        seed,
        &hash,
    )?;
    let trace = chain_zero_trace(cfg, variant, seed, score, constraint.as_ref())?;
    write_trace_csv(&out.join("trace.csv"), &trace)?;
    let feasible = count_feasible(&samples, constraint.as_ref(), 0.0);
    let report = SampleReport {
        config_sha256: hash.clone(),
        seed: cfg.seed,
        variant: variant_name.to_string(),
        n_chains: cfg.n_chains(),
        feasible_zero_tol: feasible,
        feasible_fraction: feasible as f64 / cfg.n_chains() as f64,
    };
    write_json(&out.join("report.json"), &report)?;
    replot(cfg, out)?;
    Ok(RunSummary {
        out_dir: out.to_path_buf(),
        config_sha256: hash,
        lines: vec![format!(
            "{variant_name}: {feasible}/{} feasible at zero tolerance",
            cfg.n_chains()
        )],
    })
}

// ---------------------------------------------------------------------
// Plot regeneration: every SVG is derived from CSVs (plus config
// geometry), so plots can always be rebuilt from a results directory.

fn series_from_table(path: &Path, x_col: usize, y_col: usize, name: &str) -> Result<Option<Series>, HarnessError> {
    if !path.exists() {
        return Ok(None);
    }
    let (_, rows) = read_table_csv(path)?;
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r[x_col].is_finite() && r[y_col].is_finite())
        .map(|r| (r[x_col], r[y_col]))
        .collect();
    if points.is_empty() {
        return Ok(None);
    }
    Ok(Some(Series::new(name, points)))
}

/// Regenerates every SVG that the directory's CSV artifacts support.
/// Returns the paths written.
pub fn replot(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::new();
    let emit = |name: &str, series: Vec<Series>, kind: PlotKind, title: &str, written: &mut Vec<PathBuf>| -> Result<(), HarnessError> {
        if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
            return Ok(());
        }
        let path = out.join(name);
        plot::emit_plot(&series, kind, title, &path)?;
        written.push(path);
        Ok(())
    };

    // Training loss.
    if let (Some(train), Some(holdout)) = (
        series_from_table(&out.join("loss.csv"), 0, 1, "train")?,
        series_from_table(&out.join("loss.csv"), 0, 2, "held-out")?,
    ) {
        emit(
            "loss.svg",
            vec![train, holdout],
            PlotKind::Line,
            "denoising score-matching loss",
            &mut written,
        )?;
    }

    // Per-level constraint error (log scale).
    if let Some((_, rows)) = out
        .join("level_means.csv")
        .exists()
        .then(|| read_table_csv(&out.join("level_means.csv")))
        .transpose()?
    {
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r[1] > 0.0)
            .map(|r| (r[0], r[1].log10()))
            .collect();
        emit(
            "corollary_error.svg",
            vec![Series::new("log10 mean error", points)],
            PlotKind::Line,
            "pre-projection constraint error by level",
            &mut written,
        )?;
    }

    // Ordering-bound grid.
    if let (Some(mut unproj), Some(mut proj)) = (
        series_from_table(&out.join("theorem_grid.csv"), 0, 2, "from raw state")?,
        series_from_table(&out.join("theorem_grid.csv"), 0, 3, "from projected state")?,
    ) {
        // X positions are cell indexes; the CSV keeps the (gamma, offset)
        // labels.
        for (i, p) in unproj.points.iter_mut().enumerate() {
            p.0 = i as f64;
        }
        for (i, p) in proj.points.iter_mut().enumerate() {
            p.0 = i as f64;
        }
        emit(
            "theorem_grid.svg",
            vec![unproj, proj],
            PlotKind::Bar,
            "expected update error by grid cell",
            &mut written,
        )?;
    }

    // Satisfaction curves: any satisfaction_*.csv present.
    let mut sat_series = Vec::new();
    if let Ok(entries) = std::fs::read_dir(out) {
        let mut names: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .filter(|n| n.starts_with("satisfaction_") && n.ends_with(".csv"))
            .collect();
        names.sort();
        for n in names {
            let label = n
                .trim_start_matches("satisfaction_")
                .trim_end_matches(".csv")
                .to_string();
            if let Some(s) = series_from_table(&out.join(&n), 0, 1, &label)? {
                sat_series.push(s);
            }
        }
    }
    emit(
        "satisfaction.svg",
        sat_series,
        PlotKind::Line,
        "constraint satisfaction by tolerance",
        &mut written,
    )?;

    // Sweep.
    if let Some(sw) = series_from_table(&out.join("sweep.csv"), 0, 1, "sliced-Wasserstein")? {
        let feas = series_from_table(&out.join("sweep.csv"), 0, 2, "feasible fraction")?;
        let mut series = vec![sw];
        series.extend(feas);
        emit(
            "sweep.svg",
            series,
            PlotKind::Line,
            "fidelity across the sweep",
            &mut written,
        )?;
    }

    // Trajectory summary bars.
    if let Some((_, rows)) = out
        .join("summary.csv")
        .exists()
        .then(|| read_table_csv(&out.join("summary.csv")))
        .transpose()?
    {
        if let Some(row) = rows.first() {
            let success = Series::new(
                "success rate",
                vec![(0.0, row[0]), (1.0, row[1])],
            );
            let mut series = vec![success];
            if row[2].is_finite() && row[3].is_finite() {
                series.push(Series::new(
                    "mean path length",
                    vec![(0.0, row[2]), (1.0, row[3])],
                ));
            }
            emit(
                "success.svg",
                series,
                PlotKind::Bar,
                "per-step projection vs post-processing",
                &mut written,
            )?;
        }
    }

    // Porosity targets.
    if let (Some(target), Some(measured)) = (
        series_from_table(&out.join("porosity.csv"), 1, 1, "target count")?,
        series_from_table(&out.join("porosity.csv"), 1, 4, "measured mean")?,
    ) {
        emit(
            "porosity.svg",
            vec![target, measured],
            PlotKind::Line,
            "pixel counts below threshold",
            &mut written,
        )?;
    }

    // Maps with paths.
    if cfg.experiment == Experiment::Trajectories {
        let spec = topography_spec(cfg);
        let mut map_paths: Vec<(String, Vec<f64>)> = Vec::new();
        for (file, label) in [("samples_pgdm.csv", "pgdm"), ("samples_post.csv", "post")] {
            let p = out.join(file);
            if p.exists() {
                let (samples, _) = read_samples(&p)?;
                for (i, s) in samples.iter().take(8).enumerate() {
                    map_paths.push((format!("{label}-{i}"), s.data().to_vec()));
                }
            }
        }
        if !map_paths.is_empty() {
            let path = out.join("eval_map.svg");
            plot::emit_map(
                &spec.training_obstacles,
                &spec.inference_obstacles,
                &map_paths,
                "sampled paths with inference-time obstacles",
                &path,
            )?;
            written.push(path);
        }
        let train_csv = out.join("train_paths.csv");
        if train_csv.exists() {
            let (samples, _) = read_samples(&train_csv)?;
            let paths: Vec<(String, Vec<f64>)> = samples
                .iter()
                .enumerate()
                .map(|(i, s)| (format!("train-{i}"), s.data().to_vec()))
                .collect();
            let path = out.join("train_map.svg");
            plot::emit_map(
                &spec.training_obstacles,
                &[],
                &paths,
                "training paths on the base map",
                &path,
            )?;
            written.push(path);
        }
    }

    // Frame previews from the first sample of each frame-shaped file;
    // the grid geometry comes from the config, since sampler outputs
    // are flat vectors.
    if cfg.experiment == Experiment::PhysicsMotion {
        let (height, width, frames) = (cfg.frame_size(), cfg.frame_size(), cfg.n_frames());
        for name in ["samples_earth.csv", "samples_moon.csv", "samples_unconstrained.csv"] {
            let p = out.join(name);
            if !p.exists() {
                continue;
            }
            let (samples, _) = read_samples(&p)?;
            if let Some(first) = samples.iter().find(|s| s.dim() == height * width * frames) {
                let svg_name = name.replace("samples_", "preview_").replace(".csv", ".svg");
                let path = out.join(svg_name);
                plot::emit_pixel_frames(
                    first.data(),
                    height,
                    width,
                    frames,
                    name.trim_end_matches(".csv"),
                    &path,
                )?;
                written.push(path);
            }
        }
    }
    if cfg.experiment == Experiment::Materials {
        let side = cfg.patch_size();
        if let Ok(entries) = std::fs::read_dir(out) {
            let mut names: Vec<String> = entries
                .filter_map(|e| e.ok())
                .filter_map(|e| e.file_name().into_string().ok())
                .filter(|n| n.starts_with("samples_p") && n.ends_with(".csv"))
                .collect();
            names.sort();
            for n in names {
                let (samples, _) = read_samples(&out.join(&n))?;
                if let Some(first) = samples.iter().find(|s| s.dim() == side * side) {
                    let svg_name = n.replace("samples_", "preview_").replace(".csv", ".svg");
                    let path = out.join(svg_name);
                    plot::emit_pixel_frames(
                        first.data(),
                        side,
                        side,
                        1,
                        n.trim_end_matches(".csv"),
                        &path,
                    )?;
                    written.push(path);
                }
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::artifacts::dir_sha256;

    fn tiny_gmm_config() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            r#"
experiment = "gmm_theory"
seed = 7
t_levels = 6
sigma_min = 0.1
sigma_max = 2.0
steps_per_level = 10
n_chains = 40
n_reference = 200
theory_trials = 2000
theory_gammas = [0.1, 0.5]
theory_offsets = [1.0]
"#,
        )
        .unwrap()
    }

    #[test]
    fn gmm_run_writes_the_full_bundle_and_is_deterministic() {
        let dir_a = tempfile::tempdir().unwrap();
        let summary = run_experiment(&tiny_gmm_config(), dir_a.path()).unwrap();
        for file in [
            "config.json",
            "report.json",
            "samples_projected.csv",
            "samples_projected.json",
            "samples_unconstrained.csv",
            "samples_post_project.csv",
            "reference_full.csv",
            "reference_feasible.csv",
            "satisfaction_projected.csv",
            "theorem_grid.csv",
            "level_means.csv",
            "error_trace.csv",
            "trace.csv",
            "satisfaction.svg",
            "corollary_error.svg",
            "theorem_grid.svg",
        ] {
            assert!(
                dir_a.path().join(file).exists(),
                "missing artifact {file}"
            );
        }
        assert!(!summary.lines.is_empty());

        let dir_b = tempfile::tempdir().unwrap();
        run_experiment(&tiny_gmm_config(), dir_b.path()).unwrap();
        assert_eq!(
            dir_sha256(dir_a.path()).unwrap(),
            dir_sha256(dir_b.path()).unwrap(),
            "same config + seed must give byte-identical directories"
        );
    }

    #[test]
    fn gmm_projected_outputs_are_always_feasible() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_gmm_config();
        run_experiment(&cfg, dir.path()).unwrap();
        let (samples, sidecar) =
            read_samples(&dir.path().join("samples_projected.csv")).unwrap();
        assert_eq!(samples.len(), 40);
        assert_eq!(sidecar.config_sha256, cfg.content_hash());
        let constraint = HalfspaceSet::coordinate_at_least(2, 0, 0.5);
        for s in &samples {
            assert!(constraint.is_feasible(s, 0.0));
        }
    }

    #[test]
    fn different_seeds_give_different_artifacts() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let mut cfg = tiny_gmm_config();
        run_experiment(&cfg, dir_a.path()).unwrap();
        cfg.seed = 8;
        run_experiment(&cfg, dir_b.path()).unwrap();
        assert_ne!(
            dir_sha256(dir_a.path()).unwrap(),
            dir_sha256(dir_b.path()).unwrap()
        );
    }

    fn tiny_materials_config() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            r#"
experiment = "materials"
seed = 3
t_levels = 4
sigma_min = 0.1
sigma_max = 1.0
steps_per_level = 3
n_chains = 4
patch_size = 8
n_textures = 24
porosity_targets = [0.25, 0.5]
epochs = 1
mlp_hidden = [16]
"#,
        )
        .unwrap()
    }

    #[test]
    fn materials_outputs_hit_exact_pixel_counts() {
        let dir = tempfile::tempdir().unwrap();
        run_experiment(&tiny_materials_config(), dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let report: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(report["all_exact"], true);
        let (samples, _) = read_samples(&dir.path().join("samples_p25.csv")).unwrap();
        for s in &samples {
            assert_eq!(porosity_measure(s.data(), 0.0), 16, "25% of 64 pixels");
        }
        assert!(dir.path().join("net.ckpt").exists());
        assert!(dir.path().join("loss.svg").exists());
        assert!(dir.path().join("preview_p25.svg").exists());
    }

    fn tiny_physics_config() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            r#"
experiment = "physics_motion"
seed = 5
t_levels = 4
sigma_min = 0.1
sigma_max = 1.0
steps_per_level = 3
n_chains = 5
frame_size = 8
n_frames = 3
n_samples = 40
epochs = 1
mlp_hidden = [16]
"#,
        )
        .unwrap()
    }

    #[test]
    fn physics_run_satisfies_both_gravity_constraints() {
        let dir = tempfile::tempdir().unwrap();
        run_experiment(&tiny_physics_config(), dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let report: serde_json::Value = serde_json::from_str(&text).unwrap();
        let evals = report["evals"].as_array().unwrap();
        for eval in evals {
            if eval["constraint"] != "unconstrained" {
                assert_eq!(
                    eval["feasible_fraction"], 1.0,
                    "projected runs are exactly feasible: {eval}"
                );
            }
        }
        assert!(dir.path().join("preview_earth.svg").exists());
        assert!(dir.path().join("preview_moon.svg").exists());
        assert!(dir.path().join("satisfaction.svg").exists());
    }

    fn tiny_trajectories_config() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            r#"
experiment = "trajectories"
seed = 11
t_levels = 5
sigma_min = 0.05
sigma_max = 1.0
steps_per_level = 4
n_chains = 4
n_points = 8
n_paths = 30
epochs = 2
mlp_hidden = [24]
"#,
        )
        .unwrap()
    }

    #[test]
    fn trajectories_run_reports_both_variants() {
        let dir = tempfile::tempdir().unwrap();
        let summary = run_experiment(&tiny_trajectories_config(), dir.path()).unwrap();
        assert!(summary.lines.iter().any(|l| l.contains("post-process")));
        let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let report: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(report["pgdm"]["n_chains"], 4);
        assert_eq!(report["post_process"]["n_chains"], 4);
        assert!(dir.path().join("eval_map.svg").exists());
        assert!(dir.path().join("train_map.svg").exists());
        assert!(dir.path().join("summary.csv").exists());
    }

    #[test]
    fn verify_theory_bundle_holds_on_the_grid() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_gmm_config();
        let summary = run_verify_theory(&cfg, dir.path()).unwrap();
        assert!(summary.lines[0].contains("true"));
        let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let report: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(report["all_hold"], true);
        assert_eq!(report["cells"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn sweep_reports_one_cell_per_value() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_gmm_config();
        cfg.sweep_param = Some("steps_per_level".to_string());
        cfg.sweep_values = Some(vec![2.0, 10.0]);
        run_sweep(&cfg, dir.path()).unwrap();
        let (headers, rows) = read_table_csv(&dir.path().join("sweep.csv")).unwrap();
        assert_eq!(headers[0], "value");
        assert_eq!(rows.len(), 2);
        assert!(dir.path().join("sweep.svg").exists());
    }

    #[test]
    fn sweep_rejects_other_experiments_and_bad_params() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_materials_config();
        cfg.sweep_param = Some("steps_per_level".to_string());
        cfg.sweep_values = Some(vec![2.0]);
        let err = run_sweep(&cfg, dir.path()).unwrap_err();
        assert!(err.to_string().contains("gmm_theory"), "{err}");
    }

    #[test]
    fn gen_data_and_train_and_sample_compose() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_materials_config();
        run_gen_data(&cfg, dir.path()).unwrap();
        assert!(dir.path().join("dataset_textures.csv").exists());
        assert!(dir.path().join("dataset_porosity.csv").exists());
        run_train(&cfg, dir.path()).unwrap();
        let ckpt_bytes = std::fs::read(dir.path().join("net.ckpt")).unwrap();
        run_sample(&cfg, dir.path()).unwrap();
        // Sampling reused the checkpoint rather than retraining.
        assert_eq!(std::fs::read(dir.path().join("net.ckpt")).unwrap(), ckpt_bytes);
        assert!(dir.path().join("samples_projected.csv").exists());
        assert!(dir.path().join("trace.csv").exists());
    }

    #[test]
    fn train_rejects_the_analytic_model() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_gmm_config();
        let err = run_train(&cfg, dir.path()).unwrap_err();
        assert!(err.to_string().contains("nothing to train"), "{err}");
    }
}
