//! Flat key/value experiment configuration.
//!
//! Configs are TOML files with every key at the top level. Unknown keys
//! are rejected at parse time. Each experiment fills unset keys with its
//! documented defaults at resolution time, so a config only needs the
//! keys it wants to pin.
//!
//! The configuration hash covers everything except `out_dir`: two runs
//! of the same experiment into different directories must produce
//! byte-identical artifacts, so the output location cannot leak into
//! any emitted file.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use pgdm_core::{NoiseSchedule, SamplerConfig, SamplerVariant};

use crate::error::{HarnessError, Stage, StageExt};

/// Which experiment pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    GmmTheory,
    PhysicsMotion,
    Trajectories,
    Materials,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::GmmTheory => "gmm_theory",
            Experiment::PhysicsMotion => "physics_motion",
            Experiment::Trajectories => "trajectories",
            Experiment::Materials => "materials",
        }
    }
}

/// The full flat config schema. Every key any experiment understands is
/// declared here; a TOML key outside this list is a parse error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Master seed; every stage derives its own streams from it.
    #[serde(default)]
    pub seed: u64,
    /// Output directory; overridable from the CLI and excluded from the
    /// config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,

    // Noise schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_max: Option<f64>,

    // Sampler.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_level: Option<usize>,
    /// `projected`, `unconstrained`, `post_project`, or `snr_corrector`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    /// Level at which per-step projections begin (`t_levels` = always,
    /// 0 = never). Defaults to always.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection_start_t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_chains: Option<usize>,

    // Score model.
    /// `analytic` (closed-form mixture score) or `mlp` (trained).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mlp_hidden: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,

    // Metrics.
    /// Ascending tolerance grid for constraint-satisfaction curves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sw_projections: Option<usize>,
    /// Fresh-draw reference batch size for distribution distances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_reference: Option<usize>,

    // Mixture task (gmm_theory).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gmm_weights: Option<Vec<f64>>,
    /// Component means, flattened two per component: `[x0, y0, x1, y1, …]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gmm_means: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gmm_variance: Option<f64>,
    /// Halfspace constraint `x[coord] ≥ min`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfspace_coord: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfspace_min: Option<f64>,

    // Falling-object task (physics_motion).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_frames: Option<usize>,
    /// Downward acceleration in pixels per frame².
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_radius: Option<f64>,
    /// Start position of the evaluation trajectory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_start_row: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_start_col: Option<f64>,

    // Path-planning task (trajectories).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    /// Obstacles as flattened `[cx, cy, r, …]` triples; overrides the
    /// built-in map when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_obstacles: Option<Vec<f64>>,
    /// Extra obstacles imposed only at inference time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infer_obstacles: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traj_start: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traj_goal: Option<Vec<f64>>,
    /// Endpoint sampling bands `[x_lo, x_hi, y_lo, y_hi]` for dataset
    /// start and goal points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_band: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_band: Option<Vec<f64>>,

    // Texture task (materials).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub porosity_targets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub porosity_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_textures: Option<usize>,

    // Statistical verification of the projected-update bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory_gammas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory_offsets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory_trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory_xi: Option<f64>,

    // Parameter sweeps.
    /// `steps_per_level` or `projection_start_t`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_param: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_values: Option<Vec<f64>>,
}

impl ExperimentConfig {
    /// A config with only the experiment set; everything else defaults.
    pub fn new(experiment: Experiment) -> Self {
        let toml = format!("experiment = \"{}\"", experiment.name());
        Self::from_toml_str(&toml).expect("minimal config parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text).stage(Stage::Config)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::new(Stage::Config, format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Rejects values no experiment could accept. Experiment drivers do
    /// their own narrower checks on top.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::new(Stage::Config, msg));
        if let Some(v) = &self.variant {
            if parse_variant(v).is_none() {
                return bad(format!(
                    "unknown variant {v:?}; expected projected, unconstrained, \
                     post_project, or snr_corrector"
                ));
            }
        }
        if let Some(m) = &self.model {
            if m != "analytic" && m != "mlp" {
                return bad(format!("unknown model {m:?}; expected analytic or mlp"));
            }
        }
        if let Some(p) = &self.sweep_param {
            if p != "steps_per_level" && p != "projection_start_t" {
                return bad(format!(
                    "unknown sweep_param {p:?}; expected steps_per_level or projection_start_t"
                ));
            }
        }
        for (key, val) in [
            ("sigma_min", self.sigma_min),
            ("sigma_max", self.sigma_max),
            ("snr_r", self.snr_r),
            ("gmm_variance", self.gmm_variance),
            ("gravity", self.gravity),
            ("object_radius", self.object_radius),
            ("correlation_length", self.correlation_length),
            ("learning_rate", self.learning_rate),
            ("theory_xi", self.theory_xi),
        ] {
            if let Some(v) = val {
                if !(v.is_finite() && v > 0.0) {
                    return bad(format!("{key} must be positive and finite, got {v}"));
                }
            }
        }
        for (key, val) in [
            ("t_levels", self.t_levels),
            ("steps_per_level", self.steps_per_level),
            ("n_chains", self.n_chains),
            ("n_samples", self.n_samples),
            ("n_paths", self.n_paths),
            ("n_textures", self.n_textures),
            ("n_reference", self.n_reference),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("theory_trials", self.theory_trials),
        ] {
            if val == Some(0) {
                return bad(format!("{key} must be at least 1"));
            }
        }
        if let Some(obs) = &self.train_obstacles {
            if obs.len() % 3 != 0 {
                return bad(format!(
                    "train_obstacles must be cx,cy,r triples; got {} values",
                    obs.len()
                ));
            }
        }
        if let Some(obs) = &self.infer_obstacles {
            if obs.len() % 3 != 0 {
                return bad(format!(
                    "infer_obstacles must be cx,cy,r triples; got {} values",
                    obs.len()
                ));
            }
        }
        if let Some(id) = self.map_id {
            if id != 1 && id != 2 {
                return bad(format!("map_id must be 1 or 2, got {id}"));
            }
        }
        if let Some(tols) = &self.tolerances {
            if tols.windows(2).any(|w| w[0] > w[1]) {
                return bad("tolerances must be ascending".into());
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form with `out_dir` cleared, so the
    /// hash identifies the run's inputs independent of where artifacts
    /// land.
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = None;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    // Resolution helpers: config value or the experiment's default.

    pub fn t_levels(&self) -> usize {
        self.t_levels.unwrap_or(match self.experiment {
            Experiment::GmmTheory => 20,
            Experiment::PhysicsMotion => 15,
            Experiment::Trajectories => 20,
            Experiment::Materials => 15,
        })
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min.unwrap_or(match self.experiment {
            Experiment::GmmTheory => 0.05,
            Experiment::PhysicsMotion | Experiment::Materials => 0.05,
            Experiment::Trajectories => 0.02,
        })
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max.unwrap_or(match self.experiment {
            Experiment::GmmTheory => 3.0,
            Experiment::PhysicsMotion | Experiment::Materials => 2.0,
            Experiment::Trajectories => 1.0,
        })
    }

    pub fn steps_per_level(&self) -> usize {
        self.steps_per_level.unwrap_or(match self.experiment {
            Experiment::GmmTheory => 80,
            Experiment::PhysicsMotion | Experiment::Materials => 10,
            Experiment::Trajectories => 15,
        })
    }

    pub fn projection_start_t(&self) -> usize {
        self.projection_start_t.unwrap_or(self.t_levels())
    }

    pub fn snr_r(&self) -> f64 {
        self.snr_r.unwrap_or(0.2)
    }

    pub fn n_chains(&self) -> usize {
        self.n_chains.unwrap_or(match self.experiment {
            Experiment::GmmTheory => 400,
            Experiment::PhysicsMotion => 100,
            Experiment::Trajectories => 50,
            Experiment::Materials => 100,
        })
    }

    pub fn model(&self) -> &str {
        match &self.model {
            Some(m) => m,
            None => match self.experiment {
                Experiment::GmmTheory => "analytic",
                _ => "mlp",
            },
        }
    }

    pub fn mlp_hidden(&self) -> Vec<usize> {
        self.mlp_hidden.clone().unwrap_or(match self.experiment {
            Experiment::GmmTheory => vec![64, 64],
            Experiment::PhysicsMotion => vec![64],
            Experiment::Trajectories => vec![64, 64],
            Experiment::Materials => vec![64],
        })
    }

    pub fn epochs(&self) -> usize {
        self.epochs.unwrap_or(match self.experiment {
            Experiment::GmmTheory => 120,
            Experiment::PhysicsMotion => 2,
            Experiment::Trajectories => 60,
            Experiment::Materials => 3,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size.unwrap_or(32)
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate.unwrap_or(1e-3)
    }

    pub fn tolerances(&self) -> Vec<f64> {
        self.tolerances
            .clone()
            .unwrap_or_else(|| vec![0.0, 1e-6, 1e-3, 0.01, 0.1, 0.5, 1.0, 2.0])
    }

    pub fn sw_projections(&self) -> usize {
        self.sw_projections.unwrap_or(pgdm_core::DEFAULT_SW_PROJECTIONS)
    }

    pub fn n_reference(&self) -> usize {
        self.n_reference.unwrap_or(4000)
    }

    pub fn gmm_weights(&self) -> Vec<f64> {
        self.gmm_weights.clone().unwrap_or_else(|| vec![0.5, 0.5])
    }

    pub fn gmm_means(&self) -> Vec<f64> {
        self.gmm_means
            .clone()
            .unwrap_or_else(|| vec![-2.0, 0.0, 2.0, 0.0])
    }

    pub fn gmm_variance(&self) -> f64 {
        self.gmm_variance.unwrap_or(1.0)
    }

    pub fn halfspace_coord(&self) -> usize {
        self.halfspace_coord.unwrap_or(0)
    }

    pub fn halfspace_min(&self) -> f64 {
        self.halfspace_min.unwrap_or(0.5)
    }

    pub fn frame_size(&self) -> usize {
        self.frame_size.unwrap_or(16)
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames.unwrap_or(6)
    }

    /// Earth-gravity default scales with the frame so six frames of fall
    /// fit a column from mid-range starts: 2 px/frame² at 64 px.
    pub fn gravity(&self) -> f64 {
        self.gravity
            .unwrap_or(2.0 * self.frame_size() as f64 / 64.0)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples.unwrap_or(1000)
    }

    /// Object footprint radius: a 3 px disc at 64 px, scaled
    /// proportionally, never below 1 px.
    pub fn object_radius(&self) -> f64 {
        self.object_radius
            .unwrap_or((3.0 * self.frame_size() as f64 / 64.0).max(1.0))
    }

    pub fn eval_start_row(&self) -> f64 {
        self.eval_start_row
            .unwrap_or((self.frame_size() as f64 / 8.0).floor())
    }

    pub fn eval_start_col(&self) -> f64 {
        self.eval_start_col
            .unwrap_or((self.frame_size() as f64 / 2.0).floor())
    }

    pub fn map_id(&self) -> u32 {
        self.map_id.unwrap_or(1)
    }

    pub fn n_points(&self) -> usize {
        self.n_points.unwrap_or(16)
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths.unwrap_or(300)
    }

    pub fn traj_start(&self) -> [f64; 2] {
        match &self.traj_start {
            Some(v) if v.len() == 2 => [v[0], v[1]],
            _ => [0.05, 0.5],
        }
    }

    pub fn traj_goal(&self) -> [f64; 2] {
        match &self.traj_goal {
            Some(v) if v.len() == 2 => [v[0], v[1]],
            _ => [0.95, 0.5],
        }
    }

    pub fn start_band(&self) -> [f64; 4] {
        match &self.start_band {
            Some(v) if v.len() == 4 => [v[0], v[1], v[2], v[3]],
            _ => [0.02, 0.10, 0.10, 0.90],
        }
    }

    pub fn goal_band(&self) -> [f64; 4] {
        match &self.goal_band {
            Some(v) if v.len() == 4 => [v[0], v[1], v[2], v[3]],
            _ => [0.90, 0.98, 0.10, 0.90],
        }
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size.unwrap_or(32)
    }

    pub fn porosity_targets(&self) -> Vec<f64> {
        self.porosity_targets
            .clone()
            .unwrap_or_else(|| vec![0.1, 0.2, 0.3, 0.4, 0.5])
    }

    pub fn porosity_threshold(&self) -> f64 {
        self.porosity_threshold.unwrap_or(0.0)
    }

    pub fn correlation_length(&self) -> f64 {
        self.correlation_length.unwrap_or(3.0)
    }

    pub fn n_textures(&self) -> usize {
        self.n_textures.unwrap_or(300)
    }

    pub fn theory_gammas(&self) -> Vec<f64> {
        self.theory_gammas
            .clone()
            .unwrap_or_else(|| vec![0.05, 0.1, 0.3, 0.5])
    }

    pub fn theory_offsets(&self) -> Vec<f64> {
        self.theory_offsets
            .clone()
            .unwrap_or_else(|| vec![0.5, 1.0, 2.0])
    }

    pub fn theory_trials(&self) -> usize {
        self.theory_trials.unwrap_or(100_000)
    }

    pub fn theory_xi(&self) -> f64 {
        self.theory_xi.unwrap_or(1e-3)
    }

    /// The schedule the experiment's sampler runs on.
    pub fn schedule(&self) -> Result<NoiseSchedule, HarnessError> {
        NoiseSchedule::geometric(self.sigma_min(), self.sigma_max(), self.t_levels())
            .stage(Stage::Config)
    }

    /// Sampler configuration under this config's keys, with the variant
    /// and seed chosen by the caller (drivers run several variants from
    /// one config).
    pub fn sampler_config(
        &self,
        variant: SamplerVariant,
        seed: u64,
        record_trace: bool,
    ) -> Result<SamplerConfig, HarnessError> {
        let config = SamplerConfig {
            schedule: self.schedule()?,
            steps_per_level: self.steps_per_level(),
            projection_start_level: self.projection_start_t(),
            variant,
            snr_r: self.snr_r(),
            seed,
            record_trace,
        };
        config.validate().stage(Stage::Config)?;
        Ok(config)
    }

    /// The variant named by the config (default: projected).
    pub fn variant(&self) -> SamplerVariant {
        self.variant
            .as_deref()
            .and_then(parse_variant)
            .unwrap_or(SamplerVariant::Projected)
    }
}

pub fn parse_variant(name: &str) -> Option<SamplerVariant> {
    match name {
        "projected" => Some(SamplerVariant::Projected),
        "unconstrained" => Some(SamplerVariant::Unconstrained),
        "post_project" => Some(SamplerVariant::PostProject),
        "snr_corrector" => Some(SamplerVariant::SnrCorrector),
        _ => None,
    }
}

/// Offsets mixing the master seed into per-stage seeds, so dataset
/// generation, training, and each sampling run draw from disjoint
/// streams no matter how many chains each uses.
pub mod stage_seeds {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn derive(master: u64, stage: u64) -> u64 {
        master ^ stage.wrapping_mul(GOLDEN)
    }

    pub const DATASET: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const SAMPLE_PROJECTED: u64 = 3;
    pub const SAMPLE_UNCONSTRAINED: u64 = 4;
    pub const SAMPLE_POST: u64 = 5;
    pub const REFERENCE: u64 = 6;
    pub const METRICS: u64 = 7;
    pub const THEORY: u64 = 8;
    pub const SWEEP: u64 = 9;
    pub const SAMPLE_MOON: u64 = 10;
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "experiment = \"gmm_theory\"";

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(cfg.experiment, Experiment::GmmTheory);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.t_levels(), 20);
        assert_eq!(cfg.model(), "analytic");
        assert_eq!(cfg.projection_start_t(), cfg.t_levels());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml_str(
            "experiment = \"materials\"\nporosity_targt = [0.1]\n",
        )
        .unwrap_err();
        assert_eq!(err.stage, Stage::Config);
        assert!(
            err.message.contains("porosity_targt"),
            "parse error should name the bad key: {}",
            err.message
        );
    }

    #[test]
    fn unknown_enum_values_are_rejected() {
        for text in [
            "experiment = \"materails\"",
            "experiment = \"gmm_theory\"\nvariant = \"projectd\"",
            "experiment = \"gmm_theory\"\nmodel = \"mlpp\"",
            "experiment = \"gmm_theory\"\nsweep_param = \"m\"",
            "experiment = \"trajectories\"\nmap_id = 3",
        ] {
            assert!(
                ExperimentConfig::from_toml_str(text).is_err(),
                "should reject: {text}"
            );
        }
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        for text in [
            "experiment = \"gmm_theory\"\nsigma_min = 0.0",
            "experiment = \"gmm_theory\"\nsigma_max = -1.0",
            "experiment = \"gmm_theory\"\nt_levels = 0",
            "experiment = \"gmm_theory\"\ntolerances = [0.5, 0.1]",
            "experiment = \"trajectories\"\ntrain_obstacles = [0.5, 0.5]",
        ] {
            assert!(
                ExperimentConfig::from_toml_str(text).is_err(),
                "should reject: {text}"
            );
        }
    }

    #[test]
    fn hash_ignores_out_dir_but_not_seed() {
        let a = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let mut b = a.clone();
        b.out_dir = Some("elsewhere".into());
        assert_eq!(a.content_hash(), b.content_hash());

        let mut c = a.clone();
        c.seed = 7;
        assert_ne!(a.content_hash(), c.content_hash());
        assert_eq!(a.content_hash().len(), 64);
    }

    #[test]
    fn sampler_config_resolves_and_validates() {
        let cfg = ExperimentConfig::from_toml_str(
            "experiment = \"gmm_theory\"\nt_levels = 10\nsteps_per_level = 5\n",
        )
        .unwrap();
        let sc = cfg
            .sampler_config(SamplerVariant::Projected, 3, false)
            .unwrap();
        assert_eq!(sc.schedule.num_levels(), 10);
        assert_eq!(sc.steps_per_level, 5);
        assert_eq!(sc.projection_start_level, 10);

        let bad = ExperimentConfig::from_toml_str(
            "experiment = \"gmm_theory\"\nprojection_start_t = 99\n",
        )
        .unwrap();
        assert!(bad
            .sampler_config(SamplerVariant::Projected, 3, false)
            .is_err());
    }

    #[test]
    fn stage_seeds_are_distinct() {
        let seeds: Vec<u64> = (1..=10)
            .map(|stage| stage_seeds::derive(42, stage))
            .collect();
        for i in 0..seeds.len() {
            for j in (i + 1)..seeds.len() {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
    }

    #[test]
    fn gravity_and_radius_scale_with_frame_size() {
        let small = ExperimentConfig::from_toml_str(
            "experiment = \"physics_motion\"\nframe_size = 16\n",
        )
        .unwrap();
        assert_eq!(small.gravity(), 0.5);
        assert_eq!(small.object_radius(), 1.0);

        let full = ExperimentConfig::from_toml_str(
            "experiment = \"physics_motion\"\nframe_size = 64\n",
        )
        .unwrap();
        assert_eq!(full.gravity(), 2.0);
        assert_eq!(full.object_radius(), 3.0);
    }
}
