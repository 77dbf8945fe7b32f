//! Dataset generators for the three experiments.
//!
//! Everything is a pure function of its spec and seed: the same inputs
//! produce bitwise-identical datasets.

use pgdm_core::{
    disc_mask, porosity_measure, Circle, ConstraintSet, ObjectPlacementConstraint, RngStream,
    ShapeTag, StateVector, TrajectoryConstraint,
};

use crate::error::{HarnessError, Stage, StageExt};

/// Moon gravity as a fraction of Earth's.
pub const MOON_GRAVITY_RATIO: f64 = 1.62 / 9.81;

/// Positions of a dropped object over `n_frames` frames under constant
/// acceleration `a` with zero initial velocity, by the discrete
/// recurrence `v_t = v_{t-1} + a`, `p_t = p_{t-1} + v_{t-1} + a/2`
/// (closed form `p0 + a·t²/2`).
pub fn compute_positions(p0: f64, a: f64, n_frames: usize) -> Vec<f64> {
    assert!(n_frames >= 1, "need at least one frame");
    let mut positions = Vec::with_capacity(n_frames);
    let mut p = p0;
    let mut v = 0.0;
    positions.push(p);
    for _ in 1..n_frames {
        p += v + a / 2.0;
        v += a;
        positions.push(p);
    }
    positions
}

/// Specification of the falling-object video dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct BallMotionSpec {
    pub height: usize,
    pub width: usize,
    pub n_frames: usize,
    /// Downward acceleration, pixels per frame².
    pub gravity: f64,
    /// Radius of the filled-disc object footprint, pixels.
    pub object_radius: f64,
    pub n_samples: usize,
    /// Fraction of samples in the train split (the rest are test).
    pub train_fraction: f64,
}

impl BallMotionSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::new(Stage::GenData, msg));
        if self.height == 0 || self.width == 0 || self.n_frames == 0 {
            return bad("frame dimensions and count must be positive".into());
        }
        if !(self.gravity.is_finite() && self.gravity > 0.0) {
            return bad(format!("gravity must be positive, got {}", self.gravity));
        }
        if !(self.object_radius.is_finite() && self.object_radius >= 0.0) {
            return bad(format!(
                "object radius must be nonnegative, got {}",
                self.object_radius
            ));
        }
        if self.n_samples == 0 {
            return bad("need at least one sample".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            ));
        }
        // The whole fall must fit the frame from at least one start row.
        let drop = self.gravity * ((self.n_frames - 1) as f64).powi(2) / 2.0;
        if drop >= self.height as f64 {
            return bad(format!(
                "a {}-frame fall at gravity {} drops {drop:.1} px, more than the \
                 {}-px frame height",
                self.n_frames, self.gravity, self.height
            ));
        }
        Ok(())
    }
}

/// One generated motion sample: the frame stack plus the trajectory it
/// was stamped from.
#[derive(Debug, Clone)]
pub struct BallSample {
    pub frames: StateVector,
    pub start_row: f64,
    pub col: f64,
    /// Rounded (row, col) centres per frame, the stamping targets.
    pub targets: Vec<(usize, usize)>,
}

/// The generated dataset, already split.
#[derive(Debug, Clone)]
pub struct BallDataset {
    pub train: Vec<BallSample>,
    pub test: Vec<BallSample>,
}

impl BallDataset {
    pub fn train_states(&self) -> Vec<StateVector> {
        self.train.iter().map(|s| s.frames.clone()).collect()
    }

    pub fn test_states(&self) -> Vec<StateVector> {
        self.test.iter().map(|s| s.frames.clone()).collect()
    }
}

/// Rounded frame centres for a drop from `start_row` in column `col`,
/// or None if any centre leaves the frame.
fn drop_targets(
    spec: &BallMotionSpec,
    start_row: f64,
    col: f64,
) -> Option<Vec<(usize, usize)>> {
    let positions = compute_positions(start_row, spec.gravity, spec.n_frames);
    let c = col.round();
    if c < 0.0 || c > (spec.width - 1) as f64 {
        return None;
    }
    let mut targets = Vec::with_capacity(spec.n_frames);
    for p in positions {
        let r = p.round();
        if r < 0.0 || r > (spec.height - 1) as f64 {
            return None;
        }
        targets.push((r as usize, c as usize));
    }
    Some(targets)
}

/// The placement constraint for a drop from `(start_row, col)` under the
/// spec's gravity — the same operator the generator stamps frames with.
pub fn placement_constraint(
    spec: &BallMotionSpec,
    start_row: f64,
    col: f64,
) -> Result<ObjectPlacementConstraint, HarnessError> {
    let targets = drop_targets(spec, start_row, col).ok_or_else(|| {
        HarnessError::new(
            Stage::GenData,
            format!(
                "trajectory from row {start_row} col {col} leaves the \
                 {}x{} frame",
                spec.height, spec.width
            ),
        )
    })?;
    ObjectPlacementConstraint::new(
        spec.height,
        spec.width,
        spec.n_frames,
        targets,
        disc_mask(spec.object_radius),
    )
    .stage(Stage::GenData)
}

/// Generates the dataset: start rows and columns drawn uniformly over
/// the frame, resampled until the whole rounded trajectory stays inside;
/// frames are produced by projecting a blank background stack through
/// the sample's own placement constraint, so every sample is feasible at
/// zero tolerance by construction.
pub fn gen_ball_dataset(spec: &BallMotionSpec, seed: u64) -> Result<BallDataset, HarnessError> {
    spec.validate()?;
    let mut rng = RngStream::new(seed, 0);
    let mut samples = Vec::with_capacity(spec.n_samples);
    let frame_len = spec.height * spec.width;
    let blank = StateVector::new(
        vec![ObjectPlacementConstraint::DEFAULT_BACKGROUND; frame_len * spec.n_frames],
        ShapeTag::Grid {
            height: spec.height,
            width: spec.width,
            frames: spec.n_frames,
        },
    )
    .expect("background stack is finite");

    let max_attempts = 10_000usize.saturating_mul(spec.n_samples);
    let mut attempts = 0;
    while samples.len() < spec.n_samples {
        attempts += 1;
        if attempts > max_attempts {
            return Err(HarnessError::new(
                Stage::GenData,
                format!(
                    "could not place {} trajectories inside a {}x{} frame at \
                     gravity {} after {attempts} attempts",
                    spec.n_samples, spec.height, spec.width, spec.gravity
                ),
            ));
        }
        let start_row = rng.uniform_range(0.0, (spec.height - 1) as f64);
        let col = rng.uniform_range(0.0, (spec.width - 1) as f64);
        let Some(targets) = drop_targets(spec, start_row, col) else {
            continue;
        };
        let constraint = ObjectPlacementConstraint::new(
            spec.height,
            spec.width,
            spec.n_frames,
            targets.clone(),
            disc_mask(spec.object_radius),
        )
        .stage(Stage::GenData)?;
        let frames = constraint.project(&blank).stage(Stage::GenData)?;
        samples.push(BallSample {
            frames,
            start_row,
            col,
            targets,
        });
    }

    let n_train = ((spec.n_samples as f64) * spec.train_fraction).round() as usize;
    let n_train = n_train.clamp(1, spec.n_samples - 1);
    let test = samples.split_off(n_train);
    Ok(BallDataset {
        train: samples,
        test,
    })
}

// ---------------------------------------------------------------------
// Trajectories.

/// A topography: obstacles known at training time, obstacles added only
/// at inference, and the endpoint-sampling bands for the dataset.
#[derive(Debug, Clone)]
pub struct TopographySpec {
    pub training_obstacles: Vec<Circle>,
    pub inference_obstacles: Vec<Circle>,
    pub n_points: usize,
    /// `[x_lo, x_hi, y_lo, y_hi]` band start points are drawn from.
    pub start_band: [f64; 4],
    /// Same for goal points.
    pub goal_band: [f64; 4],
}

/// Built-in training obstacles for the two shipped maps.
pub fn topography_map(id: u32) -> Vec<Circle> {
    match id {
        1 => vec![
            Circle::new([0.35, 0.30], 0.10),
            Circle::new([0.55, 0.68], 0.12),
            Circle::new([0.75, 0.35], 0.09),
        ],
        2 => vec![
            Circle::new([0.25, 0.60], 0.09),
            Circle::new([0.42, 0.28], 0.10),
            Circle::new([0.55, 0.78], 0.09),
            Circle::new([0.70, 0.48], 0.09),
            Circle::new([0.85, 0.72], 0.07),
        ],
        other => panic!("no built-in topography {other}; shipped maps are 1 and 2"),
    }
}

/// Built-in obstacles added only at inference time for the two shipped
/// maps: a pocket straddling the corridor the training routes prefer.
pub fn inference_obstacles(id: u32) -> Vec<Circle> {
    match id {
        1 => vec![
            Circle::new([0.46, 0.455], 0.055),
            Circle::new([0.52, 0.50], 0.055),
            Circle::new([0.46, 0.545], 0.055),
        ],
        2 => vec![
            Circle::new([0.32, 0.445], 0.05),
            Circle::new([0.38, 0.49], 0.05),
            Circle::new([0.32, 0.535], 0.05),
        ],
        other => panic!("no built-in topography {other}; shipped maps are 1 and 2"),
    }
}

fn point_clear(p: [f64; 2], obstacles: &[Circle], clearance: f64) -> bool {
    obstacles.iter().all(|o| {
        let dx = p[0] - o.center[0];
        let dy = p[1] - o.center[1];
        (dx * dx + dy * dy).sqrt() >= o.radius + clearance
    })
}

fn straight_line(start: [f64; 2], goal: [f64; 2], n_points: usize) -> Vec<f64> {
    let mut path = Vec::with_capacity(2 * n_points);
    for i in 0..n_points {
        let u = i as f64 / (n_points - 1) as f64;
        path.push(start[0] + u * (goal[0] - start[0]));
        path.push(start[1] + u * (goal[1] - start[1]));
    }
    path
}

/// Shortens a feasible path in place by pulling interior waypoints
/// toward their neighbours' midpoints, keeping a safety clearance so the
/// result stays strictly feasible. Stops when a full sweep moves nothing.
fn shorten_path(constraint: &TrajectoryConstraint, path: &mut Vec<f64>, keep_clearance: f64) {
    let n = constraint.n_points();
    for _ in 0..200 {
        let mut moved = false;
        for i in 1..n - 1 {
            let mx = (path[2 * (i - 1)] + path[2 * (i + 1)]) / 2.0;
            let my = (path[2 * (i - 1) + 1] + path[2 * (i + 1) + 1]) / 2.0;
            let dx = mx - path[2 * i];
            let dy = my - path[2 * i + 1];
            if dx * dx + dy * dy < 1e-12 {
                continue;
            }
            let old = (path[2 * i], path[2 * i + 1]);
            path[2 * i] += 0.5 * dx;
            path[2 * i + 1] += 0.5 * dy;
            if constraint.min_clearance(path) >= keep_clearance {
                moved = true;
            } else {
                path[2 * i] = old.0;
                path[2 * i + 1] = old.1;
            }
        }
        if !moved {
            return;
        }
    }
}

/// Generates `n` feasible training paths: random endpoints from the
/// bands (outside all training obstacles), a straight-line
/// initialization projected onto the training constraint, then local
/// shortening that preserves feasibility.
pub fn gen_trajectory_dataset(
    spec: &TopographySpec,
    n: usize,
    seed: u64,
) -> Result<Vec<StateVector>, HarnessError> {
    if spec.n_points < 3 {
        return Err(HarnessError::new(
            Stage::GenData,
            "paths need at least 3 waypoints",
        ));
    }
    let mut rng = RngStream::new(seed, 0);
    let mut paths = Vec::with_capacity(n);
    let clearance = TrajectoryConstraint::DEFAULT_MARGIN * 2.0;
    let keep = TrajectoryConstraint::DEFAULT_MARGIN * 0.5;

    let draw_point = |rng: &mut RngStream, band: [f64; 4]| -> Option<[f64; 2]> {
        for _ in 0..10_000 {
            let p = [
                rng.uniform_range(band[0], band[1]),
                rng.uniform_range(band[2], band[3]),
            ];
            if point_clear(p, &spec.training_obstacles, clearance) {
                return Some(p);
            }
        }
        None
    };

    while paths.len() < n {
        let mut solved = None;
        for _ in 0..50 {
            let Some(start) = draw_point(&mut rng, spec.start_band) else {
                break;
            };
            let Some(goal) = draw_point(&mut rng, spec.goal_band) else {
                break;
            };
            let constraint = match TrajectoryConstraint::new(
                spec.training_obstacles.clone(),
                start,
                goal,
                spec.n_points,
            ) {
                Ok(c) => c,
                Err(_) => continue,
            };
            let init = StateVector::new(
                straight_line(start, goal, spec.n_points),
                ShapeTag::Path {
                    n_points: spec.n_points,
                },
            )
            .expect("straight line is finite");
            match constraint.project(&init) {
                Ok(projected) => {
                    let mut path = projected.data().to_vec();
                    shorten_path(&constraint, &mut path, keep);
                    solved = Some(projected.with_data(path).expect("shortened path is finite"));
                    break;
                }
                Err(_) => continue,
            }
        }
        match solved {
            Some(path) => paths.push(path),
            None => {
                return Err(HarnessError::new(
                    Stage::GenData,
                    format!(
                        "path generation failed after retries; geometry: training \
                         obstacles {:?}, start band {:?}, goal band {:?}",
                        spec.training_obstacles
                            .iter()
                            .map(|o| (o.center, o.radius))
                            .collect::<Vec<_>>(),
                        spec.start_band,
                        spec.goal_band
                    ),
                ));
            }
        }
    }
    Ok(paths)
}

// ---------------------------------------------------------------------
// Textures.

/// Specification of the synthetic texture dataset: smooth Gaussian
/// random fields with a correlation length, scaled into [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct TextureSpec {
    pub size: usize,
    /// Gaussian smoothing length in pixels; larger means blobbier.
    pub correlation_length: f64,
    /// Added to the normalized field before clamping; raising it fills
    /// pores (fewer pixels below the threshold).
    pub mean_offset: f64,
    /// Porosity is counted as pixels strictly below this value.
    pub threshold: f64,
}

/// The generated images plus the porosity recorded for each.
#[derive(Debug, Clone)]
pub struct TextureDataset {
    pub images: Vec<StateVector>,
    pub porosities: Vec<usize>,
}

/// Separable Gaussian blur with reflect-at-edge sampling.
fn gaussian_blur(field: &mut Vec<f64>, size: usize, sigma: f64) {
    let radius = (2.5 * sigma).ceil() as i64;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    for k in -radius..=radius {
        kernel.push((-((k * k) as f64) / (2.0 * sigma * sigma)).exp());
    }
    let total: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= total;
    }
    let reflect = |i: i64| -> usize {
        let n = size as i64;
        let mut i = i;
        if i < 0 {
            i = -i - 1;
        }
        if i >= n {
            i = 2 * n - 1 - i;
        }
        i.clamp(0, n - 1) as usize
    };
    let mut tmp = vec![0.0; field.len()];
    for row in 0..size {
        for col in 0..size {
            let mut acc = 0.0;
            for (ki, w) in kernel.iter().enumerate() {
                let c = reflect(col as i64 + ki as i64 - radius);
                acc += w * field[row * size + c];
            }
            tmp[row * size + col] = acc;
        }
    }
    for col in 0..size {
        for row in 0..size {
            let mut acc = 0.0;
            for (ki, w) in kernel.iter().enumerate() {
                let r = reflect(row as i64 + ki as i64 - radius);
                acc += w * tmp[r * size + col];
            }
            field[row * size + col] = acc;
        }
    }
}

/// Generates `n` smooth random fields: white noise, Gaussian blur at the
/// correlation length, normalization to zero mean and 0.95 peak
/// amplitude, then the mean offset and a clamp into [-1, 1].
pub fn gen_texture_dataset(spec: &TextureSpec, n: usize, seed: u64) -> Result<TextureDataset, HarnessError> {
    if spec.size == 0 || n == 0 {
        return Err(HarnessError::new(
            Stage::GenData,
            "texture size and count must be positive",
        ));
    }
    if !(spec.correlation_length.is_finite() && spec.correlation_length > 0.0) {
        return Err(HarnessError::new(
            Stage::GenData,
            format!(
                "correlation length must be positive, got {}",
                spec.correlation_length
            ),
        ));
    }
    let mut rng = RngStream::new(seed, 0);
    let mut images = Vec::with_capacity(n);
    let mut porosities = Vec::with_capacity(n);
    let len = spec.size * spec.size;
    for _ in 0..n {
        let mut field = rng.normal_vec(len);
        gaussian_blur(&mut field, spec.size, spec.correlation_length);
        let mean = field.iter().sum::<f64>() / len as f64;
        let peak = field
            .iter()
            .map(|v| (v - mean).abs())
            .fold(0.0f64, f64::max)
            .max(1e-12);
        for v in &mut field {
            *v = (0.95 * (*v - mean) / peak + spec.mean_offset).clamp(-1.0, 1.0);
        }
        porosities.push(porosity_measure(&field, spec.threshold));
        images.push(
            StateVector::new(
                field,
                ShapeTag::Grid {
                    height: spec.size,
                    width: spec.size,
                    frames: 1,
                },
            )
            .expect("clamped field is finite"),
        );
    }
    Ok(TextureDataset { images, porosities })
}
