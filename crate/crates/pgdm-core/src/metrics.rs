//! Sample-quality metrics: constraint-satisfaction curves, path
//! statistics, and a sliced Wasserstein distance between empirical
//! distributions.

// In test builds std is linked and f64's inherent methods shadow these.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use alloc::vec::Vec;

use crate::error::MetricsError;
use crate::projections::ConstraintSet;
use crate::rng::RngStream;
use crate::state::StateVector;

/// Feasibility tolerance used by [`success_rate`], aligned with the
/// trajectory solver's convergence tolerance.
pub const SUCCESS_TOL: f64 = 1e-6;

/// Default direction count for [`sliced_wasserstein`].
pub const DEFAULT_SW_PROJECTIONS: usize = 100;

/// Fraction of a sample batch within each of a ladder of tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct SatisfactionCurve {
    /// Ascending tolerance grid.
    pub tolerances: Vec<f64>,
    /// Fraction of samples whose distance to the feasible set is at
    /// most the matching tolerance; non-decreasing.
    pub fraction_satisfied: Vec<f64>,
}

/// Fraction of `samples` whose Euclidean distance to the feasible set
/// is ≤ each tolerance. Distances come from the constraint's
/// projection, so a batch of exactly projected outputs reaches 1.0 at
/// tolerance 0.
pub fn satisfaction_curve(
    samples: &[StateVector],
    constraint: &dyn ConstraintSet,
    tolerances: &[f64],
) -> Result<SatisfactionCurve, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    if tolerances.windows(2).any(|w| w[0] > w[1]) {
        return Err(MetricsError::UnsortedTolerances);
    }

    let mut distances = Vec::with_capacity(samples.len());
    for sample in samples {
        distances.push(constraint.distance_sq(sample)?.sqrt());
    }

    let n = samples.len() as f64;
    let fraction_satisfied = tolerances
        .iter()
        .map(|tol| distances.iter().filter(|d| **d <= *tol).count() as f64 / n)
        .collect();
    Ok(SatisfactionCurve {
        tolerances: tolerances.to_vec(),
        fraction_satisfied,
    })
}

/// Total Euclidean length of a polyline stored as a flat vector of
/// `point_dim`-dimensional points.
pub fn path_length(path: &[f64], point_dim: usize) -> Result<f64, MetricsError> {
    if point_dim == 0 || path.len() % point_dim != 0 {
        return Err(MetricsError::RaggedPath {
            len: path.len(),
            point_dim,
        });
    }
    let n_points = path.len() / point_dim;
    if n_points < 2 {
        return Err(MetricsError::TooFewPoints(n_points));
    }

    let mut total = 0.0;
    for pair in path.chunks_exact(point_dim).collect::<Vec<_>>().windows(2) {
        let seg_sq: f64 = pair[0]
            .iter()
            .zip(pair[1])
            .map(|(a, b)| {
                let d = b - a;
                d * d
            })
            .sum();
        total += seg_sq.sqrt();
    }
    Ok(total)
}

/// Fraction of `paths` feasible at [`SUCCESS_TOL`] under the
/// constraint's own feasibility predicate.
pub fn success_rate(
    paths: &[StateVector],
    constraint: &dyn ConstraintSet,
) -> Result<f64, MetricsError> {
    if paths.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let feasible = paths
        .iter()
        .filter(|p| constraint.is_feasible(p, SUCCESS_TOL))
        .count();
    Ok(feasible as f64 / paths.len() as f64)
}

/// Exact 1-D Wasserstein-1 distance between two sorted empirical
/// distributions of possibly different sizes: the integral of the
/// quantile-function gap, accumulated over the merged quantile
/// breakpoints.
fn wasserstein_1d_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut q = 0.0;
    let mut total = 0.0;
    while i < n && j < m {
        let qa = (i + 1) as f64 / n as f64;
        let qb = (j + 1) as f64 / m as f64;
        let next = qa.min(qb);
        total += (a[i] - b[j]).abs() * (next - q);
        q = next;
        if qa <= next {
            i += 1;
        }
        if qb <= next {
            j += 1;
        }
    }
    total
}

/// Average over random unit directions of the exact 1-D Wasserstein-1
/// distance between the two batches projected onto each direction.
/// Batches may have different sizes but must share a dimension.
pub fn sliced_wasserstein(
    samples_a: &[StateVector],
    samples_b: &[StateVector],
    n_projections: usize,
    rng: &mut RngStream,
) -> Result<f64, MetricsError> {
    if samples_a.is_empty() || samples_b.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    if n_projections == 0 {
        return Err(MetricsError::InvalidArgument(
            "n_projections must be positive".into(),
        ));
    }
    let dim = samples_a[0].dim();
    if samples_b[0].dim() != dim {
        return Err(MetricsError::DimMismatch {
            a: dim,
            b: samples_b[0].dim(),
        });
    }

    let mut total = 0.0;
    let mut proj_a = Vec::with_capacity(samples_a.len());
    let mut proj_b = Vec::with_capacity(samples_b.len());
    for _ in 0..n_projections {
        // A standard normal vector normalized to the sphere; the zero
        // draw has probability zero but is redrawn defensively.
        let direction = loop {
            let d = rng.normal_vec(dim);
            let norm = crate::linalg::norm(&d);
            if norm > 0.0 {
                break d.iter().map(|v| v / norm).collect::<Vec<f64>>();
            }
        };

        proj_a.clear();
        proj_b.clear();
        proj_a.extend(
            samples_a
                .iter()
                .map(|s| crate::linalg::dot(s.data(), &direction)),
        );
        proj_b.extend(
            samples_b
                .iter()
                .map(|s| crate::linalg::dot(s.data(), &direction)),
        );
        proj_a.sort_by(|x, y| x.partial_cmp(y).expect("finite projections"));
        proj_b.sort_by(|x, y| x.partial_cmp(y).expect("finite projections"));
        total += wasserstein_1d_sorted(&proj_a, &proj_b);
    }
    Ok(total / n_projections as f64)
}

/// Number of entries strictly below `threshold`.
pub fn porosity_measure(image: &[f64], threshold: f64) -> usize {
    image.iter().filter(|v| **v < threshold).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projections::{project_porosity, HalfspaceSet, PorosityConstraint};
    use crate::score::GaussianMixture;
    use alloc::vec;

    fn sv(data: &[f64]) -> StateVector {
        StateVector::flat(data.to_vec()).unwrap()
    }

    #[test]
    fn curve_is_one_everywhere_for_feasible_batches() {
        let set = HalfspaceSet::coordinate_at_least(1, 0, 1.0);
        let samples = vec![sv(&[1.0]), sv(&[2.0]), sv(&[1.5])];
        let curve = satisfaction_curve(&samples, &set, &[0.0, 0.1, 1.0]).unwrap();
        assert_eq!(curve.fraction_satisfied, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn curve_counts_partial_satisfaction() {
        let set = HalfspaceSet::coordinate_at_least(1, 0, 1.0);
        let samples = vec![sv(&[1.5]), sv(&[0.5])];
        let curve = satisfaction_curve(&samples, &set, &[0.0, 0.4, 0.6]).unwrap();
        assert_eq!(curve.fraction_satisfied, vec![0.5, 0.5, 1.0]);
    }

    #[test]
    fn curve_is_monotone_on_random_batches() {
        let set = HalfspaceSet::coordinate_at_least(2, 0, 0.5);
        let mut rng = RngStream::new(5, 0);
        let samples: Vec<StateVector> =
            (0..200).map(|_| sv(&rng.normal_vec(2))).collect();
        let tolerances: Vec<f64> = (0..30).map(|k| 0.25 * k as f64).collect();
        let curve = satisfaction_curve(&samples, &set, &tolerances).unwrap();
        for w in curve.fraction_satisfied.windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert_eq!(*curve.fraction_satisfied.last().unwrap(), 1.0);
    }

    #[test]
    fn curve_rejects_bad_inputs() {
        let set = HalfspaceSet::coordinate_at_least(1, 0, 1.0);
        assert!(matches!(
            satisfaction_curve(&[], &set, &[0.0]),
            Err(MetricsError::EmptyBatch)
        ));
        assert!(matches!(
            satisfaction_curve(&[sv(&[1.0])], &set, &[0.5, 0.1]),
            Err(MetricsError::UnsortedTolerances)
        ));
    }

    #[test]
    fn path_length_matches_right_triangle() {
        assert_eq!(path_length(&[0.0, 0.0, 3.0, 4.0], 2).unwrap(), 5.0);
    }

    #[test]
    fn path_length_sums_collinear_steps() {
        assert_eq!(
            path_length(&[0.0, 0.0, 1.0, 0.0, 2.0, 0.0], 2).unwrap(),
            2.0
        );
    }

    /// Independent compensated-summation oracle over a random path.
    #[test]
    fn path_length_matches_compensated_summation() {
        let mut rng = RngStream::new(11, 0);
        let path = rng.normal_vec(20);
        let fast = path_length(&path, 2).unwrap();

        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for w in path.chunks_exact(2).collect::<Vec<_>>().windows(2) {
            let dx = w[1][0] - w[0][0];
            let dy = w[1][1] - w[0][1];
            let term = (dx * dx + dy * dy).sqrt();
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        assert!((fast - sum).abs() <= 1e-12 * sum.max(1.0));
    }

    #[test]
    fn path_length_rejects_short_and_ragged_paths() {
        assert!(matches!(
            path_length(&[0.0, 0.0], 2),
            Err(MetricsError::TooFewPoints(1))
        ));
        assert!(matches!(
            path_length(&[0.0, 0.0, 1.0], 2),
            Err(MetricsError::RaggedPath { len: 3, point_dim: 2 })
        ));
        assert!(matches!(
            path_length(&[0.0, 1.0], 0),
            Err(MetricsError::RaggedPath { .. })
        ));
    }

    #[test]
    fn success_rate_counts_feasible_fraction() {
        let set = HalfspaceSet::coordinate_at_least(1, 0, 1.0);
        let all = vec![sv(&[1.0]), sv(&[2.0])];
        assert_eq!(success_rate(&all, &set).unwrap(), 1.0);
        let half = vec![sv(&[1.0]), sv(&[0.0])];
        assert_eq!(success_rate(&half, &set).unwrap(), 0.5);
        assert!(matches!(
            success_rate(&[], &set),
            Err(MetricsError::EmptyBatch)
        ));
    }

    #[test]
    fn identical_batches_have_zero_distance() {
        let mut rng = RngStream::new(3, 0);
        let samples: Vec<StateVector> =
            (0..50).map(|_| sv(&rng.normal_vec(3))).collect();
        let d = sliced_wasserstein(&samples, &samples, 20, &mut rng).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn point_masses_are_separated_by_their_distance() {
        let a = vec![sv(&[0.0])];
        let b = vec![sv(&[2.5])];
        let mut rng = RngStream::new(7, 0);
        let d = sliced_wasserstein(&a, &b, 16, &mut rng).unwrap();
        assert!((d - 2.5).abs() < 1e-12);
    }

    /// Unequal batch sizes: quantile integral computed by hand for
    /// {0, 1} vs {0.5} — both halves contribute 0.5 · 0.5.
    #[test]
    fn unequal_sizes_use_the_quantile_integral() {
        let a = vec![sv(&[0.0]), sv(&[1.0])];
        let b = vec![sv(&[0.5])];
        let mut rng = RngStream::new(9, 0);
        let d = sliced_wasserstein(&a, &b, 8, &mut rng).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    /// Mean-shifted isotropic Gaussians: each direction θ sees two
    /// unit-variance 1-D Gaussians at distance |⟨shift, θ⟩|, whose
    /// W₁ is that gap, so the sliced distance tends to E|cos θ| = 2/π.
    #[test]
    fn gaussian_mean_shift_matches_directional_oracle() {
        let base = GaussianMixture::single(vec![0.0, 0.0], 1.0).unwrap();
        let shifted = GaussianMixture::single(vec![1.0, 0.0], 1.0).unwrap();
        let mut draw = RngStream::new(21, 0);
        let a: Vec<StateVector> = (0..10_000).map(|_| base.sample(&mut draw)).collect();
        let b: Vec<StateVector> = (0..10_000).map(|_| shifted.sample(&mut draw)).collect();
        let mut rng = RngStream::new(21, 1);
        let d = sliced_wasserstein(&a, &b, 100, &mut rng).unwrap();
        let oracle = 2.0 / core::f64::consts::PI;
        assert!(
            (d - oracle).abs() < 0.03,
            "sliced distance {d} vs directional oracle {oracle}"
        );
    }

    #[test]
    fn distance_is_symmetric_under_a_shared_stream() {
        let mut rng = RngStream::new(13, 0);
        let a: Vec<StateVector> = (0..40).map(|_| sv(&rng.normal_vec(2))).collect();
        let b: Vec<StateVector> = (0..25)
            .map(|_| {
                let mut v = rng.normal_vec(2);
                v[0] += 1.0;
                sv(&v)
            })
            .collect();
        let d_ab = sliced_wasserstein(&a, &b, 32, &mut RngStream::new(17, 0)).unwrap();
        let d_ba = sliced_wasserstein(&b, &a, 32, &mut RngStream::new(17, 0)).unwrap();
        assert_eq!(d_ab, d_ba);
    }

    /// With a shared direction stream the triangle inequality holds
    /// exactly: it holds per direction for the 1-D distance.
    #[test]
    fn triangle_inequality_holds_with_shared_directions() {
        let mut rng = RngStream::new(19, 0);
        let batches: Vec<Vec<StateVector>> = (0..3)
            .map(|k| {
                (0..30 + 5 * k)
                    .map(|_| {
                        let mut v = rng.normal_vec(2);
                        v[1] += k as f64 * 0.7;
                        sv(&v)
                    })
                    .collect()
            })
            .collect();
        let d = |x: usize, y: usize| {
            sliced_wasserstein(&batches[x], &batches[y], 24, &mut RngStream::new(23, 0))
                .unwrap()
        };
        assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let a = vec![sv(&[0.0, 0.0])];
        let b = vec![sv(&[0.0])];
        let mut rng = RngStream::new(1, 0);
        assert!(matches!(
            sliced_wasserstein(&a, &b, 4, &mut rng),
            Err(MetricsError::DimMismatch { a: 2, b: 1 })
        ));
        assert!(matches!(
            sliced_wasserstein(&a, &a, 0, &mut rng),
            Err(MetricsError::InvalidArgument(_))
        ));
        assert!(matches!(
            sliced_wasserstein(&[], &a, 4, &mut rng),
            Err(MetricsError::EmptyBatch)
        ));
    }

    #[test]
    fn porosity_measure_counts_strictly_below() {
        assert_eq!(porosity_measure(&[1.0, 1.0, 1.0], 0.0), 0);
        assert_eq!(porosity_measure(&[-0.5, -0.1, 0.2], 0.0), 2);
        // The threshold itself does not count.
        assert_eq!(porosity_measure(&[0.0, -0.0], 0.0), 0);
    }

    #[test]
    fn porosity_measure_matches_projection_target() {
        let constraint = PorosityConstraint::new(16, 0.0, 7).unwrap();
        let mut rng = RngStream::new(31, 0);
        let image = sv(&rng.normal_vec(16));
        let projected = project_porosity(&constraint, &image).unwrap();
        assert_eq!(porosity_measure(projected.data(), 0.0), 7);
    }
}
