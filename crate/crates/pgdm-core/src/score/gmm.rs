//! Analytic score backend: Gaussian mixtures with diagonal covariance.
//!
//! Because Gaussian convolution is closed under the VE perturbation
//! x_σ = x + σ ε, the perturbed density is the same mixture with σ²
//! added to every variance — so both the log density and its gradient
//! are exact at every noise level.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

// In test builds std is linked and f64's inherent methods shadow these.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::error::ScoreError;
use crate::rng::RngStream;
use crate::score::ScoreField;
use crate::state::StateVector;

const LN_TWO_PI: f64 = 1.8378770664093453;

/// A K-component Gaussian mixture with per-component diagonal
/// covariance. `optimum_mean` is the global mode used by the theory
/// checks; for K = 1 it equals the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
    optimum_mean: Vec<f64>,
}

impl GaussianMixture {
    /// Builds a mixture, validating that the weights form a simplex
    /// vector (sum 1 within 1e-12), variances are strictly positive,
    /// and all component dimensions agree. The global mode defaults to
    /// the component mean with the highest mixture density.
    pub fn new(
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    ) -> Result<Self, ScoreError> {
        let k = weights.len();
        if k == 0 || means.len() != k || variances.len() != k {
            return Err(ScoreError::ShapeMismatch(format!(
                "weights/means/variances counts disagree: {k}/{}/{}",
                means.len(),
                variances.len()
            )));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(ScoreError::ShapeMismatch("zero-dimensional mean".into()));
        }
        for (m, v) in means.iter().zip(&variances) {
            if m.len() != dim || v.len() != dim {
                return Err(ScoreError::ShapeMismatch(format!(
                    "component dims disagree: mean {} / variance {} vs {dim}",
                    m.len(),
                    v.len()
                )));
            }
            if v.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(ScoreError::ShapeMismatch(
                    "variances must be strictly positive and finite".into(),
                ));
            }
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(ScoreError::ShapeMismatch(format!(
                "weights must be nonnegative and sum to 1 (sum = {total})"
            )));
        }

        let mut gmm = Self {
            weights,
            means,
            variances,
            optimum_mean: vec![0.0; dim],
        };
        // Candidate modes of a well-separated mixture sit at component
        // means; pick the one with the highest density.
        let mut best = 0;
        let mut best_ld = f64::NEG_INFINITY;
        for k in 0..gmm.n_components() {
            let x = StateVector::flat(gmm.means[k].clone()).expect("validated finite");
            let ld = gmm.log_density_at(&x, 0.0);
            if ld > best_ld {
                best_ld = ld;
                best = k;
            }
        }
        gmm.optimum_mean = gmm.means[best].clone();
        Ok(gmm)
    }

    /// A single Gaussian with one scalar variance per dimension.
    pub fn single(mean: Vec<f64>, variance: f64) -> Result<Self, ScoreError> {
        let dim = mean.len();
        Self::new(vec![1.0], vec![mean], vec![vec![variance; dim]])
    }

    /// A mixture of isotropic components (one scalar variance each).
    pub fn isotropic(
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        variances: Vec<f64>,
    ) -> Result<Self, ScoreError> {
        if means.len() != variances.len() {
            return Err(ScoreError::ShapeMismatch(format!(
                "means/variances counts disagree: {}/{}",
                means.len(),
                variances.len()
            )));
        }
        let dim = means.first().map_or(0, Vec::len);
        let diag = variances.into_iter().map(|v| vec![v; dim]).collect();
        Self::new(weights, means, diag)
    }

    /// Overrides the global mode used by theory checks.
    pub fn with_optimum_mean(mut self, optimum_mean: Vec<f64>) -> Self {
        assert_eq!(optimum_mean.len(), self.dim());
        self.optimum_mean = optimum_mean;
        self
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn variances(&self) -> &[Vec<f64>] {
        &self.variances
    }

    pub fn optimum_mean(&self) -> &[f64] {
        &self.optimum_mean
    }

    /// Per-component log densities of the σ-perturbed mixture,
    /// including the log weights.
    fn component_log_terms(&self, x: &[f64], sigma: f64) -> Vec<f64> {
        let s2 = sigma * sigma;
        (0..self.n_components())
            .map(|k| {
                let mut ld = self.weights[k].ln();
                for d in 0..self.dim() {
                    let v = self.variances[k][d] + s2;
                    let r = x[d] - self.means[k][d];
                    ld += -0.5 * (LN_TWO_PI + v.ln()) - r * r / (2.0 * v);
                }
                ld
            })
            .collect()
    }

    fn log_density_at(&self, x: &StateVector, sigma: f64) -> f64 {
        let terms = self.component_log_terms(x.data(), sigma);
        log_sum_exp(&terms)
    }

    /// Draws one sample from the unperturbed mixture.
    pub fn sample(&self, rng: &mut RngStream) -> StateVector {
        let u = rng.uniform();
        let mut acc = 0.0;
        let mut k = self.n_components() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                k = i;
                break;
            }
        }
        let data = (0..self.dim())
            .map(|d| self.means[k][d] + self.variances[k][d].sqrt() * rng.standard_normal())
            .collect();
        StateVector::flat(data).expect("finite by construction")
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = terms.iter().map(|t| (t - m).exp()).sum();
    m + s.ln()
}

fn check_dim(gmm: &GaussianMixture, x: &StateVector) -> Result<(), ScoreError> {
    if x.dim() != gmm.dim() {
        return Err(ScoreError::DimMismatch {
            expected: gmm.dim(),
            actual: x.dim(),
        });
    }
    Ok(())
}

/// Log density of the σ-perturbed mixture: ln Σ_k w_k N(x; m_k, v_k + σ²I).
pub fn gmm_log_density(
    gmm: &GaussianMixture,
    x: &StateVector,
    sigma: f64,
) -> Result<f64, ScoreError> {
    check_dim(gmm, x)?;
    Ok(gmm.log_density_at(x, sigma))
}

/// Exact gradient of [`gmm_log_density`] in x: the responsibility-weighted
/// sum of per-component Gaussian scores.
pub fn gmm_score(
    gmm: &GaussianMixture,
    x: &StateVector,
    sigma: f64,
) -> Result<StateVector, ScoreError> {
    check_dim(gmm, x)?;
    let terms = gmm.component_log_terms(x.data(), sigma);
    let lse = log_sum_exp(&terms);
    let s2 = sigma * sigma;
    let mut grad = vec![0.0; gmm.dim()];
    for k in 0..gmm.n_components() {
        let resp = (terms[k] - lse).exp();
        for d in 0..gmm.dim() {
            let v = gmm.variances()[k][d] + s2;
            grad[d] += resp * (gmm.means()[k][d] - x.data()[d]) / v;
        }
    }
    StateVector::flat(grad).map_err(|_| ScoreError::ShapeMismatch("non-finite score".into()))
}

impl ScoreField for GaussianMixture {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn score(&self, x: &StateVector, sigma: f64) -> Result<StateVector, ScoreError> {
        gmm_score(self, x, sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_component() -> GaussianMixture {
        GaussianMixture::new(
            vec![0.3, 0.7],
            vec![vec![-1.0, 0.5], vec![2.0, -0.5]],
            vec![vec![0.5, 1.5], vec![1.0, 2.0]],
        )
        .unwrap()
    }

    #[test]
    fn standard_normal_log_density_at_mode() {
        let g = GaussianMixture::single(vec![0.0], 1.0).unwrap();
        let x = StateVector::flat(vec![0.0]).unwrap();
        let ld = gmm_log_density(&g, &x, 0.0).unwrap();
        assert!((ld - (-0.9189385332046728)).abs() < 1e-15);
    }

    #[test]
    fn perturbation_adds_variance() {
        // At σ = 1 the variance doubles, so the mode density is that of
        // a variance-2 Gaussian: -0.5 ln(4π).
        let g = GaussianMixture::single(vec![0.0], 1.0).unwrap();
        let x = StateVector::flat(vec![0.0]).unwrap();
        let ld = gmm_log_density(&g, &x, 1.0).unwrap();
        assert!((ld - (-1.2655121234846454)).abs() < 1e-15);
    }

    #[test]
    fn two_component_log_density_matches_high_precision_value() {
        let g = two_component();
        let x = StateVector::flat(vec![0.2, -0.3]).unwrap();
        let ld = gmm_log_density(&g, &x, 0.5).unwrap();
        let expected = -3.463906063665181;
        assert!(
            ((ld - expected) / expected).abs() < 1e-12,
            "got {ld}, want {expected}"
        );
    }

    #[test]
    fn single_gaussian_score_closed_form() {
        // K=1: score(x) = -(x - m)/(v + σ²).
        let g = GaussianMixture::single(vec![0.4, -1.2], 0.8).unwrap();
        for (sigma, xs) in [(0.0, [1.0, 2.0]), (0.7, [-0.3, 0.9])] {
            let x = StateVector::flat(xs.to_vec()).unwrap();
            let s = gmm_score(&g, &x, sigma).unwrap();
            let denom = 0.8 + sigma * sigma;
            for d in 0..2 {
                let want = -(xs[d] - [0.4, -1.2][d]) / denom;
                assert!((s.data()[d] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn standard_gaussian_score_is_negated_state() {
        let g = GaussianMixture::single(vec![0.0, 0.0, 0.0], 1.0).unwrap();
        let x = StateVector::flat(vec![0.3, -1.1, 2.2]).unwrap();
        let s = gmm_score(&g, &x, 0.0).unwrap();
        for d in 0..3 {
            assert!((s.data()[d] + x.data()[d]).abs() < 1e-15);
        }
    }

    #[test]
    fn score_matches_central_finite_difference() {
        let g = two_component();
        let h = 1e-5;
        for (sigma, point) in [
            (0.0, [0.2, -0.3]),
            (0.5, [0.2, -0.3]),
            (1.3, [-1.7, 2.4]),
            (0.1, [2.0, -0.5]),
        ] {
            let x = StateVector::flat(point.to_vec()).unwrap();
            let s = gmm_score(&g, &x, sigma).unwrap();
            for d in 0..2 {
                let mut hi = point.to_vec();
                let mut lo = point.to_vec();
                hi[d] += h;
                lo[d] -= h;
                let f_hi =
                    gmm_log_density(&g, &StateVector::flat(hi).unwrap(), sigma).unwrap();
                let f_lo =
                    gmm_log_density(&g, &StateVector::flat(lo).unwrap(), sigma).unwrap();
                let fd = (f_hi - f_lo) / (2.0 * h);
                let denom = fd.abs().max(1e-9);
                assert!(
                    ((s.data()[d] - fd) / denom).abs() < 1e-6,
                    "σ={sigma} d={d}: analytic {} vs fd {fd}",
                    s.data()[d]
                );
            }
        }
    }

    #[test]
    fn mode_density_is_monotone_decreasing_in_sigma() {
        let g = two_component();
        let mode = StateVector::flat(g.optimum_mean().to_vec()).unwrap();
        let mut prev = f64::INFINITY;
        for sigma in [0.0, 0.2, 0.5, 1.0, 2.0, 5.0] {
            let ld = gmm_log_density(&g, &mode, sigma).unwrap();
            assert!(ld < prev, "σ={sigma}: {ld} !< {prev}");
            prev = ld;
        }
    }

    #[test]
    fn optimum_mean_picks_the_heaviest_mode() {
        let g = two_component();
        assert_eq!(g.optimum_mean(), &[2.0, -0.5]);
        let single = GaussianMixture::single(vec![3.0, 4.0], 2.0).unwrap();
        assert_eq!(single.optimum_mean(), &[3.0, 4.0]);
    }

    #[test]
    fn sample_moments_match_mixture_mean() {
        let g = two_component();
        let mut rng = RngStream::new(99, 0);
        let n = 200_000;
        let mut mean = [0.0f64; 2];
        for _ in 0..n {
            let s = g.sample(&mut rng);
            mean[0] += s.data()[0];
            mean[1] += s.data()[1];
        }
        mean[0] /= n as f64;
        mean[1] /= n as f64;
        // E[x] = 0.3·(-1, 0.5) + 0.7·(2, -0.5) = (1.1, -0.2).
        assert!((mean[0] - 1.1).abs() < 0.02, "{}", mean[0]);
        assert!((mean[1] + 0.2).abs() < 0.02, "{}", mean[1]);
    }

    #[test]
    fn construction_rejects_bad_inputs() {
        assert!(GaussianMixture::new(
            vec![0.5, 0.6],
            vec![vec![0.0], vec![1.0]],
            vec![vec![1.0], vec![1.0]],
        )
        .is_err());
        assert!(GaussianMixture::new(vec![1.0], vec![vec![0.0]], vec![vec![0.0]]).is_err());
        assert!(GaussianMixture::new(vec![1.0], vec![vec![0.0, 1.0]], vec![vec![1.0]]).is_err());

        let g = two_component();
        let bad = StateVector::flat(vec![0.0]).unwrap();
        assert_eq!(
            gmm_score(&g, &bad, 0.0),
            Err(ScoreError::DimMismatch {
                expected: 2,
                actual: 1
            })
        );
    }

    #[test]
    fn score_field_impl_delegates() {
        let g = two_component();
        let x = StateVector::flat(vec![0.2, -0.3]).unwrap();
        let via_trait = ScoreField::score(&g, &x, 0.5).unwrap();
        assert_eq!(via_trait, gmm_score(&g, &x, 0.5).unwrap());
        assert_eq!(ScoreField::dim(&g), 2);
    }
}
