//! Porosity constraint: exactly `target_count` entries of the state must
//! lie below an intensity threshold.
//!
//! The feasible set is non-convex (a union of index-subset slabs) and
//! half-open, so the operator moves the cheapest entries just past the
//! threshold by a small margin rather than exactly onto it.

use alloc::vec::Vec;

use crate::error::ProjectionError;
use crate::projections::{check_dim, ConstraintSet};
use crate::state::StateVector;

/// States with exactly `target_count` entries strictly below `threshold`.
#[derive(Debug, Clone)]
pub struct PorosityConstraint {
    threshold: f64,
    target_count: usize,
    margin: f64,
    dim: usize,
}

impl PorosityConstraint {
    /// Margin by which flipped entries clear the threshold.
    pub const DEFAULT_MARGIN: f64 = 1e-3;

    pub fn new(dim: usize, threshold: f64, target_count: usize) -> Result<Self, ProjectionError> {
        Self::with_margin(dim, threshold, target_count, Self::DEFAULT_MARGIN)
    }

    pub fn with_margin(
        dim: usize,
        threshold: f64,
        target_count: usize,
        margin: f64,
    ) -> Result<Self, ProjectionError> {
        assert!(dim >= 1, "dim must be at least 1");
        assert!(threshold.is_finite(), "threshold must be finite");
        assert!(
            margin.is_finite() && margin > 0.0,
            "margin must be positive"
        );
        if target_count > dim {
            return Err(ProjectionError::CountExceedsDim {
                k: target_count,
                dim,
            });
        }
        Ok(Self {
            threshold,
            target_count,
            margin,
            dim,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn target_count(&self) -> usize {
        self.target_count
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Number of entries strictly below the threshold.
    pub fn count_below(&self, x: &StateVector) -> usize {
        x.data().iter().filter(|&&v| v < self.threshold).count()
    }
}

/// Moves the fewest, cheapest entries across the threshold so that
/// exactly `target_count` end up below it.
///
/// With `m` entries currently below and `k` the target: when `m > k`,
/// the `m − k` below-threshold entries nearest the threshold are raised
/// to `threshold + margin`; when `m < k`, the `k − m` at-or-above
/// entries nearest it are lowered to `threshold − margin`. Distance ties
/// break toward the lower index. A state already satisfying the count is
/// returned bit-for-bit unchanged.
pub fn project_porosity(
    c: &PorosityConstraint,
    x: &StateVector,
) -> Result<StateVector, ProjectionError> {
    check_dim(c.dim, x)?;
    let data = x.data();
    let tau = c.threshold;
    let m = c.count_below(x);
    let k = c.target_count;
    if m == k {
        return Ok(x.clone());
    }

    let mut out = data.to_vec();
    let mut candidates: Vec<(f64, usize)>;
    let (flips, new_value);
    if m > k {
        candidates = data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < tau)
            .map(|(i, &v)| (tau - v, i))
            .collect();
        flips = m - k;
        new_value = tau + c.margin;
    } else {
        candidates = data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= tau)
            .map(|(i, &v)| (v - tau, i))
            .collect();
        flips = k - m;
        new_value = tau - c.margin;
    }
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    for &(_, i) in candidates.iter().take(flips) {
        out[i] = new_value;
    }
    Ok(x.with_data(out).expect("flipped entries are finite"))
}

impl ConstraintSet for PorosityConstraint {
    fn dim(&self) -> usize {
        self.dim
    }

    fn project(&self, x: &StateVector) -> Result<StateVector, ProjectionError> {
        project_porosity(self, x)
    }

    /// Membership is a discrete count match, so the tolerance has no
    /// graded meaning here; any `tol` checks the exact count.
    fn is_feasible(&self, x: &StateVector, _tol: f64) -> bool {
        x.dim() == self.dim && self.count_below(x) == self.target_count
    }
}
