//! Dykstra's alternating-projection scheme: the exact Euclidean
//! projection onto an intersection of convex sets, computed from the
//! member projections alone.
//!
//! Unlike plain alternating projections (which find *some* intersection
//! point), Dykstra's correction terms make the iterates converge to the
//! nearest one.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

// In test builds std is linked and f64's inherent methods shadow these.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::error::ProjectionError;
use crate::linalg::sq_dist;
use crate::projections::{check_dim, ConstraintSet};
use crate::state::StateVector;

/// Projects `x` onto the intersection of convex `sets`. One iteration
/// cycles through every member; the loop stops when a full cycle moves
/// the iterate less than `tol`, and fails with a diagnostic error after
/// `max_iter` cycles.
pub fn project_intersection_dykstra(
    sets: &[&dyn ConstraintSet],
    x: &StateVector,
    max_iter: usize,
    tol: f64,
) -> Result<StateVector, ProjectionError> {
    assert!(!sets.is_empty(), "need at least one set");
    let dim = sets[0].dim();
    for s in sets {
        if s.dim() != dim {
            return Err(ProjectionError::DimMismatch {
                expected: dim,
                actual: s.dim(),
            });
        }
    }
    check_dim(dim, x)?;

    let mut current = x.clone();
    let mut corrections: Vec<Vec<f64>> = vec![vec![0.0; dim]; sets.len()];
    let mut residual = f64::INFINITY;

    for it in 0..max_iter {
        let cycle_start = current.clone();
        for (set, corr) in sets.iter().zip(&mut corrections) {
            let shifted: Vec<f64> = current
                .data()
                .iter()
                .zip(corr.iter())
                .map(|(v, c)| v + c)
                .collect();
            let shifted = current
                .with_data(shifted)
                .map_err(|_| ProjectionError::DykstraNonConvergence {
                    residual: f64::INFINITY,
                    iterations: it,
                })?;
            let projected = set.project(&shifted)?;
            for d in 0..dim {
                corr[d] = shifted.data()[d] - projected.data()[d];
            }
            current = projected;
        }
        residual = sq_dist(cycle_start.data(), current.data()).sqrt();
        if residual < tol {
            return Ok(current);
        }
    }
    Err(ProjectionError::DykstraNonConvergence {
        residual,
        iterations: max_iter,
    })
}

/// An intersection of convex sets as a [`ConstraintSet`], projected via
/// Dykstra's algorithm with the stored iteration budget.
pub struct IntersectionSet {
    sets: Vec<Box<dyn ConstraintSet + Send + Sync>>,
    max_iter: usize,
    tol: f64,
}

impl IntersectionSet {
    pub const DEFAULT_MAX_ITER: usize = 10_000;
    pub const DEFAULT_TOL: f64 = 1e-10;

    /// Builds the intersection with the default budget
    /// (10,000 cycles, movement tolerance 1e-10).
    pub fn new(sets: Vec<Box<dyn ConstraintSet + Send + Sync>>) -> Result<Self, ProjectionError> {
        Self::with_budget(sets, Self::DEFAULT_MAX_ITER, Self::DEFAULT_TOL)
    }

    pub fn with_budget(
        sets: Vec<Box<dyn ConstraintSet + Send + Sync>>,
        max_iter: usize,
        tol: f64,
    ) -> Result<Self, ProjectionError> {
        assert!(!sets.is_empty(), "need at least one set");
        let dim = sets[0].dim();
        for s in &sets {
            if s.dim() != dim {
                return Err(ProjectionError::DimMismatch {
                    expected: dim,
                    actual: s.dim(),
                });
            }
        }
        Ok(Self {
            sets,
            max_iter,
            tol,
        })
    }
}

impl ConstraintSet for IntersectionSet {
    fn dim(&self) -> usize {
        self.sets[0].dim()
    }

    fn project(&self, x: &StateVector) -> Result<StateVector, ProjectionError> {
        let refs: Vec<&dyn ConstraintSet> = self
            .sets
            .iter()
            .map(|b| b.as_ref() as &dyn ConstraintSet)
            .collect();
        project_intersection_dykstra(&refs, x, self.max_iter, self.tol)
    }

    /// Membership in the intersection is membership in every part.
    fn is_feasible(&self, x: &StateVector, tol: f64) -> bool {
        self.sets.iter().all(|s| s.is_feasible(x, tol))
    }
}
