//! The constraint-set library: exact convex projections, composed
//! intersections, and three domain-specific (partly non-convex)
//! projections, all behind one interface.
//!
//! A projection maps a point to the nearest member of its feasible set
//! in Euclidean norm; the squared residual ‖P(x) − x‖² is the cost that
//! the sampler's traces and the theory checks call Error.

mod convex;
mod dykstra;
mod object_placement;
mod porosity;
mod trajectory;

pub use convex::{
    project_affine, project_ball, project_box, project_halfspace, AffineSet, BallSet, BoxSet,
    HalfspaceSet,
};
pub use dykstra::{project_intersection_dykstra, IntersectionSet};
pub use object_placement::{disc_mask, project_object_position, ObjectPlacementConstraint};
pub use porosity::{project_porosity, PorosityConstraint};
pub use trajectory::{project_trajectory, Circle, TrajectoryConstraint};

// In test builds std is linked and f64's inherent methods shadow these.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::error::ProjectionError;
use crate::state::StateVector;

/// A feasible set with an (at least locally) nearest-point projection.
///
/// All implementations are pure: safe to share across threads.
pub trait ConstraintSet {
    /// Dimension of the states this set lives in.
    fn dim(&self) -> usize;

    /// The nearest feasible point to `x` (exact for the convex types,
    /// a local solution for the non-convex ones).
    fn project(&self, x: &StateVector) -> Result<StateVector, ProjectionError>;

    /// The projection cost ‖project(x) − x‖².
    fn distance_sq(&self, x: &StateVector) -> Result<f64, ProjectionError> {
        let p = self.project(x)?;
        Ok(crate::linalg::sq_dist(p.data(), x.data()))
    }

    /// Whether `x` lies within `tol` (Euclidean distance) of the set.
    /// Exact projections report feasibility at `tol = 0` exactly.
    fn is_feasible(&self, x: &StateVector, tol: f64) -> bool {
        match self.distance_sq(x) {
            Ok(d) => d.sqrt() <= tol,
            Err(_) => false,
        }
    }
}

/// The whole space: projection is the identity. Its role is to reduce
/// constrained samplers to their unconstrained counterparts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentityConstraint {
    dim: usize,
}

impl IdentityConstraint {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl ConstraintSet for IdentityConstraint {
    fn dim(&self) -> usize {
        self.dim
    }

    fn project(&self, x: &StateVector) -> Result<StateVector, ProjectionError> {
        check_dim(self.dim, x)?;
        Ok(x.clone())
    }

    fn distance_sq(&self, x: &StateVector) -> Result<f64, ProjectionError> {
        check_dim(self.dim, x)?;
        Ok(0.0)
    }

    fn is_feasible(&self, x: &StateVector, _tol: f64) -> bool {
        x.dim() == self.dim
    }
}

pub(crate) fn check_dim(expected: usize, x: &StateVector) -> Result<(), ProjectionError> {
    if x.dim() != expected {
        return Err(ProjectionError::DimMismatch {
            expected,
            actual: x.dim(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identity_returns_input_bits() {
        let c = IdentityConstraint::new(3);
        let x = StateVector::flat(vec![1.0, -2.5, 0.0]).unwrap();
        assert_eq!(c.project(&x).unwrap(), x);
        assert_eq!(c.distance_sq(&x).unwrap(), 0.0);
        assert!(c.is_feasible(&x, 0.0));
        let wrong = StateVector::flat(vec![1.0]).unwrap();
        assert!(c.project(&wrong).is_err());
    }
}
