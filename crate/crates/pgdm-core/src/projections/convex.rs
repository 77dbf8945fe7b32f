//! Exact projections onto the four convex primitives: boxes, balls,
//! halfspaces, and affine subspaces.
//!
//! Halfspace and ball projections re-apply their closed form until the
//! membership predicate holds exactly, so projected points pass
//! zero-tolerance feasibility checks despite floating-point rounding
//! (one extra application in the rare boundary cases).

use alloc::vec;
use alloc::vec::Vec;

// In test builds std is linked and f64's inherent methods shadow these.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::error::ProjectionError;
use crate::linalg::{cholesky, cholesky_solve, dot, norm_sq};
use crate::projections::{check_dim, ConstraintSet};
use crate::state::StateVector;

/// Elementwise clamp of `x` into `[lo, hi]`; the exact Euclidean
/// projection onto the box.
pub fn project_box(lo: &[f64], hi: &[f64], x: &StateVector) -> Result<StateVector, ProjectionError> {
    if lo.len() != x.dim() || hi.len() != x.dim() {
        return Err(ProjectionError::DimMismatch {
            expected: lo.len(),
            actual: x.dim(),
        });
    }
    if let Some(index) = (0..lo.len()).find(|&i| lo[i] > hi[i]) {
        return Err(ProjectionError::InvalidBounds { index });
    }
    let data = x
        .data()
        .iter()
        .zip(lo.iter().zip(hi))
        .map(|(&v, (&l, &h))| v.clamp(l, h))
        .collect();
    Ok(x.with_data(data).expect("clamp keeps entries finite"))
}

/// Radial rescale of `x` onto the ball `‖x − center‖ ≤ radius` when
/// outside, identity otherwise.
pub fn project_ball(
    center: &[f64],
    radius: f64,
    x: &StateVector,
) -> Result<StateVector, ProjectionError> {
    check_dim(center.len(), x)?;
    assert!(radius > 0.0, "ball radius must be positive");
    let d: Vec<f64> = x.data().iter().zip(center).map(|(v, c)| v - c).collect();
    let n2 = norm_sq(&d);
    if n2 <= radius * radius {
        return Ok(x.clone());
    }
    // Rounding can land the rescaled point a hair outside; shrink the
    // scale (by growing ulp steps) until the reconstructed point — the
    // exact value callers will test — is inside.
    let mut scale = radius / n2.sqrt();
    for k in 0u32..64 {
        let data: Vec<f64> = d
            .iter()
            .zip(center)
            .map(|(v, c)| c + v * scale)
            .collect();
        let back: Vec<f64> = data.iter().zip(center).map(|(v, c)| v - c).collect();
        if norm_sq(&back) <= radius * radius {
            return Ok(x.with_data(data).expect("radial rescale keeps entries finite"));
        }
        scale *= 1.0 - f64::EPSILON * (1u64 << k.min(40)) as f64;
    }
    unreachable!("ball refinement converges within 64 shrinks")
}

/// Projection onto the halfspace `{x : a·x ≤ b}`:
/// `x − max(0, (a·x − b)/‖a‖²)·a`.
pub fn project_halfspace(
    a: &[f64],
    b: f64,
    x: &StateVector,
) -> Result<StateVector, ProjectionError> {
    check_dim(a.len(), x)?;
    let a2 = norm_sq(a);
    if a2 == 0.0 {
        return Err(ProjectionError::ZeroNormal);
    }
    let viol = dot(a, x.data()) - b;
    if viol <= 0.0 {
        return Ok(x.clone());
    }
    // Scale the whole correction up by growing epsilons until the
    // recomputed inner product lands at or below b, so the returned
    // point passes the zero-tolerance feasibility check verbatim.
    // (Nudging y in place can stall: a residual-sized step may round to
    // a no-op against large coordinates.)
    let base = viol / a2;
    for k in 0u32..64 {
        let factor = if k == 0 {
            1.0
        } else {
            1.0 + f64::EPSILON * (1u64 << (k - 1).min(63)) as f64
        };
        let y: Vec<f64> = x
            .data()
            .iter()
            .zip(a)
            .map(|(xi, ai)| xi - base * factor * ai)
            .collect();
        if dot(a, &y) <= b {
            return Ok(x.with_data(y).expect("correction keeps entries finite"));
        }
    }
    unreachable!("halfspace refinement converges within 64 overshoots")
}

/// Projection onto the affine subspace `{x : Ax = b}` for full-row-rank
/// `A` (row-major, `rows × dim`): `x − Aᵀ(AAᵀ)⁻¹(Ax − b)`.
pub fn project_affine(
    a: &[f64],
    rows: usize,
    b: &[f64],
    x: &StateVector,
) -> Result<StateVector, ProjectionError> {
    let dim = x.dim();
    if rows == 0 || a.len() != rows * dim || b.len() != rows {
        return Err(ProjectionError::DimMismatch {
            expected: rows * dim,
            actual: a.len(),
        });
    }
    // Gram matrix AAᵀ (rows × rows).
    let mut gram = vec![0.0; rows * rows];
    for i in 0..rows {
        for j in 0..=i {
            let g = dot(&a[i * dim..(i + 1) * dim], &a[j * dim..(j + 1) * dim]);
            gram[i * rows + j] = g;
            gram[j * rows + i] = g;
        }
    }
    let l = cholesky(&gram, rows).map_err(|row| ProjectionError::RankDeficient {
        row,
        pivot: gram[row * rows + row],
    })?;

    let mut y = x.data().to_vec();
    // One corrective re-application shrinks the O(ε) residual of the
    // first solve to O(ε²).
    for _ in 0..2 {
        let resid: Vec<f64> = (0..rows)
            .map(|i| dot(&a[i * dim..(i + 1) * dim], &y) - b[i])
            .collect();
        let lam = cholesky_solve(&l, rows, &resid);
        for i in 0..rows {
            for d in 0..dim {
                y[d] -= lam[i] * a[i * dim + d];
            }
        }
    }
    // A non-finite result can only come from a numerically singular
    // Gram system that slipped past the factorization.
    x.with_data(y).map_err(|_| ProjectionError::RankDeficient {
        row: 0,
        pivot: 0.0,
    })
}

/// The box `[lo, hi]` as a [`ConstraintSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxSet {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, ProjectionError> {
        if lo.len() != hi.len() {
            return Err(ProjectionError::DimMismatch {
                expected: lo.len(),
                actual: hi.len(),
            });
        }
        if let Some(index) = (0..lo.len()).find(|&i| lo[i] > hi[i]) {
            return Err(ProjectionError::InvalidBounds { index });
        }
        Ok(Self { lo, hi })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self, ProjectionError> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }
}

impl ConstraintSet for BoxSet {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn project(&self, x: &StateVector) -> Result<StateVector, ProjectionError> {
        project_box(&self.lo, &self.hi, x)
    }

    fn is_feasible(&self, x: &StateVector, tol: f64) -> bool {
        x.dim() == self.dim()
            && match self.distance_sq(x) {
                Ok(d) => d.sqrt() <= tol,
                Err(_) => false,
            }
    }
}

/// The ball `‖x − center‖ ≤ radius` as a [`ConstraintSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct BallSet {
    center: Vec<f64>,
    radius: f64,
}

impl BallSet {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        assert!(radius > 0.0, "ball radius must be positive");
        Self { center, radius }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl ConstraintSet for BallSet {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn project(&self, x: &StateVector) -> Result<StateVector, ProjectionError> {
        project_ball(&self.center, self.radius, x)
    }

    fn is_feasible(&self, x: &StateVector, tol: f64) -> bool {
        if x.dim() != self.dim() {
            return false;
        }
        let d: Vec<f64> = x
            .data()
            .iter()
            .zip(&self.center)
            .map(|(v, c)| v - c)
            .collect();
        // Compare in the squared domain so the zero-tolerance predicate
        // matches the projection's exit test bit for bit.
        let reach = self.radius + tol;
        norm_sq(&d) <= reach * reach
    }
}

/// The halfspace `{x : a·x ≤ b}` as a [`ConstraintSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceSet {
    a: Vec<f64>,
    b: f64,
}

impl HalfspaceSet {
    pub fn new(a: Vec<f64>, b: f64) -> Result<Self, ProjectionError> {
        if norm_sq(&a) == 0.0 {
            return Err(ProjectionError::ZeroNormal);
        }
        Ok(Self { a, b })
    }

    /// The set `{x : x_coord ≥ c}` in `dim` dimensions, written as a
    /// halfspace with normal `-e_coord`.
    pub fn coordinate_at_least(dim: usize, coord: usize, c: f64) -> Self {
        let mut a = vec![0.0; dim];
        a[coord] = -1.0;
        Self { a, b: -c }
    }

    pub fn normal(&self) -> &[f64] {
        &self.a
    }

    pub fn offset(&self) -> f64 {
        self.b
    }
}

impl ConstraintSet for HalfspaceSet {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn project(&self, x: &StateVector) -> Result<StateVector, ProjectionError> {
        project_halfspace(&self.a, self.b, x)
    }

    fn distance_sq(&self, x: &StateVector) -> Result<f64, ProjectionError> {
        check_dim(self.dim(), x)?;
        let viol = dot(&self.a, x.data()) - self.b;
        if viol <= 0.0 {
            return Ok(0.0);
        }
        Ok(viol * viol / norm_sq(&self.a))
    }

    fn is_feasible(&self, x: &StateVector, tol: f64) -> bool {
        x.dim() == self.dim()
            && dot(&self.a, x.data()) - self.b <= tol * norm_sq(&self.a).sqrt()
    }
}

/// The affine subspace `{x : Ax = b}` as a [`ConstraintSet`]. The
/// Cholesky factor of `AAᵀ` is computed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSet {
    a: Vec<f64>,
    rows: usize,
    dim: usize,
    b: Vec<f64>,
}

impl AffineSet {
    pub fn new(a: Vec<f64>, rows: usize, dim: usize, b: Vec<f64>) -> Result<Self, ProjectionError> {
        if rows == 0 || a.len() != rows * dim || b.len() != rows {
            return Err(ProjectionError::DimMismatch {
                expected: rows * dim,
                actual: a.len(),
            });
        }
        // Validate rank now so projection can't fail later.
        let mut gram = vec![0.0; rows * rows];
        for i in 0..rows {
            for j in 0..=i {
                let g = dot(&a[i * dim..(i + 1) * dim], &a[j * dim..(j + 1) * dim]);
                gram[i * rows + j] = g;
                gram[j * rows + i] = g;
            }
        }
        cholesky(&gram, rows).map_err(|row| ProjectionError::RankDeficient {
            row,
            pivot: gram[row * rows + row],
        })?;
        Ok(Self { a, rows, dim, b })
    }
}

impl ConstraintSet for AffineSet {
    fn dim(&self) -> usize {
        self.dim
    }

    fn project(&self, x: &StateVector) -> Result<StateVector, ProjectionError> {
        check_dim(self.dim, x)?;
        project_affine(&self.a, self.rows, &self.b, x)
    }

    fn is_feasible(&self, x: &StateVector, tol: f64) -> bool {
        x.dim() == self.dim
            && match self.distance_sq(x) {
                Ok(d) => d.sqrt() <= tol.max(1e-12),
                Err(_) => false,
            }
    }
}
