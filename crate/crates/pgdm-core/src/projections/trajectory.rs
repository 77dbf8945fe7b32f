//! Trajectory constraint: a 2-D waypoint path with pinned endpoints
//! whose every line segment clears a set of circular obstacles.
//!
//! Clearance is imposed on the continuous segments, not just the
//! waypoints — a path may not cut through an obstacle between two
//! waypoints that are themselves outside it. The feasible set is
//! non-convex, so projection is solved numerically with an augmented
//! Lagrangian; it converges to a nearby local projection, and genuinely
//! stuck geometries surface as a solver error instead of a bad path.

use alloc::vec;
use alloc::vec::Vec;

// In test builds std is linked and f64's inherent methods shadow these.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::error::ProjectionError;
use crate::projections::{check_dim, ConstraintSet};
use crate::state::StateVector;

/// A circular obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Circle {
    pub fn new(center: [f64; 2], radius: f64) -> Self {
        assert!(
            center[0].is_finite() && center[1].is_finite(),
            "center must be finite"
        );
        assert!(radius.is_finite() && radius > 0.0, "radius must be > 0");
        Self { center, radius }
    }
}

/// Paths of `n_points` planar waypoints (layout `x₀ y₀ x₁ y₁ …`) that
/// start at `start`, end at `goal`, and whose segments keep at least
/// `margin` beyond every obstacle radius.
#[derive(Debug, Clone)]
pub struct TrajectoryConstraint {
    obstacles: Vec<Circle>,
    start: [f64; 2],
    goal: [f64; 2],
    n_points: usize,
    margin: f64,
}

/// Distance from `c` to segment `[p, q]`, the clamped parameter of the
/// closest point, and the unit direction from `c` to it. A degenerate
/// direction (closest point exactly at `c`) resolves to +y, which makes
/// the solver's escape from an obstacle centre deterministic.
fn segment_distance(p: [f64; 2], q: [f64; 2], c: [f64; 2]) -> (f64, f64, [f64; 2]) {
    let dx = q[0] - p[0];
    let dy = q[1] - p[1];
    let len2 = dx * dx + dy * dy;
    let mut u = if len2 > 0.0 {
        ((c[0] - p[0]) * dx + (c[1] - p[1]) * dy) / len2
    } else {
        0.0
    };
    u = u.clamp(0.0, 1.0);
    let zx = p[0] + u * dx - c[0];
    let zy = p[1] + u * dy - c[1];
    let d = (zx * zx + zy * zy).sqrt();
    let dir = if d > 1e-12 {
        [zx / d, zy / d]
    } else {
        [0.0, 1.0]
    };
    (d, u, dir)
}

fn point(path: &[f64], i: usize) -> [f64; 2] {
    [path[2 * i], path[2 * i + 1]]
}

impl TrajectoryConstraint {
    /// Extra clearance beyond each obstacle radius that the solver
    /// enforces, leaving a safety cushion over the bare feasibility
    /// predicate.
    pub const DEFAULT_MARGIN: f64 = 0.02;

    /// Violation level the solver drives clearances below.
    const SOLVE_TOL: f64 = 1e-8;
    /// Paths violating the strengthened clearance by no more than this
    /// skip the solver; slightly looser than [`Self::SOLVE_TOL`] so a
    /// solved path re-projects to itself bit-for-bit.
    const SKIP_TOL: f64 = 1e-7;

    pub fn new(
        obstacles: Vec<Circle>,
        start: [f64; 2],
        goal: [f64; 2],
        n_points: usize,
    ) -> Result<Self, ProjectionError> {
        Self::with_margin(obstacles, start, goal, n_points, Self::DEFAULT_MARGIN)
    }

    pub fn with_margin(
        obstacles: Vec<Circle>,
        start: [f64; 2],
        goal: [f64; 2],
        n_points: usize,
        margin: f64,
    ) -> Result<Self, ProjectionError> {
        assert!(n_points >= 2, "a path needs at least two waypoints");
        assert!(margin.is_finite() && margin > 0.0, "margin must be > 0");
        assert!(
            start.iter().chain(goal.iter()).all(|v| v.is_finite()),
            "endpoints must be finite"
        );
        for (label, pt) in [("start", start), ("goal", goal)] {
            for (i, o) in obstacles.iter().enumerate() {
                let dx = pt[0] - o.center[0];
                let dy = pt[1] - o.center[1];
                if (dx * dx + dy * dy).sqrt() < o.radius + margin {
                    return Err(ProjectionError::InfeasibleGeometry(alloc::format!(
                        "{label} point lies within obstacle {i} (or its margin)"
                    )));
                }
            }
        }
        Ok(Self {
            obstacles,
            start,
            goal,
            n_points,
            margin,
        })
    }

    pub fn obstacles(&self) -> &[Circle] {
        &self.obstacles
    }

    pub fn start(&self) -> [f64; 2] {
        self.start
    }

    pub fn goal(&self) -> [f64; 2] {
        self.goal
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Smallest `distance − radius` over all segments and obstacles;
    /// positive when the path clears everything, `+∞` with no obstacles.
    pub fn min_clearance(&self, path: &[f64]) -> f64 {
        let mut worst = f64::INFINITY;
        for s in 0..self.n_points - 1 {
            let p = point(path, s);
            let q = point(path, s + 1);
            for o in &self.obstacles {
                let (d, _, _) = segment_distance(p, q, o.center);
                worst = worst.min(d - o.radius);
            }
        }
        worst
    }

    /// Worst violation of the strengthened clearance `radius + margin`.
    fn max_violation(&self, path: &[f64]) -> f64 {
        if self.obstacles.is_empty() {
            return 0.0;
        }
        (self.margin - self.min_clearance(path)).max(0.0)
    }

    /// Augmented-Lagrangian value and worst violation at `path`; when
    /// `grad` is given, also the gradient w.r.t. the interior waypoints.
    fn al_eval(
        &self,
        path: &[f64],
        reference: &[f64],
        lambda: &[f64],
        mu: f64,
        mut grad: Option<&mut [f64]>,
    ) -> (f64, f64) {
        let n = self.n_points;
        let mut value = 0.0;
        let mut vmax = 0.0f64;
        if let Some(g) = grad.as_deref_mut() {
            g.fill(0.0);
        }
        // Proximity objective over the interior waypoints.
        for k in 2..2 * (n - 1) {
            let diff = path[k] - reference[k];
            value += diff * diff;
            if let Some(g) = grad.as_deref_mut() {
                g[k - 2] += 2.0 * diff;
            }
        }
        for s in 0..n - 1 {
            let p = point(path, s);
            let q = point(path, s + 1);
            for (oi, o) in self.obstacles.iter().enumerate() {
                let (d, u, dir) = segment_distance(p, q, o.center);
                let viol = (o.radius + self.margin) - d;
                vmax = vmax.max(viol);
                let lam = lambda[s * self.obstacles.len() + oi];
                let shifted = lam + mu * viol;
                if shifted > 0.0 {
                    value += (shifted * shifted - lam * lam) / (2.0 * mu);
                    if let Some(g) = grad.as_deref_mut() {
                        // ∂viol/∂endpoint = −∂d/∂endpoint, treating the
                        // clamped parameter u as locally constant.
                        if s >= 1 {
                            g[2 * (s - 1)] -= shifted * (1.0 - u) * dir[0];
                            g[2 * (s - 1) + 1] -= shifted * (1.0 - u) * dir[1];
                        }
                        if s + 1 <= n - 2 {
                            g[2 * s] -= shifted * u * dir[0];
                            g[2 * s + 1] -= shifted * u * dir[1];
                        }
                    }
                } else {
                    value -= lam * lam / (2.0 * mu);
                }
            }
        }
        (value, vmax)
    }

    /// One full augmented-Lagrangian solve of the projection problem,
    /// in place, from the path's current state. `Ok` once the worst
    /// strengthened-clearance violation falls to [`Self::SOLVE_TOL`];
    /// otherwise the violation that remained.
    fn al_solve(&self, path: &mut [f64], reference: &[f64]) -> Result<(), f64> {
        let n = self.n_points;
        let n_cons = (n - 1) * self.obstacles.len();
        let mut lambda = vec![0.0; n_cons];
        let mut mu = 10.0;
        let mut prev_vmax = f64::INFINITY;
        let mut vmax = prev_vmax;
        for _ in 0..60 {
            self.inner_minimize(path, reference, &lambda, mu);
            vmax = 0.0;
            for s in 0..n - 1 {
                let p = point(path, s);
                let q = point(path, s + 1);
                for (oi, o) in self.obstacles.iter().enumerate() {
                    let (d, _, _) = segment_distance(p, q, o.center);
                    let viol = (o.radius + self.margin) - d;
                    vmax = vmax.max(viol);
                    let lam = &mut lambda[s * self.obstacles.len() + oi];
                    *lam = (*lam + mu * viol).max(0.0);
                }
            }
            if vmax <= Self::SOLVE_TOL {
                return Ok(());
            }
            if vmax > 0.25 * prev_vmax {
                mu = (mu * 5.0).min(1e7);
            }
            prev_vmax = vmax;
        }
        Err(vmax)
    }

    /// Groups obstacles whose strengthened discs leave no usable
    /// corridor between them (gap below twice the margin),
    /// transitively: a path cannot pass between two members, so escape
    /// routes must go around the whole group.
    fn obstacle_clusters(&self) -> Vec<Vec<usize>> {
        let n = self.obstacles.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn root(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let a = &self.obstacles[i];
                let b = &self.obstacles[j];
                let dx = a.center[0] - b.center[0];
                let dy = a.center[1] - b.center[1];
                let gap = (dx * dx + dy * dy).sqrt()
                    - (a.radius + self.margin)
                    - (b.radius + self.margin);
                if gap < 2.0 * self.margin {
                    let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            let r = root(&mut parent, i);
            groups[r].push(i);
        }
        groups.retain(|g| !g.is_empty());
        groups
    }

    /// A circle containing every strengthened member disc, with one
    /// extra margin of cushion; detour initializations are placed on it.
    fn cluster_circle(&self, members: &[usize]) -> ([f64; 2], f64) {
        let mut cx = 0.0;
        let mut cy = 0.0;
        for &i in members {
            cx += self.obstacles[i].center[0];
            cy += self.obstacles[i].center[1];
        }
        let k = members.len() as f64;
        let center = [cx / k, cy / k];
        let mut r = 0.0f64;
        for &i in members {
            let o = &self.obstacles[i];
            let dx = o.center[0] - center[0];
            let dy = o.center[1] - center[1];
            r = r.max((dx * dx + dy * dy).sqrt() + o.radius + self.margin);
        }
        (center, r + self.margin)
    }

    /// Worst strengthened violation over the path against the cluster's
    /// members only.
    fn cluster_violation(&self, path: &[f64], members: &[usize]) -> f64 {
        let mut v = 0.0f64;
        for s in 0..self.n_points - 1 {
            let p = point(path, s);
            let q = point(path, s + 1);
            for &i in members {
                let o = &self.obstacles[i];
                let (d, _, _) = segment_distance(p, q, o.center);
                v = v.max((o.radius + self.margin) - d);
            }
        }
        v
    }

    /// Moves every maximal run of interior waypoints lying inside the
    /// circle onto an arc around it, sweeping counterclockwise for
    /// `side > 0` and clockwise otherwise. Endpoints stay pinned; the
    /// anchors are the points just outside each run.
    fn arc_reinit(&self, path: &mut [f64], center: [f64; 2], radius: f64, side: f64) {
        const TAU: f64 = core::f64::consts::TAU;
        let n = self.n_points;
        let inside = |p: [f64; 2]| {
            let dx = p[0] - center[0];
            let dy = p[1] - center[1];
            (dx * dx + dy * dy).sqrt() < radius
        };
        let mut i = 1;
        while i < n - 1 {
            if !inside(point(path, i)) {
                i += 1;
                continue;
            }
            let a = i;
            let mut b = i;
            while b + 1 < n - 1 && inside(point(path, b + 1)) {
                b += 1;
            }
            let pa = point(path, a - 1);
            let pb = point(path, b + 1);
            let th_a = (pa[1] - center[1]).atan2(pa[0] - center[0]);
            let th_b = (pb[1] - center[1]).atan2(pb[0] - center[0]);
            let mut sweep = th_b - th_a;
            if side > 0.0 {
                while sweep <= 0.0 {
                    sweep += TAU;
                }
            } else {
                while sweep >= 0.0 {
                    sweep -= TAU;
                }
            }
            let count = b - a + 1;
            for k in 0..count {
                let th = th_a + sweep * (k + 1) as f64 / (count + 1) as f64;
                path[2 * (a + k)] = center[0] + radius * th.cos();
                path[2 * (a + k) + 1] = center[1] + radius * th.sin();
            }
            i = b + 1;
        }
    }

    /// Minimises the augmented Lagrangian over the interior waypoints by
    /// backtracking gradient descent, in place.
    fn inner_minimize(&self, path: &mut [f64], reference: &[f64], lambda: &[f64], mu: f64) {
        let free = 2 * (self.n_points - 2);
        if free == 0 {
            return;
        }
        let gtol = 1e-10f64.max(mu * 1e-15);
        let mut grad = vec![0.0; free];
        let mut candidate = path.to_vec();
        let mut alpha = 0.25;
        for _ in 0..500 {
            let (value, _) = self.al_eval(path, reference, lambda, mu, Some(&mut grad));
            let gsq: f64 = grad.iter().map(|g| g * g).sum();
            if gsq.sqrt() <= gtol {
                return;
            }
            let mut accepted = false;
            for _ in 0..45 {
                for k in 0..free {
                    candidate[2 + k] = path[2 + k] - alpha * grad[k];
                }
                let (cand_value, _) = self.al_eval(&candidate, reference, lambda, mu, None);
                if cand_value <= value - 1e-4 * alpha * gsq {
                    path.copy_from_slice(&candidate);
                    alpha = (alpha * 1.3).min(1.0);
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                return; // step size exhausted; outer loop takes over
            }
        }
    }
}

/// Nearest path (in the least-squares sense, endpoints pinned to start
/// and goal) whose segments all clear every obstacle by its radius plus
/// the constraint margin.
///
/// A path already satisfying the strengthened clearance is returned
/// unchanged apart from the endpoint pinning. Otherwise an augmented
/// Lagrangian drives the worst clearance violation below 1e-8. When
/// that stalls — a run of waypoints wedged inside a group of
/// overlapping obstacles pulls the solver into a dead point — the
/// stuck runs are re-initialized on detour arcs around each blocking
/// group and the solve is repeated, nearer side first, then the other
/// side. The result is a local projection (global optimality is not
/// promised on this non-convex set); geometries that stay stuck after
/// the detours report the remaining violation rather than returning an
/// unusable path. Every step is deterministic in the input.
pub fn project_trajectory(
    c: &TrajectoryConstraint,
    x: &StateVector,
) -> Result<StateVector, ProjectionError> {
    check_dim(2 * c.n_points, x)?;
    let mut path = x.data().to_vec();
    let n = c.n_points;
    path[0] = c.start[0];
    path[1] = c.start[1];
    path[2 * n - 2] = c.goal[0];
    path[2 * n - 1] = c.goal[1];

    if c.max_violation(&path) <= TrajectoryConstraint::SKIP_TOL {
        return Ok(x.with_data(path).expect("pinned endpoints are finite"));
    }
    if n == 2 {
        // No interior waypoints to move; the pinned segment is blocked.
        return Err(ProjectionError::SolverNonConvergence {
            max_violation: c.max_violation(&path),
        });
    }

    let reference = path.clone();
    let mut best_vmax = match c.al_solve(&mut path, &reference) {
        Ok(()) => return Ok(x.with_data(path).expect("solver keeps the path finite")),
        Err(v) => v,
    };

    // Detour rescue around the groups the stalled path still violates.
    let blocked: Vec<([f64; 2], f64)> = c
        .obstacle_clusters()
        .into_iter()
        .filter(|m| c.cluster_violation(&path, m) > TrajectoryConstraint::SOLVE_TOL)
        .map(|m| c.cluster_circle(&m))
        .collect();
    if !blocked.is_empty() {
        let init_for = |side: f64| {
            let mut p = path.clone();
            for &(center, radius) in &blocked {
                c.arc_reinit(&mut p, center, radius, side);
            }
            p
        };
        let prox = |p: &[f64]| -> f64 {
            p.iter()
                .zip(&reference)
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        };
        let plus = init_for(1.0);
        let minus = init_for(-1.0);
        let ordered = if prox(&minus) < prox(&plus) {
            [minus, plus]
        } else {
            [plus, minus]
        };
        for mut candidate in ordered {
            match c.al_solve(&mut candidate, &reference) {
                Ok(()) => {
                    return Ok(x
                        .with_data(candidate)
                        .expect("solver keeps the path finite"))
                }
                Err(v) => best_vmax = best_vmax.min(v),
            }
        }
    }
    Err(ProjectionError::SolverNonConvergence {
        max_violation: best_vmax,
    })
}

impl ConstraintSet for TrajectoryConstraint {
    fn dim(&self) -> usize {
        2 * self.n_points
    }

    fn project(&self, x: &StateVector) -> Result<StateVector, ProjectionError> {
        project_trajectory(self, x)
    }

    /// Endpoints within `tol` of start and goal, and every segment
    /// clearing every obstacle by at least `radius − tol`.
    fn is_feasible(&self, x: &StateVector, tol: f64) -> bool {
        if x.dim() != 2 * self.n_points {
            return false;
        }
        let path = x.data();
        let n = self.n_points;
        let end_ok = |have: [f64; 2], want: [f64; 2]| {
            let dx = have[0] - want[0];
            let dy = have[1] - want[1];
            (dx * dx + dy * dy).sqrt() <= tol
        };
        end_ok(point(path, 0), self.start)
            && end_ok(point(path, n - 1), self.goal)
            && self.min_clearance(path) >= -tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sq_dist;
    use crate::state::ShapeTag;

    fn path_state(points: &[[f64; 2]]) -> StateVector {
        let data: Vec<f64> = points.iter().flat_map(|p| p.iter().copied()).collect();
        StateVector::new(
            data,
            ShapeTag::Path {
                n_points: points.len(),
            },
        )
        .unwrap()
    }

    fn unit_obstacle() -> TrajectoryConstraint {
        TrajectoryConstraint::new(
            vec![Circle::new([0.0, 0.0], 1.0)],
            [-2.0, 0.0],
            [2.0, 0.0],
            3,
        )
        .unwrap()
    }

    /// With one interior waypoint straight through a unit disc, the
    /// nearest feasible midpoint sits on the +y axis at the height where
    /// both segments graze the strengthened radius c = 1.02:
    /// h = √(4c²/(4−c²)).
    #[test]
    fn blocked_midpoint_matches_closed_form() {
        let tc = unit_obstacle();
        let x = path_state(&[[-2.0, 0.0], [0.0, 0.0], [2.0, 0.0]]);
        let p = project_trajectory(&tc, &x).unwrap();
        let c = 1.0 + tc.margin();
        let h = (4.0 * c * c / (4.0 - c * c)).sqrt();
        assert!(
            (p.data()[2]).abs() < 1e-5 && (p.data()[3] - h).abs() < 1e-4,
            "midpoint {:?} vs (0, {h})",
            &p.data()[2..4]
        );
        // Waypoint started exactly at the obstacle centre: the
        // deterministic escape direction is +y.
        assert!(p.data()[3] > 0.0);
        assert!(tc.is_feasible(&p, 0.0));
        assert_eq!(p.shape(), x.shape());
    }

    /// The same instance against a brute-force grid search over the
    /// midpoint (with the same +y preference on cost ties).
    #[test]
    fn blocked_midpoint_matches_grid_search() {
        let tc = unit_obstacle();
        let x = path_state(&[[-2.0, 0.0], [0.0, 0.0], [2.0, 0.0]]);
        let p = project_trajectory(&tc, &x).unwrap();

        let c = 1.0 + tc.margin();
        let mut best = ([f64::NAN, f64::NAN], f64::INFINITY);
        let n = 4000;
        for i in 0..=n {
            for j in 0..=n {
                let mid = [
                    -0.5 + i as f64 / n as f64,
                    -2.0 + 4.0 * j as f64 / n as f64,
                ];
                let (d1, _, _) = segment_distance([-2.0, 0.0], mid, [0.0, 0.0]);
                let (d2, _, _) = segment_distance(mid, [2.0, 0.0], [0.0, 0.0]);
                if d1 >= c && d2 >= c {
                    let cost = mid[0] * mid[0] + mid[1] * mid[1];
                    let better = cost < best.1 - 1e-12
                        || (cost < best.1 + 1e-12 && mid[1] > best.0[1]);
                    if better {
                        best = (mid, cost);
                    }
                }
            }
        }
        assert!(
            (p.data()[2] - best.0[0]).abs() < 2.5e-3 && (p.data()[3] - best.0[1]).abs() < 2.5e-3,
            "solver {:?} vs grid {:?}",
            &p.data()[2..4],
            best.0
        );
        // The solver's displacement is no worse than the best grid cell.
        assert!(sq_dist(&p.data()[2..4], &[0.0, 0.0]) <= best.1 + 1e-6);
    }

    #[test]
    fn clear_path_passes_through_unchanged() {
        let tc = unit_obstacle();
        let x = path_state(&[[-2.0, 0.0], [0.0, 1.8], [2.0, 0.0]]);
        let p = project_trajectory(&tc, &x).unwrap();
        assert_eq!(p, x);
        assert_eq!(tc.distance_sq(&x).unwrap(), 0.0);
        assert!(tc.is_feasible(&x, 0.0));
    }

    #[test]
    fn projection_is_idempotent() {
        let tc = unit_obstacle();
        let x = path_state(&[[-2.0, 0.0], [0.3, -0.1], [2.0, 0.0]]);
        let p1 = project_trajectory(&tc, &x).unwrap();
        let p2 = project_trajectory(&tc, &p1).unwrap();
        assert_eq!(p1, p2);
    }

    /// Waypoint-only checking would accept a path whose waypoints all
    /// sit outside the obstacle while a segment cuts straight through.
    #[test]
    fn segments_through_an_obstacle_are_infeasible() {
        let tc = TrajectoryConstraint::new(
            vec![Circle::new([0.0, 0.0], 1.0)],
            [-2.0, 0.0],
            [2.0, 0.0],
            2,
        )
        .unwrap();
        let x = path_state(&[[-2.0, 0.0], [2.0, 0.0]]);
        assert!(!tc.is_feasible(&x, 1e-6));
        match project_trajectory(&tc, &x) {
            Err(ProjectionError::SolverNonConvergence { max_violation }) => {
                assert!((max_violation - 1.02).abs() < 1e-12);
            }
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn endpoints_are_pinned_exactly() {
        let tc = unit_obstacle();
        let x = path_state(&[[-2.1, 0.3], [0.0, 1.8], [1.9, -0.2]]);
        let p = project_trajectory(&tc, &x).unwrap();
        assert_eq!(&p.data()[0..2], &[-2.0, 0.0][..]);
        assert_eq!(&p.data()[4..6], &[2.0, 0.0][..]);
        // Interior untouched: the pinned path was already clear.
        assert_eq!(&p.data()[2..4], &[0.0, 1.8][..]);
    }

    #[test]
    fn endpoint_inside_an_obstacle_is_rejected() {
        match TrajectoryConstraint::new(
            vec![Circle::new([0.0, 0.0], 1.0)],
            [0.0, 0.5],
            [2.0, 0.0],
            3,
        ) {
            Err(ProjectionError::InfeasibleGeometry(msg)) => {
                assert!(msg.contains("start"), "{msg}");
            }
            other => panic!("expected infeasible geometry, got {other:?}"),
        }
    }

    /// A symmetric pinch between two overlapping circles leaves the
    /// single interior waypoint with cancelling pushes — a dead point
    /// for plain gradient descent. The detour rescue must route the
    /// waypoint around the pair instead. Closed form: with the midpoint
    /// forced onto the x = 0 axis at height −h, both segments graze the
    /// near circle's strengthened radius c when 2(h−1) = c·√(h²+4).
    #[test]
    fn symmetric_pinch_escapes_around_the_pair() {
        let tc = TrajectoryConstraint::new(
            vec![Circle::new([0.0, 1.0], 1.0), Circle::new([0.0, -1.0], 1.0)],
            [-2.0, 0.0],
            [2.0, 0.0],
            3,
        )
        .unwrap();
        let x = path_state(&[[-2.0, 0.0], [0.0, 0.0], [2.0, 0.0]]);
        let p = project_trajectory(&tc, &x).unwrap();
        assert!(tc.is_feasible(&p, 0.0));

        let c = 1.0 + tc.margin();
        let disc = 64.0 - 4.0 * (4.0 - c * c) * (4.0 - 4.0 * c * c);
        let h = (8.0 + disc.sqrt()) / (2.0 * (4.0 - c * c));
        assert!(
            p.data()[2].abs() < 1e-4 && (p.data()[3].abs() - h).abs() < 1e-3,
            "midpoint {:?} vs (0, ±{h})",
            &p.data()[2..4]
        );
        // Deterministic side choice and idempotent re-projection.
        let p_again = project_trajectory(&tc, &x).unwrap();
        assert_eq!(p, p_again);
        assert_eq!(project_trajectory(&tc, &p).unwrap(), p);
    }

    /// A path wedged inside a concave pocket of three overlapping
    /// circles — waypoints threaded between members where no corridor
    /// exists — must come out feasible via the detour rescue.
    #[test]
    fn pocket_wedge_is_rescued() {
        let tc = TrajectoryConstraint::new(
            vec![
                Circle::new([0.46, 0.455], 0.055),
                Circle::new([0.52, 0.50], 0.055),
                Circle::new([0.46, 0.545], 0.055),
            ],
            [0.05, 0.5],
            [0.95, 0.5],
            8,
        )
        .unwrap();
        // Straight shot through the pocket's throat.
        let pts: Vec<[f64; 2]> = (0..8)
            .map(|i| [0.05 + 0.9 * i as f64 / 7.0, 0.5])
            .collect();
        let x = path_state(&pts);
        let p = project_trajectory(&tc, &x).unwrap();
        assert!(tc.is_feasible(&p, 0.0));
        assert!(tc.min_clearance(p.data()) >= tc.margin() - 1e-7);
        assert_eq!(project_trajectory(&tc, &p).unwrap(), p);
    }

    /// A start point fully enclosed by a solid ring of overlapping
    /// obstacles has no feasible path out: the solver must report the
    /// stall instead of emitting a colliding path.
    #[test]
    fn enclosed_start_reports_nonconvergence() {
        let ring: Vec<Circle> = (0..6)
            .map(|k| {
                let th = core::f64::consts::TAU * k as f64 / 6.0;
                Circle::new([1.2 * th.cos(), 1.2 * th.sin()], 0.7)
            })
            .collect();
        let tc = TrajectoryConstraint::new(ring, [0.0, 0.0], [3.0, 0.0], 5).unwrap();
        let pts: Vec<[f64; 2]> = (0..5).map(|i| [0.75 * i as f64, 0.0]).collect();
        let x = path_state(&pts);
        match project_trajectory(&tc, &x) {
            Err(ProjectionError::SolverNonConvergence { max_violation }) => {
                assert!(max_violation > 0.0);
            }
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn multi_waypoint_path_around_two_obstacles() {
        let tc = TrajectoryConstraint::new(
            vec![Circle::new([-0.8, 0.0], 0.5), Circle::new([0.8, 0.0], 0.5)],
            [-2.0, 0.0],
            [2.0, 0.0],
            9,
        )
        .unwrap();
        // Straight line through both obstacles, slightly off-centre so
        // the escape direction is gradient-driven rather than tie-broken.
        let pts: Vec<[f64; 2]> = (0..9)
            .map(|i| [-2.0 + 0.5 * i as f64, 0.01])
            .collect();
        let x = path_state(&pts);
        let p = project_trajectory(&tc, &x).unwrap();
        assert!(tc.is_feasible(&p, 0.0));
        assert!(tc.min_clearance(p.data()) >= tc.margin() - 1e-7);
        let p2 = project_trajectory(&tc, &p).unwrap();
        assert_eq!(p, p2);
    }

    #[test]
    fn no_obstacles_means_everything_is_feasible() {
        let tc = TrajectoryConstraint::new(vec![], [-1.0, 0.0], [1.0, 0.0], 4).unwrap();
        let x = path_state(&[[-1.0, 0.0], [5.0, 3.0], [-7.0, 2.0], [1.0, 0.0]]);
        let p = project_trajectory(&tc, &x).unwrap();
        assert_eq!(p, x);
        assert_eq!(tc.min_clearance(x.data()), f64::INFINITY);
    }
}
