//! Per-node x-update of the ADMM engine.
//!
//! For node `i` with penalty `c`, own target `y_ii` and neighbor targets `y_ij`
//! the local problem is
//!
//! ```text
//! min  F•_i(x_i) + c·N_i·‖x_ii − y_ii‖² + c·Σ_j ‖x_ij − y_ij‖²
//! ```
//!
//! with `x_ii` pinned for anchors and `x_ij` pinned for anchor neighbors.
//! Anchors solve `N_i` independent closed forms. Other nodes eliminate the
//! free replicas analytically, which leaves an `n`-dimensional problem in
//! `x_ii` solved by damped Newton. [`full_oracle_solve`] attacks the full
//! `n(1 + N_i)` problem directly and serves as ground truth in tests.

use nalgebra::{DVector, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::Point;
use crate::objective::{node_cost, node_grad_hess, CostMode};

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTarget {
    /// `y_ij`.
    pub target: Point,
    pub ranging: f64,
    /// Known position when the neighbor is an anchor; its replica is pinned there.
    pub anchor: Option<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalProblem {
    pub node: usize,
    pub dim: usize,
    /// Known own position when the node is an anchor.
    pub anchor: Option<Point>,
    /// `y_ii`.
    pub own_target: Point,
    pub neighbors: Vec<NeighborTarget>,
    pub penalty: f64,
    pub mode: CostMode,
}

/// Weight given to each neighbor term of the reduced problem,
/// `1 / (c̃_ij · N_i)`.
///
/// Eliminating a free replica `x_ij` leaves `c/(1 + 2c)·([d − r]•)²`, while a
/// pinned anchor replica leaves the plain `½([d − r]•)²`; after dividing by
/// `2cN_i` this gives `c̃ = 1 + 2c` for ordinary neighbors and `c̃ = 2c` for
/// anchors ([`PenaltyAssignment::Derived`]). The swapped assignment is kept
/// for comparison only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PenaltyAssignment {
    #[default]
    Derived,
    Swapped,
}

impl PenaltyAssignment {
    pub fn c_tilde(self, penalty: f64, neighbor_is_anchor: bool) -> f64 {
        let (ordinary, anchor) = (1.0 + 2.0 * penalty, 2.0 * penalty);
        match (self, neighbor_is_anchor) {
            (PenaltyAssignment::Derived, false) | (PenaltyAssignment::Swapped, true) => ordinary,
            (PenaltyAssignment::Derived, true) | (PenaltyAssignment::Swapped, false) => anchor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalSolverOptions {
    pub max_newton_iters: usize,
    pub assignment: PenaltyAssignment,
    /// Newton stops once the reduced gradient norm drops below this.
    pub gradient_tol: f64,
}

impl Default for LocalSolverOptions {
    fn default() -> Self {
        Self {
            max_newton_iters: 3,
            assignment: PenaltyAssignment::Derived,
            gradient_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSolution {
    /// `x_ii`.
    pub own: Point,
    /// `x_ij` aligned with the problem's neighbors.
    pub replicas: Vec<Point>,
    pub newton_iters: usize,
    /// A direction was undefined (coincident points) somewhere in the solve.
    pub degenerate: bool,
    /// Some step fell back to steepest descent.
    pub gradient_fallback: bool,
}

const COINCIDENT_NUDGE: f64 = 1e-9;
const ARMIJO_SLOPE: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

impl LocalProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(Error::Config(format!("node {}: penalty must be positive, got {}", self.node, self.penalty)));
        }
        let finite = |p: &Point| p.iter().all(|c| c.is_finite());
        let ok = finite(&self.own_target)
            && self.anchor.as_ref().map_or(true, finite)
            && self.neighbors.iter().all(|nb| {
                finite(&nb.target) && nb.ranging.is_finite() && nb.ranging >= 0.0 && nb.anchor.as_ref().map_or(true, finite)
            });
        if !ok {
            return Err(Error::NonFinite(format!("local problem of node {}", self.node)));
        }
        Ok(())
    }

    fn rangings(&self) -> Vec<f64> {
        self.neighbors.iter().map(|nb| nb.ranging).collect()
    }

    /// Full local objective for a candidate `(x_ii, x_ij)`. Pinned coordinates
    /// are taken as given; callers are expected to respect the pins.
    pub fn full_objective(&self, own: &Point, replicas: &[Point]) -> f64 {
        let c = self.penalty;
        let count = self.neighbors.len() as f64;
        let cost = node_cost(own, replicas, &self.rangings(), self.mode);
        let own_pen = c * count * (own - self.own_target).norm_squared();
        let nb_pen: f64 = replicas
            .iter()
            .zip(&self.neighbors)
            .map(|(x, nb)| c * (x - nb.target).norm_squared())
            .sum();
        cost + own_pen + nb_pen
    }

    /// `(ỹ_ij, r_ij, 1/(c̃_ij N_i))` for every neighbor.
    fn reduced_terms(&self, assignment: PenaltyAssignment) -> Vec<(Point, f64, f64)> {
        let count = self.neighbors.len() as f64;
        self.neighbors
            .iter()
            .map(|nb| {
                let c_tilde = assignment.c_tilde(self.penalty, nb.anchor.is_some());
                (nb.anchor.unwrap_or(nb.target), nb.ranging, 1.0 / (c_tilde * count))
            })
            .collect()
    }

    /// `½‖x − y_ii‖² + Σ_j ½([‖x − ỹ_ij‖ − r_ij]•)² / (c̃_ij N_i)`.
    pub fn reduced_objective(&self, x: &Point, assignment: PenaltyAssignment) -> f64 {
        reduced_value(x, &self.own_target, &self.reduced_terms(assignment), self.mode)
    }

    /// Replicas that minimize the full objective for a fixed own position.
    pub fn recover_replicas(&self, own: &Point) -> Vec<Point> {
        self.neighbors
            .iter()
            .map(|nb| match nb.anchor {
                Some(a) => a,
                None => replica_recovery(own, &nb.target, nb.ranging, self.penalty, self.mode),
            })
            .collect()
    }
}

/// Closed-form `argmin_x ½(‖x − a‖ − r)² + c‖x − y‖²` (or its envelope form).
///
/// The minimizer lies on the ray from `a` through `y` at distance
/// `(r + 2c‖y − a‖)/(1 + 2c)`, except for the envelope with `‖y − a‖ ≤ r`,
/// where `x = y`. With `y = a` the ray is undefined and `e₁` is used.
pub fn anchor_replica_update(anchor: &Point, target: &Point, r: f64, c: f64, mode: CostMode) -> Point {
    let v = target - anchor;
    let d = v.norm();
    if mode == CostMode::Convex && d <= r {
        return *target;
    }
    let alpha = (r + 2.0 * c * d) / (1.0 + 2.0 * c);
    if d == 0.0 {
        return anchor + Point::x() * alpha;
    }
    anchor + v * (alpha / d)
}

/// `x_ij = y_ij + (x_ii − y_ij)/‖x_ii − y_ij‖ · [‖x_ii − y_ij‖ − r]•/(1 + 2c)`.
pub fn replica_recovery(own: &Point, target: &Point, r: f64, c: f64, mode: CostMode) -> Point {
    let v = own - target;
    let d = v.norm();
    if d == 0.0 {
        return anchor_replica_update(own, target, r, c, mode);
    }
    target + v * (mode.bullet(d - r) / ((1.0 + 2.0 * c) * d))
}

/// x-update of an anchor: own replica pinned, neighbors by closed form.
pub fn solve_anchor(p: &LocalProblem) -> Result<LocalSolution> {
    p.validate()?;
    let a = p
        .anchor
        .ok_or_else(|| Error::Config(format!("node {} is not an anchor", p.node)))?;
    let mut degenerate = false;
    let replicas = p
        .neighbors
        .iter()
        .map(|nb| match nb.anchor {
            Some(pinned) => pinned,
            None => {
                degenerate |= nb.target == a;
                anchor_replica_update(&a, &nb.target, nb.ranging, p.penalty, p.mode)
            }
        })
        .collect();
    Ok(LocalSolution {
        own: a,
        replicas,
        newton_iters: 0,
        degenerate,
        gradient_fallback: false,
    })
}

fn reduced_value(x: &Point, own_target: &Point, terms: &[(Point, f64, f64)], mode: CostMode) -> f64 {
    let mut v = 0.5 * (x - own_target).norm_squared();
    for (y, r, w) in terms {
        let e = mode.bullet((x - y).norm() - r);
        v += 0.5 * w * e * e;
    }
    v
}

fn reduced_grad_hess(
    dim: usize,
    x: &Point,
    own_target: &Point,
    terms: &[(Point, f64, f64)],
    mode: CostMode,
) -> (Point, Matrix3<f64>) {
    let mut grad = x - own_target;
    let mut diag = 1.0;
    let mut outer = Matrix3::zeros();
    for (y, r, w) in terms {
        let q = x - y;
        let d = q.norm();
        if d == 0.0 {
            continue;
        }
        let e = d - r;
        let s = w * mode.bullet(e) / d;
        grad += q * s;
        diag += s;
        outer += q * q.transpose() * (w * r * mode.indicator(e) / (d * d * d));
    }
    let mut hess = Matrix3::identity() * diag + outer;
    for k in dim..3 {
        grad[k] = 0.0;
        for l in 0..3 {
            hess[(k, l)] = if k == l { 1.0 } else { 0.0 };
            hess[(l, k)] = if k == l { 1.0 } else { 0.0 };
        }
    }
    (grad, hess)
}

/// Damped Newton on the reduced problem starting from `y_ii`, then replica
/// recovery. Non-positive-definite Hessians fall back to steepest descent;
/// both use Armijo backtracking with factor ½.
pub fn reduced_solve(p: &LocalProblem, opts: &LocalSolverOptions) -> Result<LocalSolution> {
    p.validate()?;
    if p.anchor.is_some() {
        return Err(Error::Config(format!("node {} is an anchor; use the closed form", p.node)));
    }
    let terms = p.reduced_terms(opts.assignment);
    let mut x = p.own_target;
    let mut degenerate = false;
    if p.mode == CostMode::NonConvex && terms.iter().any(|(y, _, _)| *y == x) {
        x.x += COINCIDENT_NUDGE;
        degenerate = true;
    }
    let mut value = reduced_value(&x, &p.own_target, &terms, p.mode);
    let mut iters = 0;
    let mut fallback = false;
    while iters < opts.max_newton_iters {
        let (g, h) = reduced_grad_hess(p.dim, &x, &p.own_target, &terms, p.mode);
        let gnorm = g.norm();
        if gnorm <= opts.gradient_tol {
            break;
        }
        iters += 1;
        let mut dir = h.cholesky().map(|ch| -ch.solve(&g));
        if let Some(d) = &dir {
            if !(g.dot(d) < 0.0) || d.iter().any(|c| !c.is_finite()) {
                dir = None;
            }
        }
        let dir = dir.unwrap_or_else(|| {
            fallback = true;
            -g
        });
        let slope = g.dot(&dir);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let cand = x + dir * t;
            let v = reduced_value(&cand, &p.own_target, &terms, p.mode);
            if v <= value + ARMIJO_SLOPE * t * slope {
                x = cand;
                value = v;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if x.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite(format!("reduced solve of node {}", p.node)));
    }
    let replicas = p.recover_replicas(&x);
    degenerate |= p.neighbors.iter().any(|nb| nb.anchor.is_none() && nb.target == x);
    Ok(LocalSolution {
        own: x,
        replicas,
        newton_iters: iters,
        degenerate,
        gradient_fallback: fallback,
    })
}

/// Dispatches to the anchor closed form or the reduced Newton solve.
pub fn solve(p: &LocalProblem, opts: &LocalSolverOptions) -> Result<LocalSolution> {
    if p.anchor.is_some() {
        solve_anchor(p)
    } else {
        reduced_solve(p, opts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub own: Point,
    pub replicas: Vec<Point>,
    pub objective: f64,
    /// Best objective reached from each start.
    pub start_objectives: Vec<f64>,
}

/// Multi-start BFGS on the full `n(1 + N_i)` local problem.
///
/// The first start is the target point itself; the others are drawn from a
/// box around the targets with a generator seeded by `seed`.
pub fn full_oracle_solve(p: &LocalProblem, starts: usize, seed: u64) -> Result<OracleSolution> {
    p.validate()?;
    let dim = p.dim;
    let free_own = p.anchor.is_none();
    let free_nb: Vec<usize> = (0..p.neighbors.len()).filter(|&k| p.neighbors[k].anchor.is_none()).collect();
    let nvars = dim * (usize::from(free_own) + free_nb.len());

    let unpack = |v: &DVector<f64>| -> (Point, Vec<Point>) {
        let mut own = p.anchor.unwrap_or_else(Point::zeros);
        let mut off = 0;
        if free_own {
            for k in 0..dim {
                own[k] = v[k];
            }
            off = dim;
        }
        let mut reps: Vec<Point> = p.neighbors.iter().map(|nb| nb.anchor.unwrap_or_else(Point::zeros)).collect();
        for (slot, &k) in free_nb.iter().enumerate() {
            for c in 0..dim {
                reps[k][c] = v[off + slot * dim + c];
            }
        }
        (own, reps)
    };
    let value = |v: &DVector<f64>| {
        let (own, reps) = unpack(v);
        p.full_objective(&own, &reps)
    };
    let gradient = |v: &DVector<f64>| -> DVector<f64> {
        let (own, reps) = unpack(v);
        let d = node_grad_hess(dim, &own, &reps, &p.rangings(), p.mode);
        let c = p.penalty;
        let count = p.neighbors.len() as f64;
        let mut g = DVector::zeros(nvars);
        let mut off = 0;
        if free_own {
            for k in 0..dim {
                g[k] = d.gradient[k] + 2.0 * c * count * (own[k] - p.own_target[k]);
            }
            off = dim;
        }
        for (slot, &k) in free_nb.iter().enumerate() {
            for q in 0..dim {
                g[off + slot * dim + q] =
                    d.gradient[dim * (k + 1) + q] + 2.0 * c * (reps[k][q] - p.neighbors[k].target[q]);
            }
        }
        g
    };

    let mut pack = DVector::zeros(nvars);
    let mut off = 0;
    if free_own {
        for k in 0..dim {
            pack[k] = p.own_target[k];
        }
        off = dim;
    }
    for (slot, &k) in free_nb.iter().enumerate() {
        for q in 0..dim {
            pack[off + slot * dim + q] = p.neighbors[k].target[q];
        }
    }

    let spread = p
        .neighbors
        .iter()
        .map(|nb| (nb.target - p.own_target).norm() + nb.ranging)
        .fold(1.0_f64, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut start_objectives = Vec::with_capacity(starts.max(1));
    for s in 0..starts.max(1) {
        let mut x0 = pack.clone();
        if s > 0 {
            for v in x0.iter_mut() {
                *v += (rng.random::<f64>() * 2.0 - 1.0) * spread;
            }
        }
        let (f, x) = bfgs(x0, &value, &gradient);
        start_objectives.push(f);
        if best.as_ref().map_or(true, |(bf, _)| f < *bf) {
            best = Some((f, x));
        }
    }
    let (objective, x) = best.expect("at least one start");
    let (own, replicas) = unpack(&x);
    Ok(OracleSolution {
        own,
        replicas,
        objective,
        start_objectives,
    })
}

/// BFGS with Armijo backtracking; returns `(f, x)` at the last iterate.
fn bfgs(
    mut x: DVector<f64>,
    f: &impl Fn(&DVector<f64>) -> f64,
    grad: &impl Fn(&DVector<f64>) -> DVector<f64>,
) -> (f64, DVector<f64>) {
    let n = x.len();
    if n == 0 {
        return (f(&x), x);
    }
    let mut hinv = nalgebra::DMatrix::<f64>::identity(n, n);
    let mut fx = f(&x);
    let mut g = grad(&x);
    for _ in 0..5000 {
        if g.norm() < 1e-11 {
            break;
        }
        let mut d = -(&hinv * &g);
        if g.dot(&d) >= 0.0 {
            hinv.fill_with_identity();
            d = -g.clone();
        }
        let slope = g.dot(&d);
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..80 {
            let cand = &x + &d * t;
            let fc = f(&cand);
            if fc <= fx + ARMIJO_SLOPE * t * slope {
                next = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = next else { break };
        let gn = grad(&xn);
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-16 * s.norm() * y.norm() && sy > 0.0 {
            let rho = 1.0 / sy;
            let hy = &hinv * &y;
            let yhy = y.dot(&hy);
            hinv += (&s * s.transpose()) * (rho * (1.0 + rho * yhy)) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        let stalled = (fx - fnew).abs() <= 1e-16 * fx.abs().max(1.0) && s.norm() < 1e-14;
        x = xn;
        fx = fnew;
        g = gn;
        if stalled {
            break;
        }
    }
    (fx, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y, 0.0)
    }

    #[test]
    fn anchor_closed_form_examples() {
        let x = anchor_replica_update(&p(0.0, 0.0), &p(2.0, 0.0), 1.0, 0.5, CostMode::NonConvex);
        assert!((x - p(1.5, 0.0)).norm() < 1e-15);
        let x = anchor_replica_update(&p(0.0, 0.0), &p(0.5, 0.0), 1.0, 0.5, CostMode::Convex);
        assert_eq!(x, p(0.5, 0.0));
    }

    #[test]
    fn coincident_anchor_target() {
        let a = p(0.3, 0.3);
        let x = anchor_replica_update(&a, &a, 1.0, 0.5, CostMode::NonConvex);
        assert!((x - (a + p(0.5, 0.0))).norm() < 1e-15);
        assert_eq!(anchor_replica_update(&a, &a, 1.0, 0.5, CostMode::Convex), a);
    }

    #[test]
    fn recovery_matches_anchor_form() {
        let own = p(0.1, 0.7);
        for (y, r, c) in [(p(0.9, 0.2), 0.4, 0.3), (p(0.2, 0.75), 0.5, 2.0), (p(-1.0, 3.0), 1.0, 0.01)] {
            for mode in [CostMode::Convex, CostMode::NonConvex] {
                let a = anchor_replica_update(&own, &y, r, c, mode);
                let b = replica_recovery(&own, &y, r, c, mode);
                assert!((a - b).norm() < 1e-14, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn interior_convex_recovery_keeps_target() {
        let y = p(0.5, 0.5);
        assert_eq!(replica_recovery(&p(0.6, 0.5), &y, 0.5, 1.0, CostMode::Convex), y);
    }

    #[test]
    fn reduced_solve_quadratic_only() {
        let prob = LocalProblem {
            node: 0,
            dim: 2,
            anchor: None,
            own_target: p(0.4, 0.4),
            neighbors: vec![
                NeighborTarget { target: p(0.5, 0.4), ranging: 1.0, anchor: None },
                NeighborTarget { target: p(0.0, 0.0), ranging: 2.0, anchor: Some(p(0.3, 0.4)) },
            ],
            penalty: 0.5,
            mode: CostMode::Convex,
        };
        let sol = reduced_solve(&prob, &LocalSolverOptions::default()).unwrap();
        assert_eq!(sol.own, p(0.4, 0.4));
        assert_eq!(sol.replicas[0], p(0.5, 0.4));
        assert_eq!(sol.replicas[1], p(0.3, 0.4));
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut prob = LocalProblem {
            node: 3,
            dim: 2,
            anchor: None,
            own_target: p(f64::NAN, 0.0),
            neighbors: vec![NeighborTarget { target: p(0.5, 0.4), ranging: 1.0, anchor: None }],
            penalty: 0.5,
            mode: CostMode::Convex,
        };
        assert!(matches!(reduced_solve(&prob, &LocalSolverOptions::default()), Err(Error::NonFinite(_))));
        prob.own_target = p(0.0, 0.0);
        prob.penalty = 0.0;
        assert!(matches!(reduced_solve(&prob, &LocalSolverOptions::default()), Err(Error::Config(_))));
    }
}
