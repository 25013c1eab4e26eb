//! Range cost terms in their original form and as a convex envelope.
//!
//! The original per-link cost is `f(z, r) = ½(‖z‖ − r)²`. Its convex envelope
//! is `f̃(z, r) = g(‖z‖ − r)` with `g(x) = ½x²·1(x)`, which vanishes inside the
//! ball of radius `r`. [`CostMode`] picks between the two and supplies the
//! "bullet" operators shared by every gradient and Hessian formula:
//! `[x]• = x·1•(x)` where `1•(x) = 1` for the original cost and the unit step
//! for the envelope.

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::netmodel::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CostMode {
    /// Convex envelope of the range cost.
    Convex,
    /// Original non-convex range cost.
    NonConvex,
}

impl CostMode {
    /// `1•(x)`.
    #[inline]
    pub fn indicator(self, x: f64) -> f64 {
        match self {
            CostMode::NonConvex => 1.0,
            CostMode::Convex => unit_step(x),
        }
    }

    /// `[x]•`.
    #[inline]
    pub fn bullet(self, x: f64) -> f64 {
        x * self.indicator(x)
    }
}

/// Unit step with `1(0) = 1`.
#[inline]
pub fn unit_step(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// `g(x) = ½x²·1(x)`.
#[inline]
pub fn step_quadratic(x: f64) -> f64 {
    0.5 * x * x * unit_step(x)
}

/// `g'(x) = [x]⁺`.
#[inline]
pub fn step_quadratic_d1(x: f64) -> f64 {
    x * unit_step(x)
}

/// `g''(x) = 1(x)`.
#[inline]
pub fn step_quadratic_d2(x: f64) -> f64 {
    unit_step(x)
}

/// Cost of one link: `½(‖z‖ − r)²` or its envelope.
#[inline]
pub fn pair_cost(z: &Point, r: f64, mode: CostMode) -> f64 {
    let e = mode.bullet(z.norm() - r);
    0.5 * e * e
}

/// `A(z, r) = z/‖z‖·[‖z‖ − r]•`, the gradient of [`pair_cost`] in `z`.
/// Zero at `z = 0`.
#[inline]
pub fn pair_gradient(z: &Point, r: f64, mode: CostMode) -> Point {
    let d = z.norm();
    if d == 0.0 {
        return Point::zeros();
    }
    z * (mode.bullet(d - r) / d)
}

/// `B(z, r) = I/‖z‖·[‖z‖ − r]• + zzᵀ/‖z‖³·r·1•(‖z‖ − r)`, the Hessian of
/// [`pair_cost`] in `z`. Zero at `z = 0`.
#[inline]
pub fn pair_hessian(z: &Point, r: f64, mode: CostMode) -> Matrix3<f64> {
    let d = z.norm();
    if d == 0.0 {
        return Matrix3::zeros();
    }
    let e = d - r;
    Matrix3::identity() * (mode.bullet(e) / d) + z * z.transpose() * (r * mode.indicator(e) / (d * d * d))
}

/// `F•_i(x_i) = Σ_j pair_cost(x_ii − x_ij, r_ij)`.
pub fn node_cost(own: &Point, replicas: &[Point], rangings: &[f64], mode: CostMode) -> f64 {
    debug_assert_eq!(replicas.len(), rangings.len());
    replicas
        .iter()
        .zip(rangings)
        .map(|(x, &r)| pair_cost(&(own - x), r, mode))
        .sum()
}

/// Gradient and Hessian of [`node_cost`] over the stacked vector
/// `(x_ii, x_i1, …, x_iN)` restricted to the first `dim` coordinates.
#[derive(Debug, Clone)]
pub struct NodeDerivatives {
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    /// Some replica coincided with the own position; its terms were zeroed.
    pub degenerate: bool,
}

/// Block layout: own block gets `Σ_j A_ij` and `Σ_j B_ij`, neighbor block `j`
/// gets `−A_ij`, `B_ij` on the diagonal and `−B_ij` against the own block.
pub fn node_grad_hess(dim: usize, own: &Point, replicas: &[Point], rangings: &[f64], mode: CostMode) -> NodeDerivatives {
    let blocks = 1 + replicas.len();
    let mut gradient = DVector::zeros(dim * blocks);
    let mut hessian = DMatrix::zeros(dim * blocks, dim * blocks);
    let mut degenerate = false;
    for (k, (x, &r)) in replicas.iter().zip(rangings).enumerate() {
        let z = own - x;
        if z.norm() == 0.0 {
            degenerate = true;
        }
        let a = pair_gradient(&z, r, mode);
        let b = pair_hessian(&z, r, mode);
        let off = dim * (k + 1);
        for p in 0..dim {
            gradient[p] += a[p];
            gradient[off + p] -= a[p];
            for q in 0..dim {
                hessian[(p, q)] += b[(p, q)];
                hessian[(off + p, off + q)] += b[(p, q)];
                hessian[(p, off + q)] -= b[(p, q)];
                hessian[(off + p, q)] -= b[(p, q)];
            }
        }
    }
    NodeDerivatives {
        gradient,
        hessian,
        degenerate,
    }
}

/// Global cost `Σ_i Σ_{j∈N_i} pair_cost(p_i − p_j, r_ij)` (each link counted
/// from both ends).
pub fn global_cost(net: &crate::Network, positions: &[Point], mode: CostMode) -> f64 {
    (0..net.len())
        .map(|i| {
            net.neighbors(i)
                .iter()
                .zip(net.rangings(i))
                .map(|(&j, &r)| pair_cost(&(positions[i] - positions[j]), r, mode))
                .sum::<f64>()
        })
        .sum()
}
