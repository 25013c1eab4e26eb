use proptest::prelude::*;
use wsnloc::objective::{node_cost, node_grad_hess, pair_cost, pair_gradient, pair_hessian, CostMode};
use wsnloc::Point;

fn mode() -> impl Strategy<Value = CostMode> {
    prop_oneof![Just(CostMode::Convex), Just(CostMode::NonConvex)]
}

fn point2() -> impl Strategy<Value = Point> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y)| Point::new(x, y, 0.0))
}

fn point3() -> impl Strategy<Value = Point> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Point::new(x, y, z))
}

/// Stays clear of the origin and of the kink at `‖z‖ = r`.
fn smooth_point(z: &Point, r: f64) -> bool {
    let d = z.norm();
    d > 0.05 && (d - r).abs() > 1e-3
}

proptest! {
    #[test]
    fn envelope_never_exceeds_original(z in point3(), r in 0.0..2.0f64) {
        let env = pair_cost(&z, r, CostMode::Convex);
        let orig = pair_cost(&z, r, CostMode::NonConvex);
        prop_assert!(env <= orig);
        if z.norm() >= r {
            prop_assert_eq!(env, orig);
        } else {
            prop_assert_eq!(env, 0.0);
        }
    }

    #[test]
    fn envelope_is_midpoint_convex(a in point3(), b in point3(), r in 0.0..2.0f64) {
        let mid = (a + b) * 0.5;
        let lhs = pair_cost(&mid, r, CostMode::Convex);
        let rhs = 0.5 * (pair_cost(&a, r, CostMode::Convex) + pair_cost(&b, r, CostMode::Convex));
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn pair_gradient_matches_central_differences(z in point2(), r in 0.05..1.5f64, m in mode()) {
        prop_assume!(smooth_point(&z, r));
        let g = pair_gradient(&z, r, m);
        let h = 1e-6;
        for k in 0..2 {
            let mut e = Point::zeros();
            e[k] = h;
            let fd = (pair_cost(&(z + e), r, m) - pair_cost(&(z - e), r, m)) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() <= 1e-5 * g.norm().max(1.0), "k={} fd={} g={}", k, fd, g[k]);
        }
    }

    #[test]
    fn pair_hessian_matches_gradient_differences(z in point2(), r in 0.05..1.5f64, m in mode()) {
        prop_assume!(smooth_point(&z, r));
        let hess = pair_hessian(&z, r, m);
        let h = 1e-6;
        let scale = hess.norm().max(1.0);
        for k in 0..2 {
            let mut e = Point::zeros();
            e[k] = h;
            let col = (pair_gradient(&(z + e), r, m) - pair_gradient(&(z - e), r, m)) / (2.0 * h);
            for l in 0..2 {
                prop_assert!((col[l] - hess[(l, k)]).abs() <= 1e-4 * scale);
            }
        }
    }

    #[test]
    fn node_derivatives_match_finite_differences(
        own in point2(),
        reps in prop::collection::vec(point2(), 1..5),
        seed_r in prop::collection::vec(0.05..1.5f64, 5),
        m in mode(),
    ) {
        let r: Vec<f64> = seed_r[..reps.len()].to_vec();
        for (x, &rk) in reps.iter().zip(&r) {
            prop_assume!(smooth_point(&(own - x), rk));
        }
        let d = node_grad_hess(2, &own, &reps, &r, m);
        let n = 2 * (1 + reps.len());
        let h = 1e-6;
        let eval = |v: &[f64]| {
            let o = Point::new(v[0], v[1], 0.0);
            let xs: Vec<Point> = (0..reps.len()).map(|k| Point::new(v[2 + 2 * k], v[3 + 2 * k], 0.0)).collect();
            node_cost(&o, &xs, &r, m)
        };
        let mut base = vec![own.x, own.y];
        for x in &reps {
            base.push(x.x);
            base.push(x.y);
        }
        let gscale = d.gradient.norm().max(1.0);
        for k in 0..n {
            let mut up = base.clone();
            let mut dn = base.clone();
            up[k] += h;
            dn[k] -= h;
            let fd = (eval(&up) - eval(&dn)) / (2.0 * h);
            prop_assert!((fd - d.gradient[k]).abs() <= 1e-5 * gscale);
        }
        prop_assert!((d.hessian.clone() - d.hessian.transpose()).norm() < 1e-12);
    }
}

#[test]
fn zero_vector_has_zero_derivatives() {
    for m in [CostMode::Convex, CostMode::NonConvex] {
        assert_eq!(pair_gradient(&Point::zeros(), 1.0, m), Point::zeros());
        assert_eq!(pair_hessian(&Point::zeros(), 1.0, m), nalgebra::Matrix3::zeros());
    }
}
