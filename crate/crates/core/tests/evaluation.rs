use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wsnloc::evaluation::{iterations_to_plateau, nesterov_sf, relaxed_cost, rmse, Crlb, NesterovOptions, StepPolicy};
use wsnloc::netmodel::{generate_network, AnchorPlacement, ScenarioConfig};
use wsnloc::Network;

fn network(n: usize, seed: u64) -> Network {
    let cfg = ScenarioConfig {
        dim: 2,
        node_count: n,
        anchor_count: 4,
        side: 1.0,
        radius: 0.45,
        anchor_radius: 0.45,
        sigma: 0.05,
        min_degree: 3,
        anchor_placement: AnchorPlacement::Spread,
        seed,
        layout_per_seed: false,
    };
    generate_network(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

/// Dense Fisher matrix and its inverse trace, written out independently.
fn dense_crlb_trace(net: &Network, sigma: f64) -> Option<f64> {
    let unknown: Vec<usize> = (0..net.len()).filter(|&i| !net.is_anchor(i)).collect();
    let slot = |i: usize| unknown.iter().position(|&u| u == i);
    let m = 2 * unknown.len();
    let mut j = DMatrix::<f64>::zeros(m, m);
    for (a, b, _) in net.edges() {
        let d = net.position(a) - net.position(b);
        let u = d / d.norm();
        let block = DMatrix::from_fn(2, 2, |p, q| u[p] * u[q] / (sigma * sigma));
        for (x, y, s) in [(a, a, 1.0), (b, b, 1.0), (a, b, -1.0), (b, a, -1.0)] {
            if let (Some(sx), Some(sy)) = (slot(x), slot(y)) {
                let mut v = j.view_mut((2 * sx, 2 * sy), (2, 2));
                v += &block * s;
            }
        }
    }
    j.try_inverse().map(|inv| inv.trace())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn crlb_matches_a_dense_inverse(seed in any::<u64>(), n in 8usize..40) {
        let net = network(n, seed);
        let sigma = 0.05;
        match Crlb::compute(&net, sigma) {
            Ok(c) => {
                let dense = dense_crlb_trace(&net, sigma).unwrap();
                prop_assert!((c.trace - dense).abs() <= 1e-8 * dense);
                prop_assert!(c.per_node() <= c.per_unknown());
            }
            Err(_) => prop_assert!(dense_crlb_trace(&net, sigma).map_or(true, |t| !t.is_finite() || t > 1e6)),
        }
    }

    #[test]
    fn plateau_index_is_inside_the_series(series in prop::collection::vec(0.01..1.0f64, 1..50), tol in 0.0..0.2f64) {
        let k = iterations_to_plateau(&series, tol).unwrap();
        prop_assert!(k >= 1 && k <= series.len());
        let last = *series.last().unwrap();
        for v in &series[k - 1..] {
            prop_assert!((v - last).abs() <= last * tol);
        }
    }
}

#[test]
fn nesterov_decreases_the_relaxed_cost() {
    let net = network(30, 4);
    for policy in [StepPolicy::Lipschitz, StepPolicy::Backtracking] {
        let opts = NesterovOptions { policy, ..NesterovOptions::default() };
        let short = nesterov_sf(&net, 5, &opts).unwrap();
        let long = nesterov_sf(&net, 400, &opts).unwrap();
        let cost = |t: &wsnloc::evaluation::RunTrace| relaxed_cost(&net, &t.final_estimates);
        assert!(cost(&long) < cost(&short));
        assert!(long.final_rmse().unwrap() < rmse(&vec![wsnloc::Point::zeros(); net.len()], net.positions()).unwrap());
    }
}
