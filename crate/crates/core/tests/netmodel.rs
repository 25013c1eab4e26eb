use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wsnloc::netmodel::{
    generate_network, load_network, network_from_text, network_to_text, save_network, AnchorPlacement, Layout,
    MobileNetwork, MobilityConfig, ScenarioConfig,
};
use wsnloc::Error;

fn scenario(node_count: usize, anchor_count: usize, sigma: f64, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        dim: 2,
        node_count,
        anchor_count,
        side: 1.0,
        radius: 0.4,
        anchor_radius: 0.4,
        sigma,
        min_degree: 2,
        anchor_placement: AnchorPlacement::Random,
        seed,
        layout_per_seed: false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_round_trip_is_lossless(n in 3usize..30, a in 0usize..3, sigma in 0.0..0.2f64, seed in any::<u64>(), three in any::<bool>()) {
        let mut cfg = scenario(n, a.min(n), sigma, seed);
        if three {
            cfg.dim = 3;
        }
        let net = generate_network(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let back = network_from_text(&network_to_text(&net)).unwrap();
        prop_assert_eq!(back, net);
    }

    #[test]
    fn generated_networks_are_symmetric_and_in_the_area(n in 3usize..40, seed in any::<u64>(), spread in any::<bool>()) {
        let mut cfg = scenario(n, 3.min(n), 0.05, seed);
        if spread {
            cfg.anchor_placement = AnchorPlacement::Spread;
        }
        let net = generate_network(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(net.anchors().len(), cfg.anchor_count);
        for i in 0..net.len() {
            prop_assert!(net.position(i).iter().all(|c| c.abs() <= 0.5));
            prop_assert!(net.degree(i) >= cfg.min_degree.min(n - 1));
            for (&j, &r) in net.neighbors(i).iter().zip(net.rangings(i)) {
                prop_assert_eq!(net.ranging(j, i), Some(r));
                prop_assert!(r >= 0.0);
            }
        }
    }

    #[test]
    fn mobility_keeps_nodes_inside(seed in any::<u64>()) {
        let cfg = ScenarioConfig { side: 100.0, radius: 30.0, anchor_radius: 30.0, ..scenario(20, 3, 1.0, seed) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mobile = MobileNetwork::new(cfg, &mut rng).unwrap();
        let mut fast = MobilityConfig::pedestrian();
        fast.mean_speed = 20.0;
        fast.max_speed = 40.0;
        for _ in 0..20 {
            let net = mobile.step(&fast, &mut rng).unwrap();
            prop_assert!(net.positions().iter().all(|p| p.iter().all(|c| c.abs() <= 50.0)));
        }
    }
}

#[test]
fn noiseless_rangings_are_true_distances() {
    let net = generate_network(&scenario(25, 4, 0.0, 5), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    for (i, j, r) in net.edges() {
        assert_eq!(r, (net.position(i) - net.position(j)).norm());
    }
}

#[test]
fn spread_anchors_cover_the_area_better_than_random_ones() {
    let mut cfg = scenario(400, 8, 0.0, 9);
    let spread_of = |cfg: &ScenarioConfig| {
        let layout = Layout::random(cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        layout
            .positions
            .iter()
            .map(|p| {
                layout
                    .anchors
                    .iter()
                    .map(|&a| (p - layout.positions[a]).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    let random = spread_of(&cfg);
    cfg.anchor_placement = AnchorPlacement::Spread;
    assert!(spread_of(&cfg) < random);
}

#[test]
fn file_round_trip() {
    let net = generate_network(&scenario(12, 3, 0.1, 1), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let dir = std::env::temp_dir().join(format!("wsnloc-net-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("net.txt");
    save_network(&net, &path).unwrap();
    assert_eq!(load_network(&path).unwrap(), net);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn malformed_text_is_rejected_with_a_line_number() {
    let text = "dim 2 2 0\nnode 0 0 0\nnode 1 1 0\nedge 0 1 1.0\nedge 1 0 2.0\n";
    assert!(network_from_text(text).is_err());
    let err = network_from_text("dim 2 1 0\nnode 0 x 0\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
}
