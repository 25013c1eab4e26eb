//! Built-in deployments and their default solver parameters.

use crate::admm::EngineConfig;
use crate::error::{Error, Result};
use crate::netmodel::{AnchorPlacement, MobilityConfig, ScenarioConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct NamedScenario {
    pub name: &'static str,
    pub scenario: ScenarioConfig,
    pub engine: EngineConfig,
    pub iterations: usize,
    pub seeds: usize,
    pub mobility: Option<MobilityConfig>,
}

pub const SCENARIO_NAMES: [&str; 5] = ["n40-sigma01", "n40-sigma001", "n500", "n1000", "tracking500"];

fn unit_square(node_count: usize, anchor_count: usize, radius: f64, sigma: f64, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        dim: 2,
        node_count,
        anchor_count,
        side: 1.0,
        radius,
        anchor_radius: radius,
        sigma,
        min_degree: 0,
        anchor_placement: AnchorPlacement::Spread,
        seed,
        layout_per_seed: false,
    }
}

fn engine(epsilon_c: f64, zeta_c: f64, tau_c: f64, sanity_box: f64) -> EngineConfig {
    EngineConfig {
        epsilon_c,
        zeta_c,
        tau_c,
        sanity_box,
        ..EngineConfig::default()
    }
}

/// Looks up a built-in scenario by name.
pub fn named(name: &str) -> Result<NamedScenario> {
    let s = match name {
        "n40-sigma01" => NamedScenario {
            name: "n40-sigma01",
            scenario: ScenarioConfig { layout_per_seed: true, ..unit_square(40, 10, 0.35, 0.1, 40) },
            engine: engine(0.1, 0.15, 0.001, 10.0),
            iterations: 200,
            seeds: 50,
            mobility: None,
        },
        "n40-sigma001" => NamedScenario {
            name: "n40-sigma001",
            scenario: ScenarioConfig { layout_per_seed: true, ..unit_square(40, 10, 0.35, 0.01, 40) },
            engine: engine(0.05, 0.1, 0.003, 10.0),
            iterations: 200,
            seeds: 50,
            mobility: None,
        },
        "n500" => NamedScenario {
            name: "n500",
            scenario: unit_square(500, 10, 0.1, 0.02, 500),
            engine: engine(0.05, 0.15, 0.001, 10.0),
            iterations: 200,
            seeds: 1,
            mobility: None,
        },
        "n1000" => NamedScenario {
            name: "n1000",
            scenario: unit_square(1000, 20, 0.075, 0.007, 1000),
            engine: engine(0.05, 0.15, 0.001, 10.0),
            iterations: 200,
            seeds: 1,
            mobility: None,
        },
        "tracking500" => NamedScenario {
            name: "tracking500",
            scenario: ScenarioConfig {
                dim: 2,
                node_count: 500,
                anchor_count: 10,
                side: 100.0,
                radius: 8.33,
                anchor_radius: 25.0,
                sigma: 1.66,
                min_degree: 4,
                anchor_placement: AnchorPlacement::Spread,
                seed: 2500,
                layout_per_seed: false,
            },
            engine: engine(0.05, 0.15, 0.5, 1000.0),
            iterations: 20,
            seeds: 1,
            mobility: Some(MobilityConfig::pedestrian()),
        },
        other => {
            return Err(Error::Config(format!(
                "unknown scenario {other:?}; valid names: {}",
                SCENARIO_NAMES.join(", ")
            )))
        }
    };
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_names_resolve_and_validate() {
        for name in SCENARIO_NAMES {
            let s = named(name).unwrap();
            assert_eq!(s.name, name);
            s.scenario.validate().unwrap();
            s.engine.validate().unwrap();
        }
        assert!(named("n41").unwrap_err().to_string().contains("n40-sigma01"));
    }
}
