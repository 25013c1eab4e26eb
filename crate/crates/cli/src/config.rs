use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use wsnloc::admm::EngineConfig;
use wsnloc::netmodel::{MobilityConfig, ScenarioConfig};
use wsnloc::scenarios::{self, SCENARIO_NAMES};

/// A fully resolved experiment setup before command-line overrides.
#[derive(Debug, Clone)]
pub struct Setup {
    pub name: String,
    pub scenario: ScenarioConfig,
    pub engine: EngineConfig,
    pub iterations: usize,
    pub seeds: usize,
    pub mobility: MobilityConfig,
}

/// Scenario file layout. Every table is a partial overlay on `base`.
///
/// ```toml
/// base = "n40-sigma01"
/// iterations = 300
/// seeds = 10
///
/// [scenario]
/// sigma = 0.05
///
/// [engine]
/// epsilon_c = 0.08
/// ```
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    base: Option<String>,
    iterations: Option<usize>,
    seeds: Option<usize>,
    scenario: Option<toml::Table>,
    engine: Option<toml::Table>,
    mobility: Option<toml::Table>,
}

fn builtin(name: &str) -> Result<Setup> {
    let s = scenarios::named(name)
        .map_err(|_| anyhow!("unknown scenario `{name}` (built-in: {})", SCENARIO_NAMES.join(", ")))?;
    let mobility = s.mobility.clone().unwrap_or_else(|| MobilityConfig {
        side: s.scenario.side,
        ..MobilityConfig::pedestrian()
    });
    Ok(Setup {
        name: s.name.to_string(),
        scenario: s.scenario,
        engine: s.engine,
        iterations: s.iterations,
        seeds: s.seeds,
        mobility,
    })
}

fn overlay<T: Serialize + DeserializeOwned>(base: &T, patch: Option<toml::Table>, section: &str) -> Result<T> {
    let Some(patch) = patch else {
        return toml::Value::try_from(base)?.try_into().map_err(Into::into);
    };
    let mut value = toml::Value::try_from(base)?;
    let table = value.as_table_mut().expect("configs serialize to tables");
    for (k, v) in patch {
        if !table.contains_key(&k) {
            bail!("unknown key `{k}` in [{section}]");
        }
        table.insert(k, v);
    }
    value.try_into().with_context(|| format!("invalid [{section}] table"))
}

/// Resolves `--scenario`: a built-in name, or a path to a TOML scenario file.
pub fn load(arg: &str) -> Result<Setup> {
    let path = Path::new(arg);
    if !arg.ends_with(".toml") && !path.exists() {
        return builtin(arg);
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ScenarioFile = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut setup = builtin(file.base.as_deref().unwrap_or(SCENARIO_NAMES[0]))?;
    setup.name = path.file_stem().map_or(setup.name, |s| s.to_string_lossy().into_owned());
    setup.scenario = overlay(&setup.scenario, file.scenario, "scenario")?;
    setup.engine = overlay(&setup.engine, file.engine, "engine")?;
    setup.mobility = overlay(&setup.mobility, file.mobility, "mobility")?;
    setup.iterations = file.iterations.unwrap_or(setup.iterations);
    setup.seeds = file.seeds.unwrap_or(setup.seeds);
    Ok(setup)
}

/// Parses `N` (seeds `0..N`), `A..B`, or a comma list `A,B,C`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    let seeds: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        (a.trim().parse()?..b.trim().parse()?).collect()
    } else if s.contains(',') {
        s.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>()?
    } else {
        (0..s.parse()?).collect()
    };
    if seeds.is_empty() {
        bail!("seed selection `{s}` is empty");
    }
    Ok(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_forms() {
        assert_eq!(parse_seeds("3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("5..7").unwrap(), vec![5, 6]);
        assert_eq!(parse_seeds("9, 2").unwrap(), vec![9, 2]);
        assert!(parse_seeds("0").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn overlay_rejects_unknown_keys() {
        let base = EngineConfig::default();
        let mut patch = toml::Table::new();
        patch.insert("epsilon_c".into(), toml::Value::Float(0.3));
        assert_eq!(overlay(&base, Some(patch.clone()), "engine").unwrap().epsilon_c, 0.3);
        patch.insert("epsilon".into(), toml::Value::Float(0.3));
        assert!(overlay(&base, Some(patch), "engine").is_err());
    }
}
