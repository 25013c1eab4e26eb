//! Experiment drivers: seed-averaged static runs, parameter sweeps and tracking.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::admm::{AdmmVariant, Engine, EngineConfig};
use crate::error::{Error, Result};
use crate::evaluation::{iterations_to_plateau, mean_series, nesterov_sf, rmse, Crlb, NesterovOptions, RunTrace};
use crate::netmodel::{Layout, MobileNetwork, MobilityConfig, Network, ScenarioConfig};
use crate::objective::CostMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    SfNesterov,
    AdmmSf,
    AdmmNc,
    AdmmH,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::SfNesterov, Algorithm::AdmmSf, Algorithm::AdmmNc, Algorithm::AdmmH];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::SfNesterov => "sf-nesterov",
            Algorithm::AdmmSf => "admm-sf",
            Algorithm::AdmmNc => "admm-nc",
            Algorithm::AdmmH => "admm-h",
        }
    }

    pub fn variant(self) -> Option<AdmmVariant> {
        match self {
            Algorithm::SfNesterov => None,
            Algorithm::AdmmSf => Some(AdmmVariant::Relaxed),
            Algorithm::AdmmNc => Some(AdmmVariant::NonConvex),
            Algorithm::AdmmH => Some(AdmmVariant::Hybrid),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                Error::Config(format!("unknown algorithm {s:?}; valid names: {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub engine: EngineConfig,
    pub algorithm: Algorithm,
    /// Run seeds; see [`instance`] for how they map to networks.
    pub seeds: Vec<u64>,
    pub iterations: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        self.scenario.validate()?;
        self.engine.validate()
    }

    fn engine_config(&self) -> EngineConfig {
        let mut cfg = self.engine.clone();
        if let Some(v) = self.algorithm.variant() {
            cfg.variant = v;
        }
        cfg
    }

    /// Parameter audit trail for CSV headers.
    pub fn describe(&self) -> Vec<(String, String)> {
        let s = &self.scenario;
        let mut out = vec![
            ("algorithm".to_string(), self.algorithm.to_string()),
            ("dim".into(), s.dim.to_string()),
            ("node_count".into(), s.node_count.to_string()),
            ("anchor_count".into(), s.anchor_count.to_string()),
            ("side".into(), s.side.to_string()),
            ("radius".into(), s.radius.to_string()),
            ("anchor_radius".into(), s.anchor_radius.to_string()),
            ("sigma".into(), s.sigma.to_string()),
            ("min_degree".into(), s.min_degree.to_string()),
            ("layout_seed".into(), s.seed.to_string()),
            ("layout_per_seed".into(), s.layout_per_seed.to_string()),
            ("anchor_placement".into(), format!("{:?}", s.anchor_placement)),
            ("iterations".into(), self.iterations.to_string()),
        ];
        out.extend(self.engine.describe());
        out
    }
}

/// The network of run `noise_seed`: rangings drawn from `noise_seed` on the
/// scenario's layout, or on layout `seed + noise_seed` with `layout_per_seed`.
pub fn instance(scenario: &ScenarioConfig, noise_seed: u64) -> Result<Network> {
    let layout_seed = if scenario.layout_per_seed {
        scenario.seed.wrapping_add(noise_seed)
    } else {
        scenario.seed
    };
    let layout = Layout::random(scenario, &mut ChaCha8Rng::seed_from_u64(layout_seed))?;
    let (links, _) = layout.links(scenario.radius, scenario.anchor_radius, scenario.min_degree);
    layout.measure(&links, scenario.sigma, &mut ChaCha8Rng::seed_from_u64(noise_seed))
}

/// One run of the selected algorithm on `net` from the all-zero start.
pub fn run_single(spec: &ExperimentSpec, net: &Network) -> Result<RunTrace> {
    match spec.algorithm.variant() {
        None => nesterov_sf(net, spec.iterations, &NesterovOptions::default()),
        Some(_) => Engine::new(net.clone(), spec.engine_config())?.run(spec.iterations),
    }
}

#[derive(Debug, Clone)]
pub struct StaticResult {
    pub traces: Vec<RunTrace>,
    /// Seed-averaged RMSE per iteration.
    pub mean_rmse: Vec<f64>,
    /// Seed-averaged Cramer-Rao bound on the all-node RMSE.
    pub crlb: Option<f64>,
}

/// Runs every seed (in parallel) and averages the RMSE curves.
pub fn run_static(spec: &ExperimentSpec) -> Result<StaticResult> {
    spec.validate()?;
    let runs: Vec<(RunTrace, Option<f64>)> = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            let net = instance(&spec.scenario, seed)?;
            let mut trace = run_single(spec, &net)?;
            let mut meta = spec.describe();
            meta.push(("noise_seed".into(), seed.to_string()));
            meta.extend(trace.metadata.drain(..).filter(|(k, _)| !meta_has(&spec.describe(), k)));
            trace.metadata = meta;
            let bound = crlb_for(&net, spec.scenario.sigma);
            Ok((trace, bound))
        })
        .collect::<Result<_>>()?;
    let series: Vec<Vec<f64>> = runs.iter().map(|(t, _)| t.rmse_series()).collect();
    let bounds: Vec<f64> = runs.iter().filter_map(|(_, b)| *b).collect();
    let crlb = (!bounds.is_empty()).then(|| bounds.iter().sum::<f64>() / bounds.len() as f64);
    Ok(StaticResult {
        mean_rmse: mean_series(&series),
        traces: runs.into_iter().map(|(t, _)| t).collect(),
        crlb,
    })
}

fn meta_has(meta: &[(String, String)], key: &str) -> bool {
    meta.iter().any(|(k, _)| k == key)
}

fn crlb_for(net: &Network, sigma: f64) -> Option<f64> {
    (sigma > 0.0).then(|| Crlb::compute(net, sigma).ok().map(|c| c.per_node())).flatten()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub epsilon_c: Vec<f64>,
    pub zeta_c: Vec<f64>,
    pub tau_c: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub epsilon_c: f64,
    pub zeta_c: f64,
    pub tau_c: f64,
    /// First iteration after which the mean RMSE stays within the plateau band.
    pub iterations_to_plateau: usize,
    pub final_rmse: f64,
    /// Some seed aborted (divergence guard); the cell carries no RMSE then.
    pub failed: bool,
}

/// Relative band used to detect an RMSE plateau.
pub const PLATEAU_TOLERANCE: f64 = 0.05;

/// Seed-averaged behaviour on every cell of the grid.
pub fn run_sweep(spec: &ExperimentSpec, grid: &SweepGrid) -> Result<Vec<SweepCell>> {
    if grid.epsilon_c.is_empty() || grid.zeta_c.is_empty() || grid.tau_c.is_empty() {
        return Err(Error::Config("sweep grid must be non-empty on every axis".into()));
    }
    spec.validate()?;
    let mut cells = Vec::new();
    for &epsilon_c in &grid.epsilon_c {
        for &zeta_c in &grid.zeta_c {
            for &tau_c in &grid.tau_c {
                cells.push((epsilon_c, zeta_c, tau_c));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(epsilon_c, zeta_c, tau_c)| {
            let mut cell_spec = spec.clone();
            cell_spec.engine.epsilon_c = epsilon_c;
            cell_spec.engine.zeta_c = zeta_c;
            cell_spec.engine.tau_c = tau_c;
            match run_static(&cell_spec) {
                Ok(res) => Ok(SweepCell {
                    epsilon_c,
                    zeta_c,
                    tau_c,
                    iterations_to_plateau: iterations_to_plateau(&res.mean_rmse, PLATEAU_TOLERANCE).unwrap_or(0),
                    final_rmse: res.mean_rmse.last().copied().unwrap_or(f64::NAN),
                    failed: false,
                }),
                Err(Error::Diverged { .. }) => Ok(SweepCell {
                    epsilon_c,
                    zeta_c,
                    tau_c,
                    iterations_to_plateau: cell_spec.iterations,
                    final_rmse: f64::NAN,
                    failed: true,
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("epsilon_c,zeta_c,tau_c,iterations_to_plateau,final_rmse,failed\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.epsilon_c, c.zeta_c, c.tau_c, c.iterations_to_plateau, c.final_rmse, c.failed
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingStep {
    pub step: usize,
    pub rmse: f64,
    pub crlb: Option<f64>,
    /// Nodes that needed nearest-neighbor links to reach the minimum degree.
    pub extended_nodes: usize,
}

/// Localization of a moving network: step 0 starts from zeros, every later
/// step warm-starts from the previous estimates after one mobility step.
///
/// The trajectory depends only on `seed`, so algorithms run with the same
/// seed see the same sequence of networks.
pub fn run_tracking(
    spec: &ExperimentSpec,
    mobility: &MobilityConfig,
    steps: usize,
    seed: u64,
) -> Result<Vec<TrackingStep>> {
    spec.validate()?;
    mobility.validate()?;
    let variant = spec
        .algorithm
        .variant()
        .ok_or_else(|| Error::Config("tracking runs an ADMM variant".into()))?;
    let mut cfg = spec.engine_config();
    cfg.variant = variant;
    let mut scenario = spec.scenario.clone();
    scenario.seed = seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mobile = MobileNetwork::new(scenario, &mut rng)?;
    let iterations = mobility.iterations_per_step;
    let mut out = Vec::with_capacity(steps);
    let mut previous: Option<(Vec<crate::Point>, Vec<CostMode>)> = None;
    for step in 0..steps {
        if step > 0 {
            mobile.step(mobility, &mut rng)?;
        }
        let net = mobile.network().clone();
        let mut engine = match &previous {
            None => Engine::new(net.clone(), cfg.clone())?,
            Some((est, modes)) => Engine::warm_start(net.clone(), cfg.clone(), est, Some(modes))?,
        };
        for _ in 0..iterations {
            engine.iterate()?;
        }
        let estimates = engine.estimates();
        out.push(TrackingStep {
            step,
            rmse: rmse(&estimates, net.positions())?,
            crlb: crlb_for(&net, spec.scenario.sigma),
            extended_nodes: mobile.extended_nodes,
        });
        previous = Some((estimates, engine.modes()));
    }
    Ok(out)
}

pub fn tracking_csv(steps: &[TrackingStep]) -> String {
    let mut out = String::from("step,rmse,crlb,extended_nodes\n");
    for s in steps {
        let crlb = s.crlb.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", s.step, s.rmse, crlb, s.extended_nodes));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        let err = "admm-x".parse::<Algorithm>().unwrap_err().to_string();
        assert!(err.contains("admm-h") && err.contains("sf-nesterov"));
    }
}
