//! `wsnloc`: run localization experiments from the command line.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use wsnloc::evaluation::{compare_runs, summary_csv, Crlb, RunTrace, TraceRow};
use wsnloc::experiment::{
    instance, run_static, run_sweep, run_tracking, sweep_csv, tracking_csv, Algorithm, ExperimentSpec, SweepGrid,
    PLATEAU_TOLERANCE,
};
use wsnloc::localsolver::PenaltyAssignment;
use wsnloc::netmodel::{load_network, network_to_text, AnchorPlacement};

use config::{parse_seeds, Setup};

#[derive(Parser)]
#[command(name = "wsnloc", version, about = "Distributed ADMM sensor network localization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run algorithms over a set of seeds and write per-seed traces, mean curves and a summary.
    Run {
        #[command(flatten)]
        common: Common,
        /// Comma-separated algorithms: sf-nesterov, admm-sf, admm-nc, admm-h.
        #[arg(long, value_delimiter = ',', default_value = "admm-h")]
        alg: Vec<Algorithm>,
        /// RMSE level for the iterations-to-threshold column
        /// (default: within 5% of the best final mean RMSE).
        #[arg(long)]
        threshold: Option<f64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Grid search over epsilon_c, zeta_c and tau_c (comma-separated lists).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "admm-h")]
        alg: Algorithm,
        /// Output CSV file.
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Localize a moving network, warm-starting each step from the last.
    Track {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mobility: MobilityArgs,
        #[arg(long, value_delimiter = ',', default_value = "admm-sf,admm-h")]
        alg: Vec<Algorithm>,
        /// Number of localization steps.
        #[arg(long, default_value_t = 60)]
        steps: usize,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Generate one network instance and write it in the text network format.
    GenNet {
        #[command(flatten)]
        common: Common,
        /// Run seed selecting the noise draw (and the layout with layout_per_seed).
        #[arg(long, default_value_t = 0)]
        noise_seed: u64,
        #[arg(long, default_value = "network.txt")]
        out: PathBuf,
    },
    /// Print the Cramer-Rao bound for generated instances or a network file.
    Crlb {
        #[command(flatten)]
        common: Common,
        /// Network file to evaluate instead of generated instances.
        #[arg(long)]
        network: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Built-in scenario name or path to a TOML scenario file.
    #[arg(long, default_value = "n40-sigma01")]
    scenario: String,
    /// Seeds: `N` for 0..N, `A..B`, or `A,B,C` (default: the scenario's seed count).
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Zero the per-round timing column so output is byte-reproducible.
    #[arg(long)]
    deterministic: bool,
    /// Run nodes sequentially instead of on the thread pool.
    #[arg(long)]
    serial: bool,

    #[arg(long, help_heading = "Scenario")]
    dim: Option<usize>,
    #[arg(long, help_heading = "Scenario")]
    node_count: Option<usize>,
    #[arg(long, help_heading = "Scenario")]
    anchor_count: Option<usize>,
    #[arg(long, help_heading = "Scenario")]
    side: Option<f64>,
    #[arg(long, help_heading = "Scenario")]
    radius: Option<f64>,
    #[arg(long, help_heading = "Scenario")]
    anchor_radius: Option<f64>,
    #[arg(long, help_heading = "Scenario")]
    sigma: Option<f64>,
    #[arg(long, help_heading = "Scenario")]
    min_degree: Option<usize>,
    /// random or spread.
    #[arg(long, help_heading = "Scenario", value_parser = parse_placement)]
    anchor_placement: Option<AnchorPlacement>,
    /// Layout seed (the trajectory seed for `track`).
    #[arg(long, help_heading = "Scenario")]
    seed: Option<u64>,
    #[arg(long, help_heading = "Scenario")]
    layout_per_seed: Option<bool>,

    /// Comma-separated list for `sweep`, a single value otherwise.
    #[arg(long, help_heading = "Engine", value_delimiter = ',')]
    epsilon_c: Vec<f64>,
    #[arg(long, help_heading = "Engine", value_delimiter = ',')]
    zeta_c: Vec<f64>,
    #[arg(long, help_heading = "Engine", value_delimiter = ',')]
    tau_c: Vec<f64>,
    #[arg(long, help_heading = "Engine")]
    lambda_max: Option<f64>,
    #[arg(long, help_heading = "Engine")]
    delta_c: Option<f64>,
    #[arg(long, help_heading = "Engine")]
    theta_c: Option<f64>,
    #[arg(long, help_heading = "Engine")]
    newton_iters: Option<usize>,
    #[arg(long, help_heading = "Engine")]
    sanity_box: Option<f64>,
    /// derived or swapped.
    #[arg(long, help_heading = "Engine", value_parser = parse_assignment)]
    assignment: Option<PenaltyAssignment>,
}

#[derive(Args)]
struct MobilityArgs {
    #[arg(long, help_heading = "Mobility")]
    mean_speed: Option<f64>,
    #[arg(long, help_heading = "Mobility")]
    speed_std: Option<f64>,
    #[arg(long, help_heading = "Mobility")]
    max_speed: Option<f64>,
    #[arg(long, help_heading = "Mobility")]
    step_period: Option<f64>,
    #[arg(long, help_heading = "Mobility")]
    iterations_per_step: Option<usize>,
    #[arg(long, help_heading = "Mobility")]
    turn_probability: Option<f64>,
}

fn parse_placement(s: &str) -> Result<AnchorPlacement, String> {
    match s {
        "random" => Ok(AnchorPlacement::Random),
        "spread" => Ok(AnchorPlacement::Spread),
        _ => Err(format!("unknown anchor placement `{s}` (valid: random, spread)")),
    }
}

fn parse_assignment(s: &str) -> Result<PenaltyAssignment, String> {
    match s {
        "derived" => Ok(PenaltyAssignment::Derived),
        "swapped" => Ok(PenaltyAssignment::Swapped),
        _ => Err(format!("unknown penalty assignment `{s}` (valid: derived, swapped)")),
    }
}

fn single(values: &[f64], flag: &str) -> Result<Option<f64>> {
    match values {
        [] => Ok(None),
        [v] => Ok(Some(*v)),
        _ => bail!("--{flag} takes a single value outside `sweep`"),
    }
}

impl Common {
    /// Loads the scenario and applies every override except the sweepable engine lists.
    fn setup(&self) -> Result<Setup> {
        let mut s = config::load(&self.scenario)?;
        let sc = &mut s.scenario;
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        set!(sc.dim, self.dim);
        set!(sc.node_count, self.node_count);
        set!(sc.anchor_count, self.anchor_count);
        set!(sc.side, self.side);
        set!(sc.radius, self.radius);
        set!(sc.anchor_radius, self.anchor_radius);
        set!(sc.sigma, self.sigma);
        set!(sc.min_degree, self.min_degree);
        set!(sc.anchor_placement, self.anchor_placement);
        set!(sc.seed, self.seed);
        set!(sc.layout_per_seed, self.layout_per_seed);
        let e = &mut s.engine;
        set!(e.lambda_max, self.lambda_max);
        set!(e.delta_c, self.delta_c);
        set!(e.theta_c, self.theta_c);
        set!(e.newton_iters, self.newton_iters);
        set!(e.sanity_box, self.sanity_box);
        set!(e.assignment, self.assignment);
        set!(s.iterations, self.iterations);
        e.max_iterations = e.max_iterations.max(s.iterations);
        if self.deterministic {
            e.record_time = false;
        }
        if self.serial {
            e.parallel = false;
        }
        Ok(s)
    }

    /// Setup with single-valued engine overrides applied.
    fn resolved(&self) -> Result<Setup> {
        let mut s = self.setup()?;
        let e = &mut s.engine;
        if let Some(v) = single(&self.epsilon_c, "epsilon-c")? {
            e.epsilon_c = v;
        }
        if let Some(v) = single(&self.zeta_c, "zeta-c")? {
            e.zeta_c = v;
        }
        if let Some(v) = single(&self.tau_c, "tau-c")? {
            e.tau_c = v;
        }
        Ok(s)
    }

    fn seeds(&self, setup: &Setup) -> Result<Vec<u64>> {
        match &self.seeds {
            Some(s) => parse_seeds(s),
            None => Ok((0..setup.seeds as u64).collect()),
        }
    }

    fn spec(&self, setup: &Setup, algorithm: Algorithm) -> Result<ExperimentSpec> {
        let mut engine = setup.engine.clone();
        if let Some(v) = algorithm.variant() {
            engine.variant = v;
            for w in engine.warnings() {
                eprintln!("warning: {algorithm}: {w}");
            }
        }
        let spec = ExperimentSpec {
            scenario: setup.scenario.clone(),
            engine,
            algorithm,
            seeds: self.seeds(setup)?,
            iterations: setup.iterations,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Writes through a sibling temporary file so readers never see partial output.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let name = path.file_name().context("output path has no file name")?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

fn with_header(meta: &[(String, String)], body: &str) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    out + body
}

/// Row-wise mean of traces that share an iteration grid.
fn mean_trace(traces: &[RunTrace], algorithm: Algorithm) -> RunTrace {
    let mut mean = RunTrace::new(algorithm.name());
    if let Some(first) = traces.first() {
        mean.metadata = first.metadata.iter().filter(|(k, _)| k != "noise_seed" && k != "algorithm").cloned().collect();
    }
    mean.metadata.push(("seeds".into(), traces.len().to_string()));
    let len = traces.iter().map(|t| t.rows.len()).min().unwrap_or(0);
    let n = traces.len() as f64;
    for k in 0..len {
        let avg = |f: fn(&TraceRow) -> f64| traces.iter().map(|t| f(&t.rows[k])).sum::<f64>() / n;
        mean.push(TraceRow {
            iter: traces[0].rows[k].iter,
            rmse: avg(|r| r.rmse),
            max_gap: avg(|r| r.max_gap),
            mean_gap: avg(|r| r.mean_gap),
            nonconvex_frac: avg(|r| r.nonconvex_frac),
            messages: (avg(|r| r.messages as f64)).round() as usize,
            elapsed_ms: avg(|r| r.elapsed_ms),
        });
    }
    mean
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.6}"))
}

fn cmd_run(common: &Common, algs: &[Algorithm], threshold: Option<f64>, out: &Path) -> Result<()> {
    let setup = common.resolved()?;
    let mut means = Vec::new();
    let mut crlb = None;
    for &alg in algs {
        let spec = common.spec(&setup, alg)?;
        let result = run_static(&spec).with_context(|| format!("running {alg}"))?;
        for (trace, seed) in result.traces.iter().zip(&spec.seeds) {
            write_atomic(&out.join(format!("{alg}_seed{seed}.csv")), &trace.to_csv())?;
        }
        let mean = mean_trace(&result.traces, alg);
        write_atomic(&out.join(format!("{alg}_mean.csv")), &mean.to_csv())?;
        println!(
            "{alg}: final mean RMSE {} over {} seeds",
            fmt_opt(mean.final_rmse()),
            result.traces.len()
        );
        crlb = crlb.or(result.crlb);
        means.push(mean);
    }
    println!("CRLB (per-node RMSE bound, seed-averaged): {}", fmt_opt(crlb));
    let best = means.iter().filter_map(|m| m.final_rmse()).fold(f64::INFINITY, f64::min);
    let threshold = threshold.unwrap_or(best * (1.0 + PLATEAU_TOLERANCE));
    let rows = compare_runs(&means, threshold, crlb);
    let meta = vec![
        ("scenario".to_string(), setup.name.clone()),
        ("threshold".into(), threshold.to_string()),
        ("crlb".into(), crlb.map(|v| v.to_string()).unwrap_or_default()),
    ];
    write_atomic(&out.join("summary.csv"), &with_header(&meta, &summary_csv(&rows)))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_sweep(common: &Common, alg: Algorithm, out: &Path) -> Result<()> {
    let setup = common.setup()?;
    let pick = |values: &[f64], default: f64| if values.is_empty() { vec![default] } else { values.to_vec() };
    let grid = SweepGrid {
        epsilon_c: pick(&common.epsilon_c, setup.engine.epsilon_c),
        zeta_c: pick(&common.zeta_c, setup.engine.zeta_c),
        tau_c: pick(&common.tau_c, setup.engine.tau_c),
    };
    let spec = common.spec(&setup, alg)?;
    let cells = run_sweep(&spec, &grid)?;
    let mut meta = vec![("scenario".to_string(), setup.name.clone())];
    meta.extend(spec.describe().into_iter().filter(|(k, _)| !matches!(k.as_str(), "epsilon_c" | "zeta_c" | "tau_c")));
    meta.push(("seeds".into(), spec.seeds.len().to_string()));
    meta.push(("plateau_tolerance".into(), PLATEAU_TOLERANCE.to_string()));
    write_atomic(out, &with_header(&meta, &sweep_csv(&cells)))?;
    let best = cells
        .iter()
        .filter(|c| !c.failed)
        .min_by(|a, b| a.final_rmse.total_cmp(&b.final_rmse));
    match best {
        Some(c) => println!(
            "best cell: epsilon_c={} zeta_c={} tau_c={} final RMSE {:.6}, plateau at {}",
            c.epsilon_c, c.zeta_c, c.tau_c, c.final_rmse, c.iterations_to_plateau
        ),
        None => println!("every cell failed"),
    }
    println!("wrote {} ({} cells)", out.display(), cells.len());
    Ok(())
}

fn cmd_track(common: &Common, m: &MobilityArgs, algs: &[Algorithm], steps: usize, out: &Path) -> Result<()> {
    let mut setup = common.resolved()?;
    let mob = &mut setup.mobility;
    for (dst, src) in [
        (&mut mob.mean_speed, m.mean_speed),
        (&mut mob.speed_std, m.speed_std),
        (&mut mob.max_speed, m.max_speed),
        (&mut mob.step_period, m.step_period),
        (&mut mob.turn_probability, m.turn_probability),
    ] {
        if let Some(v) = src {
            *dst = v;
        }
    }
    if let Some(v) = m.iterations_per_step {
        mob.iterations_per_step = v;
    }
    mob.side = setup.scenario.side;
    if steps == 0 {
        bail!("--steps must be positive");
    }
    let seed = setup.scenario.seed;
    for &alg in algs {
        if alg.variant().is_none() {
            bail!("tracking needs an ADMM variant, got {alg}");
        }
        let mut spec = common.spec(&setup, alg)?;
        spec.seeds = vec![seed];
        let result = run_tracking(&spec, &setup.mobility, steps, seed).with_context(|| format!("tracking {alg}"))?;
        let mut meta = vec![("scenario".to_string(), setup.name.clone())];
        meta.extend(spec.describe());
        meta.push(("trajectory_seed".into(), seed.to_string()));
        meta.push(("mean_speed".into(), setup.mobility.mean_speed.to_string()));
        meta.push(("iterations_per_step".into(), setup.mobility.iterations_per_step.to_string()));
        write_atomic(&out.join(format!("{alg}_tracking.csv")), &with_header(&meta, &tracking_csv(&result)))?;
        let tail = &result[result.len() / 2..];
        let rmse = tail.iter().map(|s| s.rmse).sum::<f64>() / tail.len() as f64;
        let bounds: Vec<f64> = tail.iter().filter_map(|s| s.crlb).collect();
        let crlb = (!bounds.is_empty()).then(|| bounds.iter().sum::<f64>() / bounds.len() as f64);
        println!(
            "{alg}: steady-state RMSE {rmse:.6}, CRLB {} (mean over steps {}..{})",
            fmt_opt(crlb),
            tail[0].step,
            steps
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_gen_net(common: &Common, noise_seed: u64, out: &Path) -> Result<()> {
    let setup = common.resolved()?;
    setup.scenario.validate()?;
    let net = instance(&setup.scenario, noise_seed)?;
    write_atomic(out, &network_to_text(&net))?;
    let unknown = net.len() - net.anchors().len();
    let edges = net.edges().count();
    println!(
        "wrote {}: {} nodes ({} anchors, {unknown} unknown), {edges} edges, mean degree {:.2}",
        out.display(),
        net.len(),
        net.anchors().len(),
        2.0 * edges as f64 / net.len() as f64
    );
    Ok(())
}

fn cmd_crlb(common: &Common, network: Option<&Path>) -> Result<()> {
    let setup = common.resolved()?;
    let sigma = setup.scenario.sigma;
    if !(sigma > 0.0) {
        bail!("the bound needs sigma > 0 (got {sigma})");
    }
    let report = |label: &str, c: &Crlb| {
        println!("{label}: per_node={:.6} per_unknown={:.6}", c.per_node(), c.per_unknown());
    };
    if let Some(path) = network {
        let net = load_network(path).with_context(|| format!("loading {}", path.display()))?;
        report(&path.display().to_string(), &Crlb::compute(&net, sigma)?);
        return Ok(());
    }
    let mut sum = 0.0;
    let seeds = common.seeds(&setup)?;
    for &seed in &seeds {
        let c = Crlb::compute(&instance(&setup.scenario, seed)?, sigma).with_context(|| format!("seed {seed}"))?;
        report(&format!("seed {seed}"), &c);
        sum += c.per_node();
    }
    println!("mean per_node over {} seeds: {:.6}", seeds.len(), sum / seeds.len() as f64);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, alg, threshold, out } => cmd_run(&common, &alg, threshold, &out),
        Command::Sweep { common, alg, out } => cmd_sweep(&common, alg, &out),
        Command::Track { common, mobility, alg, steps, out } => cmd_track(&common, &mobility, &alg, steps, &out),
        Command::GenNet { common, noise_seed, out } => cmd_gen_net(&common, noise_seed, &out),
        Command::Crlb { common, network } => cmd_crlb(&common, network.as_deref()),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
