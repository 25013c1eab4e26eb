//! Synchronous distributed ADMM over the replica/splitting formulation.
//!
//! Node `i` keeps replicas `x_ii` (itself) and `x_ij` (each neighbor), and
//! splitting variables `z⁻_ij`, `z⁺_ij` that should equal `x_ii − x_ij` and
//! `x_ii + x_ij`. Coupling across an edge forces `z⁻_ij = −z⁻_ji` and
//! `z⁺_ij = z⁺_ji`. One round is
//!
//! 1. `y_i = (AᵢᵀAᵢ)⁻¹Aᵢᵀ(z_i − λ_i/c_i)` and the local x-update,
//! 2. exchange of `m⁻_ij = λ⁻_ij + c_i(x_ii − x_ij)`, `m⁺_ij = λ⁺_ij + c_i(x_ii + x_ij)`,
//! 3. `z⁻_ij = (m⁻_ij − m⁻_ji)/(c_i + c_j)`, `z⁺_ij = (m⁺_ij + m⁺_ji)/(c_i + c_j)`,
//! 4. clipped multiplier ascent,
//! 5. hybrid activation of the non-convex cost and penalty adaptation.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{rmse, RunTrace, TraceRow};
use crate::localsolver::{self, LocalProblem, LocalSolverOptions, NeighborTarget, PenaltyAssignment};
use crate::netmodel::{Network, Point};
use crate::objective::CostMode;

/// Which cost the nodes optimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdmmVariant {
    /// Convex envelope throughout (ADMM-SF).
    Relaxed,
    /// Original cost from the first round (ADMM-NC).
    NonConvex,
    /// Envelope first, original cost once a node's primal gap falls below `tau_c` (ADMM-H).
    Hybrid,
}

impl AdmmVariant {
    pub fn name(self) -> &'static str {
        match self {
            AdmmVariant::Relaxed => "admm-sf",
            AdmmVariant::NonConvex => "admm-nc",
            AdmmVariant::Hybrid => "admm-h",
        }
    }

    fn initial_mode(self) -> CostMode {
        match self {
            AdmmVariant::NonConvex => CostMode::NonConvex,
            AdmmVariant::Relaxed | AdmmVariant::Hybrid => CostMode::Convex,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Penalty used while a node runs the convex envelope.
    pub epsilon_c: f64,
    /// Initial penalty once a node runs the original cost.
    pub zeta_c: f64,
    /// Primal-gap threshold that activates the original cost.
    pub tau_c: f64,
    /// Multiplier clipping bound.
    pub lambda_max: f64,
    /// Penalty growth factor (> 1).
    pub delta_c: f64,
    /// Required gap contraction per round (in (0, 1)).
    pub theta_c: f64,
    pub max_iterations: usize,
    /// Newton iterations per local solve.
    pub newton_iters: usize,
    pub variant: AdmmVariant,
    #[serde(default)]
    pub assignment: PenaltyAssignment,
    /// Any estimate coordinate beyond this magnitude aborts the run.
    pub sanity_box: f64,
    pub parallel: bool,
    /// Record wall-clock time per round; disable for byte-reproducible traces.
    pub record_time: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            epsilon_c: 0.05,
            zeta_c: 0.1,
            tau_c: 0.01,
            lambda_max: 1e3,
            delta_c: 1.01,
            theta_c: 0.98,
            max_iterations: 200,
            newton_iters: 3,
            variant: AdmmVariant::Hybrid,
            assignment: PenaltyAssignment::Derived,
            sanity_box: 10.0,
            parallel: true,
            record_time: true,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.epsilon_c > 0.0 && self.zeta_c > 0.0) {
            return bad("epsilon_c and zeta_c must be positive");
        }
        if !(self.delta_c > 1.0) {
            return bad("delta_c must exceed 1");
        }
        if !(self.theta_c > 0.0 && self.theta_c < 1.0) {
            return bad("theta_c must lie in (0, 1)");
        }
        if !(self.tau_c >= 0.0) {
            return bad("tau_c must be non-negative");
        }
        if !(self.lambda_max > 0.0) {
            return bad("lambda_max must be positive");
        }
        if self.newton_iters == 0 {
            return bad("newton_iters must be at least 1");
        }
        if !(self.sanity_box > 0.0) {
            return bad("sanity_box must be positive");
        }
        Ok(())
    }

    /// Non-fatal parameter concerns.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.variant == AdmmVariant::Hybrid && self.zeta_c < 2.0 * self.epsilon_c {
            out.push(format!(
                "zeta_c ({}) should be well above epsilon_c ({})",
                self.zeta_c, self.epsilon_c
            ));
        }
        out
    }

    fn initial_penalty(&self, mode: CostMode) -> f64 {
        match mode {
            CostMode::Convex => self.epsilon_c,
            CostMode::NonConvex => self.zeta_c,
        }
    }

    /// `key=value` pairs for trace headers.
    pub fn describe(&self) -> Vec<(String, String)> {
        vec![
            ("epsilon_c".into(), self.epsilon_c.to_string()),
            ("zeta_c".into(), self.zeta_c.to_string()),
            ("tau_c".into(), self.tau_c.to_string()),
            ("lambda_max".into(), self.lambda_max.to_string()),
            ("delta_c".into(), self.delta_c.to_string()),
            ("theta_c".into(), self.theta_c.to_string()),
            ("newton_iters".into(), self.newton_iters.to_string()),
            ("penalty_assignment".into(), format!("{:?}", self.assignment)),
        ]
    }
}

/// Everything node `i` stores between rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub own: Point,
    /// `x_ij`, aligned with the network's neighbor list.
    pub replicas: Vec<Point>,
    pub z_minus: Vec<Point>,
    pub z_plus: Vec<Point>,
    pub lambda_minus: Vec<Point>,
    pub lambda_plus: Vec<Point>,
    pub penalty: f64,
    pub mode: CostMode,
    pub prev_gap: f64,
    pub increase_flag: bool,
    /// The node's primal gap has been non-zero at least once, i.e. information
    /// from the rest of the network has reached it.
    pub engaged: bool,
    /// Last computed `‖A_i x_i − z_i‖_∞`.
    pub gap: f64,
    /// The gap of the round before, in either mode.
    pub last_gap: f64,
}

impl NodeState {
    fn new(degree: usize, own: Point, penalty: f64, mode: CostMode) -> Self {
        Self {
            own,
            replicas: vec![Point::zeros(); degree],
            z_minus: vec![Point::zeros(); degree],
            z_plus: vec![Point::zeros(); degree],
            lambda_minus: vec![Point::zeros(); degree],
            lambda_plus: vec![Point::zeros(); degree],
            penalty,
            mode,
            prev_gap: f64::INFINITY,
            increase_flag: false,
            engaged: false,
            gap: f64::INFINITY,
            last_gap: f64::INFINITY,
        }
    }

    /// `‖A_i x_i − z_i‖_∞` over the first `dim` coordinates.
    pub fn primal_gap(&self, dim: usize) -> f64 {
        let mut gap: f64 = 0.0;
        for k in 0..self.replicas.len() {
            let dm = self.own - self.replicas[k] - self.z_minus[k];
            let dp = self.own + self.replicas[k] - self.z_plus[k];
            for c in 0..dim {
                gap = gap.max(dm[c].abs()).max(dp[c].abs());
            }
        }
        gap
    }

    /// `(y_ii, [y_ij])`, the least-squares solution of `A_i y = z_i − λ_i/c_i`.
    pub fn targets(&self) -> (Point, Vec<Point>) {
        let c = self.penalty;
        let degree = self.replicas.len();
        let mut own = Point::zeros();
        let mut nb = Vec::with_capacity(degree);
        for k in 0..degree {
            own += (self.z_minus[k] + self.z_plus[k]) - (self.lambda_minus[k] + self.lambda_plus[k]) / c;
            nb.push(((self.z_plus[k] - self.z_minus[k]) - (self.lambda_plus[k] - self.lambda_minus[k]) / c) * 0.5);
        }
        if degree > 0 {
            own /= 2.0 * degree as f64;
        }
        (own, nb)
    }

    /// Outgoing payload for the `k`-th neighbor.
    pub fn message(&self, k: usize) -> EdgeMessage {
        let c = self.penalty;
        EdgeMessage {
            minus: self.lambda_minus[k] + (self.own - self.replicas[k]) * c,
            plus: self.lambda_plus[k] + (self.own + self.replicas[k]) * c,
            penalty: c,
            increase_flag: self.increase_flag,
        }
    }

    /// `λ ← clip(λ + c(A x − z))`.
    pub fn update_multipliers(&mut self, lambda_max: f64) {
        let c = self.penalty;
        for k in 0..self.replicas.len() {
            let rm = self.own - self.replicas[k] - self.z_minus[k];
            let rp = self.own + self.replicas[k] - self.z_plus[k];
            self.lambda_minus[k] = (self.lambda_minus[k] + rm * c).map(|v| v.clamp(-lambda_max, lambda_max));
            self.lambda_plus[k] = (self.lambda_plus[k] + rp * c).map(|v| v.clamp(-lambda_max, lambda_max));
        }
    }

    /// One-way switch to the original cost once the gap is below `tau_c` and
    /// no longer growing. Returns whether the node switched.
    pub fn hybrid_switch(&mut self, tau_c: f64, zeta_c: f64) -> bool {
        if self.mode == CostMode::Convex && self.engaged && self.gap < tau_c && self.gap <= self.last_gap {
            self.mode = CostMode::NonConvex;
            self.penalty = zeta_c;
            self.prev_gap = f64::INFINITY;
            self.increase_flag = false;
            true
        } else {
            false
        }
    }

    /// Penalty growth when the gap does not contract by `theta_c` or a
    /// neighbor raised its penalty in the previous round. No-op for the envelope.
    pub fn penalty_update(&mut self, neighbor_raised: bool, delta_c: f64, theta_c: f64) {
        if self.mode == CostMode::Convex {
            return;
        }
        if self.gap > theta_c * self.prev_gap || neighbor_raised {
            self.penalty *= delta_c;
            self.increase_flag = true;
        } else {
            self.increase_flag = false;
        }
        self.prev_gap = self.gap;
    }
}

/// Payload of node `i` for neighbor `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeMessage {
    pub minus: Point,
    pub plus: Point,
    pub penalty: f64,
    pub increase_flag: bool,
}

/// `(z⁻_ij, z⁺_ij)` from the two messages crossing edge `(i, j)`.
#[inline]
pub fn edge_splitting(own: &EdgeMessage, other: &EdgeMessage) -> (Point, Point) {
    let sum = own.penalty + other.penalty;
    ((own.minus - other.minus) / sum, (own.plus + other.plus) / sum)
}

/// The distributed engine: owns the network and all node states.
#[derive(Debug, Clone)]
pub struct Engine {
    net: Network,
    cfg: EngineConfig,
    nodes: Vec<NodeState>,
    /// `reverse[i][k]` is the slot of `i` in the neighbor list of `neighbors(i)[k]`.
    reverse: Vec<Vec<usize>>,
    iteration: usize,
    elapsed_ms: f64,
}

impl Engine {
    /// Cold start: every non-anchor estimate at the origin.
    pub fn new(net: Network, cfg: EngineConfig) -> Result<Self> {
        cfg.validate()?;
        let mode = cfg.variant.initial_mode();
        let nodes = (0..net.len())
            .map(|i| {
                let own = net.anchor_position(i).unwrap_or_else(Point::zeros);
                let mut st = NodeState::new(net.degree(i), own, cfg.initial_penalty(mode), mode);
                for (k, &j) in net.neighbors(i).iter().enumerate() {
                    if let Some(a) = net.anchor_position(j) {
                        st.replicas[k] = a;
                    }
                }
                st
            })
            .collect();
        Ok(Self::assemble(net, cfg, nodes))
    }

    /// Warm start from previous estimates: replicas and splitting variables
    /// are made consistent with `estimates`, multipliers start at zero.
    /// `modes` (one per node) carries over which nodes already run the
    /// original cost; penalties restart from the mode's initial value.
    pub fn warm_start(net: Network, cfg: EngineConfig, estimates: &[Point], modes: Option<&[CostMode]>) -> Result<Self> {
        cfg.validate()?;
        if estimates.len() != net.len() {
            return Err(Error::SizeMismatch(estimates.len(), net.len()));
        }
        let est: Vec<Point> = (0..net.len())
            .map(|i| net.anchor_position(i).unwrap_or(estimates[i]))
            .collect();
        let nodes = (0..net.len())
            .map(|i| {
                let mode = match (cfg.variant, modes) {
                    (AdmmVariant::Hybrid, Some(m)) => m[i],
                    (v, _) => v.initial_mode(),
                };
                let mut st = NodeState::new(net.degree(i), est[i], cfg.initial_penalty(mode), mode);
                st.engaged = true;
                for (k, &j) in net.neighbors(i).iter().enumerate() {
                    st.replicas[k] = est[j];
                    st.z_minus[k] = est[i] - est[j];
                    st.z_plus[k] = est[i] + est[j];
                }
                st
            })
            .collect();
        Ok(Self::assemble(net, cfg, nodes))
    }

    fn assemble(net: Network, cfg: EngineConfig, nodes: Vec<NodeState>) -> Self {
        let reverse = (0..net.len())
            .map(|i| {
                net.neighbors(i)
                    .iter()
                    .map(|&j| net.neighbors(j).binary_search(&i).expect("symmetric adjacency"))
                    .collect()
            })
            .collect();
        Self {
            net,
            cfg,
            nodes,
            reverse,
            iteration: 0,
            elapsed_ms: 0.0,
        }
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Current `x_ii` of every node.
    pub fn estimates(&self) -> Vec<Point> {
        self.nodes.iter().map(|n| n.own).collect()
    }

    pub fn modes(&self) -> Vec<CostMode> {
        self.nodes.iter().map(|n| n.mode).collect()
    }

    pub fn nonconvex_fraction(&self) -> f64 {
        let nc = self.nodes.iter().filter(|n| n.mode == CostMode::NonConvex).count();
        nc as f64 / self.nodes.len().max(1) as f64
    }

    /// Moves node `i` to the original cost now, as the hybrid rule would.
    /// Returns `false` when it already runs the original cost.
    pub fn activate_nonconvex(&mut self, i: usize) -> bool {
        let zeta_c = self.cfg.zeta_c;
        let st = &mut self.nodes[i];
        if st.mode == CostMode::NonConvex {
            return false;
        }
        st.mode = CostMode::NonConvex;
        st.penalty = zeta_c;
        st.prev_gap = f64::INFINITY;
        st.increase_flag = false;
        true
    }

    /// Local problem of node `i` in the current state.
    pub fn local_problem(&self, i: usize) -> LocalProblem {
        build_problem(&self.net, i, &self.nodes[i])
    }

    /// All messages of the current state, indexed `[sender][slot]`.
    pub fn messages(&self) -> Vec<Vec<EdgeMessage>> {
        self.nodes
            .iter()
            .map(|st| (0..st.replicas.len()).map(|k| st.message(k)).collect())
            .collect()
    }

    fn for_each_node(&mut self, f: impl Fn(usize, &mut NodeState) + Sync + Send) {
        if self.cfg.parallel {
            self.nodes.par_iter_mut().enumerate().for_each(|(i, st)| f(i, st));
        } else {
            self.nodes.iter_mut().enumerate().for_each(|(i, st)| f(i, st));
        }
    }

    /// The x-update of every node.
    pub fn x_update(&mut self) -> Result<()> {
        let opts = LocalSolverOptions {
            max_newton_iters: self.cfg.newton_iters,
            assignment: self.cfg.assignment,
            ..LocalSolverOptions::default()
        };
        let net = &self.net;
        let solve = |i: usize, st: &NodeState| localsolver::solve(&build_problem(net, i, st), &opts);
        let solutions: Vec<_> = if self.cfg.parallel {
            self.nodes.par_iter().enumerate().map(|(i, st)| solve(i, st)).collect()
        } else {
            self.nodes.iter().enumerate().map(|(i, st)| solve(i, st)).collect()
        };
        for (st, sol) in self.nodes.iter_mut().zip(solutions) {
            let sol = sol?;
            st.own = sol.own;
            st.replicas = sol.replicas;
        }
        Ok(())
    }

    /// Exchanges messages and solves the z-block on the coupling space.
    pub fn z_update(&mut self) -> Result<Vec<Vec<EdgeMessage>>> {
        let msgs = self.messages();
        let net = &self.net;
        let reverse = &self.reverse;
        let m = &msgs;
        let apply = move |i: usize, st: &mut NodeState| {
            for (k, &j) in net.neighbors(i).iter().enumerate() {
                let (zm, zp) = edge_splitting(&m[i][k], &m[j][reverse[i][k]]);
                st.z_minus[k] = zm;
                st.z_plus[k] = zp;
            }
        };
        for (i, list) in msgs.iter().enumerate() {
            if list.len() != net.degree(i) {
                return Err(Error::Protocol(format!("node {i} sent {} messages for {} neighbors", list.len(), net.degree(i))));
            }
        }
        if self.cfg.parallel {
            self.nodes.par_iter_mut().enumerate().for_each(|(i, st)| apply(i, st));
        } else {
            self.nodes.iter_mut().enumerate().for_each(|(i, st)| apply(i, st));
        }
        Ok(msgs)
    }

    /// One synchronous round.
    pub fn iterate(&mut self) -> Result<TraceRow> {
        let start = Instant::now();
        self.iteration += 1;
        self.x_update()?;
        let msgs = self.z_update()?;

        let dim = self.net.dim();
        let cfg = self.cfg.clone();
        self.for_each_node(|_, st| {
            st.update_multipliers(cfg.lambda_max);
            st.last_gap = st.gap;
            st.gap = st.primal_gap(dim);
            st.engaged |= st.gap > 0.0;
        });
        let hybrid = cfg.variant == AdmmVariant::Hybrid;
        let net = &self.net;
        let reverse = &self.reverse;
        let m = &msgs;
        let step = |i: usize, st: &mut NodeState| {
            if hybrid && st.hybrid_switch(cfg.tau_c, cfg.zeta_c) {
                return;
            }
            let raised = net
                .neighbors(i)
                .iter()
                .enumerate()
                .any(|(k, &j)| m[j][reverse[i][k]].increase_flag);
            st.penalty_update(raised, cfg.delta_c, cfg.theta_c);
        };
        if cfg.parallel {
            self.nodes.par_iter_mut().enumerate().for_each(|(i, st)| step(i, st));
        } else {
            self.nodes.iter_mut().enumerate().for_each(|(i, st)| step(i, st));
        }

        for (i, st) in self.nodes.iter().enumerate() {
            let magnitude = st.own.amax();
            if !(magnitude <= cfg.sanity_box) {
                return Err(Error::Diverged {
                    node: i,
                    iteration: self.iteration,
                    magnitude,
                });
            }
        }

        if cfg.record_time {
            self.elapsed_ms += start.elapsed().as_secs_f64() * 1e3;
        }
        let gaps: Vec<f64> = self.nodes.iter().map(|n| n.gap).collect();
        Ok(TraceRow {
            iter: self.iteration,
            rmse: rmse(&self.estimates(), self.net.positions())?,
            max_gap: gaps.iter().cloned().fold(0.0, f64::max),
            mean_gap: gaps.iter().sum::<f64>() / gaps.len().max(1) as f64,
            nonconvex_frac: self.nonconvex_fraction(),
            messages: 2 * self.net.edge_count(),
            elapsed_ms: self.elapsed_ms,
        })
    }

    /// Runs `iterations` rounds and collects them into a trace.
    pub fn run(&mut self, iterations: usize) -> Result<RunTrace> {
        let mut trace = RunTrace::new(self.cfg.variant.name());
        trace.metadata = self.cfg.describe();
        for _ in 0..iterations {
            let row = self.iterate()?;
            trace.push(row);
        }
        trace.final_estimates = self.estimates();
        Ok(trace)
    }
}

fn build_problem(net: &Network, i: usize, st: &NodeState) -> LocalProblem {
    let (own_target, targets) = st.targets();
    LocalProblem {
        node: i,
        dim: net.dim(),
        anchor: net.anchor_position(i),
        own_target,
        neighbors: net
            .neighbors(i)
            .iter()
            .zip(net.rangings(i))
            .zip(targets)
            .map(|((&j, &r), target)| NeighborTarget {
                target,
                ranging: r,
                anchor: net.anchor_position(j),
            })
            .collect(),
        penalty: st.penalty,
        mode: st.mode,
    }
}
