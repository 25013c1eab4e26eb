//! Ground-truth networks, ranging measurements and node mobility.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A position in the deployment area. 2-D networks keep `z == 0`.
pub type Point = Vector3<f64>;

/// A deployed network: true positions, anchors, adjacency and rangings.
///
/// Neighbor lists are sorted by id and `rangings[i][k]` is the measurement
/// between `i` and `neighbors[i][k]`. Both directions of an edge always
/// carry the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    dim: usize,
    positions: Vec<Point>,
    is_anchor: Vec<bool>,
    anchors: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
    rangings: Vec<Vec<f64>>,
}

impl Network {
    /// Builds a network from an unordered edge list `(i, j, r_ij)`.
    ///
    /// Each pair may appear once in either orientation; a pair listed in both
    /// orientations must carry the same ranging.
    pub fn new(
        dim: usize,
        positions: Vec<Point>,
        anchors: Vec<usize>,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let n = positions.len();
        let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, r) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidNetwork(format!("edge ({i}, {j}) references unknown node")));
            }
            if i == j {
                return Err(Error::InvalidNetwork(format!("self loop on node {i}")));
            }
            match neighbors[i].iter().find(|(k, _)| *k == j) {
                Some(&(_, existing)) if existing == r => continue,
                Some(&(_, existing)) => {
                    return Err(Error::InvalidNetwork(format!(
                        "asymmetric ranging between {i} and {j}: {existing} vs {r}"
                    )))
                }
                None => {}
            }
            neighbors[i].push((j, r));
            neighbors[j].push((i, r));
        }
        let mut nbr_ids = Vec::with_capacity(n);
        let mut nbr_r = Vec::with_capacity(n);
        for mut list in neighbors {
            list.sort_by_key(|(k, _)| *k);
            nbr_ids.push(list.iter().map(|(k, _)| *k).collect());
            nbr_r.push(list.iter().map(|(_, r)| *r).collect());
        }
        Self::from_parts(dim, positions, anchors, nbr_ids, nbr_r)
    }

    fn from_parts(
        dim: usize,
        positions: Vec<Point>,
        mut anchors: Vec<usize>,
        neighbors: Vec<Vec<usize>>,
        rangings: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidNetwork(format!("dimension must be 2 or 3, got {dim}")));
        }
        let n = positions.len();
        for (i, p) in positions.iter().enumerate() {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite(format!("position of node {i}")));
            }
            if dim == 2 && p.z != 0.0 {
                return Err(Error::InvalidNetwork(format!("node {i} has a z coordinate in a 2-D network")));
            }
        }
        anchors.sort_unstable();
        anchors.dedup();
        let mut is_anchor = vec![false; n];
        for &a in &anchors {
            if a >= n {
                return Err(Error::InvalidNetwork(format!("anchor {a} is not a node")));
            }
            is_anchor[a] = true;
        }
        for (i, (list, rs)) in neighbors.iter().zip(&rangings).enumerate() {
            if list.is_empty() {
                return Err(Error::IsolatedNode(i));
            }
            for (&j, &r) in list.iter().zip(rs) {
                if !(r.is_finite() && r >= 0.0) {
                    return Err(Error::InvalidNetwork(format!("ranging ({i}, {j}) = {r} is not a finite non-negative value")));
                }
            }
        }
        Ok(Self {
            dim,
            positions,
            is_anchor,
            anchors,
            neighbors,
            rangings,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> Point {
        self.positions[i]
    }

    pub fn is_anchor(&self, i: usize) -> bool {
        self.is_anchor[i]
    }

    /// Sorted anchor ids.
    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Rangings aligned with [`Network::neighbors`].
    pub fn rangings(&self, i: usize) -> &[f64] {
        &self.rangings[i]
    }

    pub fn ranging(&self, i: usize, j: usize) -> Option<f64> {
        self.neighbors[i].binary_search(&j).ok().map(|k| self.rangings[i][k])
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Unordered edges as `(i, j, r_ij)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.neighbors.iter().enumerate().flat_map(move |(i, list)| {
            list.iter()
                .zip(&self.rangings[i])
                .filter(move |(&j, _)| i < j)
                .map(move |(&j, &r)| (i, j, r))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Position of node `i` where it is known a priori, i.e. for anchors.
    pub fn anchor_position(&self, i: usize) -> Option<Point> {
        self.is_anchor[i].then(|| self.positions[i])
    }

    /// Same network with every ranging replaced by `f(i, j, old)` (called once per unordered pair).
    pub fn map_rangings(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<Self> {
        let edges: Vec<_> = self.edges().map(|(i, j, r)| (i, j, f(i, j, r))).collect();
        Self::new(self.dim, self.positions.clone(), self.anchors.clone(), &edges)
    }
}

/// Geometry and noise of a synthetic deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub dim: usize,
    pub node_count: usize,
    pub anchor_count: usize,
    /// Side of the square (or cubic) deployment area.
    pub side: f64,
    /// Communication radius between two ordinary nodes.
    pub radius: f64,
    /// Radius used when at least one end of the link is an anchor.
    pub anchor_radius: f64,
    /// Ranging noise standard deviation.
    pub sigma: f64,
    /// Nodes with fewer links are connected to their nearest nodes until this many.
    #[serde(default)]
    pub min_degree: usize,
    #[serde(default)]
    pub anchor_placement: AnchorPlacement,
    /// Seed of the node layout.
    pub seed: u64,
    /// Multi-run experiments draw a fresh layout per run (seed `seed + run`)
    /// instead of reusing one layout with fresh noise.
    #[serde(default)]
    pub layout_per_seed: bool,
}

/// How the anchors are chosen among the uniformly placed nodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorPlacement {
    /// The first `anchor_count` nodes drawn.
    #[default]
    Random,
    /// Farthest-point sampling: start from the node farthest from the center,
    /// then repeatedly take the node farthest from every anchor chosen so far.
    Spread,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.dim == 2 || self.dim == 3) {
            return fail(format!("dim must be 2 or 3, got {}", self.dim));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return fail(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if !(self.radius > 0.0 && self.anchor_radius > 0.0) {
            return fail("communication radii must be positive".into());
        }
        if !(self.side > 0.0) {
            return fail("area side must be positive".into());
        }
        if self.anchor_count > self.node_count {
            return fail(format!(
                "anchor_count {} exceeds node_count {}",
                self.anchor_count, self.node_count
            ));
        }
        if self.node_count < 2 {
            return fail("need at least two nodes".into());
        }
        Ok(())
    }
}

/// Node placement and anchor selection, before any ranging is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub dim: usize,
    pub positions: Vec<Point>,
    pub anchors: Vec<usize>,
}

impl Layout {
    /// Uniform placement in the area `[−side/2, side/2]^dim` centered on the
    /// origin; the first `anchor_count` nodes are anchors.
    pub fn random<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let mut positions = (0..cfg.node_count)
            .map(|_| {
                let mut p = Point::zeros();
                for k in 0..cfg.dim {
                    p[k] = (rng.random::<f64>() - 0.5) * cfg.side;
                }
                p
            })
            .collect::<Vec<Point>>();
        if cfg.anchor_placement == AnchorPlacement::Spread {
            spread_anchors_first(&mut positions, cfg.anchor_count);
        }
        Ok(Self {
            dim: cfg.dim,
            positions,
            anchors: (0..cfg.anchor_count).collect(),
        })
    }

    /// Links between nodes within range, then nearest-node links for any node
    /// below `min_degree`. Returns sorted `(i, j)` pairs with `i < j` and the
    /// number of nodes whose radius had to be extended.
    pub fn links(&self, radius: f64, anchor_radius: f64, min_degree: usize) -> (Vec<(usize, usize)>, usize) {
        let n = self.positions.len();
        let mut is_anchor = vec![false; n];
        for &a in &self.anchors {
            is_anchor[a] = true;
        }
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                let range = if is_anchor[i] || is_anchor[j] { anchor_radius } else { radius };
                if (self.positions[i] - self.positions[j]).norm() <= range {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        let mut extended = 0;
        let wanted = min_degree.min(n.saturating_sub(1));
        for i in 0..n {
            if adj[i].len() >= wanted {
                continue;
            }
            extended += 1;
            let mut by_distance: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            by_distance.sort_by(|&a, &b| {
                let da = (self.positions[a] - self.positions[i]).norm();
                let db = (self.positions[b] - self.positions[i]).norm();
                da.total_cmp(&db).then(a.cmp(&b))
            });
            for j in by_distance {
                if adj[i].len() >= wanted {
                    break;
                }
                if !adj[i].contains(&j) {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        let mut pairs: Vec<(usize, usize)> = adj
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| i < j).map(move |&j| (i, j)))
            .collect();
        pairs.sort_unstable();
        (pairs, extended)
    }

    /// Draws one ranging per unordered link: `max(0, d_ij + w)` with `w ~ N(0, sigma^2)`.
    pub fn measure<R: Rng + ?Sized>(&self, links: &[(usize, usize)], sigma: f64, rng: &mut R) -> Result<Network> {
        let edges: Vec<_> = links
            .iter()
            .map(|&(i, j)| {
                let d = (self.positions[i] - self.positions[j]).norm();
                (i, j, noisy_range(d, sigma, rng))
            })
            .collect();
        Network::new(self.dim, self.positions.clone(), self.anchors.clone(), &edges)
    }
}

/// A single noisy range draw, clipped at zero.
pub fn noisy_range<R: Rng + ?Sized>(distance: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return distance;
    }
    let w: f64 = rng.sample(StandardNormal);
    (distance + sigma * w).max(0.0)
}

/// Places nodes, links them and draws rangings, all from `rng`.
///
/// Fails with [`Error::IsolatedNode`] when some node ends up without links.
pub fn generate_network<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Network> {
    let layout = Layout::random(cfg, rng)?;
    let (links, _) = layout.links(cfg.radius, cfg.anchor_radius, cfg.min_degree);
    layout.measure(&links, cfg.sigma, rng)
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

/// Serializes a network in the line-oriented text format:
///
/// ```text
/// dim <n> <N> <|A|>
/// node <id> <coords...>
/// anchor <id>
/// edge <i> <j> <r_ij>
/// ```
///
/// Edge lines are directed adjacency entries; both directions are written.
pub fn network_to_text(net: &Network) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dim {} {} {}", net.dim, net.len(), net.anchors.len());
    for (i, p) in net.positions.iter().enumerate() {
        let _ = write!(out, "node {i}");
        for k in 0..net.dim {
            let _ = write!(out, " {}", p[k]);
        }
        out.push('\n');
    }
    for a in &net.anchors {
        let _ = writeln!(out, "anchor {a}");
    }
    for i in 0..net.len() {
        for (j, r) in net.neighbors[i].iter().zip(&net.rangings[i]) {
            let _ = writeln!(out, "edge {i} {j} {r}");
        }
    }
    out
}

/// Parses the text format written by [`network_to_text`]. Blank lines and
/// lines starting with `#` are ignored.
pub fn network_from_text(text: &str) -> Result<Network> {
    let perr = |line: usize, msg: String| Error::Parse { line, msg };
    let mut header: Option<(usize, usize, usize)> = None;
    let mut positions: Vec<Option<Point>> = Vec::new();
    let mut anchors = Vec::new();
    let mut directed: Vec<(usize, usize, f64, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tok = line.split_whitespace();
        let kind = tok.next().unwrap_or_default();
        let fields: Vec<&str> = tok.collect();
        let int = |s: &str| s.parse::<usize>().map_err(|e| perr(line_no, format!("bad integer {s:?}: {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| perr(line_no, format!("bad number {s:?}: {e}")));

        if kind == "dim" {
            if header.is_some() {
                return Err(perr(line_no, "duplicate header".into()));
            }
            if fields.len() != 3 {
                return Err(perr(line_no, "header must be `dim <n> <N> <|A|>`".into()));
            }
            let h = (int(fields[0])?, int(fields[1])?, int(fields[2])?);
            if !(h.0 == 2 || h.0 == 3) {
                return Err(perr(line_no, format!("dimension must be 2 or 3, got {}", h.0)));
            }
            positions = vec![None; h.1];
            header = Some(h);
            continue;
        }
        let Some((dim, count, _)) = header else {
            return Err(perr(line_no, "expected `dim` header first".into()));
        };
        match kind {
            "node" => {
                if fields.len() != 1 + dim {
                    return Err(perr(line_no, format!("node line needs an id and {dim} coordinates")));
                }
                let id = int(fields[0])?;
                if id >= count {
                    return Err(perr(line_no, format!("node id {id} out of range (N = {count})")));
                }
                if positions[id].is_some() {
                    return Err(perr(line_no, format!("duplicate node {id}")));
                }
                let mut p = Point::zeros();
                for k in 0..dim {
                    p[k] = real(fields[1 + k])?;
                }
                positions[id] = Some(p);
            }
            "anchor" => {
                if fields.len() != 1 {
                    return Err(perr(line_no, "anchor line needs exactly one id".into()));
                }
                let id = int(fields[0])?;
                if id >= count {
                    return Err(perr(line_no, format!("anchor id {id} out of range")));
                }
                if anchors.contains(&id) {
                    return Err(perr(line_no, format!("duplicate anchor {id}")));
                }
                anchors.push(id);
            }
            "edge" => {
                if fields.len() != 3 {
                    return Err(perr(line_no, "edge line needs `<i> <j> <r>`".into()));
                }
                let (i, j, r) = (int(fields[0])?, int(fields[1])?, real(fields[2])?);
                if i >= count || j >= count {
                    return Err(perr(line_no, format!("edge ({i}, {j}) references unknown node")));
                }
                directed.push((i, j, r, line_no));
            }
            other => return Err(perr(line_no, format!("unknown record {other:?}"))),
        }
    }

    let (dim, _, anchor_count) = header.ok_or_else(|| perr(0, "missing `dim` header".into()))?;
    let positions: Vec<Point> = positions
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| perr(0, format!("node {i} has no position"))))
        .collect::<Result<_>>()?;
    if anchors.len() != anchor_count {
        return Err(perr(0, format!("header announces {anchor_count} anchors, found {}", anchors.len())));
    }

    // Every directed entry needs its reverse with the same ranging.
    let mut sorted: Vec<(usize, usize, f64, usize)> = directed.clone();
    sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    for w in sorted.windows(2) {
        if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
            return Err(perr(w[1].3, format!("duplicate edge {} -> {}", w[1].0, w[1].1)));
        }
    }
    let lookup = |i: usize, j: usize| {
        sorted
            .binary_search_by(|e| (e.0, e.1).cmp(&(i, j)))
            .ok()
            .map(|k| sorted[k])
    };
    let mut edges = Vec::new();
    for &(i, j, r, line) in &directed {
        match lookup(j, i) {
            None => return Err(perr(line, format!("asymmetric adjacency: {j} is a neighbor of {i} but not vice versa"))),
            Some((_, _, back, _)) if back != r => {
                return Err(perr(line, format!("asymmetric ranging between {i} and {j}: {r} vs {back}")))
            }
            Some(_) => {
                if i < j {
                    edges.push((i, j, r));
                }
            }
        }
    }
    Network::new(dim, positions, anchors, &edges)
}

pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, network_to_text(net))?;
    Ok(())
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    network_from_text(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Mobility
// ---------------------------------------------------------------------------

/// Random-direction mobility. Speeds are in area units per second
/// (m/s when the area side is in meters); see [`kmh`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityConfig {
    pub side: f64,
    pub mean_speed: f64,
    pub speed_std: f64,
    pub max_speed: f64,
    /// Seconds between two localization steps.
    pub step_period: f64,
    /// Solver rounds run per step.
    pub iterations_per_step: usize,
    /// Probability that a node draws a new heading at a given step.
    pub turn_probability: f64,
}

/// Converts km/h to m/s.
pub fn kmh(v: f64) -> f64 {
    v / 3.6
}

impl MobilityConfig {
    /// Pedestrian motion on a 100 m square: 5 km/h mean, 3.33 km/h std, 15 km/h cap,
    /// one step per second, 20 solver rounds per step.
    pub fn pedestrian() -> Self {
        Self {
            side: 100.0,
            mean_speed: kmh(5.0),
            speed_std: kmh(3.33),
            max_speed: kmh(15.0),
            step_period: 1.0,
            iterations_per_step: 20,
            turn_probability: 0.1,
        }
    }

    /// A configuration where nothing moves.
    pub fn frozen(side: f64) -> Self {
        Self {
            side,
            mean_speed: 0.0,
            speed_std: 0.0,
            max_speed: 0.0,
            step_period: 1.0,
            iterations_per_step: 20,
            turn_probability: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let frozen = self.mean_speed == 0.0 && self.speed_std == 0.0;
        if !(self.step_period > 0.0) {
            return Err(Error::Config("step period must be positive".into()));
        }
        if !frozen && !(self.mean_speed > 0.0 && self.mean_speed <= self.max_speed) {
            return Err(Error::Config("need 0 < mean speed <= max speed".into()));
        }
        if !(self.speed_std >= 0.0) || !(0.0..=1.0).contains(&self.turn_probability) {
            return Err(Error::Config("speed std must be >= 0 and turn probability in [0, 1]".into()));
        }
        if !(self.side > 0.0) {
            return Err(Error::Config("area side must be positive".into()));
        }
        Ok(())
    }
}

/// A moving deployment: current geometry plus each node's heading.
#[derive(Debug, Clone)]
pub struct MobileNetwork {
    scenario: ScenarioConfig,
    layout: Layout,
    headings: Vec<Point>,
    network: Network,
    /// Nodes whose radius was extended to reach the minimum degree at the last step.
    pub extended_nodes: usize,
}

impl MobileNetwork {
    pub fn new<R: Rng + ?Sized>(scenario: ScenarioConfig, rng: &mut R) -> Result<Self> {
        let layout = Layout::random(&scenario, rng)?;
        let headings = (0..layout.positions.len())
            .map(|_| random_heading(scenario.dim, rng))
            .collect();
        let (links, extended_nodes) = layout.links(scenario.radius, scenario.anchor_radius, scenario.min_degree);
        let network = layout.measure(&links, scenario.sigma, rng)?;
        Ok(Self {
            scenario,
            layout,
            headings,
            network,
            extended_nodes,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scenario
    }

    /// Advances every node by one step and re-measures the network.
    pub fn step<R: Rng + ?Sized>(&mut self, cfg: &MobilityConfig, rng: &mut R) -> Result<&Network> {
        cfg.validate()?;
        let dim = self.layout.dim;
        let speed = Normal::new(cfg.mean_speed, cfg.speed_std.max(0.0))
            .map_err(|e| Error::Config(format!("speed distribution: {e}")))?;
        for (p, h) in self.layout.positions.iter_mut().zip(self.headings.iter_mut()) {
            if cfg.turn_probability > 0.0 && rng.random::<f64>() < cfg.turn_probability {
                *h = random_heading(dim, rng);
            }
            let v = speed.sample(rng).clamp(0.0, cfg.max_speed.max(0.0));
            *p += *h * (v * cfg.step_period);
            for k in 0..dim {
                let (c, flipped) = reflect(p[k] + 0.5 * cfg.side, cfg.side);
                p[k] = c - 0.5 * cfg.side;
                if flipped {
                    h[k] = -h[k];
                }
            }
        }
        let (links, extended) = self
            .layout
            .links(self.scenario.radius, self.scenario.anchor_radius, self.scenario.min_degree);
        self.extended_nodes = extended;
        self.network = self.layout.measure(&links, self.scenario.sigma, rng)?;
        Ok(&self.network)
    }
}

/// Free-function form of [`MobileNetwork::step`].
pub fn mobility_step<'a, R: Rng + ?Sized>(
    mobile: &'a mut MobileNetwork,
    cfg: &MobilityConfig,
    rng: &mut R,
) -> Result<&'a Network> {
    mobile.step(cfg, rng)
}

fn random_heading<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Point {
    loop {
        let mut h = Point::zeros();
        for k in 0..dim {
            h[k] = rng.sample(StandardNormal);
        }
        let norm = h.norm();
        if norm > 1e-12 {
            return h / norm;
        }
    }
}

/// Moves the farthest-point sample of size `count` to the front.
fn spread_anchors_first(positions: &mut [Point], count: usize) {
    if count == 0 {
        return;
    }
    let far = |p: &Point| p.norm();
    let first = (0..positions.len())
        .max_by(|&a, &b| far(&positions[a]).total_cmp(&far(&positions[b])))
        .unwrap_or(0);
    positions.swap(0, first);
    let mut nearest: Vec<f64> = positions.iter().map(|p| (p - positions[0]).norm()).collect();
    for k in 1..count.min(positions.len()) {
        let pick = (k..positions.len())
            .max_by(|&a, &b| nearest[a].total_cmp(&nearest[b]))
            .unwrap_or(k);
        positions.swap(k, pick);
        nearest.swap(k, pick);
        for m in k + 1..positions.len() {
            nearest[m] = nearest[m].min((positions[m] - positions[k]).norm());
        }
    }
}

/// Folds a coordinate back into `[0, side]`; reports whether the number of
/// wall bounces was odd (heading component must flip).
fn reflect(c: f64, side: f64) -> (f64, bool) {
    let period = 2.0 * side;
    let m = c.rem_euclid(period);
    let bounces = (c.div_euclid(period) * 2.0) as i64 + i64::from(m > side);
    let folded = if m > side { period - m } else { m };
    (folded, bounces.rem_euclid(2) == 1)
}
