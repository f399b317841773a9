//! Network ensembles and random injection sampling.
//!
//! Generators are registered by name in a [`GeneratorRegistry`]; each one
//! reads its own parameters from a TOML table. Every generated network has
//! unit susceptances and zero injections; [`sample_injections`] then places
//! generators and consumers.

use std::collections::{BTreeMap, HashMap, VecDeque};

use delaunator::{next_halfedge, triangulate, Point, EMPTY};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};
use crate::grid::fixtures::ieee300;
use crate::grid::GridNetwork;

pub type TopologyRng = ChaCha8Rng;

/// A named, parameterized network generator.
pub trait TopologyGenerator: Send + Sync {
    fn name(&self) -> &'static str;
    /// Whether different random streams give different networks.
    fn is_random(&self) -> bool;
    fn generate(&self, rng: &mut TopologyRng) -> Result<GridNetwork>;
}

type Factory = fn(&toml::Table) -> Result<Box<dyn TopologyGenerator>>;

/// Name -> generator factory.
pub struct GeneratorRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

fn parse_params<T: DeserializeOwned>(kind: &str, params: &toml::Table) -> Result<T> {
    toml::Value::Table(params.clone())
        .try_into()
        .map_err(|e| GridError::Config(format!("{kind} parameters: {e}")))
}

impl GeneratorRegistry {
    pub fn empty() -> Self {
        GeneratorRegistry {
            factories: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, name: &str, params: &toml::Table) -> Result<Box<dyn TopologyGenerator>> {
        let factory = self.factories.get(name).ok_or_else(|| GridError::UnknownName {
            kind: "topology",
            name: name.to_string(),
        })?;
        factory(params)
    }
}

impl Default for GeneratorRegistry {
    fn default() -> Self {
        let mut r = GeneratorRegistry::empty();
        r.register("square-lattice", |p| {
            let g: SquareLattice = parse_params("square-lattice", p)?;
            g.validate()?;
            Ok(Box::new(g))
        });
        r.register("voronoi", |p| {
            let g: Voronoi = parse_params("voronoi", p)?;
            g.validate()?;
            Ok(Box::new(g))
        });
        r.register("random-grid", |p| {
            let g: RandomGridParams = parse_params("random-grid", p)?;
            g.validate()?;
            Ok(Box::new(g))
        });
        r.register("ieee300", |p| {
            let _: Ieee300 = parse_params("ieee300", p)?;
            Ok(Box::new(Ieee300 {}))
        });
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquareLattice {
    pub rows: usize,
    pub cols: usize,
}

impl SquareLattice {
    fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(GridError::Config(format!(
                "square lattice needs rows, cols >= 2, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }
}

impl TopologyGenerator for SquareLattice {
    fn name(&self) -> &'static str {
        "square-lattice"
    }
    fn is_random(&self) -> bool {
        false
    }
    fn generate(&self, _rng: &mut TopologyRng) -> Result<GridNetwork> {
        gen_square_lattice(self.rows, self.cols)
    }
}

/// `rows x cols` grid graph, node `r * cols + c`.
pub fn gen_square_lattice(rows: usize, cols: usize) -> Result<GridNetwork> {
    SquareLattice { rows, cols }.validate()?;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                edges.push((i, i + 1));
            }
            if r + 1 < rows {
                edges.push((i, i + cols));
            }
        }
    }
    GridNetwork::homogeneous(rows * cols, &edges)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Voronoi {
    pub seeds: usize,
}

impl Voronoi {
    fn validate(&self) -> Result<()> {
        if self.seeds < 4 {
            return Err(GridError::Config(format!("voronoi needs at least 4 seeds, got {}", self.seeds)));
        }
        Ok(())
    }
}

impl TopologyGenerator for Voronoi {
    fn name(&self) -> &'static str {
        "voronoi"
    }
    fn is_random(&self) -> bool {
        true
    }
    fn generate(&self, rng: &mut TopologyRng) -> Result<GridNetwork> {
        gen_voronoi_planar(self.seeds, rng)
    }
}

/// Planar graph with node coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanarLayout {
    pub positions: Vec<(f64, f64)>,
    pub edges: Vec<(usize, usize)>,
}

impl PlanarLayout {
    pub fn to_network(&self) -> Result<GridNetwork> {
        GridNetwork::homogeneous(self.positions.len(), &self.edges)
    }
}

const MERGE_TOLERANCE: f64 = 1e-9;
const MAX_RETRIES: usize = 16;
const PERTURBATION: f64 = 1e-7;

/// Voronoi diagram of uniform points in the unit square, clipped to it.
pub fn gen_voronoi_planar(n_seeds: usize, rng: &mut TopologyRng) -> Result<GridNetwork> {
    Voronoi { seeds: n_seeds }.validate()?;
    let points: Vec<(f64, f64)> = (0..n_seeds).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    voronoi_with_retry(&points, rng)?.to_network()
}

fn voronoi_with_retry(points: &[(f64, f64)], rng: &mut TopologyRng) -> Result<PlanarLayout> {
    let mut pts = points.to_vec();
    for _ in 0..MAX_RETRIES {
        if let Some(layout) = voronoi_layout(&pts) {
            return Ok(layout);
        }
        for p in &mut pts {
            p.0 = (p.0 + PERTURBATION * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0);
            p.1 = (p.1 + PERTURBATION * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0);
        }
    }
    Err(GridError::InvalidNetwork(
        "Voronoi construction stayed degenerate after perturbation".into(),
    ))
}

fn circumcenter(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Option<(f64, f64)> {
    let (bx, by) = (b.0 - a.0, b.1 - a.1);
    let (cx, cy) = (c.0 - a.0, c.1 - a.1);
    let d = 2.0 * (bx * cy - by * cx);
    if d.abs() < 1e-300 {
        return None;
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    Some((a.0 + (cy * b2 - by * c2) / d, a.1 + (bx * c2 - cx * b2) / d))
}

/// Liang-Barsky: clip `p + t d` for `t` in `[t0, t1]` to the unit square.
fn clip(p: (f64, f64), d: (f64, f64), mut t0: f64, mut t1: f64) -> Option<((f64, f64), (f64, f64))> {
    for (q, r) in [(-d.0, p.0), (d.0, 1.0 - p.0), (-d.1, p.1), (d.1, 1.0 - p.1)] {
        if q == 0.0 {
            if r < 0.0 {
                return None;
            }
        } else {
            let t = r / q;
            if q < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    if t0 > t1 {
        return None;
    }
    let at = |t: f64| ((p.0 + t * d.0).clamp(0.0, 1.0), (p.1 + t * d.1).clamp(0.0, 1.0));
    Some((at(t0), at(t1)))
}

/// Clipped Voronoi ridges as a graph; `None` on a degenerate triangulation.
/// Only the largest connected component is kept.
pub fn voronoi_layout(points: &[(f64, f64)]) -> Option<PlanarLayout> {
    let pts: Vec<Point> = points.iter().map(|&(x, y)| Point { x, y }).collect();
    let tri = triangulate(&pts);
    if tri.is_empty() {
        return None;
    }
    let corner = |e: usize| points[tri.triangles[e]];
    let mut centers = Vec::with_capacity(tri.len());
    for t in 0..tri.len() {
        centers.push(circumcenter(corner(3 * t), corner(3 * t + 1), corner(3 * t + 2))?);
    }

    let mut segments = Vec::new();
    for e in 0..tri.triangles.len() {
        let opp = tri.halfedges[e];
        let c = centers[e / 3];
        if opp == EMPTY {
            // hull edge: ray along the outward normal of the hull side
            let a = corner(e);
            let b = corner(next_halfedge(e));
            let third = corner(next_halfedge(next_halfedge(e)));
            let mut n = (b.1 - a.1, a.0 - b.0);
            let mid = ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0);
            if n.0 * (third.0 - mid.0) + n.1 * (third.1 - mid.1) > 0.0 {
                n = (-n.0, -n.1);
            }
            segments.extend(clip(c, n, 0.0, f64::INFINITY));
        } else if e < opp {
            let c2 = centers[opp / 3];
            segments.extend(clip(c, (c2.0 - c.0, c2.1 - c.1), 0.0, 1.0));
        }
    }

    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut positions = Vec::new();
    let mut node = |p: (f64, f64)| -> usize {
        let key = ((p.0 / MERGE_TOLERANCE).round() as i64, (p.1 / MERGE_TOLERANCE).round() as i64);
        *index.entry(key).or_insert_with(|| {
            positions.push(p);
            positions.len() - 1
        })
    };
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (a, b) in segments {
        let (i, j) = (node(a), node(b));
        if i != j && seen.insert((i.min(j), i.max(j))) {
            edges.push((i, j));
        }
    }
    Some(largest_component(&positions, &edges))
}

fn largest_component(positions: &[(f64, f64)], edges: &[(usize, usize)]) -> PlanarLayout {
    let n = positions.len();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut comp = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX || adj[start].is_empty() {
            continue;
        }
        let id = sizes.len();
        comp[start] = id;
        let mut size = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            size += 1;
            for &b in &adj[a] {
                if comp[b] == usize::MAX {
                    comp[b] = id;
                    queue.push_back(b);
                }
            }
        }
        sizes.push(size);
    }
    let Some(best) = (0..sizes.len()).max_by_key(|&k| (sizes[k], usize::MAX - k)) else {
        return PlanarLayout {
            positions: Vec::new(),
            edges: Vec::new(),
        };
    };
    let mut remap = vec![usize::MAX; n];
    let mut kept = Vec::new();
    for i in 0..n {
        if comp[i] == best {
            remap[i] = kept.len();
            kept.push(positions[i]);
        }
    }
    PlanarLayout {
        positions: kept,
        edges: edges
            .iter()
            .filter(|&&(a, _)| comp[a] == best)
            .map(|&(a, b)| (remap[a], remap[b]))
            .collect(),
    }
}

/// Parameters of the random growth model for power grids.
///
/// Start from a minimum spanning tree over `initial_nodes` random points
/// plus `floor(initial_nodes (1 - s) (p + q))` redundant links, then grow
/// node by node: with probability `s` split a random line at its midpoint,
/// otherwise place a random point, connect it to its nearest node, with
/// probability `p` add a redundant link from it, and with probability `q`
/// add one from a random existing node. Redundant links from `a` go to the
/// non-neighbour maximizing `(d_G(a, b) + 1)^r / dist(a, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomGridParams {
    pub nodes: usize,
    pub initial_nodes: usize,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
}

impl Default for RandomGridParams {
    fn default() -> Self {
        RandomGridParams {
            nodes: 100,
            initial_nodes: 1,
            p: 0.2,
            q: 0.3,
            r: 1.0 / 3.0,
            s: 0.1,
        }
    }
}

impl RandomGridParams {
    fn validate(&self) -> Result<()> {
        let prob = |x: f64| (0.0..=1.0).contains(&x);
        if self.nodes < 10 {
            return Err(GridError::Config(format!("random grid needs at least 10 nodes, got {}", self.nodes)));
        }
        if self.initial_nodes == 0 || self.initial_nodes > self.nodes {
            return Err(GridError::Config("random grid: 1 <= initial_nodes <= nodes".into()));
        }
        if !(prob(self.p) && prob(self.q) && prob(self.s)) || !(self.r.is_finite() && self.r >= 0.0) {
            return Err(GridError::Config(
                "random grid: p, q, s must lie in [0, 1] and r must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

impl TopologyGenerator for RandomGridParams {
    fn name(&self) -> &'static str {
        "random-grid"
    }
    fn is_random(&self) -> bool {
        true
    }
    fn generate(&self, rng: &mut TopologyRng) -> Result<GridNetwork> {
        gen_random_grid(self, rng)
    }
}

struct Growth {
    pos: Vec<(f64, f64)>,
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    r: f64,
}

impl Growth {
    fn dist(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.pos[a], self.pos[b]);
        ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()
    }

    fn link(&mut self, a: usize, b: usize) {
        self.adj[a].push(b);
        self.adj[b].push(a);
        self.edges.push((a, b));
    }

    fn add_node(&mut self, p: (f64, f64)) -> usize {
        self.pos.push(p);
        self.adj.push(Vec::new());
        self.pos.len() - 1
    }

    fn hops(&self, a: usize) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.pos.len()];
        d[a] = 0;
        let mut queue = VecDeque::from([a]);
        while let Some(x) = queue.pop_front() {
            for &y in &self.adj[x] {
                if d[y] == usize::MAX {
                    d[y] = d[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        d
    }

    /// Redundant link from `a` to the best non-neighbour, if any.
    fn redundant_link(&mut self, a: usize) {
        let hops = self.hops(a);
        let mut best: Option<(f64, usize)> = None;
        for b in 0..self.pos.len() {
            if b == a || self.adj[a].contains(&b) {
                continue;
            }
            let d = self.dist(a, b);
            if d == 0.0 {
                continue;
            }
            let g = if hops[b] == usize::MAX { self.pos.len() } else { hops[b] };
            let f = ((g + 1) as f64).powf(self.r) / d;
            if best.is_none_or(|(bf, _)| f > bf) {
                best = Some((f, b));
            }
        }
        if let Some((_, b)) = best {
            self.link(a, b);
        }
    }

    fn nearest(&self, a: usize) -> usize {
        (0..self.pos.len())
            .filter(|&b| b != a)
            .min_by(|&x, &y| self.dist(a, x).total_cmp(&self.dist(a, y)))
            .expect("at least one other node")
    }
}

pub fn gen_random_grid(params: &RandomGridParams, rng: &mut TopologyRng) -> Result<GridNetwork> {
    params.validate()?;
    let mut g = Growth {
        pos: Vec::new(),
        adj: Vec::new(),
        edges: Vec::new(),
        r: params.r,
    };
    let point = |rng: &mut TopologyRng| (rng.random::<f64>(), rng.random::<f64>());
    for _ in 0..params.initial_nodes {
        let p = point(rng);
        g.add_node(p);
    }
    // Prim's minimum spanning tree over the initial points
    let n0 = params.initial_nodes;
    let mut in_tree = vec![false; n0];
    let mut best = vec![(f64::INFINITY, 0usize); n0];
    in_tree[0] = true;
    for b in 1..n0 {
        best[b] = (g.dist(0, b), 0);
    }
    for _ in 1..n0 {
        let next = (0..n0)
            .filter(|&b| !in_tree[b])
            .min_by(|&x, &y| best[x].0.total_cmp(&best[y].0))
            .expect("remaining node");
        in_tree[next] = true;
        g.link(best[next].1, next);
        for b in 0..n0 {
            if !in_tree[b] && g.dist(next, b) < best[b].0 {
                best[b] = (g.dist(next, b), next);
            }
        }
    }
    let m = (n0 as f64 * (1.0 - params.s) * (params.p + params.q)).floor() as usize;
    for _ in 0..m {
        let a = rng.random_range(0..n0);
        g.redundant_link(a);
    }

    while g.pos.len() < params.nodes {
        if !g.edges.is_empty() && rng.random::<f64>() < params.s {
            let k = rng.random_range(0..g.edges.len());
            let (a, b) = g.edges.swap_remove(k);
            g.adj[a].retain(|&x| x != b);
            g.adj[b].retain(|&x| x != a);
            let mid = ((g.pos[a].0 + g.pos[b].0) / 2.0, (g.pos[a].1 + g.pos[b].1) / 2.0);
            let c = g.add_node(mid);
            g.link(a, c);
            g.link(c, b);
            continue;
        }
        let p = point(rng);
        let a = g.add_node(p);
        let near = g.nearest(a);
        g.link(a, near);
        if rng.random::<f64>() < params.p {
            g.redundant_link(a);
        }
        if rng.random::<f64>() < params.q {
            let c = rng.random_range(0..g.pos.len());
            g.redundant_link(c);
        }
    }
    GridNetwork::homogeneous(g.pos.len(), &g.edges)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ieee300 {}

impl TopologyGenerator for Ieee300 {
    fn name(&self) -> &'static str {
        "ieee300"
    }
    fn is_random(&self) -> bool {
        false
    }
    fn generate(&self, _rng: &mut TopologyRng) -> Result<GridNetwork> {
        Ok(ieee300())
    }
}

/// Half the nodes (chosen uniformly) at `P = +1`, half at `P = -1`; with an
/// odd node count one node stays passive.
pub fn sample_injections(network: &GridNetwork, rng: &mut TopologyRng) -> Result<GridNetwork> {
    let n = network.node_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut p = vec![0.0; n];
    for (k, &i) in order.iter().take(2 * (n / 2)).enumerate() {
        p[i] = if k < n / 2 { 1.0 } else { -1.0 };
    }
    network.with_injections(&p)
}

/// Independent deterministic stream for `(seed, network, sample)`.
/// `sample = None` is the stream used to generate the network itself.
pub fn stream_rng(seed: u64, network: usize, sample: Option<usize>) -> TopologyRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = sample.map_or(0, |s| s as u64 + 1);
    rng.set_stream(((network as u64) << 32) | s);
    rng
}

/// One ensemble of networks with injection samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    /// Label used in reports; defaults to the topology name.
    #[serde(default)]
    pub name: Option<String>,
    pub topology: String,
    #[serde(default)]
    pub params: toml::Table,
    #[serde(default = "one")]
    pub networks: usize,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

impl EnsembleSpec {
    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.topology)
    }

    pub fn generator(&self, registry: &GeneratorRegistry) -> Result<Box<dyn TopologyGenerator>> {
        registry.build(&self.topology, &self.params)
    }

    /// Network `index` of the ensemble.
    pub fn network(&self, generator: &dyn TopologyGenerator, index: usize) -> Result<GridNetwork> {
        generator.generate(&mut stream_rng(self.seed, index, None))
    }

    /// Injection sample `sample` on network `index`.
    pub fn sample(&self, network: &GridNetwork, index: usize, sample: usize) -> Result<GridNetwork> {
        sample_injections(network, &mut stream_rng(self.seed, index, Some(sample)))
    }
}

/// Config file: a list of `[[ensemble]]` tables.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleFile {
    #[serde(default)]
    pub ensemble: Vec<EnsembleSpec>,
}

impl EnsembleFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| GridError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| GridError::Config(e.to_string()))
    }
}
