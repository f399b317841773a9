//! Topological prediction of Braessian upgrades by flow alignment.
//!
//! Upgrading line `(s, t)` that carries flow `s -> t` pushes an extra
//! circulation around the shortest cycle closing `(s, t)`: along the upgraded
//! line and back along a rerouting path `t -> ... -> s`. If that path
//! traverses the observed line `(u, v)` as `u -> v`, the induced change on
//! `(u, v)` is predicted to point from `u` to `v`. The prediction is
//! Braessian (aligned) when this matches the existing flow on `(u, v)`.
//!
//! Two path rules are available:
//!
//! - [`PathRule::SimpleCycle`] (default): the rerouting path must close a
//!   simple cycle with the upgraded line, so it is found as a pair of
//!   vertex-disjoint paths `t ~> x` and `y ~> s` with `{x, y} = {u, v}` of
//!   minimum total hop count (min-cost flow with unit node capacities).
//!   If the opposite traversal of `(u, v)` admits a cycle of the same
//!   length, the verdict is undefined.
//! - [`PathRule::Concatenated`]: compares `d(t,u) + 1 + d(v,s)` with
//!   `d(t,v) + 1 + d(u,s)` over BFS distances directly, which may glue two
//!   geodesics into a walk that revisits nodes.
//!
//! Distances are unweighted hop counts. The upgraded line is never part of
//! a rerouting path.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dc::{max_loaded_line, solve_dc, LoadMeasure};
use crate::error::{GridError, Result};
use crate::grid::{GridNetwork, LineId, NodeId, PowerFlowSolution};

/// State budget of the equal-length search for the opposite traversal.
pub const DEFAULT_SEARCH_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathRule {
    #[default]
    SimpleCycle,
    Concatenated,
}

impl PathRule {
    pub fn as_str(self) -> &'static str {
        match self {
            PathRule::SimpleCycle => "simple-cycle",
            PathRule::Concatenated => "concatenated",
        }
    }
}

impl FromStr for PathRule {
    type Err = GridError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple-cycle" => Ok(PathRule::SimpleCycle),
            "concatenated" => Ok(PathRule::Concatenated),
            other => Err(GridError::UnknownName {
                kind: "path rule",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictorOptions {
    pub rule: PathRule,
    pub search_budget: usize,
}

impl Default for PredictorOptions {
    fn default() -> Self {
        PredictorOptions {
            rule: PathRule::SimpleCycle,
            search_budget: DEFAULT_SEARCH_BUDGET,
        }
    }
}

/// Flow-independent rerouting result for an upgraded line taken in its
/// stored orientation (`s = from`, `t = to`). Paths run `t -> ... -> s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rerouting {
    /// Shortest rerouting traverses the observed line in one direction only;
    /// `forward` means `from -> to` of the observed line.
    Directed {
        forward: bool,
        path: Vec<usize>,
    },
    /// Minimal paths of equal length traverse the observed line both ways.
    Tie { paths: [Vec<usize>; 2] },
    /// No rerouting path through the observed line exists.
    Unreachable,
    /// Search budget exhausted before the opposite traversal was settled.
    Incomplete { path: Vec<usize> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Alignment {
    Aligned,
    AntiAligned,
    Undefined,
}

impl Alignment {
    pub fn as_str(self) -> &'static str {
        match self {
            Alignment::Aligned => "aligned",
            Alignment::AntiAligned => "anti-aligned",
            Alignment::Undefined => "undefined",
        }
    }
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentVerdict {
    pub upgraded: LineId,
    pub observed: LineId,
    pub alignment: Alignment,
    /// Predicted direction of the flow change on the observed line,
    /// `true` for its stored `from -> to`.
    pub implied_forward: Option<bool>,
    /// Witness rerouting paths, oriented from the receiving to the sending
    /// end of the upgraded line under the current flow.
    pub paths: Vec<Vec<NodeId>>,
    /// Hop count of the shortest rerouting path (upgraded line excluded).
    pub path_length: Option<usize>,
    pub diagnostic: Option<String>,
}

impl AlignmentVerdict {
    pub fn path_strings(&self) -> Vec<String> {
        self.paths
            .iter()
            .map(|p| p.iter().map(|n| n.0.to_string()).collect::<Vec<_>>().join("-"))
            .collect()
    }
}

struct Graph {
    adj: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    fn without(network: &GridNetwork, skip: &[LineId]) -> Self {
        let mut adj = vec![Vec::new(); network.node_count()];
        for (k, l) in network.lines().iter().enumerate() {
            if skip.contains(&LineId(k)) {
                continue;
            }
            adj[l.from.0].push((l.to.0, k));
            adj[l.to.0].push((l.from.0, k));
        }
        Graph { adj }
    }

    /// BFS distances from `src` avoiding nodes flagged in `blocked`.
    fn distances(&self, src: usize, blocked: &[bool]) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.adj.len()];
        if blocked[src] {
            return dist;
        }
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(a) = queue.pop_front() {
            for &(b, _) in &self.adj[a] {
                if dist[b] == usize::MAX && !blocked[b] {
                    dist[b] = dist[a] + 1;
                    queue.push_back(b);
                }
            }
        }
        dist
    }

    /// Shortest path `from -> to` avoiding `blocked`; neighbours scanned in
    /// adjacency order so the result is deterministic.
    fn shortest_path(&self, from: usize, to: usize, blocked: &[bool]) -> Option<Vec<usize>> {
        let dist = self.distances(to, blocked);
        if dist[from] == usize::MAX {
            return None;
        }
        let mut path = vec![from];
        let mut cur = from;
        while cur != to {
            cur = self.adj[cur]
                .iter()
                .map(|&(b, _)| b)
                .find(|&b| dist[b].wrapping_add(1) == dist[cur])
                .expect("BFS layers are consistent");
            path.push(cur);
        }
        Some(path)
    }
}

fn endpoints(network: &GridNetwork, id: LineId) -> Result<(usize, usize)> {
    let l = network.line(id)?;
    Ok((l.from.0, l.to.0))
}

/// Rerouting of `upgraded` through `observed`, upgraded line in stored orientation.
pub fn rerouting(
    network: &GridNetwork,
    upgraded: LineId,
    observed: LineId,
    options: &PredictorOptions,
) -> Result<Rerouting> {
    if upgraded == observed {
        return Err(GridError::InvalidArgument(
            "upgraded and observed line coincide".into(),
        ));
    }
    let (s, t) = endpoints(network, upgraded)?;
    let (u, v) = endpoints(network, observed)?;
    Ok(match options.rule {
        PathRule::Concatenated => concatenated(network, upgraded, (s, t), (u, v)),
        PathRule::SimpleCycle => simple_cycle(network, upgraded, observed, (s, t), (u, v), options.search_budget),
    })
}

fn concatenated(network: &GridNetwork, upgraded: LineId, (s, t): (usize, usize), (u, v): (usize, usize)) -> Rerouting {
    let g = Graph::without(network, &[upgraded]);
    let open = vec![false; network.node_count()];
    let dt = g.distances(t, &open);
    let ds = g.distances(s, &open);
    let len = |a: usize, b: usize| match (dt[a], ds[b]) {
        (usize::MAX, _) | (_, usize::MAX) => None,
        (x, y) => Some(x + 1 + y),
    };
    let build = |x: usize, y: usize| {
        let mut p = g.shortest_path(t, x, &open).expect("reachable");
        p.extend(g.shortest_path(y, s, &open).expect("reachable"));
        p
    };
    match (len(u, v), len(v, u)) {
        (None, None) => Rerouting::Unreachable,
        (Some(_), None) => Rerouting::Directed { forward: true, path: build(u, v) },
        (None, Some(_)) => Rerouting::Directed { forward: false, path: build(v, u) },
        (Some(a), Some(b)) if a < b => Rerouting::Directed { forward: true, path: build(u, v) },
        (Some(a), Some(b)) if b < a => Rerouting::Directed { forward: false, path: build(v, u) },
        _ => Rerouting::Tie { paths: [build(u, v), build(v, u)] },
    }
}

/// Min-cost flow on the node-split graph: two units from `{t, s}` to `{u, v}`.
struct FlowNet {
    head: Vec<usize>,
    cap: Vec<i32>,
    cost: Vec<i32>,
    out: Vec<Vec<usize>>,
}

impl FlowNet {
    fn new(n: usize) -> Self {
        FlowNet {
            head: Vec::new(),
            cap: Vec::new(),
            cost: Vec::new(),
            out: vec![Vec::new(); n],
        }
    }

    fn arc(&mut self, a: usize, b: usize, cost: i32) {
        self.out[a].push(self.head.len());
        self.head.push(b);
        self.cap.push(1);
        self.cost.push(cost);
        self.out[b].push(self.head.len());
        self.head.push(a);
        self.cap.push(0);
        self.cost.push(-cost);
    }

    /// One augmentation along a cheapest residual path (Bellman-Ford queue).
    fn augment(&mut self, src: usize, sink: usize) -> Option<(i32, Vec<i32>)> {
        let n = self.out.len();
        let mut dist = vec![i32::MAX; n];
        let mut via = vec![usize::MAX; n];
        let mut queued = vec![false; n];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(a) = queue.pop_front() {
            queued[a] = false;
            for &e in &self.out[a] {
                let b = self.head[e];
                if self.cap[e] > 0 && dist[a] + self.cost[e] < dist[b] {
                    dist[b] = dist[a] + self.cost[e];
                    via[b] = e;
                    if !queued[b] {
                        queued[b] = true;
                        queue.push_back(b);
                    }
                }
            }
        }
        if dist[sink] == i32::MAX {
            return None;
        }
        let mut b = sink;
        while b != src {
            let e = via[b];
            self.cap[e] -= 1;
            self.cap[e ^ 1] += 1;
            b = self.head[e ^ 1];
        }
        Some((dist[sink], dist))
    }
}

fn simple_cycle(
    network: &GridNetwork,
    upgraded: LineId,
    observed: LineId,
    (s, t): (usize, usize),
    (u, v): (usize, usize),
    budget: usize,
) -> Rerouting {
    let g = Graph::without(network, &[upgraded, observed]);
    let n = network.node_count();
    // node i: in = 2i, out = 2i + 1; super source 2n, super sink 2n + 1
    let (src, sink) = (2 * n, 2 * n + 1);
    let mut net = FlowNet::new(2 * n + 2);
    for i in 0..n {
        net.arc(2 * i, 2 * i + 1, 0);
    }
    for (a, nbrs) in g.adj.iter().enumerate() {
        for &(b, _) in nbrs {
            net.arc(2 * a + 1, 2 * b, 1);
        }
    }
    let t_arc = net.head.len();
    net.arc(src, 2 * t, 0);
    net.arc(src, 2 * s, 0);
    net.arc(2 * u + 1, sink, 0);
    net.arc(2 * v + 1, sink, 0);
    let first = net.augment(src, sink);
    let second = first.as_ref().and_then(|_| net.augment(src, sink));
    let (Some((c1, _)), Some((c2, potential))) = (first, second) else {
        return Rerouting::Unreachable;
    };
    let cost = (c1 + c2) as usize;

    // trace the unit leaving t along saturated forward arcs
    debug_assert_eq!(net.cap[t_arc], 0);
    let trace = |start: usize| -> Vec<usize> {
        let mut path = vec![start];
        let mut node = 2 * start + 1;
        loop {
            let next = net.out[node]
                .iter()
                .copied()
                .find(|&e| e % 2 == 0 && net.cap[e] == 0);
            let e = next.expect("flow is conserved");
            if net.head[e] == sink {
                return path;
            }
            let b = net.head[e] / 2;
            path.push(b);
            node = 2 * b + 1;
        }
    };
    let p1 = trace(t);
    let p2 = trace(s);
    let x = *p1.last().expect("non-empty");
    let forward = x == u;
    let mut path = p1;
    path.extend(p2.into_iter().rev());
    debug_assert_eq!(path.len(), cost + 2);

    // opposite traversal: t ~> x', y' ~> s with x' = other endpoint
    let (xo, yo) = if forward { (v, u) } else { (u, v) };
    match opposite_at_cost(&net, &potential, n, (s, t), (xo, yo), cost, budget) {
        Search::Found(other) => Rerouting::Tie { paths: [path, other] },
        Search::None => Rerouting::Directed { forward, path },
        Search::Exhausted => Rerouting::Incomplete { path },
    }
}

enum Search {
    Found(Vec<usize>),
    None,
    Exhausted,
}

/// Disjoint paths `t ~> x` and `y ~> s` of total hop count `cost`, the
/// global optimum over both traversals.
///
/// Any such pair is itself a min-cost flow, so it only uses arcs of zero
/// reduced cost under the final shortest-path potentials (plus arcs of the
/// current flow). That subgraph is acyclic, and two vertex-disjoint paths
/// with prescribed ends in a DAG are found by searching node pairs, always
/// advancing the path whose head comes first in topological order.
fn opposite_at_cost(
    net: &FlowNet,
    potential: &[i32],
    n: usize,
    (s, t): (usize, usize),
    (x, y): (usize, usize),
    cost: usize,
    budget: usize,
) -> Search {
    if x == s || y == t {
        return Search::None;
    }
    let m = 2 * n;
    let mut out: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
    let mut indegree = vec![0usize; m];
    for e in (0..net.head.len()).step_by(2) {
        let (a, b) = (net.head[e ^ 1], net.head[e]);
        if a >= m || b >= m {
            continue;
        }
        let used = net.cap[e] == 0;
        let tight = potential[a] != i32::MAX
            && potential[b] != i32::MAX
            && potential[a] + net.cost[e] == potential[b];
        if used || tight {
            out[a].push((b, net.cost[e] as usize));
            indegree[b] += 1;
        }
    }
    let mut rank = vec![usize::MAX; m];
    let mut queue: VecDeque<usize> = (0..m).filter(|&i| indegree[i] == 0).collect();
    let mut next_rank = 0;
    while let Some(a) = queue.pop_front() {
        rank[a] = next_rank;
        next_rank += 1;
        for &(b, _) in &out[a] {
            indegree[b] -= 1;
            if indegree[b] == 0 {
                queue.push_back(b);
            }
        }
    }
    debug_assert!(rank.iter().all(|&r| r != usize::MAX), "tight subgraph is acyclic");

    // 0-1 BFS over states (head of path from t, head of path from s)
    let (goal_a, goal_b) = (2 * x + 1, 2 * y + 1);
    let start = (2 * t, 2 * s);
    let mut best: HashMap<(usize, usize), (usize, (usize, usize))> = HashMap::new();
    best.insert(start, (0, start));
    let mut deque = VecDeque::from([(0usize, start)]);
    let mut expansions = 0usize;
    while let Some((d, state)) = deque.pop_front() {
        if best[&state].0 < d {
            continue;
        }
        let (a, b) = state;
        if (a, b) == (goal_a, goal_b) {
            if d != cost {
                return Search::None;
            }
            let mut heads = vec![state];
            let mut cur = state;
            while cur != start {
                cur = best[&cur].1;
                heads.push(cur);
            }
            heads.reverse();
            let mut pa: Vec<usize> = Vec::new();
            let mut pb: Vec<usize> = Vec::new();
            for &(a, b) in &heads {
                if pa.last() != Some(&(a / 2)) {
                    pa.push(a / 2);
                }
                if pb.last() != Some(&(b / 2)) {
                    pb.push(b / 2);
                }
            }
            pa.extend(pb.into_iter().rev());
            return Search::Found(pa);
        }
        if d > cost {
            return Search::None;
        }
        expansions += 1;
        if expansions > budget {
            return Search::Exhausted;
        }
        let move_a = b == goal_b || (a != goal_a && rank[a] < rank[b]);
        let (p, other) = if move_a { (a, b) } else { (b, a) };
        for &(q, c) in &out[p] {
            if q == other {
                continue;
            }
            let next = if move_a { (q, b) } else { (a, q) };
            let nd = d + c;
            if best.get(&next).is_none_or(|&(old, _)| nd < old) {
                best.insert(next, (nd, state));
                if c == 0 {
                    deque.push_front((nd, next));
                } else {
                    deque.push_back((nd, next));
                }
            }
        }
    }
    Search::None
}

/// Whether the upgraded line lies on exactly one cycle, so that its flow
/// change is confined to that cycle.
pub fn rerouting_cycle_unique(network: &GridNetwork, upgraded: LineId) -> Result<bool> {
    let (s, t) = endpoints(network, upgraded)?;
    let g = Graph::without(network, &[upgraded]);
    let open = vec![false; network.node_count()];
    let Some(path) = g.shortest_path(t, s, &open) else {
        return Ok(false);
    };
    // unique iff every line on one t-s path is a bridge once the upgraded line is gone
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut lines = g.adj[a].iter().filter(|&&(c, _)| c == b).map(|&(_, k)| k);
        let first = lines.next().expect("consecutive path nodes are adjacent");
        if lines.next().is_some() {
            return Ok(false);
        }
        let sub = Graph::without(network, &[upgraded, LineId(first)]);
        if sub.distances(t, &open)[s] != usize::MAX {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Turn a flow-independent rerouting into a verdict under given flows.
pub fn verdict_from(
    rerouting: &Rerouting,
    upgraded: LineId,
    observed: LineId,
    flow_upgraded: f64,
    flow_observed: f64,
) -> AlignmentVerdict {
    let nodes = |p: &[usize], flip: bool| -> Vec<NodeId> {
        let mut p: Vec<NodeId> = p.iter().map(|&i| NodeId(i)).collect();
        if flip {
            p.reverse();
        }
        p
    };
    let flip = flow_upgraded < 0.0;
    let mut verdict = AlignmentVerdict {
        upgraded,
        observed,
        alignment: Alignment::Undefined,
        implied_forward: None,
        paths: Vec::new(),
        path_length: None,
        diagnostic: None,
    };
    match rerouting {
        Rerouting::Unreachable => {
            verdict.diagnostic = Some("observed line is not on any cycle through the upgraded line".into());
        }
        Rerouting::Incomplete { path } => {
            verdict.paths = vec![nodes(path, flip)];
            verdict.path_length = Some(path.len() - 1);
            verdict.diagnostic = Some("search budget exhausted while checking the opposite traversal".into());
        }
        Rerouting::Tie { paths } => {
            verdict.paths = paths.iter().map(|p| nodes(p, flip)).collect();
            verdict.path_length = Some(paths[0].len() - 1);
            verdict.diagnostic = Some("shortest rerouting paths traverse the observed line in opposite directions".into());
        }
        Rerouting::Directed { forward, path } => {
            verdict.paths = vec![nodes(path, flip)];
            verdict.path_length = Some(path.len() - 1);
            if flow_upgraded == 0.0 {
                verdict.diagnostic = Some("upgraded line carries no flow".into());
            } else {
                let implied = *forward != flip;
                verdict.implied_forward = Some(implied);
                let aligned = flow_observed == 0.0 || implied == (flow_observed > 0.0);
                verdict.alignment = if aligned { Alignment::Aligned } else { Alignment::AntiAligned };
            }
        }
    }
    verdict
}

/// Verdict for one pair under the DC flows of `network`.
pub fn predict_alignment(
    network: &GridNetwork,
    upgraded: LineId,
    observed: LineId,
    options: &PredictorOptions,
) -> Result<AlignmentVerdict> {
    let sol = solve_dc(network)?;
    predict_alignment_with(network, &sol, upgraded, observed, options)
}

pub fn predict_alignment_with(
    network: &GridNetwork,
    solution: &PowerFlowSolution,
    upgraded: LineId,
    observed: LineId,
    options: &PredictorOptions,
) -> Result<AlignmentVerdict> {
    let r = rerouting(network, upgraded, observed, options)?;
    Ok(verdict_from(&r, upgraded, observed, solution.flows[upgraded.0], solution.flows[observed.0]))
}

/// Verdict with the maximally loaded line as the observed line.
pub fn predict_braessian(network: &GridNetwork, upgraded: LineId, options: &PredictorOptions) -> Result<AlignmentVerdict> {
    let sol = solve_dc(network)?;
    let max = max_loaded_line(&sol, network, LoadMeasure::Absolute)?;
    if max.is_ambiguous() {
        return Err(GridError::AmbiguousMaxLoad {
            lines: max.tied.iter().map(|l| l.0).collect(),
        });
    }
    if max.line == upgraded {
        return Err(GridError::InvalidArgument(
            "upgraded line is the maximally loaded line".into(),
        ));
    }
    predict_alignment_with(network, &sol, upgraded, max.line, options)
}
