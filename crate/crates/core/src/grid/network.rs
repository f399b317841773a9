use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};
use crate::grid::admittance::line_admittance;

/// Dense node index, `0..N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

/// Dense line index, `0..M`, in network order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LineId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for LineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Analysis mode declared by a network file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Dc,
    Ac,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Dc => "dc",
            Mode::Ac => "ac",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dc" => Ok(Mode::Dc),
            "ac" => Ok(Mode::Ac),
            other => Err(GridError::UnknownName {
                kind: "mode",
                name: other.to_string(),
            }),
        }
    }
}

/// AC node role. DC analysis ignores roles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Slack,
    Pv,
    Pq,
}

impl NodeRole {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::Slack => "slack",
            NodeRole::Pv => "pv",
            NodeRole::Pq => "pq",
        }
    }
}

impl std::str::FromStr for NodeRole {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slack" => Ok(NodeRole::Slack),
            "pv" => Ok(NodeRole::Pv),
            "pq" => Ok(NodeRole::Pq),
            other => Err(GridError::UnknownName {
                kind: "node role",
                name: other.to_string(),
            }),
        }
    }
}

/// Electrical parameters of a line. A network uses one convention for all lines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LineParams {
    /// Series impedance in ohms.
    Impedance { resistance: f64, reactance: f64 },
    /// Susceptance in siemens, given directly (lossless DC networks).
    Susceptance(f64),
}

impl LineParams {
    pub fn convention(&self) -> ParamConvention {
        match self {
            LineParams::Impedance { .. } => ParamConvention::Impedance,
            LineParams::Susceptance(_) => ParamConvention::Susceptance,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamConvention {
    Impedance,
    Susceptance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: NodeId,
    pub to: NodeId,
    pub params: LineParams,
    /// Thermal limit in amperes (AC) or per-unit flow (DC).
    pub thermal_limit: Option<f64>,
}

impl Line {
    pub fn with_susceptance(from: usize, to: usize, b: f64) -> Self {
        Line {
            from: NodeId(from),
            to: NodeId(to),
            params: LineParams::Susceptance(b),
            thermal_limit: None,
        }
    }

    pub fn with_impedance(from: usize, to: usize, resistance: f64, reactance: f64) -> Self {
        Line {
            from: NodeId(from),
            to: NodeId(to),
            params: LineParams::Impedance {
                resistance,
                reactance,
            },
            thermal_limit: None,
        }
    }

    pub fn limited(mut self, limit: f64) -> Self {
        self.thermal_limit = Some(limit);
        self
    }

    /// Susceptance used by the linearized flow model.
    ///
    /// For impedance lines this is `Im(-1/(R + jX)) = X / (R^2 + X^2)`.
    pub fn susceptance(&self) -> f64 {
        match self.params {
            LineParams::Susceptance(b) => b,
            LineParams::Impedance {
                resistance,
                reactance,
            } => {
                let z2 = resistance * resistance + reactance * reactance;
                if z2 == 0.0 {
                    0.0
                } else {
                    reactance / z2
                }
            }
        }
    }

    /// True if `other` connects the same pair of nodes, in either orientation.
    pub fn same_endpoints(&self, other: &Line) -> bool {
        (self.from == other.from && self.to == other.to)
            || (self.from == other.to && self.to == other.from)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    /// Real power injection in watts (per-unit in homogeneous ensembles).
    pub p: f64,
    /// Reactive injection in vars (AC only).
    pub q: Option<f64>,
    /// Voltage setpoint in volts (AC only).
    pub e: Option<f64>,
    pub role: Option<NodeRole>,
}

impl Node {
    pub fn dc(id: usize, p: f64) -> Self {
        Node {
            id: NodeId(id),
            p,
            q: None,
            e: None,
            role: None,
        }
    }
}

/// A validated power network. Immutable; derived networks are built by the
/// `with_*` constructors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridNetwork {
    mode: Mode,
    nodes: Vec<Node>,
    lines: Vec<Line>,
}

/// Relative tolerance on the DC balance `sum P = 0`.
pub const BALANCE_TOLERANCE: f64 = 1e-9;

impl GridNetwork {
    pub fn new(mode: Mode, nodes: Vec<Node>, lines: Vec<Line>) -> Result<Self> {
        let network = GridNetwork { mode, nodes, lines };
        network.validate()?;
        Ok(network)
    }

    /// DC network with unit-free susceptances and injections.
    pub fn dc(injections: &[f64], lines: &[(usize, usize, f64)]) -> Result<Self> {
        let nodes = injections
            .iter()
            .enumerate()
            .map(|(i, &p)| Node::dc(i, p))
            .collect();
        let lines = lines
            .iter()
            .map(|&(u, v, b)| Line::with_susceptance(u, v, b))
            .collect();
        Self::new(Mode::Dc, nodes, lines)
    }

    /// Homogeneous (unit susceptance) DC network without injections.
    pub fn homogeneous(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let lines: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Self::dc(&vec![0.0; n_nodes], &lines)
    }

    fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(GridError::InvalidNetwork("network has no nodes".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id.0 != i {
                return Err(GridError::InvalidNetwork(format!(
                    "node ids must be dense and ordered: expected {i}, found {}",
                    node.id
                )));
            }
            if !node.p.is_finite() {
                return Err(GridError::InvalidNetwork(format!("node {i}: P is not finite")));
            }
            if let Some(e) = node.e {
                if !(e > 0.0 && e.is_finite()) {
                    return Err(GridError::InvalidNetwork(format!(
                        "node {i}: voltage setpoint must be positive"
                    )));
                }
            }
        }
        let convention = self.lines.first().map(|l| l.params.convention());
        for (k, line) in self.lines.iter().enumerate() {
            if line.from.0 >= n || line.to.0 >= n {
                return Err(GridError::InvalidNetwork(format!(
                    "line {k}: endpoint out of range ({} - {})",
                    line.from, line.to
                )));
            }
            if line.from == line.to {
                return Err(GridError::InvalidNetwork(format!(
                    "line {k}: self-loop at node {}",
                    line.from
                )));
            }
            if Some(line.params.convention()) != convention {
                return Err(GridError::InvalidNetwork(format!(
                    "line {k}: mixes R,X and B parameter conventions"
                )));
            }
            match line.params {
                LineParams::Impedance {
                    resistance,
                    reactance,
                } => {
                    if !(resistance >= 0.0 && resistance.is_finite() && reactance.is_finite()) {
                        return Err(GridError::InvalidNetwork(format!(
                            "line {k}: R must be >= 0 and X finite"
                        )));
                    }
                    line_admittance(resistance, reactance)
                        .map_err(|_| GridError::DegenerateLine { line: k })?;
                }
                LineParams::Susceptance(b) => {
                    if !(b.is_finite() && b > 0.0) {
                        return Err(GridError::InvalidNetwork(format!(
                            "line {k}: susceptance must be positive, got {b}"
                        )));
                    }
                }
            }
            if self.mode == Mode::Dc && line.susceptance() <= 0.0 {
                return Err(GridError::InvalidNetwork(format!(
                    "line {k}: DC analysis needs B > 0"
                )));
            }
            if let Some(limit) = line.thermal_limit {
                if !(limit > 0.0 && limit.is_finite()) {
                    return Err(GridError::InvalidNetwork(format!(
                        "line {k}: thermal limit must be positive"
                    )));
                }
            }
        }
        let components = self.component_count();
        if components != 1 {
            return Err(GridError::Disconnected { components });
        }
        if self.mode == Mode::Dc {
            let sum: f64 = self.nodes.iter().map(|n| n.p).sum();
            let scale: f64 = self.nodes.iter().map(|n| n.p.abs()).sum::<f64>().max(1.0);
            if sum.abs() > BALANCE_TOLERANCE * scale {
                return Err(GridError::Unbalanced { sum });
            }
        }
        Ok(())
    }

    fn component_count(&self) -> usize {
        let n = self.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut components = n;
        for line in &self.lines {
            let a = find(&mut parent, line.from.0);
            let b = find(&mut parent, line.to.0);
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn line(&self, id: LineId) -> Result<&Line> {
        self.lines
            .get(id.0)
            .ok_or_else(|| GridError::InvalidArgument(format!("no line {id} in network")))
    }

    pub fn injections(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.p).collect()
    }

    pub fn susceptances(&self) -> Vec<f64> {
        self.lines.iter().map(Line::susceptance).collect()
    }

    pub fn param_convention(&self) -> Option<ParamConvention> {
        self.lines.first().map(|l| l.params.convention())
    }

    /// Thermal limits, when every line has one.
    pub fn thermal_limits(&self) -> Option<Vec<f64>> {
        self.lines.iter().map(|l| l.thermal_limit).collect()
    }

    /// Node roles for AC analysis. Nodes without a role default to PQ, except
    /// that the lowest-index node becomes slack when no slack is declared.
    pub fn roles(&self) -> Vec<NodeRole> {
        let mut roles: Vec<_> = self
            .nodes
            .iter()
            .map(|n| n.role.unwrap_or(NodeRole::Pq))
            .collect();
        if !roles.contains(&NodeRole::Slack) {
            roles[0] = NodeRole::Slack;
        }
        roles
    }

    /// Neighbour lists: for each node, `(neighbour, line)` in line order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (k, line) in self.lines.iter().enumerate() {
            adj[line.from.0].push((line.to.0, k));
            adj[line.to.0].push((line.from.0, k));
        }
        adj
    }

    /// Lines whose removal disconnects the network.
    pub fn bridges(&self) -> Vec<LineId> {
        let n = self.nodes.len();
        let adj = self.adjacency();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0;
        let mut out = Vec::new();
        // iterative DFS: (node, parent line, next neighbour index)
        let mut stack: Vec<(usize, usize, usize)> = Vec::new();
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            stack.push((root, usize::MAX, 0));
            while let Some(&mut (x, parent_line, ref mut next)) = stack.last_mut() {
                if *next < adj[x].len() {
                    let (y, k) = adj[x][*next];
                    *next += 1;
                    if k == parent_line {
                        continue;
                    }
                    if disc[y] == usize::MAX {
                        disc[y] = timer;
                        low[y] = timer;
                        timer += 1;
                        stack.push((y, k, 0));
                    } else {
                        low[x] = low[x].min(disc[y]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[x]);
                        if low[x] > disc[p] {
                            out.push(LineId(parent_line));
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Copy with new real injections.
    pub fn with_injections(&self, p: &[f64]) -> Result<Self> {
        if p.len() != self.nodes.len() {
            return Err(GridError::InvalidArgument(format!(
                "expected {} injections, got {}",
                self.nodes.len(),
                p.len()
            )));
        }
        let mut nodes = self.nodes.clone();
        for (node, &pi) in nodes.iter_mut().zip(p) {
            node.p = pi;
        }
        Self::new(self.mode, nodes, self.lines.clone())
    }

    /// Copy with one line's parameters replaced.
    pub fn with_line_params(&self, id: LineId, params: LineParams) -> Result<Self> {
        self.line(id)?;
        let mut lines = self.lines.clone();
        lines[id.0].params = params;
        Self::new(self.mode, self.nodes.clone(), lines)
    }

    /// Copy with the susceptance of one line multiplied by `factor`.
    ///
    /// For impedance lines the impedance is divided by `factor`, which scales
    /// both G and B of the line.
    pub fn with_line_scaled(&self, id: LineId, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(GridError::InvalidArgument(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let params = match self.line(id)?.params {
            LineParams::Susceptance(b) => LineParams::Susceptance(b * factor),
            LineParams::Impedance {
                resistance,
                reactance,
            } => LineParams::Impedance {
                resistance: resistance / factor,
                reactance: reactance / factor,
            },
        };
        self.with_line_params(id, params)
    }

    /// Copy with every susceptance multiplied by `factor`.
    pub fn with_all_scaled(&self, factor: f64) -> Result<Self> {
        let mut out = self.clone();
        for k in 0..self.lines.len() {
            out = out.with_line_scaled(LineId(k), factor)?;
        }
        Ok(out)
    }

    /// Copy with an extra line appended (it gets the next line id).
    pub fn with_line_added(&self, line: Line) -> Result<Self> {
        let mut lines = self.lines.clone();
        lines.push(line);
        Self::new(self.mode, self.nodes.clone(), lines)
    }

    /// Copy with the stored orientation of one line reversed.
    pub fn with_line_flipped(&self, id: LineId) -> Result<Self> {
        self.line(id)?;
        let mut lines = self.lines.clone();
        let l = &mut lines[id.0];
        std::mem::swap(&mut l.from, &mut l.to);
        Self::new(self.mode, self.nodes.clone(), lines)
    }

    /// Copy with a different analysis mode, revalidated.
    pub fn with_mode(&self, mode: Mode) -> Result<Self> {
        Self::new(mode, self.nodes.clone(), self.lines.clone())
    }

    /// Number of independent cycles, `M - N + 1` for a connected network.
    pub fn cycle_rank(&self) -> usize {
        self.lines.len() + 1 - self.nodes.len()
    }
}
