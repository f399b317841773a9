//! Text formats for networks.
//!
//! Native format, one record per line, `#` starts a comment:
//!
//! ```text
//! mode: dc            # dc | ac
//! params: b           # b (susceptance in S) | rx (R and X in ohms)
//! nodes
//! # id  P  [Q  [E  [role]]]      role: slack | pv | pq
//! 0 1
//! 1 -1
//! lines
//! # from to B [limit]   or   from to R X [limit]
//! 0 1 1
//! ```
//!
//! Optional fields may be written as `-` to leave them empty while giving a
//! later field. Field order is fixed. Units: ohms, siemens, watts, volts.
//!
//! The edge-list format holds one `from to` pair per line and describes a
//! homogeneous topology (unit susceptance, zero injections).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{GridError, Result};
use crate::grid::network::{GridNetwork, Line, LineParams, Mode, Node, NodeId, NodeRole, ParamConvention};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetworkFormat {
    Native,
    EdgeList,
}

impl NetworkFormat {
    /// `.edges` files are edge lists, everything else is native.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("edges") => NetworkFormat::EdgeList,
            _ => NetworkFormat::Native,
        }
    }
}

pub fn load_network(path: &Path, format: Option<NetworkFormat>) -> Result<GridNetwork> {
    let text = std::fs::read_to_string(path)?;
    match format.unwrap_or_else(|| NetworkFormat::from_path(path)) {
        NetworkFormat::Native => parse_native(&text),
        NetworkFormat::EdgeList => parse_edge_list(&text),
    }
}

pub fn save_network(network: &GridNetwork, path: &Path) -> Result<()> {
    std::fs::write(path, write_native(network))?;
    Ok(())
}

#[derive(PartialEq)]
enum Section {
    Header,
    Nodes,
    Lines,
}

fn strip_comment(raw: &str) -> &str {
    raw.split('#').next().unwrap_or("").trim()
}

fn parse_err(line: usize, message: impl Into<String>) -> GridError {
    GridError::Parse {
        line,
        message: message.into(),
    }
}

fn field_f64(tok: &str, line: usize, name: &str) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(line, format!("field `{name}`: expected a number, found `{tok}`")))
}

fn optional_f64(tok: Option<&&str>, line: usize, name: &str) -> Result<Option<f64>> {
    match tok {
        None | Some(&"-") => Ok(None),
        Some(t) => field_f64(t, line, name).map(Some),
    }
}

fn field_usize(tok: &str, line: usize, name: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(line, format!("field `{name}`: expected a node index, found `{tok}`")))
}

pub fn parse_native(text: &str) -> Result<GridNetwork> {
    let mut mode = None;
    let mut convention = None;
    let mut section = Section::Header;
    let mut nodes = Vec::new();
    let mut lines = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let content = strip_comment(raw);
        if content.is_empty() {
            continue;
        }
        match content {
            "nodes" => {
                section = Section::Nodes;
                continue;
            }
            "lines" => {
                section = Section::Lines;
                continue;
            }
            _ => {}
        }
        if let Some((key, value)) = content.split_once(':') {
            if section != Section::Header {
                return Err(parse_err(lineno, "header fields must precede the nodes section"));
            }
            let value = value.trim();
            match key.trim() {
                "mode" => {
                    mode = Some(
                        value
                            .parse::<Mode>()
                            .map_err(|_| parse_err(lineno, format!("unknown mode `{value}`")))?,
                    )
                }
                "params" => {
                    convention = Some(match value {
                        "b" => ParamConvention::Susceptance,
                        "rx" => ParamConvention::Impedance,
                        other => {
                            return Err(parse_err(lineno, format!("unknown params `{other}`, expected b or rx")))
                        }
                    })
                }
                other => return Err(parse_err(lineno, format!("unknown header field `{other}`"))),
            }
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        match section {
            Section::Header => {
                return Err(parse_err(lineno, "record outside of a nodes or lines section"));
            }
            Section::Nodes => {
                if toks.len() < 2 || toks.len() > 5 {
                    return Err(parse_err(lineno, "node record needs `id P [Q [E [role]]]`"));
                }
                let id = field_usize(toks[0], lineno, "id")?;
                if id != nodes.len() {
                    return Err(parse_err(
                        lineno,
                        format!("field `id`: expected {}, found {id}", nodes.len()),
                    ));
                }
                let p = field_f64(toks[1], lineno, "P")?;
                let q = optional_f64(toks.get(2), lineno, "Q")?;
                let e = optional_f64(toks.get(3), lineno, "E")?;
                let role = match toks.get(4) {
                    None | Some(&"-") => None,
                    Some(r) => Some(
                        r.parse::<NodeRole>()
                            .map_err(|_| parse_err(lineno, format!("field `role`: unknown role `{r}`")))?,
                    ),
                };
                nodes.push(Node {
                    id: NodeId(id),
                    p,
                    q,
                    e,
                    role,
                });
            }
            Section::Lines => {
                let convention = convention
                    .ok_or_else(|| parse_err(lineno, "`params:` header missing before lines"))?;
                let (min, max) = match convention {
                    ParamConvention::Susceptance => (3, 4),
                    ParamConvention::Impedance => (4, 5),
                };
                if toks.len() < min || toks.len() > max {
                    let shape = match convention {
                        ParamConvention::Susceptance => "`from to B [limit]`",
                        ParamConvention::Impedance => "`from to R X [limit]`",
                    };
                    return Err(parse_err(lineno, format!("line record needs {shape}")));
                }
                let from = field_usize(toks[0], lineno, "from")?;
                let to = field_usize(toks[1], lineno, "to")?;
                let params = match convention {
                    ParamConvention::Susceptance => {
                        LineParams::Susceptance(field_f64(toks[2], lineno, "B")?)
                    }
                    ParamConvention::Impedance => LineParams::Impedance {
                        resistance: field_f64(toks[2], lineno, "R")?,
                        reactance: field_f64(toks[3], lineno, "X")?,
                    },
                };
                let thermal_limit = optional_f64(toks.get(min), lineno, "limit")?;
                lines.push(Line {
                    from: NodeId(from),
                    to: NodeId(to),
                    params,
                    thermal_limit,
                });
            }
        }
    }
    let mode = mode.ok_or_else(|| parse_err(1, "missing `mode:` header"))?;
    if convention.is_none() {
        return Err(parse_err(1, "missing `params:` header"));
    }
    GridNetwork::new(mode, nodes, lines)
}

/// Canonical native serialization. Numbers use the shortest representation
/// that parses back to the same `f64`.
pub fn write_native(network: &GridNetwork) -> String {
    let mut out = String::new();
    let convention = network
        .param_convention()
        .unwrap_or(ParamConvention::Susceptance);
    let _ = writeln!(out, "mode: {}", network.mode().as_str());
    let _ = writeln!(
        out,
        "params: {}",
        match convention {
            ParamConvention::Susceptance => "b",
            ParamConvention::Impedance => "rx",
        }
    );
    out.push_str("nodes\n");
    for node in network.nodes() {
        let mut fields = vec![node.id.0.to_string(), node.p.to_string()];
        let optional = [
            node.q.map(|v| v.to_string()),
            node.e.map(|v| v.to_string()),
            node.role.map(|r| r.as_str().to_string()),
        ];
        let last = optional.iter().rposition(Option::is_some);
        if let Some(last) = last {
            for field in &optional[..=last] {
                fields.push(field.clone().unwrap_or_else(|| "-".into()));
            }
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out.push_str("lines\n");
    for line in network.lines() {
        let mut fields = vec![line.from.0.to_string(), line.to.0.to_string()];
        match line.params {
            LineParams::Susceptance(b) => fields.push(b.to_string()),
            LineParams::Impedance {
                resistance,
                reactance,
            } => {
                fields.push(resistance.to_string());
                fields.push(reactance.to_string());
            }
        }
        if let Some(limit) = line.thermal_limit {
            fields.push(limit.to_string());
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_edge_list(text: &str) -> Result<GridNetwork> {
    let mut edges = Vec::new();
    let mut max_node = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let content = strip_comment(raw);
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(lineno, "edge record needs exactly `from to`"));
        }
        let u = field_usize(toks[0], lineno, "from")?;
        let v = field_usize(toks[1], lineno, "to")?;
        max_node = max_node.max(u).max(v);
        edges.push((u, v));
    }
    if edges.is_empty() {
        return Err(parse_err(1, "edge list is empty"));
    }
    GridNetwork::homogeneous(max_node + 1, &edges)
}
