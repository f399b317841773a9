//! Bundled networks.
//!
//! The two schematic networks carry unit susceptances and unit injections;
//! only their topology and flow directions are meaningful. `lab4` is an AC
//! ring with two generators and two motor loads. Its electrical parameters
//! are conventions chosen for a reactance sweep on line 4 (id 3), not
//! measured machine data.

use crate::error::{GridError, Result};
use crate::grid::format::parse_edge_list;
use crate::grid::network::{GridNetwork, Line, LineId, Mode, Node, NodeId, NodeRole};

const IEEE300_EDGES: &str = include_str!("../../data/ieee300.edges");

pub const EXAMPLE_NAMES: [&str; 4] = ["fig1a", "fig1b", "lab4", "ieee300"];

/// Four-node ring `0-2-1-3-0`, generators at 0 and 1, loads at 2 and 3.
pub fn fig1a() -> GridNetwork {
    GridNetwork::dc(
        &[1.0, 1.0, -1.0, -1.0],
        &[(0, 2, 1.0), (2, 1, 1.0), (1, 3, 1.0), (3, 0, 1.0)],
    )
    .expect("fig1a fixture is valid")
}

/// Line upgraded in the four-node scenario.
pub const FIG1A_UPGRADED: LineId = LineId(0);
/// Line whose flow grows when `FIG1A_UPGRADED` is reinforced.
pub const FIG1A_INCREASED: LineId = LineId(2);

/// Six-node ring with alternating generators (even ids) and loads (odd ids).
pub fn fig1b() -> GridNetwork {
    let lines: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6, 1.0)).collect();
    GridNetwork::dc(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0], &lines).expect("fig1b fixture is valid")
}

/// Line added in the six-node scenario: a chord between opposite nodes.
pub fn fig1b_added_line() -> Line {
    Line::with_susceptance(0, 3, 1.0)
}

/// Lines (left and right of the new chord) whose flow grows after the addition.
pub const FIG1B_INCREASED: [LineId; 2] = [LineId(1), LineId(4)];

/// Default parameters of the laboratory ring.
#[derive(Clone, Debug)]
pub struct LabParams {
    pub voltage: f64,
    pub generator_p: f64,
    pub motor_p: f64,
    pub motor_q: f64,
    pub resistance: f64,
    pub reactance: f64,
    /// Resistance of the swept line 4.
    pub upgraded_resistance: f64,
    /// Initial reactance of line 4.
    pub upgraded_reactance: f64,
}

impl Default for LabParams {
    fn default() -> Self {
        LabParams {
            voltage: 230.0,
            generator_p: 2000.0,
            motor_p: -2000.0,
            motor_q: -500.0,
            resistance: 0.02,
            reactance: 0.25,
            upgraded_resistance: 0.002,
            upgraded_reactance: 0.25,
        }
    }
}

/// Swept line of the laboratory ring ("line 4").
pub const LAB_UPGRADED: LineId = LineId(3);
/// Far line whose current rises as line 4 is upgraded ("line 2").
pub const LAB_ALIGNED: LineId = LineId(1);
/// Adjoining line whose current falls ("line 3").
pub const LAB_ANTI_ALIGNED: LineId = LineId(2);

/// Laboratory ring: line k (1-based) is `LineId(k - 1)`.
///
/// node 0: slack generator, node 1: motor (PQ), node 2: generator (PV),
/// node 3: motor (PQ). Lines: 1 = 0-1, 2 = 1-2, 3 = 2-3, 4 = 3-0.
pub fn lab4_with(params: &LabParams) -> Result<GridNetwork> {
    let node = |i: usize, p: f64, q: Option<f64>, role: NodeRole| Node {
        id: NodeId(i),
        p,
        q,
        e: Some(params.voltage),
        role: Some(role),
    };
    let nodes = vec![
        node(0, 0.0, None, NodeRole::Slack),
        node(1, params.motor_p, Some(params.motor_q), NodeRole::Pq),
        node(2, params.generator_p, None, NodeRole::Pv),
        node(3, params.motor_p, Some(params.motor_q), NodeRole::Pq),
    ];
    let lines = vec![
        Line::with_impedance(0, 1, params.resistance, params.reactance),
        Line::with_impedance(1, 2, params.resistance, params.reactance),
        Line::with_impedance(2, 3, params.resistance, params.reactance),
        Line::with_impedance(3, 0, params.upgraded_resistance, params.upgraded_reactance),
    ];
    GridNetwork::new(Mode::Ac, nodes, lines)
}

pub fn lab4() -> GridNetwork {
    lab4_with(&LabParams::default()).expect("lab4 fixture is valid")
}

/// Topology of the IEEE 300-bus test case, homogeneous lines, no injections.
/// Parallel branches are kept as distinct lines.
pub fn ieee300() -> GridNetwork {
    parse_edge_list(IEEE300_EDGES).expect("bundled IEEE 300 edge list is valid")
}

pub fn example_network(name: &str) -> Result<GridNetwork> {
    match name {
        "fig1a" => Ok(fig1a()),
        "fig1b" => Ok(fig1b()),
        "lab4" => Ok(lab4()),
        "ieee300" => Ok(ieee300()),
        other => Err(GridError::UnknownName {
            kind: "example network",
            name: other.to_string(),
        }),
    }
}

pub fn example_networks() -> Vec<(&'static str, GridNetwork)> {
    EXAMPLE_NAMES
        .iter()
        .map(|&name| (name, example_network(name).expect("bundled names resolve")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_shapes() {
        let a = fig1a();
        assert_eq!((a.node_count(), a.line_count()), (4, 4));
        assert_eq!(a.injections().iter().filter(|&&p| p > 0.0).count(), 2);
        let b = fig1b();
        assert_eq!(b.node_count(), 6);
        assert_eq!(b.injections().iter().filter(|&&p| p > 0.0).count(), 3);
        let ieee = ieee300();
        assert_eq!(ieee.node_count(), 300);
        assert_eq!(ieee.line_count(), 411);
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(
            example_network("fig9"),
            Err(GridError::UnknownName { .. })
        ));
    }

    #[test]
    fn every_bundled_network_is_balanced_and_connected() {
        for (name, net) in example_networks() {
            // construction validates connectivity; DC balance checked by re-validating in DC mode
            let dc = net.with_mode(Mode::Dc);
            if name == "lab4" {
                // AC fixture: slack absorbs the mismatch, so only connectivity applies
                assert!(net.with_injections(&[0.0; 4]).unwrap().with_mode(Mode::Dc).is_ok());
            } else {
                assert!(dc.is_ok(), "{name}");
            }
        }
    }
}
