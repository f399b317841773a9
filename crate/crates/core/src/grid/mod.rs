//! Network data model, bundled networks and file formats.

pub mod admittance;
pub mod fixtures;
pub mod format;
pub mod network;
pub mod solution;

pub use admittance::{admittance_matrix, line_admittance, series_admittance};
pub use fixtures::{example_network, example_networks};
pub use format::{load_network, parse_edge_list, parse_native, save_network, write_native, NetworkFormat};
pub use network::{
    GridNetwork, Line, LineId, LineParams, Mode, Node, NodeId, NodeRole, ParamConvention, BALANCE_TOLERANCE,
};
pub use solution::PowerFlowSolution;
