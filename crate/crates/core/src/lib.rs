//! Power-flow analysis for studying Braess' paradox in electric grids.
//!
//! - [`grid`]: network model, bundled networks, file formats
//! - [`dc`] and [`ac`]: linearized and full nonlinear power flow
//! - [`solvers`]: flow solvers registered by name
//! - [`susceptibility`]: edge-to-edge flow sensitivities and Braessian labels
//! - [`predictor`]: topological prediction of Braessian lines
//! - [`topology`]: ensemble generators registered by name
//! - [`evaluation`]: predictor versus ground truth over ensembles
//! - [`extension`]: (N+1) reinforcement screening and what-if extensions

pub mod ac;
pub mod dc;
pub mod error;
pub mod evaluation;
pub mod extension;
pub mod grid;
pub mod predictor;
pub mod solvers;
pub mod susceptibility;
pub mod topology;

pub use error::{ErrorCategory, GridError, Result};
