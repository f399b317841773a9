//! Flow solvers selectable by name.

use std::collections::BTreeMap;

use crate::ac::{solve_ac, NewtonOptions};
use crate::dc::solve_dc;
use crate::error::{GridError, Result};
use crate::grid::{GridNetwork, PowerFlowSolution};

pub trait FlowSolver: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, network: &GridNetwork) -> Result<PowerFlowSolution>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DcSolver;

impl FlowSolver for DcSolver {
    fn name(&self) -> &'static str {
        "dc"
    }
    fn solve(&self, network: &GridNetwork) -> Result<PowerFlowSolution> {
        solve_dc(network)
    }
}

/// Newton-Raphson from a flat start, node roles taken from the network.
#[derive(Clone, Copy, Debug, Default)]
pub struct AcSolver {
    pub options: NewtonOptions,
}

impl FlowSolver for AcSolver {
    fn name(&self) -> &'static str {
        "ac"
    }
    fn solve(&self, network: &GridNetwork) -> Result<PowerFlowSolution> {
        Ok(solve_ac(network, &network.roles(), &self.options)?.solution)
    }
}

pub struct SolverRegistry {
    solvers: BTreeMap<&'static str, Box<dyn FlowSolver>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        SolverRegistry {
            solvers: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, solver: Box<dyn FlowSolver>) {
        self.solvers.insert(solver.name(), solver);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.solvers.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn FlowSolver> {
        self.solvers.get(name).map(|s| s.as_ref()).ok_or_else(|| GridError::UnknownName {
            kind: "solver",
            name: name.to_string(),
        })
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut r = SolverRegistry::empty();
        r.register(Box::new(DcSolver));
        r.register(Box::new(AcSolver::default()));
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::fixtures::{fig1a, lab4};

    #[test]
    fn lookup_by_name() {
        let reg = SolverRegistry::default();
        assert_eq!(reg.names(), vec!["ac", "dc"]);
        let dc = reg.get("dc").unwrap().solve(&fig1a()).unwrap();
        assert_eq!(dc.flows.len(), 4);
        let ac = reg.get("ac").unwrap().solve(&lab4()).unwrap();
        assert!(ac.currents.is_some());
        assert!(matches!(reg.get("gauss-seidel"), Err(GridError::UnknownName { .. })));
    }
}
