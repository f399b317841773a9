use serde::{Deserialize, Serialize};

/// Result of a DC or AC flow computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    /// Voltage angles in radians; the reference node is exactly 0.
    pub theta: Vec<f64>,
    /// Voltage magnitudes in volts (AC only).
    pub voltage: Option<Vec<f64>>,
    /// Real power per line, signed in the line's from -> to orientation.
    /// AC flows are measured at the sending (`from`) terminal.
    pub flows: Vec<f64>,
    /// Current magnitude per line in amperes (AC only).
    pub currents: Option<Vec<f64>>,
}

impl PowerFlowSolution {
    /// Per-line loading used by screening: |I| for AC, |F| for DC.
    pub fn line_currents(&self) -> Vec<f64> {
        match &self.currents {
            Some(c) => c.clone(),
            None => self.flows.iter().map(|f| f.abs()).collect(),
        }
    }
}
