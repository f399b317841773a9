//! Edge-to-edge susceptibilities `dF_uv / dB_st` of the DC flow and the
//! Braessian ground-truth labels derived from them.
//!
//! Differentiating `L theta = P` with respect to `B_st` gives
//! `d theta = -L^+ b_st (theta_s - theta_t)`, hence for a distinct line
//! `(u, v)`:
//!
//! ```text
//! dF_uv/dB_st = -B_uv (theta_s - theta_t) b_uv^T L^+ b_st
//! ```
//!
//! and for the upgraded line itself
//! `dF_st/dB_st = (theta_s - theta_t) (1 - B_st b_st^T L^+ b_st)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dc::{max_loaded_line, refined_flows, solve_with, DcSystem, LoadMeasure};
use crate::error::{GridError, Result};
use crate::grid::{GridNetwork, LineId, PowerFlowSolution};

/// Magnitude below which an upgrade counts as negligible, in per unit.
pub const DEFAULT_THRESHOLD: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgePairSusceptibility {
    pub upgraded: LineId,
    pub observed: LineId,
    /// `dF_observed / dB_upgraded`, both lines in stored orientation.
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BraessianLabel {
    Braessian,
    NonBraessian,
    Negligible,
}

impl BraessianLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BraessianLabel::Braessian => "braessian",
            BraessianLabel::NonBraessian => "non-braessian",
            BraessianLabel::Negligible => "negligible",
        }
    }
}

impl fmt::Display for BraessianLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Label from a (normalized) susceptibility and the observed line's flow.
/// The comparison is orientation free: flipping the observed line negates
/// both arguments.
pub fn label_from(normalized: f64, observed_flow: f64, threshold: f64) -> BraessianLabel {
    if normalized.abs() < threshold {
        BraessianLabel::Negligible
    } else if observed_flow == 0.0 || normalized.signum() == observed_flow.signum() {
        BraessianLabel::Braessian
    } else {
        BraessianLabel::NonBraessian
    }
}

/// Factor mapping susceptibilities to the per-unit system where the mean
/// susceptance and the largest injection magnitude are 1. Invariant under
/// global rescaling of B or P.
pub fn normalization(network: &GridNetwork) -> f64 {
    let b = network.susceptances();
    let mean_b = b.iter().sum::<f64>() / b.len().max(1) as f64;
    let max_p = network.injections().iter().map(|p| p.abs()).fold(0.0, f64::max);
    if max_p > 0.0 {
        mean_b / max_p
    } else {
        mean_b
    }
}

/// One DC solve and factorization shared by every pair evaluation on a network.
#[derive(Clone, Debug)]
pub struct SusceptibilityEngine<'a> {
    network: &'a GridNetwork,
    system: DcSystem,
    solution: PowerFlowSolution,
    susceptances: Vec<f64>,
}

impl<'a> SusceptibilityEngine<'a> {
    pub fn new(network: &'a GridNetwork) -> Result<Self> {
        let system = DcSystem::new(network)?;
        let solution = solve_with(network, &system, &network.injections())?;
        Ok(Self::from_parts(network, system, solution))
    }

    pub fn from_parts(network: &'a GridNetwork, system: DcSystem, solution: PowerFlowSolution) -> Self {
        SusceptibilityEngine {
            network,
            system,
            solution,
            susceptances: network.susceptances(),
        }
    }

    pub fn network(&self) -> &GridNetwork {
        self.network
    }

    pub fn solution(&self) -> &PowerFlowSolution {
        &self.solution
    }

    pub fn system(&self) -> &DcSystem {
        &self.system
    }

    fn endpoints(&self, id: LineId) -> Result<(usize, usize)> {
        let l = self.network.line(id)?;
        Ok((l.from.0, l.to.0))
    }

    pub fn pair(&self, upgraded: LineId, observed: LineId) -> Result<EdgePairSusceptibility> {
        if upgraded == observed {
            return Err(GridError::InvalidArgument(
                "upgraded and observed line coincide; use self_term".into(),
            ));
        }
        let (s, t) = self.endpoints(upgraded)?;
        let (u, v) = self.endpoints(observed)?;
        let theta = &self.solution.theta;
        let value = -self.susceptances[observed.0] * (theta[s] - theta[t]) * self.system.transfer(u, v, s, t);
        Ok(EdgePairSusceptibility {
            upgraded,
            observed,
            value,
        })
    }

    /// `dF_st / dB_st` for the upgraded line itself.
    pub fn self_term(&self, line: LineId) -> Result<f64> {
        let (s, t) = self.endpoints(line)?;
        let theta = &self.solution.theta;
        let r = self.system.transfer(s, t, s, t);
        Ok((theta[s] - theta[t]) * (1.0 - self.susceptances[line.0] * r))
    }

    /// Susceptibility of `observed` to every line; entry `observed` holds the
    /// self term. One extra linear solve in total.
    pub fn column(&self, observed: LineId) -> Result<Vec<f64>> {
        susceptibility_column(self.network, &self.system, &self.solution.theta, observed)
    }
}

/// [`SusceptibilityEngine::column`] for a factorization shared between
/// injection patterns on the same lines.
pub fn susceptibility_column(
    network: &GridNetwork,
    system: &DcSystem,
    theta: &[f64],
    observed: LineId,
) -> Result<Vec<f64>> {
    let line = network.line(observed)?;
    let (u, v) = (line.from.0, line.to.0);
    let b_uv = line.susceptance();
    let mut rhs = vec![0.0; network.node_count()];
    rhs[u] += 1.0;
    rhs[v] -= 1.0;
    let w = system.potentials(&rhs);
    Ok(network
        .lines()
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let (s, t) = (l.from.0, l.to.0);
            let d = theta[s] - theta[t];
            if k == observed.0 {
                d * (1.0 - b_uv * (w[s] - w[t]))
            } else {
                -b_uv * d * (w[s] - w[t])
            }
        })
        .collect())
}

/// Analytic susceptibility of `observed` to an infinitesimal upgrade of `upgraded`.
pub fn edge_susceptibility(network: &GridNetwork, upgraded: LineId, observed: LineId) -> Result<EdgePairSusceptibility> {
    SusceptibilityEngine::new(network)?.pair(upgraded, observed)
}

/// Default finite-difference step for a line: `1e-6 * B`.
pub fn default_delta(network: &GridNetwork, upgraded: LineId) -> Result<f64> {
    Ok(1e-6 * network.line(upgraded)?.susceptance())
}

/// Central difference `(F_uv(B + d) - F_uv(B - d)) / 2d` from two full DC
/// solves. The solves are refined in double-double precision so that the
/// difference of the two flows is not swamped by f64 rounding at small `d`.
pub fn finite_difference_susceptibility(
    network: &GridNetwork,
    upgraded: LineId,
    observed: LineId,
    delta: f64,
) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(GridError::InvalidArgument(format!("finite-difference step must be positive, got {delta}")));
    }
    let b = network.line(upgraded)?.susceptance();
    network.line(observed)?;
    if delta >= b {
        return Err(GridError::InvalidArgument(format!(
            "finite-difference step {delta} must be smaller than B = {b}"
        )));
    }
    let p = network.injections();
    let mut bs = network.susceptances();
    let (b_plus, b_minus) = (b + delta, b - delta);
    bs[upgraded.0] = b_plus;
    let plus = refined_flows(network, &bs, &p)?[observed.0];
    bs[upgraded.0] = b_minus;
    let minus = refined_flows(network, &bs, &p)?[observed.0];
    let diff = plus.add(minus.neg());
    // the step actually taken, after rounding of B +- d
    let step = b_plus - b_minus;
    Ok((diff.hi + diff.lo) / step)
}

/// Ground truth for one upgrade, observed on the maximally loaded line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub observed: LineId,
    pub susceptibility: f64,
    pub normalized: f64,
    pub label: BraessianLabel,
}

/// Classify an upgrade against the maximally loaded line (absolute load).
pub fn classify_ground_truth(network: &GridNetwork, upgraded: LineId, threshold: f64) -> Result<GroundTruth> {
    let engine = SusceptibilityEngine::new(network)?;
    let max = max_loaded_line(engine.solution(), network, LoadMeasure::Absolute)?;
    if max.is_ambiguous() {
        return Err(GridError::AmbiguousMaxLoad {
            lines: max.tied.iter().map(|l| l.0).collect(),
        });
    }
    if max.line == upgraded {
        return Err(GridError::InvalidArgument(
            "upgraded line is the maximally loaded line; self pairs are not classified".into(),
        ));
    }
    let pair = engine.pair(upgraded, max.line)?;
    let normalized = pair.value * normalization(network);
    Ok(GroundTruth {
        observed: max.line,
        susceptibility: pair.value,
        normalized,
        label: label_from(normalized, engine.solution().flows[max.line.0], threshold),
    })
}

/// One CSV row per `(upgraded, observed)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityRow {
    pub upgraded: usize,
    pub observed: usize,
    pub susceptibility: f64,
    pub label: BraessianLabel,
}

/// Every distinct pair with the given observed lines (all lines if `None`).
pub fn susceptibility_table(
    network: &GridNetwork,
    observed: Option<&[LineId]>,
    threshold: f64,
) -> Result<Vec<SusceptibilityRow>> {
    let engine = SusceptibilityEngine::new(network)?;
    let all: Vec<LineId> = (0..network.line_count()).map(LineId).collect();
    let observed = observed.unwrap_or(&all);
    let norm = normalization(network);
    let mut rows = Vec::new();
    for &obs in observed {
        let column = engine.column(obs)?;
        let flow = engine.solution().flows[obs.0];
        for (k, &value) in column.iter().enumerate() {
            if k == obs.0 {
                continue;
            }
            rows.push(SusceptibilityRow {
                upgraded: k,
                observed: obs.0,
                susceptibility: value,
                label: label_from(value * norm, flow, threshold),
            });
        }
    }
    Ok(rows)
}

pub fn table_to_csv(rows: &[SusceptibilityRow]) -> String {
    let mut out = String::from("upgraded,observed,susceptibility,label\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.upgraded, r.observed, r.susceptibility, r.label));
    }
    out
}
