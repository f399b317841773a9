//! (N+1) reinforcement screening and single what-if extensions.
//!
//! Each line in turn has its capacity scaled (doubled by default) and the
//! network is re-solved; every other line's current before and after is
//! recorded and compared with its thermal limit.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};
use crate::grid::{GridNetwork, Line, LineId};
use crate::solvers::{FlowSolver, SolverRegistry};

/// A finite change to the network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Extension {
    /// Multiply the line's susceptance by `factor` (impedance divided by it).
    ScaleLine { line: LineId, factor: f64 },
    /// Append a new line; it receives the next line id.
    AddLine(Line),
}

/// Apply `change` to a copy of `network`.
pub fn apply_extension(network: &GridNetwork, change: &Extension) -> Result<GridNetwork> {
    match change {
        Extension::ScaleLine { line, factor } => network.with_line_scaled(*line, *factor),
        Extension::AddLine(line) => {
            let n = network.node_count();
            if line.from.0 >= n || line.to.0 >= n {
                return Err(GridError::InvalidArgument(format!(
                    "new line {}-{} references a missing node",
                    line.from, line.to
                )));
            }
            if let Some(k) = network
                .lines()
                .iter()
                .position(|l| l.same_endpoints(line) && l.params == line.params)
            {
                return Err(GridError::InvalidArgument(format!(
                    "new line duplicates line {k}"
                )));
            }
            network.with_line_added(line.clone())
        }
    }
}

pub const DEFAULT_FACTOR: f64 = 2.0;
pub const DEFAULT_HEADROOM: f64 = 1.5;
pub const DEFAULT_BIN_WIDTH: f64 = 0.05;

/// Currents below this fraction of the largest base current count as zero,
/// so round-off on idle lines does not produce huge relative changes.
pub const ZERO_CURRENT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub factor: f64,
    /// Synthesized limit `headroom * |I_base|` for lines without one.
    pub headroom: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            factor: DEFAULT_FACTOR,
            headroom: DEFAULT_HEADROOM,
        }
    }
}

/// Thermal limit of one observed line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub synthesized: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCase {
    pub upgraded: LineId,
    pub observed: LineId,
    pub before: f64,
    pub after: f64,
    pub absolute_change: f64,
    /// `(after - before) / before`; `None` when the line was idle.
    pub relative_change: Option<f64>,
    pub overload: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub upgraded: LineId,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub solver: String,
    pub factor: f64,
    pub base_currents: Vec<f64>,
    pub thresholds: Vec<Threshold>,
    pub cases: Vec<SweepCase>,
    /// Upgrades whose re-solve failed; the sweep continues past them.
    pub failures: Vec<SweepFailure>,
}

fn thresholds(network: &GridNetwork, base: &[f64], headroom: f64) -> Vec<Threshold> {
    network
        .lines()
        .iter()
        .zip(base)
        .map(|(l, &i)| match l.thermal_limit {
            Some(value) => Threshold {
                value,
                synthesized: false,
            },
            None => Threshold {
                value: headroom * i,
                synthesized: true,
            },
        })
        .collect()
}

/// Scale every line in turn and record all other lines' currents.
pub fn n_plus_one_sweep(network: &GridNetwork, solver: &dyn FlowSolver, options: &SweepOptions) -> Result<SweepResult> {
    if !(options.headroom > 0.0 && options.headroom.is_finite()) {
        return Err(GridError::InvalidArgument(format!(
            "headroom must be positive, got {}",
            options.headroom
        )));
    }
    let base = solver.solve(network)?.line_currents();
    let idle = ZERO_CURRENT * base.iter().copied().fold(1.0, f64::max);
    let limits = thresholds(network, &base, options.headroom);
    let per_line: Vec<std::result::Result<Vec<SweepCase>, SweepFailure>> = (0..network.line_count())
        .into_par_iter()
        .map(|a| {
            let fail = |e: GridError| SweepFailure {
                upgraded: LineId(a),
                message: e.to_string(),
            };
            let derived = network.with_line_scaled(LineId(a), options.factor).map_err(|e| fail(e))?;
            let after = solver.solve(&derived).map_err(|e| fail(e))?.line_currents();
            Ok((0..network.line_count())
                .filter(|&e| e != a)
                .map(|e| {
                    let (b, f) = (base[e], after[e]);
                    let lim = limits[e];
                    // a synthesized limit on an idle line is zero and flags nothing
                    let overload = !(lim.synthesized && b <= idle) && f > lim.value;
                    SweepCase {
                        upgraded: LineId(a),
                        observed: LineId(e),
                        before: b,
                        after: f,
                        absolute_change: f - b,
                        relative_change: (b > idle).then(|| (f - b) / b),
                        overload,
                    }
                })
                .collect())
        })
        .collect();
    let mut cases = Vec::new();
    let mut failures = Vec::new();
    for r in per_line {
        match r {
            Ok(c) => cases.extend(c),
            Err(f) => failures.push(f),
        }
    }
    Ok(SweepResult {
        solver: solver.name().to_string(),
        factor: options.factor,
        base_currents: base,
        thresholds: limits,
        cases,
        failures,
    })
}

/// Sweep with the solver registered as `mode` ("dc" or "ac").
pub fn n_plus_one_sweep_named(network: &GridNetwork, mode: &str, options: &SweepOptions) -> Result<SweepResult> {
    let registry = SolverRegistry::default();
    n_plus_one_sweep(network, registry.get(mode)?, options)
}

/// Normalized histogram over equal-width bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub width: f64,
    /// `(lower edge, count)` of the non-empty bins, ascending.
    pub bins: Vec<(f64, u64)>,
    pub total: u64,
}

impl Histogram {
    /// Bins `[(k - 1/2) w, (k + 1/2) w)`: zero sits at the center of a bin.
    pub fn centered(values: &[f64], width: f64) -> Result<Self> {
        Self::build(values, width, 0.5)
    }

    /// Bins `[k w, (k + 1) w)`.
    pub fn aligned(values: &[f64], width: f64) -> Result<Self> {
        Self::build(values, width, 0.0)
    }

    fn build(values: &[f64], width: f64, offset: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(GridError::InvalidArgument(format!("bin width must be positive, got {width}")));
        }
        let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
        for &x in values {
            *counts.entry((x / width + offset).floor() as i64).or_default() += 1;
        }
        Ok(Histogram {
            width,
            bins: counts
                .into_iter()
                .map(|(k, c)| ((k as f64 - offset) * width, c))
                .collect(),
            total: values.len() as u64,
        })
    }

    /// Lower edge of the fullest bin (first one on ties).
    pub fn mode(&self) -> Option<f64> {
        let max = self.bins.iter().map(|b| b.1).max()?;
        self.bins.iter().find(|b| b.1 == max).map(|b| b.0)
    }

    pub fn count_containing(&self, x: f64) -> u64 {
        self.bins
            .iter()
            .find(|(lo, _)| *lo <= x && x < lo + self.width)
            .map_or(0, |b| b.1)
    }
}

impl SweepResult {
    pub fn relative_changes(&self) -> Vec<f64> {
        self.cases.iter().filter_map(|c| c.relative_change).collect()
    }

    /// All-pairs histogram of relative current changes.
    pub fn change_histogram(&self, width: f64) -> Result<Histogram> {
        Histogram::centered(&self.relative_changes(), width)
    }

    /// Per observed line: histogram of its current across all upgrades.
    pub fn current_histograms(&self, width: f64) -> Result<Vec<(LineId, Histogram)>> {
        let mut per: Vec<Vec<f64>> = vec![Vec::new(); self.base_currents.len()];
        for c in &self.cases {
            per[c.observed.0].push(c.after);
        }
        per.into_iter()
            .enumerate()
            .map(|(e, v)| Ok((LineId(e), Histogram::aligned(&v, width)?)))
            .collect()
    }

    pub fn overloads(&self) -> impl Iterator<Item = &SweepCase> {
        self.cases.iter().filter(|c| c.overload)
    }

    pub fn cases_csv(&self) -> String {
        let mut out = String::from(
            "upgraded,observed,before,after,absolute_change,relative_change,threshold,synthesized_limit,overload\n",
        );
        for c in &self.cases {
            let th = self.thresholds[c.observed.0];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                c.upgraded,
                c.observed,
                c.before,
                c.after,
                c.absolute_change,
                c.relative_change.map(|x| x.to_string()).unwrap_or_default(),
                th.value,
                th.synthesized,
                c.overload
            ));
        }
        out
    }

    pub fn failures_csv(&self) -> String {
        let mut out = String::from("upgraded,message\n");
        for f in &self.failures {
            out.push_str(&format!("{},\"{}\"\n", f.upgraded, f.message.replace('"', "'")));
        }
        out
    }
}

/// `bin_low,bin_high,bin_center,count,fraction,density`
pub fn histogram_csv(h: &Histogram) -> String {
    let mut out = String::from("bin_low,bin_high,bin_center,count,fraction,density\n");
    for &(lo, c) in &h.bins {
        let frac = if h.total > 0 { c as f64 / h.total as f64 } else { 0.0 };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            lo,
            lo + h.width,
            lo + h.width / 2.0,
            c,
            frac,
            frac / h.width
        ));
    }
    out
}

/// `observed,bin_low,bin_high,count,fraction`
pub fn current_histograms_csv(hs: &[(LineId, Histogram)]) -> String {
    let mut out = String::from("observed,bin_low,bin_high,count,fraction\n");
    for (line, h) in hs {
        for &(lo, c) in &h.bins {
            let frac = if h.total > 0 { c as f64 / h.total as f64 } else { 0.0 };
            out.push_str(&format!("{},{},{},{},{}\n", line, lo, lo + h.width, c, frac));
        }
    }
    out
}
