//! Nonlinear AC power flow, Newton-Raphson in polar coordinates.
//!
//! Solves the nodal balance
//!
//! ```text
//! P_i = sum_j E_i E_j [G_ij cos(t_i - t_j) + B_ij sin(t_i - t_j)]
//! Q_i = sum_j E_i E_j [G_ij sin(t_i - t_j) - B_ij cos(t_i - t_j)]
//! ```
//!
//! with `Y = G + jB` the nodal admittance matrix. Internally voltages are
//! scaled by the largest setpoint and powers by its square (so the impedance
//! base is 1 ohm); inputs and outputs stay in SI units.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};
use crate::grid::{admittance_matrix, series_admittance, GridNetwork, LineId, LineParams, NodeRole, PowerFlowSolution};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Mismatch bound, infinity norm, per unit.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tolerance: 1e-8,
            max_iterations: 50,
        }
    }
}

/// Polar state of an AC solve.
#[derive(Clone, Debug, PartialEq)]
pub struct AcState {
    pub theta: Vec<f64>,
    /// Voltage magnitudes in volts.
    pub voltage: Vec<f64>,
    pub slack: usize,
    pub roles: Vec<NodeRole>,
}

#[derive(Clone, Debug)]
pub struct AcSolution {
    pub state: AcState,
    pub solution: PowerFlowSolution,
    /// Complex line currents in amperes, from -> to.
    pub line_currents: Vec<Complex64>,
    pub iterations: usize,
    /// Final mismatch, infinity norm, per unit.
    pub mismatch: f64,
}

fn check_roles(network: &GridNetwork, roles: &[NodeRole]) -> Result<usize> {
    if roles.len() != network.node_count() {
        return Err(GridError::InvalidArgument(format!(
            "expected {} node roles, got {}",
            network.node_count(),
            roles.len()
        )));
    }
    let slacks: Vec<usize> = roles
        .iter()
        .enumerate()
        .filter(|(_, r)| **r == NodeRole::Slack)
        .map(|(i, _)| i)
        .collect();
    match slacks.as_slice() {
        [s] => Ok(*s),
        [] => Err(GridError::InvalidArgument("AC solve needs exactly one slack node, found none".into())),
        _ => Err(GridError::InvalidArgument(format!(
            "AC solve needs exactly one slack node, found {}",
            slacks.len()
        ))),
    }
}

fn voltage_base(network: &GridNetwork) -> f64 {
    let max = network.nodes().iter().filter_map(|n| n.e).fold(0.0, f64::max);
    if max > 0.0 {
        max
    } else {
        1.0
    }
}

/// Complex power injections `S = V conj(Y V)` in per unit.
fn power_injections(y: &DMatrix<Complex64>, vm: &[f64], va: &[f64]) -> Vec<Complex64> {
    let v: Vec<Complex64> = vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect();
    let n = v.len();
    (0..n)
        .map(|i| {
            let iy: Complex64 = (0..n).map(|j| y[(i, j)] * v[j]).sum();
            v[i] * iy.conj()
        })
        .collect()
}

struct Layout {
    /// nodes with unknown angle (PV and PQ)
    angle: Vec<usize>,
    /// nodes with unknown magnitude (PQ)
    magnitude: Vec<usize>,
}

impl Layout {
    fn new(roles: &[NodeRole]) -> Self {
        let angle = (0..roles.len()).filter(|&i| roles[i] != NodeRole::Slack).collect();
        let magnitude = (0..roles.len()).filter(|&i| roles[i] == NodeRole::Pq).collect();
        Layout { angle, magnitude }
    }

    fn dim(&self) -> usize {
        self.angle.len() + self.magnitude.len()
    }
}

fn mismatch(layout: &Layout, s: &[Complex64], p: &[f64], q: &[f64]) -> DVector<f64> {
    let mut f = DVector::zeros(layout.dim());
    for (r, &i) in layout.angle.iter().enumerate() {
        f[r] = p[i] - s[i].re;
    }
    let off = layout.angle.len();
    for (r, &i) in layout.magnitude.iter().enumerate() {
        f[off + r] = q[i] - s[i].im;
    }
    f
}

fn jacobian(layout: &Layout, y: &DMatrix<Complex64>, vm: &[f64], va: &[f64], s: &[Complex64]) -> DMatrix<f64> {
    let dim = layout.dim();
    let off = layout.angle.len();
    let mut jac = DMatrix::zeros(dim, dim);
    // dP_i/dtheta_j, dP_i/dE_j, dQ_i/dtheta_j, dQ_i/dE_j
    let entry = |i: usize, j: usize| -> (f64, f64, f64, f64) {
        let g = y[(i, j)].re;
        let b = y[(i, j)].im;
        if i == j {
            let (pi, qi) = (s[i].re, s[i].im);
            let e = vm[i];
            (-qi - b * e * e, pi / e + g * e, pi - g * e * e, qi / e - b * e)
        } else {
            let d = va[i] - va[j];
            let (sn, cs) = d.sin_cos();
            let (ei, ej) = (vm[i], vm[j]);
            (
                ei * ej * (g * sn - b * cs),
                ei * (g * cs + b * sn),
                -ei * ej * (g * cs + b * sn),
                ei * (g * sn - b * cs),
            )
        }
    };
    for (r, &i) in layout.angle.iter().enumerate() {
        for (c, &j) in layout.angle.iter().enumerate() {
            jac[(r, c)] = entry(i, j).0;
        }
        for (c, &j) in layout.magnitude.iter().enumerate() {
            jac[(r, off + c)] = entry(i, j).1;
        }
    }
    for (r, &i) in layout.magnitude.iter().enumerate() {
        for (c, &j) in layout.angle.iter().enumerate() {
            jac[(off + r, c)] = entry(i, j).2;
        }
        for (c, &j) in layout.magnitude.iter().enumerate() {
            jac[(off + r, off + c)] = entry(i, j).3;
        }
    }
    jac
}

/// AC solve from a flat start (angles 0, magnitudes at setpoints).
pub fn solve_ac(network: &GridNetwork, roles: &[NodeRole], options: &NewtonOptions) -> Result<AcSolution> {
    solve_ac_from(network, roles, options, None)
}

/// AC solve from an optional initial state `(theta, E in volts)`. Slack and PV
/// magnitudes are always reset to their setpoints.
pub fn solve_ac_from(
    network: &GridNetwork,
    roles: &[NodeRole],
    options: &NewtonOptions,
    start: Option<(&[f64], &[f64])>,
) -> Result<AcSolution> {
    let slack = check_roles(network, roles)?;
    let n = network.node_count();
    let vbase = voltage_base(network);
    let sbase = vbase * vbase;
    let setpoint: Vec<f64> = network.nodes().iter().map(|nd| nd.e.unwrap_or(vbase) / vbase).collect();
    let p: Vec<f64> = network.nodes().iter().map(|nd| nd.p / sbase).collect();
    let q: Vec<f64> = network.nodes().iter().map(|nd| nd.q.unwrap_or(0.0) / sbase).collect();
    let y = admittance_matrix(network);

    let (mut va, mut vm) = match start {
        Some((theta, e)) if theta.len() == n && e.len() == n => {
            (theta.to_vec(), e.iter().map(|x| x / vbase).collect::<Vec<_>>())
        }
        Some(_) => return Err(GridError::InvalidArgument("initial state has the wrong length".into())),
        None => (vec![0.0; n], setpoint.clone()),
    };
    for i in 0..n {
        if roles[i] != NodeRole::Pq {
            vm[i] = setpoint[i];
        }
    }
    va[slack] = 0.0;

    let layout = Layout::new(roles);
    let mut s = power_injections(&y, &vm, &va);
    let mut f = mismatch(&layout, &s, &p, &q);
    let mut norm = f.amax();
    let mut iterations = 0;
    while norm >= options.tolerance {
        if iterations >= options.max_iterations || !norm.is_finite() {
            return Err(GridError::NonConvergence {
                iterations,
                mismatch: norm,
            });
        }
        iterations += 1;
        let jac = jacobian(&layout, &y, &vm, &va, &s);
        let dx = jac
            .lu()
            .solve(&f)
            .filter(|dx| dx.iter().all(|x| x.is_finite()))
            .ok_or(GridError::SingularJacobian { iteration: iterations })?;
        for (r, &i) in layout.angle.iter().enumerate() {
            va[i] += dx[r];
        }
        let off = layout.angle.len();
        for (r, &i) in layout.magnitude.iter().enumerate() {
            vm[i] += dx[off + r];
        }
        if vm.iter().any(|&m| !(m > 0.0)) {
            return Err(GridError::NonConvergence {
                iterations,
                mismatch: f64::INFINITY,
            });
        }
        s = power_injections(&y, &vm, &va);
        f = mismatch(&layout, &s, &p, &q);
        norm = f.amax();
    }

    let voltage: Vec<f64> = vm.iter().map(|m| m * vbase).collect();
    let v: Vec<Complex64> = voltage.iter().zip(&va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect();
    let line_currents: Vec<Complex64> = network
        .lines()
        .iter()
        .map(|l| series_admittance(&l.params) * (v[l.from.0] - v[l.to.0]))
        .collect();
    let flows = network
        .lines()
        .iter()
        .zip(&line_currents)
        .map(|(l, i)| (v[l.from.0] * i.conj()).re)
        .collect();
    let currents = line_currents.iter().map(|i| i.norm()).collect();
    Ok(AcSolution {
        state: AcState {
            theta: va.clone(),
            voltage: voltage.clone(),
            slack,
            roles: roles.to_vec(),
        },
        solution: PowerFlowSolution {
            theta: va,
            voltage: Some(voltage),
            flows,
            currents: Some(currents),
        },
        line_currents,
        iterations,
        mismatch: norm,
    })
}

/// Line current magnitudes for each swept reactance of one line.
#[derive(Clone, Debug, PartialEq)]
pub struct ReactanceSweep {
    pub line: LineId,
    pub x_ohms: Vec<f64>,
    /// `currents[k][e]` is |I_e| in amperes at `x_ohms[k]`.
    pub currents: Vec<Vec<f64>>,
}

impl ReactanceSweep {
    /// CSV with columns `X_ohms,I_0,...,I_{M-1}`.
    pub fn to_csv(&self) -> String {
        let m = self.currents.first().map_or(0, Vec::len);
        let mut out = String::from("X_ohms");
        for e in 0..m {
            out.push_str(&format!(",I_{e}"));
        }
        out.push('\n');
        for (x, row) in self.x_ohms.iter().zip(&self.currents) {
            out.push_str(&x.to_string());
            for c in row {
                out.push(',');
                out.push_str(&c.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Evenly spaced reactances from `from` to `to`, inclusive.
pub fn linspace(from: f64, to: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..steps)
            .map(|k| from + (to - from) * k as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// Solve the AC flow for each reactance of `line`. With `warm_start` each
/// point starts from the previous solution; every point is converged to the
/// same tolerance either way.
pub fn reactance_sweep(
    network: &GridNetwork,
    line: LineId,
    x_values: &[f64],
    roles: &[NodeRole],
    options: &NewtonOptions,
    warm_start: bool,
) -> Result<ReactanceSweep> {
    let resistance = match network.line(line)?.params {
        LineParams::Impedance { resistance, .. } => resistance,
        LineParams::Susceptance(_) => {
            return Err(GridError::InvalidArgument(
                "reactance sweep needs a network with R,X line parameters".into(),
            ))
        }
    };
    let mut currents = Vec::with_capacity(x_values.len());
    let mut previous: Option<AcState> = None;
    for &x in x_values {
        if !(x > 0.0 && x.is_finite()) {
            return Err(GridError::InvalidArgument(format!("reactance must be positive, got {x}")));
        }
        let tag = |e: GridError| GridError::SweepPoint {
            x_ohms: x,
            source: Box::new(e),
        };
        let net = network
            .with_line_params(
                line,
                LineParams::Impedance {
                    resistance,
                    reactance: x,
                },
            )
            .map_err(tag)?;
        let start = previous
            .as_ref()
            .filter(|_| warm_start)
            .map(|st| (st.theta.as_slice(), st.voltage.as_slice()));
        let sol = solve_ac_from(&net, roles, options, start).map_err(tag)?;
        currents.push(sol.solution.currents.clone().unwrap_or_default());
        previous = Some(sol.state);
    }
    Ok(ReactanceSweep {
        line,
        x_ohms: x_values.to_vec(),
        currents,
    })
}
