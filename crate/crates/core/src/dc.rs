//! Linearized (DC) power flow over the weighted graph Laplacian.
//!
//! The reference node is always node 0. Angles solve the reduced system
//! obtained by deleting the reference row and column, which is symmetric
//! positive definite for a connected network and is factorized by Cholesky.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{GridError, Result};
use crate::grid::{GridNetwork, LineId, PowerFlowSolution, BALANCE_TOLERANCE};

/// Reference node of every DC solve.
pub const REFERENCE_NODE: usize = 0;

/// Relative residual bound accepted from the linear solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Weighted Laplacian `L = sum_e B_e (e_u - e_v)(e_u - e_v)^T`.
#[derive(Clone, Debug)]
pub struct Laplacian {
    matrix: DMatrix<f64>,
}

impl Laplacian {
    pub fn new(network: &GridNetwork) -> Self {
        Self::with_susceptances(network, &network.susceptances())
    }

    pub fn with_susceptances(network: &GridNetwork, b: &[f64]) -> Self {
        let n = network.node_count();
        let mut m = DMatrix::zeros(n, n);
        for (line, &bk) in network.lines().iter().zip(b) {
            let (u, v) = (line.from.0, line.to.0);
            m[(u, u)] += bk;
            m[(v, v)] += bk;
            m[(u, v)] -= bk;
            m[(v, u)] -= bk;
        }
        Laplacian { matrix: m }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.matrix * DVector::from_column_slice(x);
        v.iter().copied().collect()
    }

    /// Laplacian with the reference row and column removed.
    pub fn reduced(&self) -> DMatrix<f64> {
        self.matrix
            .clone()
            .remove_row(REFERENCE_NODE)
            .remove_column(REFERENCE_NODE)
    }
}

/// Factorized reduced Laplacian. Reusable for any number of right-hand sides.
#[derive(Clone, Debug)]
pub struct DcSystem {
    laplacian: Laplacian,
    cholesky: Option<Cholesky<f64, Dyn>>,
    n: usize,
}

impl DcSystem {
    pub fn new(network: &GridNetwork) -> Result<Self> {
        Self::with_susceptances(network, &network.susceptances())
    }

    /// Factorization for `network`'s topology with line susceptances `b`.
    pub fn with_susceptances(network: &GridNetwork, b: &[f64]) -> Result<Self> {
        if b.len() != network.line_count() {
            return Err(GridError::InvalidArgument(format!(
                "{} susceptances for {} lines",
                b.len(),
                network.line_count()
            )));
        }
        if let Some(k) = b.iter().position(|&b| !(b > 0.0)) {
            return Err(GridError::InvalidNetwork(format!(
                "line {k}: DC analysis needs B > 0"
            )));
        }
        let laplacian = Laplacian::with_susceptances(network, b);
        let n = network.node_count();
        let cholesky = if n > 1 {
            Some(Cholesky::new(laplacian.reduced()).ok_or_else(|| {
                GridError::Singular("reduced Laplacian is not positive definite (disconnected network?)".into())
            })?)
        } else {
            None
        };
        Ok(DcSystem {
            laplacian,
            cholesky,
            n,
        })
    }

    pub fn laplacian(&self) -> &Laplacian {
        &self.laplacian
    }

    /// Grounded potentials: `x` with `x[0] = 0` and `(L x)_i = rhs_i` for
    /// every non-reference node. For zero-sum `rhs` this satisfies `L x = rhs`
    /// and differs from `L^+ rhs` by a constant, so potential differences
    /// agree with the pseudoinverse.
    pub fn potentials(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        if let Some(chol) = &self.cholesky {
            let b = DVector::from_iterator(self.n - 1, rhs.iter().skip(1).copied());
            let sol = chol.solve(&b);
            x[1..].copy_from_slice(sol.as_slice());
        }
        x
    }

    /// `b_uv^T L^+ b_st` for incidence vectors `b_xy = e_x - e_y`.
    pub fn transfer(&self, u: usize, v: usize, s: usize, t: usize) -> f64 {
        let mut rhs = vec![0.0; self.n];
        rhs[s] += 1.0;
        rhs[t] -= 1.0;
        let x = self.potentials(&rhs);
        x[u] - x[v]
    }
}

fn check_balance(p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    let scale = p.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
    if sum.abs() > BALANCE_TOLERANCE * scale {
        return Err(GridError::Unbalanced { sum });
    }
    Ok(())
}

pub(crate) fn flows_from_angles(network: &GridNetwork, theta: &[f64]) -> Vec<f64> {
    network
        .lines()
        .iter()
        .map(|l| l.susceptance() * (theta[l.from.0] - theta[l.to.0]))
        .collect()
}

/// Solve `L theta = P` with `theta[0] = 0` and return per-line flows
/// `F_e = B_e (theta_u - theta_v)`.
pub fn solve_dc(network: &GridNetwork) -> Result<PowerFlowSolution> {
    let p = network.injections();
    check_balance(&p)?;
    let system = DcSystem::new(network)?;
    solve_with(network, &system, &p)
}

/// DC solve reusing a factorization of `network`'s Laplacian.
pub fn solve_with(network: &GridNetwork, system: &DcSystem, p: &[f64]) -> Result<PowerFlowSolution> {
    let theta = system.potentials(p);
    let lt = system.laplacian().apply(&theta);
    let residual = lt
        .iter()
        .zip(p)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = p.iter().map(|x| x.abs()).fold(1.0, f64::max);
    if residual > RESIDUAL_TOLERANCE * scale {
        return Err(GridError::Residual {
            residual,
            tolerance: RESIDUAL_TOLERANCE * scale,
        });
    }
    let flows = flows_from_angles(network, &theta);
    Ok(PowerFlowSolution {
        theta,
        voltage: None,
        flows,
        currents: None,
    })
}

/// Double-double number `hi + lo`, about 32 significant digits.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Dd {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    pub fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        Dd::renorm(s.hi, s.lo + self.lo + o.lo)
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn mul_f64(self, b: f64) -> Dd {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p);
        Dd::renorm(p, e + self.lo * b)
    }
}

/// Line flows for susceptances `b`, refined with residuals evaluated in
/// double-double arithmetic. The f64 factorization only has to drive the
/// correction, so the result is accurate far below f64 rounding; used where
/// differences of nearly equal flows matter.
pub(crate) fn refined_flows(network: &GridNetwork, b: &[f64], p: &[f64]) -> Result<Vec<Dd>> {
    check_balance(p)?;
    let system = DcSystem::with_susceptances(network, b)?;
    let lines = network.lines();
    let flows = |theta: &[Dd]| -> Vec<Dd> {
        lines
            .iter()
            .zip(b)
            .map(|(l, &bk)| theta[l.from.0].add(theta[l.to.0].neg()).mul_f64(bk))
            .collect()
    };
    let mut theta: Vec<Dd> = system.potentials(p).into_iter().map(Dd::from).collect();
    for _ in 0..REFINEMENT_STEPS {
        let mut r: Vec<Dd> = p.iter().map(|&x| Dd::from(x)).collect();
        for (l, f) in lines.iter().zip(flows(&theta)) {
            r[l.from.0] = r[l.from.0].add(f.neg());
            r[l.to.0] = r[l.to.0].add(f);
        }
        let rhs: Vec<f64> = r.iter().map(|x| x.hi).collect();
        for (t, d) in theta.iter_mut().zip(system.potentials(&rhs)) {
            *t = t.add(Dd::from(d));
        }
    }
    Ok(flows(&theta))
}

const REFINEMENT_STEPS: usize = 4;

/// Net signed flow leaving each node: `sum_{e=(i,.)} F_e - sum_{e=(.,i)} F_e`.
pub fn nodal_outflow(network: &GridNetwork, flows: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; network.node_count()];
    for (line, &f) in network.lines().iter().zip(flows) {
        out[line.from.0] += f;
        out[line.to.0] -= f;
    }
    out
}

/// Load measure for picking the maximally loaded line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoadMeasure {
    /// |F_e|
    #[default]
    Absolute,
    /// |F_e| / limit_e, requires a limit on every line.
    RelativeToLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxLoaded {
    pub line: LineId,
    pub load: f64,
    /// Every line within tie tolerance of the maximum, lowest id first.
    pub tied: Vec<LineId>,
}

impl MaxLoaded {
    pub fn is_ambiguous(&self) -> bool {
        self.tied.len() > 1
    }
}

const TIE_RELATIVE: f64 = 1e-9;
const TIE_ABSOLUTE: f64 = 1e-12;

/// Line with the highest load; ties go to the lowest line id and are reported.
pub fn max_loaded_line(
    solution: &PowerFlowSolution,
    network: &GridNetwork,
    measure: LoadMeasure,
) -> Result<MaxLoaded> {
    let loads = solution.line_currents();
    let loads: Vec<f64> = match measure {
        LoadMeasure::Absolute => loads,
        LoadMeasure::RelativeToLimit => {
            let limits = network.thermal_limits().ok_or_else(|| {
                GridError::InvalidArgument("relative load measure needs a thermal limit on every line".into())
            })?;
            loads.iter().zip(&limits).map(|(f, l)| f / l).collect()
        }
    };
    if loads.is_empty() {
        return Err(GridError::InvalidArgument("network has no lines".into()));
    }
    let max = loads.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_ABSOLUTE + TIE_RELATIVE * max.abs();
    let tied: Vec<LineId> = loads
        .iter()
        .enumerate()
        .filter(|(_, &l)| max - l <= tol)
        .map(|(k, _)| LineId(k))
        .collect();
    Ok(MaxLoaded {
        line: tied[0],
        load: max,
        tied,
    })
}
