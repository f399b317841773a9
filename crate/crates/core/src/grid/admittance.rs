use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{GridError, Result};
use crate::grid::network::{GridNetwork, LineParams};

/// Off-diagonal nodal admittance entry of a line, `Y = -1/(R + jX)`,
/// returned as `(G, B) = (Re Y, Im Y)` in siemens.
pub fn line_admittance(resistance: f64, reactance: f64) -> Result<(f64, f64)> {
    if resistance < 0.0 {
        return Err(GridError::InvalidArgument(format!(
            "resistance must be non-negative, got {resistance}"
        )));
    }
    if resistance == 0.0 && reactance == 0.0 {
        return Err(GridError::InvalidArgument("degenerate line: R = X = 0".into()));
    }
    let y = -Complex64::new(1.0, 0.0) / Complex64::new(resistance, reactance);
    Ok((y.re, y.im))
}

/// Series admittance `1/(R + jX)` of a line. For directly specified
/// susceptance lines this is `-jB`, so that the off-diagonal entry is `+jB`.
pub fn series_admittance(params: &LineParams) -> Complex64 {
    match *params {
        LineParams::Impedance {
            resistance,
            reactance,
        } => Complex64::new(1.0, 0.0) / Complex64::new(resistance, reactance),
        LineParams::Susceptance(b) => Complex64::new(0.0, -b),
    }
}

/// Nodal admittance matrix: off-diagonals `Y_lk` summed over parallel lines,
/// diagonals the negative row sum of the off-diagonals.
pub fn admittance_matrix(network: &GridNetwork) -> DMatrix<Complex64> {
    let n = network.node_count();
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for line in network.lines() {
        let ys = series_admittance(&line.params);
        let (a, b) = (line.from.0, line.to.0);
        y[(a, b)] -= ys;
        y[(b, a)] -= ys;
        y[(a, a)] += ys;
        y[(b, b)] += ys;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn purely_reactive_line() {
        let (g, b) = line_admittance(0.0, 0.25).unwrap();
        assert_eq!(g, 0.0);
        assert_abs_diff_eq!(b, 4.0, epsilon = 1e-15);
    }

    #[test]
    fn purely_resistive_line() {
        let (g, b) = line_admittance(0.25, 0.0).unwrap();
        assert_abs_diff_eq!(g, -4.0, epsilon = 1e-15);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn mixed_line_matches_hand_division() {
        // -(0.1 - 0.2j) / (0.1^2 + 0.2^2) = -2 + 4j
        let (g, b) = line_admittance(0.1, 0.2).unwrap();
        assert_abs_diff_eq!(g, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_line_rejected() {
        assert!(line_admittance(0.0, 0.0).is_err());
        assert!(line_admittance(-1.0, 0.1).is_err());
    }

    #[test]
    fn matrix_rows_sum_to_zero() {
        use crate::grid::network::{Line, Mode, Node};
        let nodes = (0..3).map(|i| Node::dc(i, 0.0)).collect();
        let lines = vec![
            Line::with_impedance(0, 1, 0.1, 0.2),
            Line::with_impedance(1, 2, 0.0, 0.5),
            Line::with_impedance(0, 1, 0.3, 0.1),
        ];
        let net = GridNetwork::new(Mode::Ac, nodes, lines).unwrap();
        let y = admittance_matrix(&net);
        for i in 0..3 {
            let s: Complex64 = (0..3).map(|j| y[(i, j)]).sum();
            assert!(s.norm() < 1e-12);
        }
        let (g01, b01) = line_admittance(0.1, 0.2).unwrap();
        let (g01b, b01b) = line_admittance(0.3, 0.1).unwrap();
        assert_abs_diff_eq!(y[(0, 1)].re, g01 + g01b, epsilon = 1e-12);
        assert_abs_diff_eq!(y[(0, 1)].im, b01 + b01b, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn magnitude_identity(r in 0.0f64..10.0, x in -10.0f64..10.0) {
            prop_assume!(r * r + x * x > 1e-6);
            let (g, b) = line_admittance(r, x).unwrap();
            let lhs = g * g + b * b;
            let rhs = 1.0 / (r * r + x * x);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs);
        }
    }
}
