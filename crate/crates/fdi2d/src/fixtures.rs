//! Reference systems used across tests, examples and the demo command.

use nalgebra::{dmatrix, DMatrix};

use crate::model::{FaultSignature, FmiiModel};
use crate::polymat::{BivarPoly, BivarPolyMatrix};

/// Four-state, two-fault system on which deadbeat- and parity-based
/// designs fail while the unobservability-subspace route isolates both
/// faults. Its PBH matrix loses rank at (2, 0) and (0, 2).
pub fn comparison_counterexample() -> FmiiModel {
    let a1 = dmatrix![
        0.0, 0.0, 0.5, 0.0;
        0.0, 0.5, 0.0, 0.5;
        0.0, 0.0, 0.0, 0.0;
        0.0, 0.0, 0.0, 0.0
    ];
    let a2 = dmatrix![
        0.0, 0.0, 0.0, 0.0;
        0.0, 0.0, 0.0, 0.0;
        0.5, 0.0, 0.5, 0.0;
        0.0, 0.5, 0.0, 0.5
    ];
    let c = dmatrix![
        1.0, 0.0, 0.0, 0.0;
        0.0, 0.0, 0.0, 1.0
    ];
    FmiiModel::new(
        vec![a1, a2],
        vec![DMatrix::zeros(4, 1), DMatrix::zeros(4, 1)],
        c,
        vec![
            FaultSignature::new(
                "f1",
                vec![
                    DMatrix::from_column_slice(4, 1, &[0.0, 0.0, 0.0, 1.0]),
                    DMatrix::zeros(4, 1),
                ],
            ),
            FaultSignature::new(
                "f2",
                vec![
                    DMatrix::from_column_slice(4, 1, &[0.0, 0.0, -1.0, 1.0]),
                    DMatrix::zeros(4, 1),
                ],
            ),
        ],
    )
}

/// The output-injection friends that keep span{[0,0,-1,1]} invariant for
/// [`comparison_counterexample`].
pub fn comparison_friends() -> (DMatrix<f64>, DMatrix<f64>) {
    let d1 = DMatrix::from_column_slice(4, 2, &[0.0, 0.0, 0.0, 0.0, 0.5, -0.5, 0.0, 0.0]);
    let d2 = DMatrix::from_column_slice(4, 2, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, -0.5]);
    (d1, d2)
}

/// Minimal left annihilator of the comparison model's PBH matrix,
/// N = [[a,0,c,0,e,0],[0,b,0,d,0,f]] with a = 2-z2, c = z1,
/// e = 0.5 z1 z2 + z2 - 2, b = z2, d = 2-z1, f = z1+z2-2.
pub fn comparison_annihilator() -> BivarPolyMatrix {
    let a = BivarPoly::from_coeffs(vec![vec![2.0, -1.0]]);
    let c = BivarPoly::from_coeffs(vec![vec![0.0], vec![1.0]]);
    let e = BivarPoly::from_coeffs(vec![vec![-2.0, 1.0], vec![0.0, 0.5]]);
    let b = BivarPoly::from_coeffs(vec![vec![0.0, 1.0]]);
    let d = BivarPoly::from_coeffs(vec![vec![2.0], vec![-1.0]]);
    let f = BivarPoly::from_coeffs(vec![vec![-2.0, 1.0], vec![1.0]]);
    let zero = BivarPoly::zero;
    BivarPolyMatrix::from_entries(
        2,
        6,
        vec![
            a,
            zero(),
            c,
            zero(),
            e,
            zero(),
            zero(),
            b,
            zero(),
            d,
            zero(),
            f,
        ],
    )
}

/// Published quotient pair and output map of the fully measured heat
/// exchanger after factoring out span{[0,0,-1,1]} (a non-orthonormal
/// quotient basis; entries differ from the one this crate constructs,
/// the spectra agree).
pub fn reference_heat_exchanger_quotient() -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let a1p = dmatrix![
        0.0, 0.0, -1.42;
        0.0, 0.0, 0.0;
        0.0, 0.0, 0.0
    ];
    let a2p = dmatrix![
        0.0, 0.0, 0.0;
        0.0, 0.0, 0.0;
        -0.7, -0.7, 0.0
    ];
    let m = dmatrix![1.0, 0.0, 0.0];
    (a1p, a2p, m)
}

/// Published Lyapunov weights for [`reference_heat_exchanger_quotient`].
pub fn reference_heat_exchanger_weights() -> (DMatrix<f64>, DMatrix<f64>) {
    (
        DMatrix::from_diagonal(&nalgebra::dvector![0.4, 1.0, 2.133]),
        DMatrix::from_diagonal(&nalgebra::dvector![0.4, 2.15, 0.86]),
    )
}

/// Published observer gain for the second shift slot of the reference
/// quotient. It enters the closed loop through output-error injection
/// D (y_p - y_hat), i.e. the certified pair is (A1p, A2p - D M).
pub fn reference_heat_exchanger_observer_gain() -> DMatrix<f64> {
    DMatrix::from_column_slice(3, 1, &[0.0, 0.0, -0.7])
}

/// Two-state system whose first fault pushes along an invariant
/// unobservable direction: a constant f1 from zero initial data leaves
/// the output identically zero, yet the subspace condition for
/// isolating f2 still holds. A reminder that the solvability conditions
/// are generic, not pointwise.
pub fn hidden_fault_model() -> FmiiModel {
    let a = DMatrix::<f64>::identity(2, 2) * 0.4;
    FmiiModel::new(
        vec![a.clone(), a],
        vec![DMatrix::zeros(2, 1), DMatrix::zeros(2, 1)],
        dmatrix![1.0, -1.0],
        vec![
            FaultSignature::new(
                "f1",
                vec![
                    DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
                    DMatrix::zeros(2, 1),
                ],
            ),
            FaultSignature::new(
                "f2",
                vec![
                    DMatrix::zeros(2, 1),
                    DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
                ],
            ),
        ],
    )
}
