//! Hyperbolic-PDE front end: finite-difference reduction of first-order
//! PDE systems to FMII 2D models, the heat-exchanger instance, and the
//! 1D ODE comparison model.
//!
//! The PDE dx/dt = A1~ dx/dz + A2~ x + B~ u + sum L~_k f_k is discretized
//! with a first-order upwind step in z and an explicit step in t; the
//! stacked pair [x(z - dz), x(z)] becomes the FMII state.

use nalgebra::DMatrix;

use crate::model::{FaultSignature, FmiiModel};

/// First-order hyperbolic PDE system with constant coefficients.
#[derive(Clone, Debug)]
pub struct HyperbolicPde {
    /// Coefficient of the spatial derivative (n x n).
    pub a1: DMatrix<f64>,
    /// Zero-order coupling term (n x n).
    pub a2: DMatrix<f64>,
    /// Input map (n x m).
    pub b: DMatrix<f64>,
    /// Named fault maps, each n x 1.
    pub fault_maps: Vec<(String, DMatrix<f64>)>,
    pub dz: f64,
    pub dt: f64,
    /// Spatial length of the domain.
    pub length: f64,
}

impl HyperbolicPde {
    /// Diagnostics that do not block discretization. The scheme is used
    /// with the exact parameters a fixture prescribes, so a Courant
    /// number above one only warns.
    pub fn stability_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dz <= 0.0 || self.dt <= 0.0 {
            out.push("step sizes must be positive".to_string());
        }
        let courant = self.dt / self.dz * self.a1.norm();
        if courant > 1.0 + 1e-12 {
            out.push(format!(
                "Courant number dt/dz*|A1| = {courant:.3} exceeds 1; the explicit scheme may amplify"
            ));
        }
        out
    }

    /// Number of spatial cells over the domain length.
    pub fn cells(&self) -> usize {
        (self.length / self.dz).round() as usize
    }
}

/// Reduces the PDE to a 2n-state FMII model:
///
/// ```text
/// A1 = [0  I]      A2 = [      0                  0            ]
///      [0  0]           [-(dt/dz) A1~   I + (dt/dz) A1~ + dt A2~]
/// ```
///
/// with the input entering through the slot that multiplies u(i+1,j)
/// and the fault maps stacked as [0; L~_k] in the first signature slot.
pub fn discretize(pde: &HyperbolicPde) -> FmiiModel {
    let n = pde.a1.nrows();
    let ratio = pde.dt / pde.dz;

    let mut a1 = DMatrix::zeros(2 * n, 2 * n);
    a1.view_mut((0, n), (n, n))
        .copy_from(&DMatrix::identity(n, n));

    let mut a2 = DMatrix::zeros(2 * n, 2 * n);
    a2.view_mut((n, 0), (n, n)).copy_from(&(-ratio * &pde.a1));
    let lower_right = DMatrix::identity(n, n) + ratio * &pde.a1 + pde.dt * &pde.a2;
    a2.view_mut((n, n), (n, n)).copy_from(&lower_right);

    let m = pde.b.ncols();
    let b1 = DMatrix::zeros(2 * n, m);
    let mut b2 = DMatrix::zeros(2 * n, m);
    b2.view_mut((n, 0), (n, m)).copy_from(&pde.b);

    let faults = pde
        .fault_maps
        .iter()
        .map(|(name, l)| {
            let mut l1 = DMatrix::zeros(2 * n, 1);
            l1.view_mut((n, 0), (n, 1)).copy_from(l);
            FaultSignature::new(name.clone(), vec![l1, DMatrix::zeros(2 * n, 1)])
        })
        .collect();

    // Outputs default to the full stacked state; fixtures override C.
    let c = DMatrix::identity(2 * n, 2 * n);
    FmiiModel::new(vec![a1, a2], vec![b1, b2], c, faults)
}

/// Measurement scenario for the heat-exchanger fixture.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measurement {
    /// Both temperatures sensed: C = [[1,0,0,0],[0,0,0,1]].
    Full,
    /// Only the outer temperature sensed: C = [[0,1,0,0],[0,0,0,1]],
    /// with the leakage signature relocated to [0,1,0,0]^T by the state
    /// substitution that moves the fault off the measured channel.
    Partial,
}

/// The two-line parallel heat exchanger, discretized with
/// dz = dt = 0.1 and unit transport/transfer coefficients.
///
/// State: [T_f((i-1)dz), T_g((i-1)dz), T_f(i dz), T_g(i dz)] at time j dt.
/// Faults: f1 = leakage, f2 = fouling.
pub fn heat_exchanger_pde() -> HyperbolicPde {
    HyperbolicPde {
        a1: -DMatrix::identity(2, 2),
        a2: DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]),
        // Inlet temperatures distributed as an input: u(i,j) = u(0,j).
        b: DMatrix::from_row_slice(2, 2, &[1.1, -0.1, -0.1, 1.1]),
        fault_maps: vec![
            ("f1".to_string(), DMatrix::from_column_slice(2, 1, &[0.0, 1.0])),
            ("f2".to_string(), DMatrix::from_column_slice(2, 1, &[-1.0, 1.0])),
        ],
        dz: 0.1,
        dt: 0.1,
        length: 1.0,
    }
}

/// The two heat-exchanger fixture models with bit-exact coefficients.
pub fn heat_exchanger(measurement: Measurement) -> FmiiModel {
    let mut model = discretize(&heat_exchanger_pde());
    match measurement {
        Measurement::Full => {
            model.output_map =
                DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        }
        Measurement::Partial => {
            model.output_map =
                DMatrix::from_row_slice(2, 4, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
            model.faults[0].maps[0] = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 0.0, 0.0]);
        }
    }
    model
}

/// 1D comparison model: the same exchanger discretized in space only,
/// over `cells` intervals of width 1/cells.
///
/// State: [T_g(dz), T_f(dz), ..., T_g(N dz), T_f(N dz)], single shift
/// operator (block lower bidiagonal), outputs sampling every odd state.
/// Fault pair per node k: a (-1, 1) pattern on slots (2k-1, 2k) and an
/// elementary vector on the node's unmeasured slot 2k.
pub fn ode1d_model(cells: usize) -> FmiiModel {
    assert!(cells >= 1, "need at least one cell");
    let n = 2 * cells;
    let dz = 1.0 / cells as f64;
    let diag = DMatrix::from_row_slice(
        2,
        2,
        &[-(1.0 + dz) / dz, 1.0, 1.0, -(1.0 + dz) / dz],
    );
    let sub = -(1.0 / dz) * DMatrix::identity(2, 2);
    let mut a = DMatrix::zeros(n, n);
    for k in 0..cells {
        a.view_mut((2 * k, 2 * k), (2, 2)).copy_from(&diag);
        if k > 0 {
            a.view_mut((2 * k, 2 * (k - 1)), (2, 2)).copy_from(&sub);
        }
    }
    let mut b = DMatrix::zeros(n, 2);
    b[(0, 0)] = 1.0;
    b[(1, 1)] = 1.0;
    let mut c = DMatrix::zeros(cells, n);
    for k in 0..cells {
        c[(k, 2 * k)] = 1.0;
    }
    let mut faults = Vec::with_capacity(2 * cells);
    for k in 0..cells {
        let mut l1 = DMatrix::zeros(n, 1);
        l1[(2 * k, 0)] = -1.0;
        l1[(2 * k + 1, 0)] = 1.0;
        faults.push(FaultSignature::new(format!("f1_node{}", k + 1), vec![l1]));
        let mut l2 = DMatrix::zeros(n, 1);
        l2[(2 * k + 1, 0)] = 1.0;
        faults.push(FaultSignature::new(format!("f2_node{}", k + 1), vec![l2]));
    }
    FmiiModel::new(vec![a], vec![b], c, faults)
}
