//! Data model for FMII systems, detection filters, and their validation.
//!
//! The FMII recursion with two shift operators is
//!
//! ```text
//! x(i+1,j+1) = A1 x(i,j+1) + A2 x(i+1,j) + B1 u(i,j+1) + B2 u(i+1,j)
//!            + sum_k L_k^1 f_k(i,j+1) + sum_k L_k^2 f_k(i+1,j)
//! y(i,j)     = C x(i,j)
//! ```
//!
//! The number of shift operators `k` is a runtime property so the 1D, 2D
//! and 3D invariance algebra share one code path.

use nalgebra::DMatrix;

use crate::subspace::DEFAULT_TOL_REL;

/// One fault channel: a name plus one signature matrix per shift slot.
///
/// A single-signature fault model is expressed by leaving all but one
/// slot zero.
#[derive(Clone, Debug)]
pub struct FaultSignature {
    pub name: String,
    /// k matrices, each n x r.
    pub maps: Vec<DMatrix<f64>>,
}

impl FaultSignature {
    pub fn new(name: impl Into<String>, maps: Vec<DMatrix<f64>>) -> Self {
        Self {
            name: name.into(),
            maps,
        }
    }

    /// n x (k*r) matrix stacking all slot signatures side by side; its
    /// column space is the subspace the fault can excite.
    pub fn combined(&self) -> DMatrix<f64> {
        let n = self.maps[0].nrows();
        let total: usize = self.maps.iter().map(|m| m.ncols()).sum();
        let mut out = DMatrix::zeros(n, total);
        let mut col = 0;
        for m in &self.maps {
            out.columns_mut(col, m.ncols()).copy_from(m);
            col += m.ncols();
        }
        out
    }
}

/// Fornasini-Marchesini model II with `k` shift operators (k = 1, 2, 3).
#[derive(Clone, Debug)]
pub struct FmiiModel {
    /// A_1..A_k, each n x n.
    pub shift_ops: Vec<DMatrix<f64>>,
    /// B_1..B_k, each n x m (all-zero when the model has no input).
    pub input_maps: Vec<DMatrix<f64>>,
    /// C, q x n.
    pub output_map: DMatrix<f64>,
    pub faults: Vec<FaultSignature>,
    /// Relative rank tolerance used by every subspace computation on
    /// this model.
    pub tol_rel: f64,
}

impl FmiiModel {
    pub fn new(
        shift_ops: Vec<DMatrix<f64>>,
        input_maps: Vec<DMatrix<f64>>,
        output_map: DMatrix<f64>,
        faults: Vec<FaultSignature>,
    ) -> Self {
        Self {
            shift_ops,
            input_maps,
            output_map,
            faults,
            tol_rel: DEFAULT_TOL_REL,
        }
    }

    pub fn with_tol(mut self, tol_rel: f64) -> Self {
        self.tol_rel = tol_rel;
        self
    }

    /// Number of shift operators.
    pub fn order(&self) -> usize {
        self.shift_ops.len()
    }

    /// State dimension n.
    pub fn state_dim(&self) -> usize {
        self.shift_ops.first().map_or(0, |a| a.nrows())
    }

    /// Input dimension m.
    pub fn input_dim(&self) -> usize {
        self.input_maps.first().map_or(0, |b| b.ncols())
    }

    /// Output dimension q.
    pub fn output_dim(&self) -> usize {
        self.output_map.nrows()
    }

    pub fn fault_count(&self) -> usize {
        self.faults.len()
    }

    pub fn fault_index(&self, name: &str) -> Option<usize> {
        self.faults.iter().position(|f| f.name == name)
    }

    /// Human-readable invariant violations; empty iff the model is well formed.
    pub fn validate(&self) -> Vec<String> {
        let mut diags = Vec::new();
        let k = self.shift_ops.len();
        if k == 0 {
            diags.push("model has no shift operators".to_string());
            return diags;
        }
        if !(1..=3).contains(&k) {
            diags.push(format!("unsupported shift-operator count k = {k}"));
        }
        let n = self.shift_ops[0].nrows();
        for (i, a) in self.shift_ops.iter().enumerate() {
            if a.nrows() != a.ncols() {
                diags.push(format!(
                    "A{} is {}x{}, expected square",
                    i + 1,
                    a.nrows(),
                    a.ncols()
                ));
            }
            if a.nrows() != n {
                diags.push(format!(
                    "A{} has dimension {}, expected {n}",
                    i + 1,
                    a.nrows()
                ));
            }
        }
        if self.input_maps.len() != k {
            diags.push(format!(
                "expected {k} input maps, found {}",
                self.input_maps.len()
            ));
        }
        let m = self.input_dim();
        for (i, b) in self.input_maps.iter().enumerate() {
            if b.nrows() != n || b.ncols() != m {
                diags.push(format!(
                    "B{} is {}x{}, expected {n}x{m}",
                    i + 1,
                    b.nrows(),
                    b.ncols()
                ));
            }
        }
        if self.output_map.ncols() != n {
            diags.push(format!(
                "C has {} columns, expected {n}",
                self.output_map.ncols()
            ));
        }
        for fault in &self.faults {
            if fault.maps.len() != k {
                diags.push(format!(
                    "fault '{}' carries {} signature slots, expected {k}",
                    fault.name,
                    fault.maps.len()
                ));
                continue;
            }
            let r = fault.maps[0].ncols();
            for (i, l) in fault.maps.iter().enumerate() {
                if l.nrows() != n {
                    diags.push(format!(
                        "fault '{}' slot {} has {} rows, expected {n}",
                        fault.name,
                        i + 1,
                        l.nrows()
                    ));
                }
                if l.ncols() != r {
                    diags.push(format!(
                        "fault '{}' slot {} has {} columns, expected {r}",
                        fault.name,
                        i + 1,
                        l.ncols()
                    ));
                }
            }
        }
        diags
    }
}

/// Gains of the 2D fault detection filter
///
/// ```text
/// w(i+1,j+1) = F1 w(i,j+1) + F2 w(i+1,j) + K1 u(i,j+1) + K2 u(i+1,j)
///            + E1 y(i,j+1) + E2 y(i+1,j)
/// r(i,j)     = M w(i,j) - H y(i,j)
/// ```
#[derive(Clone, Debug)]
pub struct DetectionFilter {
    pub f1: DMatrix<f64>,
    pub f2: DMatrix<f64>,
    pub k1: DMatrix<f64>,
    pub k2: DMatrix<f64>,
    pub e1: DMatrix<f64>,
    pub e2: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub h: DMatrix<f64>,
}

impl DetectionFilter {
    /// Filter state dimension o.
    pub fn state_dim(&self) -> usize {
        self.f1.nrows()
    }

    /// Residual dimension r.
    pub fn residual_dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn validate(&self, model: &FmiiModel) -> Vec<String> {
        let mut diags = Vec::new();
        let o = self.state_dim();
        for (name, g, rows, cols) in [
            ("F1", &self.f1, o, o),
            ("F2", &self.f2, o, o),
            ("K1", &self.k1, o, model.input_dim()),
            ("K2", &self.k2, o, model.input_dim()),
            ("E1", &self.e1, o, model.output_dim()),
            ("E2", &self.e2, o, model.output_dim()),
            ("M", &self.m, self.residual_dim(), o),
            ("H", &self.h, self.residual_dim(), model.output_dim()),
        ] {
            if g.nrows() != rows || g.ncols() != cols {
                diags.push(format!(
                    "{name} is {}x{}, expected {rows}x{cols}",
                    g.nrows(),
                    g.ncols()
                ));
            }
        }
        diags
    }
}

/// Roesser model with horizontal state r and vertical state s.
#[derive(Clone, Debug)]
pub struct RoesserModel {
    pub a11: DMatrix<f64>,
    pub a12: DMatrix<f64>,
    pub a21: DMatrix<f64>,
    pub a22: DMatrix<f64>,
    pub b11: DMatrix<f64>,
    pub b21: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Single-slot fault signatures on the stacked state.
    pub faults: Vec<(String, DMatrix<f64>)>,
}

impl RoesserModel {
    pub fn horizontal_dim(&self) -> usize {
        self.a11.nrows()
    }

    pub fn vertical_dim(&self) -> usize {
        self.a22.nrows()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("model validation failed: {0}")]
    Invalid(String),
}

/// Embeds a Roesser model into the FMII form:
/// A1 = [[A11, A12], [0, 0]], A2 = [[0, 0], [A21, A22]],
/// B1 = [B11; 0], B2 = [0; B21], and each fault signature split the same
/// way as the input maps.
pub fn roesser_to_fmii(r: &RoesserModel) -> Result<FmiiModel, ModelError> {
    let nr = r.horizontal_dim();
    let ns = r.vertical_dim();
    let n = nr + ns;
    if r.a11.ncols() != nr
        || r.a12.nrows() != nr
        || r.a12.ncols() != ns
        || r.a21.nrows() != ns
        || r.a21.ncols() != nr
        || r.a22.ncols() != ns
        || r.b11.nrows() != nr
        || r.b21.nrows() != ns
        || r.b11.ncols() != r.b21.ncols()
        || r.c.ncols() != n
    {
        return Err(ModelError::Invalid(
            "Roesser block dimensions do not conform".to_string(),
        ));
    }

    let mut a1 = DMatrix::zeros(n, n);
    a1.view_mut((0, 0), (nr, nr)).copy_from(&r.a11);
    a1.view_mut((0, nr), (nr, ns)).copy_from(&r.a12);
    let mut a2 = DMatrix::zeros(n, n);
    a2.view_mut((nr, 0), (ns, nr)).copy_from(&r.a21);
    a2.view_mut((nr, nr), (ns, ns)).copy_from(&r.a22);

    let m = r.b11.ncols();
    let mut b1 = DMatrix::zeros(n, m);
    b1.view_mut((0, 0), (nr, m)).copy_from(&r.b11);
    let mut b2 = DMatrix::zeros(n, m);
    b2.view_mut((nr, 0), (ns, m)).copy_from(&r.b21);

    let mut faults = Vec::with_capacity(r.faults.len());
    for (name, l) in &r.faults {
        if l.nrows() != n {
            return Err(ModelError::Invalid(format!(
                "fault '{name}' signature has {} rows, expected {n}",
                l.nrows()
            )));
        }
        let w = l.ncols();
        let mut l1 = DMatrix::zeros(n, w);
        l1.view_mut((0, 0), (nr, w)).copy_from(&l.view((0, 0), (nr, w)));
        let mut l2 = DMatrix::zeros(n, w);
        l2.view_mut((nr, 0), (ns, w))
            .copy_from(&l.view((nr, 0), (ns, w)));
        faults.push(FaultSignature::new(name.clone(), vec![l1, l2]));
    }

    let model = FmiiModel::new(vec![a1, a2], vec![b1, b2], r.c.clone(), faults);
    let diags = model.validate();
    if diags.is_empty() {
        Ok(model)
    } else {
        Err(ModelError::Invalid(diags.join("; ")))
    }
}
