//! JSON document formats and CSV export.
//!
//! All matrices travel as row-major nested arrays of numbers, which
//! round-trips f64 values exactly (shortest-representation printing on
//! write, exact parse on read). Scenario and threshold documents reuse
//! the simulation types directly.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::model::{DetectionFilter, FaultSignature, FmiiModel};
use crate::polymat::{BivarPoly, BivarPolyMatrix};
use crate::sim::{AlarmPlane, Plane};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("document invalid: {0}")]
    Invalid(String),
}

pub type Rows = Vec<Vec<f64>>;

fn to_rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter()
        .map(|row| row.iter().copied().collect())
        .collect()
}

fn from_rows(rows: &Rows, what: &str) -> Result<DMatrix<f64>, IoError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(IoError::Invalid(format!("{what}: ragged rows")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(nrows, ncols, &flat))
}

/// One fault entry of a system document.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FaultDocument {
    pub name: String,
    /// k signature matrices, row-major.
    pub l: Vec<Rows>,
}

/// JSON description of an FMII model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemDocument {
    pub n: usize,
    pub m: usize,
    pub q: usize,
    pub k: usize,
    pub a: Vec<Rows>,
    pub b: Vec<Rows>,
    pub c: Rows,
    pub faults: Vec<FaultDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    pub rank_rel: f64,
}

impl SystemDocument {
    pub fn from_model(model: &FmiiModel) -> Self {
        Self {
            n: model.state_dim(),
            m: model.input_dim(),
            q: model.output_dim(),
            k: model.order(),
            a: model.shift_ops.iter().map(to_rows).collect(),
            b: model.input_maps.iter().map(to_rows).collect(),
            c: to_rows(&model.output_map),
            faults: model
                .faults
                .iter()
                .map(|f| FaultDocument {
                    name: f.name.clone(),
                    l: f.maps.iter().map(to_rows).collect(),
                })
                .collect(),
            tolerances: Some(Tolerances {
                rank_rel: model.tol_rel,
            }),
        }
    }

    pub fn into_model(&self) -> Result<FmiiModel, IoError> {
        let shift_ops = self
            .a
            .iter()
            .map(|rows| from_rows(rows, "A"))
            .collect::<Result<Vec<_>, _>>()?;
        let input_maps = self
            .b
            .iter()
            .map(|rows| from_rows(rows, "B"))
            .collect::<Result<Vec<_>, _>>()?;
        let output_map = from_rows(&self.c, "C")?;
        let faults = self
            .faults
            .iter()
            .map(|f| {
                let maps = f
                    .l
                    .iter()
                    .map(|rows| from_rows(rows, &f.name))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(FaultSignature::new(f.name.clone(), maps))
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        let mut model = FmiiModel::new(shift_ops, input_maps, output_map, faults);
        if let Some(t) = self.tolerances {
            model.tol_rel = t.rank_rel;
        }
        if self.k != model.order() || self.n != model.state_dim() {
            return Err(IoError::Invalid(format!(
                "declared k = {}, n = {} disagree with matrix shapes k = {}, n = {}",
                self.k,
                self.n,
                model.order(),
                model.state_dim()
            )));
        }
        if self.m != model.input_dim() || self.q != model.output_dim() {
            return Err(IoError::Invalid(
                "declared m, q disagree with matrix shapes".into(),
            ));
        }
        let diags = model.validate();
        if !diags.is_empty() {
            return Err(IoError::Invalid(diags.join("; ")));
        }
        Ok(model)
    }
}

/// JSON description of a synthesized detection filter, together with the
/// construction byproducts worth keeping around.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FilterDocument {
    pub f1: Rows,
    pub f2: Rows,
    pub k1: Rows,
    pub k2: Rows,
    pub e1: Rows,
    pub e2: Rows,
    pub m: Rows,
    pub h: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r1: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_fault: Option<String>,
}

impl FilterDocument {
    pub fn from_filter(filter: &DetectionFilter) -> Self {
        Self {
            f1: to_rows(&filter.f1),
            f2: to_rows(&filter.f2),
            k1: to_rows(&filter.k1),
            k2: to_rows(&filter.k2),
            e1: to_rows(&filter.e1),
            e2: to_rows(&filter.e2),
            m: to_rows(&filter.m),
            h: to_rows(&filter.h),
            p: None,
            d1: None,
            d2: None,
            r1: None,
            r2: None,
            target_fault: None,
        }
    }

    pub fn into_filter(&self) -> Result<DetectionFilter, IoError> {
        Ok(DetectionFilter {
            f1: from_rows(&self.f1, "F1")?,
            f2: from_rows(&self.f2, "F2")?,
            k1: from_rows(&self.k1, "K1")?,
            k2: from_rows(&self.k2, "K2")?,
            e1: from_rows(&self.e1, "E1")?,
            e2: from_rows(&self.e2, "E2")?,
            m: from_rows(&self.m, "M")?,
            h: from_rows(&self.h, "H")?,
        })
    }

    pub fn with_projection(mut self, p: &DMatrix<f64>) -> Self {
        self.p = Some(to_rows(p));
        self
    }

    pub fn with_friends(mut self, d1: &DMatrix<f64>, d2: &DMatrix<f64>) -> Self {
        self.d1 = Some(to_rows(d1));
        self.d2 = Some(to_rows(d2));
        self
    }

    pub fn with_certificate(mut self, r1: &DMatrix<f64>, r2: &DMatrix<f64>) -> Self {
        self.r1 = Some(to_rows(r1));
        self.r2 = Some(to_rows(r2));
        self
    }

    pub fn with_target(mut self, name: &str) -> Self {
        self.target_fault = Some(name.to_string());
        self
    }
}

/// Coefficient-table form of a bivariate polynomial matrix: entry
/// (i, j) is `entries[i][j]`, a table c[d1][d2] of coefficients of
/// z1^d1 z2^d2.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyMatrixDocument {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<Vec<Vec<f64>>>>,
}

impl PolyMatrixDocument {
    pub fn from_matrix(m: &BivarPolyMatrix) -> Self {
        let entries = (0..m.rows())
            .map(|i| {
                (0..m.cols())
                    .map(|j| m.entry(i, j).coeffs().to_vec())
                    .collect()
            })
            .collect();
        Self {
            rows: m.rows(),
            cols: m.cols(),
            entries,
        }
    }

    pub fn into_matrix(&self) -> Result<BivarPolyMatrix, IoError> {
        if self.entries.len() != self.rows
            || self.entries.iter().any(|row| row.len() != self.cols)
        {
            return Err(IoError::Invalid(
                "polynomial matrix entry table does not match declared shape".into(),
            ));
        }
        let mut flat = Vec::with_capacity(self.rows * self.cols);
        for row in &self.entries {
            for table in row {
                flat.push(BivarPoly::from_coeffs(table.clone()));
            }
        }
        Ok(BivarPolyMatrix::from_entries(self.rows, self.cols, flat))
    }
}

/// Writes residual planes (and matching alarms) as CSV with the header
/// `i,j,r1,...,rp,alarm1,...,alarmp`.
pub fn write_residual_csv<W: Write>(
    mut out: W,
    residuals: &[Plane],
    alarms: &[AlarmPlane],
) -> Result<(), IoError> {
    if residuals.is_empty() {
        return Err(IoError::Invalid("no residual planes to export".into()));
    }
    if residuals.len() != alarms.len() {
        return Err(IoError::Invalid(
            "residual and alarm plane counts differ".into(),
        ));
    }
    let (il, jl) = (residuals[0].i_len(), residuals[0].j_len());
    for plane in residuals {
        if plane.i_len() != il || plane.j_len() != jl || plane.dim() != 1 {
            return Err(IoError::Invalid("residual plane shapes differ".into()));
        }
    }
    let mut header = String::from("i,j");
    for k in 1..=residuals.len() {
        header.push_str(&format!(",r{k}"));
    }
    for k in 1..=alarms.len() {
        header.push_str(&format!(",alarm{k}"));
    }
    writeln!(out, "{header}")?;
    for i in 0..il {
        for j in 0..jl {
            let mut line = format!("{i},{j}");
            for plane in residuals {
                line.push_str(&format!(",{}", plane.scalar(i, j)));
            }
            for plane in alarms {
                line.push_str(&format!(",{}", u8::from(plane.get(i, j))));
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::{heat_exchanger, Measurement};
    use crate::sim::fdi_decide;

    #[test]
    fn system_document_round_trip_is_exact() {
        let mut model = heat_exchanger(Measurement::Full);
        // Awkward values that expose any lossy printing.
        model.shift_ops[0][(0, 0)] = 1.0 / 3.0;
        model.shift_ops[1][(3, 2)] = 1e-17;
        model.output_map[(1, 3)] = f64::MIN_POSITIVE;
        let doc = SystemDocument::from_model(&model);
        let text = serde_json::to_string_pretty(&doc).unwrap();
        let parsed: SystemDocument = serde_json::from_str(&text).unwrap();
        let back = parsed.into_model().unwrap();
        for (a, b) in model.shift_ops.iter().zip(&back.shift_ops) {
            assert_eq!(a, b);
        }
        assert_eq!(model.output_map, back.output_map);
        for (f, g) in model.faults.iter().zip(&back.faults) {
            assert_eq!(f.name, g.name);
            for (x, y) in f.maps.iter().zip(&g.maps) {
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn mismatched_header_is_rejected() {
        let model = heat_exchanger(Measurement::Full);
        let mut doc = SystemDocument::from_model(&model);
        doc.n = 7;
        assert!(doc.into_model().is_err());
    }

    #[test]
    fn poly_matrix_document_round_trip() {
        let m = crate::polymat::pbh(&heat_exchanger(Measurement::Full));
        let doc = PolyMatrixDocument::from_matrix(&m);
        let text = serde_json::to_string(&doc).unwrap();
        let parsed: PolyMatrixDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.into_matrix().unwrap(), m);
    }

    #[test]
    fn csv_layout_matches_the_contract() {
        let mut r1 = Plane::zeros(2, 2, 1);
        r1.set(1, 1, &[0.25]);
        let r2 = Plane::zeros(2, 2, 1);
        let alarms = fdi_decide(&[r1.clone(), r2.clone()], &[0.1, 0.1]);
        let mut buf = Vec::new();
        write_residual_csv(&mut buf, &[r1, r2], &alarms).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "i,j,r1,r2,alarm1,alarm2");
        assert_eq!(lines.next().unwrap(), "0,0,0,0,0,0");
        assert!(text.lines().last().unwrap().starts_with("1,1,0.25,0,1,0"));
    }
}
