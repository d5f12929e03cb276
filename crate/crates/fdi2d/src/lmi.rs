//! 2D Lyapunov certificates and LMI-based observer gain synthesis.
//!
//! The stability test for a pair (A1, A2) asks for symmetric positive
//! definite R1, R2 with
//!
//! ```text
//! A_c = A^T (R1 + R2) A - diag(R1, R2) < 0,    A = [A1  A2].
//! ```
//!
//! Projecting A_c onto ker C x ker C turns the joint search over
//! (R1, R2, D_o1, D_o2) into an LMI in R1, R2 alone; the gains are then
//! recovered from a second LMI. Both searches run on a small
//! self-contained log-barrier feasibility engine, so the crate carries
//! no external solver dependency. Instances here are tiny (matrix sizes
//! around a dozen), which a plain Newton barrier handles comfortably.

use nalgebra::DMatrix;

use crate::subspace::Subspace;

/// Absolute eigenvalue tolerance for definiteness verdicts.
pub const TOL_PSD: f64 = 1e-9;

/// A returned feasible point must clear this margin:
/// every constraint matrix is below `-MARGIN_MIN * I`.
pub const MARGIN_MIN: f64 = 1e-6;

/// Upper bound placed on certificate blocks to compactify the
/// homogeneous feasibility cone.
const BLOCK_CAP: f64 = 100.0;

const MAX_NEWTON_STEPS: usize = 500;

#[derive(Debug, thiserror::Error)]
pub enum LmiError {
    #[error("matrix must be symmetric (asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix must be positive definite (min eigenvalue {0:.3e})")]
    NotPositiveDefinite(f64),
    #[error("output map must have full row rank")]
    RankDeficientOutput,
    #[error("no strictly feasible point found within budget (best margin {0:.3e})")]
    Infeasible(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Positive definite pair certifying the 2D Lyapunov inequality, with
/// the achieved margin (negated largest eigenvalue of the tested matrix).
#[derive(Clone, Debug)]
pub struct LyapunovCertificate {
    pub r1: DMatrix<f64>,
    pub r2: DMatrix<f64>,
    pub margin: f64,
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Largest eigenvalue of the symmetric part.
pub fn max_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    let sym = symmetrize(a);
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
}

fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    let sym = symmetrize(a);
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v))
}

fn check_spd(name: &str, a: &DMatrix<f64>) -> Result<(), LmiError> {
    let asym = (a - a.transpose()).norm();
    if asym > 1e-8 * (1.0 + a.norm()) {
        return Err(LmiError::NotSymmetric(asym));
    }
    let lo = min_eigenvalue(a);
    if lo <= TOL_PSD {
        return Err(LmiError::NotPositiveDefinite(lo));
    }
    let _ = name;
    Ok(())
}

/// Builds A_c = A^T (R1 + R2) A - diag(R1, R2) for A = [A1 A2].
pub fn lyapunov_matrix(
    a1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    r1: &DMatrix<f64>,
    r2: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = a1.nrows();
    let mut a = DMatrix::zeros(n, 2 * n);
    a.columns_mut(0, n).copy_from(a1);
    a.columns_mut(n, n).copy_from(a2);
    let q = r1 + r2;
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    r.view_mut((0, 0), (n, n)).copy_from(r1);
    r.view_mut((n, n), (n, n)).copy_from(r2);
    a.transpose() * q * a - r
}

/// Evaluates the 2D Lyapunov inequality for the supplied candidate pair.
///
/// Returns `(holds, margin)` where `margin = -lambda_max(A_c)`; the
/// inequality holds when the margin exceeds [`TOL_PSD`].
pub fn lyapunov_check(
    a1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    r1: &DMatrix<f64>,
    r2: &DMatrix<f64>,
) -> Result<(bool, f64), LmiError> {
    if a1.nrows() != a1.ncols() || a2.nrows() != a2.ncols() || a1.nrows() != a2.nrows() {
        return Err(LmiError::Dimension(
            "shift operators must be square and equally sized".into(),
        ));
    }
    check_spd("R1", r1)?;
    check_spd("R2", r2)?;
    let ac = lyapunov_matrix(a1, a2, r1, r2);
    let top = max_eigenvalue(&ac);
    Ok((top < -TOL_PSD, -top))
}

// ---------------------------------------------------------------------------
// Feasibility engine
// ---------------------------------------------------------------------------

/// One affine matrix constraint `F(v) < 0`, stored as the constant term
/// plus one symmetric coefficient matrix per scalar variable.
#[derive(Clone, Debug)]
pub struct AffineConstraint {
    constant: DMatrix<f64>,
    coeffs: Vec<DMatrix<f64>>,
}

impl AffineConstraint {
    /// Extracts the affine structure of `f` by probing it with unit
    /// vectors. `f` must be affine in its argument; the engine works
    /// with whatever matrices the probe produces.
    pub fn from_affine<F>(num_vars: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> DMatrix<f64>,
    {
        let zero = vec![0.0; num_vars];
        let constant = symmetrize(&f(&zero));
        let mut coeffs = Vec::with_capacity(num_vars);
        for i in 0..num_vars {
            let mut probe = zero.clone();
            probe[i] = 1.0;
            coeffs.push(symmetrize(&f(&probe)) - &constant);
        }
        Self { constant, coeffs }
    }

    fn eval(&self, v: &[f64]) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for (value, coeff) in v.iter().zip(&self.coeffs) {
            if *value != 0.0 {
                out += coeff * *value;
            }
        }
        out
    }

    fn dim(&self) -> usize {
        self.constant.nrows()
    }
}

/// Strict feasibility problem: find v with `F_c(v) < 0` for every
/// constraint, produced margin at least [`MARGIN_MIN`].
pub struct FeasibilityProblem {
    num_vars: usize,
    constraints: Vec<AffineConstraint>,
}

impl FeasibilityProblem {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            constraints: Vec::new(),
        }
    }

    pub fn add_constraint(&mut self, c: AffineConstraint) {
        assert_eq!(c.coeffs.len(), self.num_vars);
        self.constraints.push(c);
    }

    fn worst_margin(&self, v: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| max_eigenvalue(&c.eval(v)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Log-barrier descent on `min t  s.t.  F_c(v) <= t I`, stopping as
    /// soon as the iterate is strictly feasible with margin, or when the
    /// Newton budget is exhausted.
    pub fn solve(&self) -> Result<Vec<f64>, LmiError> {
        let nv = self.num_vars;
        let mut v = vec![0.0; nv];
        let mut t = self.worst_margin(&v) + 1.0;
        let mut best_margin = t - 1.0;

        let mut steps = 0usize;
        let mut mu = 1.0f64;
        while mu > 1e-9 && steps < MAX_NEWTON_STEPS {
            for _ in 0..50 {
                steps += 1;
                if steps >= MAX_NEWTON_STEPS {
                    break;
                }
                let margin = self.worst_margin(&v);
                best_margin = best_margin.min(margin);
                if margin < -MARGIN_MIN {
                    return Ok(v);
                }

                // Assemble gradient and Hessian of
                // t + mu * sum_c -log det(t I - F_c(v)).
                let mut grad = vec![0.0; nv + 1];
                let mut hess = DMatrix::zeros(nv + 1, nv + 1);
                grad[nv] = 1.0;
                let mut singular = false;
                for c in &self.constraints {
                    let s = DMatrix::identity(c.dim(), c.dim()) * t - c.eval(&v);
                    let chol = match s.clone().cholesky() {
                        Some(ch) => ch,
                        None => {
                            singular = true;
                            break;
                        }
                    };
                    let s_inv = chol.inverse();
                    let s_inv2 = &s_inv * &s_inv;
                    grad[nv] -= mu * s_inv.trace();
                    hess[(nv, nv)] += mu * s_inv2.trace();
                    for (i, fi) in c.coeffs.iter().enumerate() {
                        let s_inv_fi = &s_inv * fi;
                        grad[i] += mu * s_inv_fi.trace();
                        let cross = -mu * (&s_inv2 * fi).trace();
                        hess[(i, nv)] += cross;
                        hess[(nv, i)] += cross;
                        for (j, _) in c.coeffs.iter().enumerate().skip(i) {
                            let val = mu * (&s_inv_fi * (&s_inv * &c.coeffs[j])).trace();
                            hess[(i, j)] += val;
                            if j != i {
                                hess[(j, i)] += val;
                            }
                        }
                    }
                }
                if singular {
                    t += 1.0;
                    continue;
                }
                for d in 0..nv + 1 {
                    hess[(d, d)] += 1e-12;
                }
                let g = DMatrix::from_column_slice(nv + 1, 1, &grad);
                let dir = match hess.clone().cholesky() {
                    Some(ch) => ch.solve(&(-&g)),
                    None => match hess.lu().solve(&(-&g)) {
                        Some(d) => d,
                        None => break,
                    },
                };
                let grad_norm = g.norm();
                let mut alpha = 1.0f64;
                let mut moved = false;
                for _ in 0..40 {
                    let cand_v: Vec<f64> = v
                        .iter()
                        .enumerate()
                        .map(|(i, &vi)| vi + alpha * dir[i])
                        .collect();
                    let cand_t = t + alpha * dir[nv];
                    let in_domain = self
                        .constraints
                        .iter()
                        .all(|c| max_eigenvalue(&c.eval(&cand_v)) < cand_t);
                    if in_domain {
                        v = cand_v;
                        t = cand_t;
                        moved = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if !moved || (grad_norm < 1e-11 && dir.norm() < 1e-11) {
                    break;
                }
                if dir.norm() * alpha < 1e-12 {
                    break;
                }
            }
            mu *= 0.15;
        }
        let margin = self.worst_margin(&v);
        if margin < -MARGIN_MIN {
            Ok(v)
        } else {
            Err(LmiError::Infeasible(margin))
        }
    }
}

/// Index bookkeeping for a symmetric matrix block packed into the
/// scalar variable vector (upper triangle, row by row).
#[derive(Clone, Copy, Debug)]
pub struct SymBlock {
    offset: usize,
    dim: usize,
}

impl SymBlock {
    pub fn len(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    pub fn materialize(&self, v: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        let mut idx = self.offset;
        for i in 0..self.dim {
            for j in i..self.dim {
                out[(i, j)] = v[idx];
                out[(j, i)] = v[idx];
                idx += 1;
            }
        }
        out
    }
}

/// Rectangular block packed row-major into the variable vector.
#[derive(Clone, Copy, Debug)]
pub struct RectBlock {
    offset: usize,
    rows: usize,
    cols: usize,
}

impl RectBlock {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn materialize(&self, v: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        let mut idx = self.offset;
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = v[idx];
                idx += 1;
            }
        }
        out
    }
}

/// Variable layout builder for [`FeasibilityProblem`].
#[derive(Default)]
pub struct VariableLayout {
    next: usize,
}

impl VariableLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn symmetric(&mut self, dim: usize) -> SymBlock {
        let block = SymBlock {
            offset: self.next,
            dim,
        };
        self.next += block.len();
        block
    }

    pub fn rectangular(&mut self, rows: usize, cols: usize) -> RectBlock {
        let block = RectBlock {
            offset: self.next,
            rows,
            cols,
        };
        self.next += block.len();
        block
    }

    pub fn num_vars(&self) -> usize {
        self.next
    }
}

// ---------------------------------------------------------------------------
// Observer-synthesis LMIs
// ---------------------------------------------------------------------------

fn horizontal_stack(a1: &DMatrix<f64>, a2: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a1.nrows();
    let mut a = DMatrix::zeros(n, 2 * n);
    a.columns_mut(0, n).copy_from(a1);
    a.columns_mut(n, n).copy_from(a2);
    a
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), (b.nrows(), b.ncols()))
        .copy_from(b);
    out
}

/// Searches for R1, R2 > 0 with the Lyapunov matrix of (A1, A2) negative
/// definite after restriction to ker C x ker C. A certificate means a
/// stabilizing output-injection pair exists; "infeasible" means no
/// strictly feasible point was found within the budget (the search is
/// one-sided).
pub fn projected_feasibility(
    a1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<LyapunovCertificate, LmiError> {
    let n = a1.nrows();
    if c.ncols() != n {
        return Err(LmiError::Dimension(format!(
            "output map has {} columns, expected {n}",
            c.ncols()
        )));
    }
    if crate::subspace::rank(c, 1e-12) < c.nrows() {
        return Err(LmiError::RankDeficientOutput);
    }
    let kernel = Subspace::kernel(c);
    let w_c = kernel.basis().clone();
    let w_cd = block_diag(&w_c, &w_c);
    let a = horizontal_stack(a1, a2);

    let mut layout = VariableLayout::new();
    let r1_block = layout.symmetric(n);
    let r2_block = layout.symmetric(n);
    let nv = layout.num_vars();

    let mut problem = FeasibilityProblem::new(nv);
    // R_i > 0 and R_i < cap * I.
    for block in [r1_block, r2_block] {
        problem.add_constraint(AffineConstraint::from_affine(nv, |v| -block.materialize(v)));
        problem.add_constraint(AffineConstraint::from_affine(nv, |v| {
            block.materialize(v) - DMatrix::identity(n, n) * BLOCK_CAP
        }));
    }
    if w_c.ncols() > 0 {
        let a_ref = &a;
        let w_ref = &w_cd;
        problem.add_constraint(AffineConstraint::from_affine(nv, move |v| {
            let r1 = r1_block.materialize(v);
            let r2 = r2_block.materialize(v);
            let q = &r1 + &r2;
            let r = block_diag(&r1, &r2);
            w_ref.transpose() * (a_ref.transpose() * q * a_ref - r) * w_ref
        }));
    }

    let v = problem.solve()?;
    let r1 = r1_block.materialize(&v);
    let r2 = r2_block.materialize(&v);
    let projected = w_cd.transpose() * lyapunov_matrix(a1, a2, &r1, &r2) * &w_cd;
    let margin = -max_eigenvalue(&projected);
    Ok(LyapunovCertificate { r1, r2, margin })
}

/// Recovers output-injection gains D_o1, D_o2 from a projected
/// certificate by solving the gain LMI
///
/// ```text
/// [ -(R1+R2)^-1   A + Lambda C_d ]
/// [      *            -R         ]  < 0,    Lambda = [D_o1  D_o2],
/// ```
///
/// whose Schur complement is exactly the closed-loop Lyapunov
/// inequality for (A1 + D_o1 C, A2 + D_o2 C) with the certificate's
/// R1, R2.
pub fn recover_gains(
    a1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    c: &DMatrix<f64>,
    cert: &LyapunovCertificate,
) -> Result<(DMatrix<f64>, DMatrix<f64>), LmiError> {
    let n = a1.nrows();
    let q = c.nrows();
    check_spd("R1", &cert.r1)?;
    check_spd("R2", &cert.r2)?;
    let a = horizontal_stack(a1, a2);
    let c_d = block_diag(c, c);
    let r = block_diag(&cert.r1, &cert.r2);
    let q_sum = &cert.r1 + &cert.r2;
    let q_inv = q_sum
        .clone()
        .try_inverse()
        .ok_or_else(|| LmiError::NotPositiveDefinite(min_eigenvalue(&q_sum)))?;

    let mut layout = VariableLayout::new();
    let lambda_block = layout.rectangular(n, 2 * q);
    let nv = layout.num_vars();

    let mut problem = FeasibilityProblem::new(nv);
    let a_ref = &a;
    let cd_ref = &c_d;
    let qinv_ref = &q_inv;
    let r_ref = &r;
    problem.add_constraint(AffineConstraint::from_affine(nv, move |v| {
        let lambda = lambda_block.materialize(v);
        let g = a_ref + &lambda * cd_ref;
        let mut phi = DMatrix::zeros(3 * n, 3 * n);
        phi.view_mut((0, 0), (n, n)).copy_from(&(-qinv_ref));
        phi.view_mut((0, n), (n, 2 * n)).copy_from(&g);
        phi.view_mut((n, 0), (2 * n, n)).copy_from(&g.transpose());
        phi.view_mut((n, n), (2 * n, 2 * n)).copy_from(&(-r_ref));
        phi
    }));

    let v = problem.solve()?;
    let lambda = lambda_block.materialize(&v);
    let d1 = lambda.columns(0, q).into_owned();
    let d2 = lambda.columns(q, q).into_owned();
    Ok((d1, d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn lyapunov_zero_ops_identity_weights() {
        let z = DMatrix::zeros(2, 2);
        let i = DMatrix::identity(2, 2);
        let (ok, margin) = lyapunov_check(&z, &z, &i, &i).unwrap();
        assert!(ok);
        assert!((margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_identity_ops_fail() {
        // A_c has block eigenvalues {3, -1}; the +3 branch defeats the
        // inequality. Verified against a direct eigensolve.
        let i = DMatrix::identity(2, 2);
        let (ok, margin) = lyapunov_check(&i, &i, &i, &i).unwrap();
        assert!(!ok);
        assert!((margin + 3.0).abs() < 1e-9);
    }

    #[test]
    fn lyapunov_rejects_indefinite_weights() {
        let z = DMatrix::zeros(2, 2);
        let bad = dmatrix![1.0, 0.0; 0.0, -1.0];
        assert!(matches!(
            lyapunov_check(&z, &z, &bad, &DMatrix::identity(2, 2)),
            Err(LmiError::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn engine_finds_point_between_zero_and_two() {
        // X > 0 and X < 2I; any interior X qualifies.
        let mut layout = VariableLayout::new();
        let x = layout.symmetric(2);
        let nv = layout.num_vars();
        let mut problem = FeasibilityProblem::new(nv);
        problem.add_constraint(AffineConstraint::from_affine(nv, |v| -x.materialize(v)));
        problem.add_constraint(AffineConstraint::from_affine(nv, |v| {
            x.materialize(v) - DMatrix::identity(2, 2) * 2.0
        }));
        let v = problem.solve().unwrap();
        let xm = x.materialize(&v);
        assert!(min_eigenvalue(&xm) > 0.0);
        assert!(max_eigenvalue(&xm) < 2.0);
    }

    #[test]
    fn engine_solves_scalar_correlation_constraint() {
        // [[1, x], [x, 1]] > 0 demands |x| < 1 by the 2x2 PSD criterion.
        let mut layout = VariableLayout::new();
        let x = layout.rectangular(1, 1);
        let nv = layout.num_vars();
        let mut problem = FeasibilityProblem::new(nv);
        problem.add_constraint(AffineConstraint::from_affine(nv, |v| {
            let s = x.materialize(v)[(0, 0)];
            -dmatrix![1.0, s; s, 1.0]
        }));
        let v = problem.solve().unwrap();
        assert!(v[0].abs() < 1.0);
    }

    #[test]
    fn projected_feasibility_for_zero_dynamics() {
        let z = DMatrix::zeros(3, 3);
        let c = dmatrix![1.0, 0.0, 0.0];
        let cert = projected_feasibility(&z, &z, &c).unwrap();
        assert!(min_eigenvalue(&cert.r1) > 0.0);
        assert!(min_eigenvalue(&cert.r2) > 0.0);
        assert!(cert.margin > 0.0);
    }

    #[test]
    fn projected_feasibility_rejects_rank_deficient_output() {
        let z = DMatrix::zeros(2, 2);
        let c = dmatrix![1.0, 0.0; 2.0, 0.0];
        assert!(matches!(
            projected_feasibility(&z, &z, &c),
            Err(LmiError::RankDeficientOutput)
        ));
    }

    #[test]
    fn projected_feasibility_detects_hopeless_growth() {
        // A1 doubles the unmeasured direction, so for any R1, R2 > 0 the
        // projected (2,2) entry is 4(R1+R2) - R1 >= 3 R1 > 0 on ker C; a
        // Rayleigh vector witnesses the obstruction for every candidate.
        let a1 = DMatrix::identity(2, 2) * 2.0;
        let a2 = DMatrix::zeros(2, 2);
        let c = dmatrix![1.0, 0.0];
        assert!(matches!(
            projected_feasibility(&a1, &a2, &c),
            Err(LmiError::Infeasible(_))
        ));
    }

    #[test]
    fn recover_gains_for_already_stable_pair() {
        let a1 = DMatrix::identity(2, 2) * 0.3;
        let a2 = DMatrix::identity(2, 2) * 0.3;
        let c = DMatrix::identity(2, 2);
        let cert = projected_feasibility(&a1, &a2, &c).unwrap();
        let (d1, d2) = recover_gains(&a1, &a2, &c, &cert).unwrap();
        let g1 = &a1 + &d1 * &c;
        let g2 = &a2 + &d2 * &c;
        let (ok, _) = lyapunov_check(&g1, &g2, &cert.r1, &cert.r2).unwrap();
        assert!(ok);
    }

    #[test]
    fn recover_gains_property_over_random_feasible_triples() {
        let mut rng = StdRng::seed_from_u64(7);
        let mut solved = 0;
        let mut attempts = 0;
        while solved < 100 && attempts < 400 {
            attempts += 1;
            let n = 4;
            let q = 2;
            let a1 = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.4..0.4));
            let a2 = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.4..0.4));
            let c = DMatrix::from_fn(q, n, |_, _| rng.gen_range(-1.0..1.0));
            let cert = match projected_feasibility(&a1, &a2, &c) {
                Ok(cert) => cert,
                Err(_) => continue,
            };
            let (d1, d2) = recover_gains(&a1, &a2, &c, &cert).unwrap();
            let g1 = &a1 + &d1 * &c;
            let g2 = &a2 + &d2 * &c;
            let (ok, _) = lyapunov_check(&g1, &g2, &cert.r1, &cert.r2).unwrap();
            assert!(ok, "recovered gains must satisfy the closed-loop inequality");
            solved += 1;
        }
        assert!(solved >= 100, "only {solved} feasible draws in {attempts} attempts");
    }

    #[test]
    fn schur_form_matches_direct_quadratic_form() {
        // Feasibility verdicts of the bordered form and of the projected
        // quadratic form must agree for fixed weights.
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let n = 3;
            let a1 = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.8..0.8));
            let a2 = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.8..0.8));
            let c = DMatrix::from_fn(1, n, |_, _| rng.gen_range(-1.0..1.0));
            let m1 = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let m2 = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let r1 = &m1 * m1.transpose() + DMatrix::identity(n, n) * 0.3;
            let r2 = &m2 * m2.transpose() + DMatrix::identity(n, n) * 0.3;

            let w_c = Subspace::kernel(&c).basis().clone();
            let w_cd = block_diag(&w_c, &w_c);
            let direct = w_cd.transpose() * lyapunov_matrix(&a1, &a2, &r1, &r2) * &w_cd;

            let a = horizontal_stack(&a1, &a2);
            let q_inv = (&r1 + &r2).try_inverse().unwrap();
            let r = block_diag(&r1, &r2);
            let awc = &a * &w_cd;
            let mut phi = DMatrix::zeros(n + w_cd.ncols(), n + w_cd.ncols());
            phi.view_mut((0, 0), (n, n)).copy_from(&(-&q_inv));
            phi.view_mut((0, n), (n, awc.ncols())).copy_from(&awc);
            phi.view_mut((n, 0), (awc.ncols(), n))
                .copy_from(&awc.transpose());
            phi.view_mut((n, n), (w_cd.ncols(), w_cd.ncols()))
                .copy_from(&(-(w_cd.transpose() * &r * &w_cd)));

            let direct_ok = max_eigenvalue(&direct) < -TOL_PSD;
            let schur_ok = max_eigenvalue(&phi) < -TOL_PSD;
            assert_eq!(direct_ok, schur_ok);
        }
    }
}
