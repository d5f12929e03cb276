//! Numerically robust subspace algebra over R^n.
//!
//! Every geometric computation in this crate reduces to a handful of
//! primitives on subspaces: images and kernels of matrices, sums,
//! intersections, preimages, containment tests and orthogonal
//! complements. A subspace is carried by an orthonormal column basis
//! together with the rank tolerance that produced it, so all operations
//! stay basis-independent and comparisons go through principal angles.

use nalgebra::DMatrix;

/// Default relative rank tolerance: singular values below
/// `tol_rel * sigma_max * max(rows, cols)` are treated as zero.
pub const DEFAULT_TOL_REL: f64 = 1e-10;

/// Principal angles below this (radians) mean "the same subspace".
pub const ANGLE_TOL: f64 = 1e-8;

/// A subspace of R^n, represented by an orthonormal column basis.
///
/// The zero subspace is an `n x 0` basis; the full space an `n x n`
/// orthogonal basis. Two subspaces compare equal when all principal
/// angles between them are below [`ANGLE_TOL`].
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: DMatrix<f64>,
    tol_rel: f64,
}

impl Subspace {
    /// Builds a subspace from a basis candidate by orthonormalizing its
    /// column space with the given relative rank tolerance.
    pub fn from_columns_with_tol(columns: &DMatrix<f64>, tol_rel: f64) -> Self {
        let basis = orthonormal_image(columns, tol_rel);
        Self { basis, tol_rel }
    }

    /// Column space of `columns` under the default tolerance.
    pub fn from_columns(columns: &DMatrix<f64>) -> Self {
        Self::from_columns_with_tol(columns, DEFAULT_TOL_REL)
    }

    /// Span of a single vector (the zero vector yields the zero subspace).
    pub fn span(vector: &[f64]) -> Self {
        let m = DMatrix::from_column_slice(vector.len(), 1, vector);
        Self::from_columns(&m)
    }

    /// The zero subspace of R^n.
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(ambient_dim, 0),
            tol_rel: DEFAULT_TOL_REL,
        }
    }

    /// All of R^n.
    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
            tol_rel: DEFAULT_TOL_REL,
        }
    }

    /// Orthonormal basis matrix (n x d).
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn tol_rel(&self) -> f64 {
        self.tol_rel
    }

    /// Image (column space) of a matrix.
    pub fn image(a: &DMatrix<f64>) -> Self {
        Self::image_with_tol(a, DEFAULT_TOL_REL)
    }

    pub fn image_with_tol(a: &DMatrix<f64>, tol_rel: f64) -> Self {
        Self::from_columns_with_tol(a, tol_rel)
    }

    /// Kernel (null space) of a matrix.
    pub fn kernel(a: &DMatrix<f64>) -> Self {
        Self::kernel_with_tol(a, DEFAULT_TOL_REL)
    }

    pub fn kernel_with_tol(a: &DMatrix<f64>, tol_rel: f64) -> Self {
        let basis = null_space(a, tol_rel);
        Self { basis, tol_rel }
    }

    /// Smallest subspace containing both operands.
    ///
    /// # Panics
    /// Panics on ambient-dimension mismatch.
    pub fn sum(&self, other: &Subspace) -> Subspace {
        assert_eq!(
            self.ambient_dim(),
            other.ambient_dim(),
            "subspace sum: ambient dimensions differ"
        );
        let n = self.ambient_dim();
        let mut stacked = DMatrix::zeros(n, self.dim() + other.dim());
        stacked.columns_mut(0, self.dim()).copy_from(&self.basis);
        stacked
            .columns_mut(self.dim(), other.dim())
            .copy_from(&other.basis);
        Subspace::from_columns_with_tol(&stacked, self.tol_rel.min(other.tol_rel))
    }

    /// Largest subspace contained in both operands.
    ///
    /// Computed as the kernel of the stacked orthogonal-complement
    /// projectors, which avoids ill-conditioned pairwise elimination.
    pub fn intersect(&self, other: &Subspace) -> Subspace {
        assert_eq!(
            self.ambient_dim(),
            other.ambient_dim(),
            "subspace intersect: ambient dimensions differ"
        );
        let n = self.ambient_dim();
        if self.dim() == n {
            return other.clone();
        }
        if other.dim() == n {
            return self.clone();
        }
        if self.is_zero() || other.is_zero() {
            return Subspace::zero(n);
        }
        // P_{V^perp} x = x - V V^T x; x lies in V iff that residual is 0.
        let pv = DMatrix::identity(n, n) - &self.basis * self.basis.transpose();
        let pw = DMatrix::identity(n, n) - &other.basis * other.basis.transpose();
        let mut stacked = DMatrix::zeros(2 * n, n);
        stacked.rows_mut(0, n).copy_from(&pv);
        stacked.rows_mut(n, n).copy_from(&pw);
        Subspace::kernel_with_tol(&stacked, self.tol_rel.min(other.tol_rel))
    }

    /// Preimage {x : A x in V} for a map A: R^n -> R^m with V in R^m.
    ///
    /// Equals the kernel of P_{V^perp} A.
    pub fn preimage(a: &DMatrix<f64>, v: &Subspace) -> Subspace {
        assert_eq!(
            a.nrows(),
            v.ambient_dim(),
            "preimage: map codomain does not match subspace"
        );
        let m = a.nrows();
        let proj = DMatrix::identity(m, m) - v.basis() * v.basis().transpose();
        let product = proj * a;
        // The input scale of the product is the norm of A itself; without
        // the floor, a product that vanishes up to roundoff would be ranked
        // by its own noise.
        let basis = null_space_scaled(&product, v.tol_rel, a.norm());
        Subspace {
            basis,
            tol_rel: v.tol_rel,
        }
    }

    /// True iff `other` is contained in `self` within tolerance.
    pub fn contains(&self, other: &Subspace) -> bool {
        assert_eq!(
            self.ambient_dim(),
            other.ambient_dim(),
            "subspace contains: ambient dimensions differ"
        );
        if other.is_zero() {
            return true;
        }
        if self.is_zero() {
            return false;
        }
        // Residual of each basis vector of `other` after projection onto `self`.
        let proj = &self.basis * (self.basis.transpose() * &other.basis);
        let residual = &other.basis - proj;
        residual.norm() < containment_tol(self.ambient_dim())
    }

    /// True iff the given vector lies in the subspace within tolerance.
    pub fn contains_vector(&self, x: &[f64]) -> bool {
        let v = DMatrix::from_column_slice(x.len(), 1, x);
        let nrm = v.norm();
        if nrm == 0.0 {
            return true;
        }
        if self.is_zero() {
            return false;
        }
        let v = v / nrm;
        let residual = &v - &self.basis * (self.basis.transpose() * &v);
        residual.norm() < containment_tol(self.ambient_dim())
    }

    /// Orthogonal complement of `other` inside `self` (requires `other ⊆ self`).
    pub fn complement_in(&self, other: &Subspace) -> Result<Subspace, SubspaceError> {
        if !self.contains(other) {
            return Err(SubspaceError::NotContained);
        }
        // Project self's basis onto other's orthogonal complement, then re-span.
        let n = self.ambient_dim();
        let residual = if other.is_zero() {
            self.basis.clone()
        } else {
            &self.basis - other.basis() * (other.basis().transpose() * &self.basis)
        };
        let _ = n;
        Ok(Subspace::from_columns_with_tol(&residual, self.tol_rel))
    }

    /// Canonical projection P: R^n -> R^n / S as an (n - s) x n matrix with
    /// orthonormal rows spanning the orthogonal complement of S.
    ///
    /// Satisfies ker P = S and P P^T = I.
    pub fn canonical_projection(&self) -> DMatrix<f64> {
        let full = Subspace::full(self.ambient_dim());
        let complement = full
            .complement_in(self)
            .expect("full space contains every subspace");
        complement.basis().transpose()
    }

    /// Orthogonal complement in the ambient space.
    pub fn orthogonal_complement(&self) -> Subspace {
        Subspace::full(self.ambient_dim())
            .complement_in(self)
            .expect("full space contains every subspace")
    }

    /// Largest principal angle between two subspaces of equal dimension,
    /// in radians. Returns `None` when dimensions differ.
    pub fn max_principal_angle(&self, other: &Subspace) -> Option<f64> {
        if self.dim() != other.dim() {
            return None;
        }
        if self.dim() == 0 {
            return Some(0.0);
        }
        // Sine route: the singular values of (I - V V^T) W are the sines of
        // the principal angles, which stays accurate for tiny angles where
        // the cosine route loses all resolution.
        let residual = &other.basis - &self.basis * (self.basis.transpose() * &other.basis);
        let svd = residual.svd(false, false);
        let max_sigma = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
        Some(max_sigma.clamp(0.0, 1.0).asin())
    }

    /// Basis-independent equality: same dimension and all principal
    /// angles below [`ANGLE_TOL`].
    pub fn approx_eq(&self, other: &Subspace) -> bool {
        match self.max_principal_angle(other) {
            Some(theta) => theta < ANGLE_TOL,
            None => false,
        }
    }

    /// Applies a matrix to the subspace: image of A restricted to it.
    pub fn map(&self, a: &DMatrix<f64>) -> Subspace {
        assert_eq!(a.ncols(), self.ambient_dim(), "map: dimension mismatch");
        if self.is_zero() {
            return Subspace::zero(a.nrows());
        }
        let basis = orthonormal_image_scaled(&(a * &self.basis), self.tol_rel, a.norm());
        Subspace {
            basis,
            tol_rel: self.tol_rel,
        }
    }
}

impl PartialEq for Subspace {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other)
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SubspaceError {
    #[error("operand subspace is not contained in the host subspace")]
    NotContained,
}

fn containment_tol(ambient_dim: usize) -> f64 {
    // Angle-style tolerance scaled mildly with the stacked basis size.
    ANGLE_TOL * (ambient_dim as f64).sqrt().max(1.0)
}

/// Number of singular values above the cutoff. The cutoff is relative
/// to the largest singular value, with `scale_floor` as an absolute
/// scale reference so that products that are numerically zero relative
/// to their inputs do not masquerade as rank-1 noise.
fn numerical_rank(
    singular_values: &[f64],
    rows: usize,
    cols: usize,
    tol_rel: f64,
    scale_floor: f64,
) -> usize {
    let sigma_max = singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    if sigma_max == 0.0 {
        return 0;
    }
    let cutoff = tol_rel * sigma_max.max(scale_floor) * rows.max(cols) as f64;
    singular_values.iter().filter(|&&s| s > cutoff).count()
}

/// Orthonormal basis of the column space of `a`.
fn orthonormal_image(a: &DMatrix<f64>, tol_rel: f64) -> DMatrix<f64> {
    orthonormal_image_scaled(a, tol_rel, 0.0)
}

fn orthonormal_image_scaled(a: &DMatrix<f64>, tol_rel: f64, scale_floor: f64) -> DMatrix<f64> {
    let n = a.nrows();
    if a.ncols() == 0 || a.norm() == 0.0 {
        return DMatrix::zeros(n, 0);
    }
    let svd = a.clone().svd(true, false);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let rank = numerical_rank(&sv, a.nrows(), a.ncols(), tol_rel, scale_floor);
    let u = svd.u.expect("svd requested with u");
    u.columns(0, rank).into_owned()
}

/// Orthonormal basis of the null space of `a`.
fn null_space(a: &DMatrix<f64>, tol_rel: f64) -> DMatrix<f64> {
    null_space_scaled(a, tol_rel, 0.0)
}

fn null_space_scaled(a: &DMatrix<f64>, tol_rel: f64, scale_floor: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 || a.norm() == 0.0 {
        return DMatrix::identity(n, n);
    }
    let svd = a.clone().svd(false, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let rank = numerical_rank(&sv, a.nrows(), a.ncols(), tol_rel, scale_floor);
    let vt = svd.v_t.expect("svd requested with v_t");
    // Rows of V^T beyond the numerical rank span the kernel. nalgebra's
    // thin SVD only returns min(rows, cols) right vectors, so complete the
    // basis by projecting out the row space when cols > rows.
    if rank == n {
        return DMatrix::zeros(n, 0);
    }
    if vt.nrows() > rank {
        let tail = vt.rows(rank, vt.nrows() - rank).transpose();
        if tail.ncols() + rank == n {
            return tail;
        }
    }
    // Completion path: kernel = orthogonal complement of the row space.
    let row_space = vt.rows(0, rank).transpose();
    let proj = DMatrix::identity(n, n) - &row_space * row_space.transpose();
    orthonormal_image(&proj, tol_rel)
}

/// Numerical rank of a real matrix under the shared tolerance policy.
pub fn rank(a: &DMatrix<f64>, tol_rel: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 || a.norm() == 0.0 {
        return 0;
    }
    let svd = a.clone().svd(false, false);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    numerical_rank(&sv, a.nrows(), a.ncols(), tol_rel, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn image_of_identity_is_full_space() {
        let v = Subspace::image(&DMatrix::identity(3, 3));
        assert_eq!(v.dim(), 3);
    }

    #[test]
    fn image_of_zero_matrix_is_zero_subspace() {
        let v = Subspace::image(&DMatrix::zeros(3, 2));
        assert!(v.is_zero());
        assert_eq!(v.ambient_dim(), 3);
    }

    #[test]
    fn image_rank_one() {
        // Rank 1 by construction; the expected span was checked by exact
        // row reduction of [[1,2],[2,4]] (second row is twice the first).
        let a = dmatrix![1.0, 2.0; 2.0, 4.0];
        let v = Subspace::image(&a);
        assert_eq!(v.dim(), 1);
        let s5 = 5.0f64.sqrt();
        assert!(v.approx_eq(&Subspace::span(&[1.0 / s5, 2.0 / s5])));
    }

    #[test]
    fn kernel_of_identity_is_zero() {
        let v = Subspace::kernel(&DMatrix::identity(4, 4));
        assert!(v.is_zero());
    }

    #[test]
    fn kernel_of_zero_map_is_full() {
        let v = Subspace::kernel(&DMatrix::zeros(2, 3));
        assert_eq!(v.dim(), 3);
    }

    #[test]
    fn kernel_of_row_vector() {
        // Solving [1, -1] x = 0 by elimination gives x1 = x2.
        let a = dmatrix![1.0, -1.0];
        let v = Subspace::kernel(&a);
        let s2 = 2.0f64.sqrt();
        assert!(v.approx_eq(&Subspace::span(&[1.0 / s2, 1.0 / s2])));
    }

    #[test]
    fn sum_with_zero_is_identity() {
        let v = Subspace::span(&[1.0, 1.0, 0.0]);
        let s = v.sum(&Subspace::zero(3));
        assert!(s.approx_eq(&v));
    }

    #[test]
    fn sum_of_axes() {
        let e1 = Subspace::span(&[1.0, 0.0, 0.0]);
        let e2 = Subspace::span(&[0.0, 1.0, 0.0]);
        let s = e1.sum(&e2);
        assert_eq!(s.dim(), 2);
        assert!(s.contains(&e1) && s.contains(&e2));
    }

    #[test]
    fn sum_spans_plane() {
        // Both vectors lie in and span the plane x3 = 0; the rank of the
        // stacked basis confirms dimension 2.
        let v = Subspace::span(&[1.0, 1.0, 0.0]);
        let w = Subspace::span(&[1.0, -1.0, 0.0]);
        let s = v.sum(&w);
        let plane = Subspace::kernel(&dmatrix![0.0, 0.0, 1.0]);
        assert!(s.approx_eq(&plane));
    }

    #[test]
    fn intersect_self_is_identity() {
        let v = Subspace::from_columns(&dmatrix![1.0, 0.0; 0.5, 1.0; 0.0, 2.0]);
        assert!(v.intersect(&v).approx_eq(&v));
    }

    #[test]
    fn intersect_axes_is_zero() {
        let e1 = Subspace::span(&[1.0, 0.0]);
        let e2 = Subspace::span(&[0.0, 1.0]);
        assert!(e1.intersect(&e2).is_zero());
    }

    #[test]
    fn intersect_planes() {
        // {x3 = 0} and {x1 = 0} meet in span{e2}; checked by exact
        // elimination on the stacked normal equations.
        let p1 = Subspace::kernel(&dmatrix![0.0, 0.0, 1.0]);
        let p2 = Subspace::kernel(&dmatrix![1.0, 0.0, 0.0]);
        let m = p1.intersect(&p2);
        assert!(m.approx_eq(&Subspace::span(&[0.0, 1.0, 0.0])));
    }

    #[test]
    fn preimage_under_identity() {
        let v = Subspace::span(&[1.0, 2.0]);
        let p = Subspace::preimage(&DMatrix::identity(2, 2), &v);
        assert!(p.approx_eq(&v));
    }

    #[test]
    fn preimage_under_zero_map_is_full() {
        let v = Subspace::span(&[1.0, 0.0]);
        let p = Subspace::preimage(&DMatrix::zeros(2, 3), &v);
        assert_eq!(p.dim(), 3);
    }

    #[test]
    fn preimage_projector_onto_contained_axis() {
        // A x = (x1, 0) always lies in span{e1}: enumerate the basis
        // directions e1 -> e1, e2 -> 0, both inside the target.
        let a = dmatrix![1.0, 0.0; 0.0, 0.0];
        let v = Subspace::span(&[1.0, 0.0]);
        let p = Subspace::preimage(&a, &v);
        assert_eq!(p.dim(), 2);
    }

    #[test]
    fn contains_zero_and_not_in_zero() {
        let v = Subspace::span(&[1.0, 0.0, 0.0]);
        assert!(v.contains(&Subspace::zero(3)));
        assert!(!Subspace::zero(3).contains(&v));
    }

    #[test]
    fn contains_is_strict_across_directions() {
        let v = Subspace::span(&[0.0, 0.0, -1.0, 1.0]);
        let w = Subspace::span(&[0.0, 0.0, 0.0, 1.0]);
        assert!(!v.contains(&w));
    }

    #[test]
    fn complement_in_self_is_zero() {
        let v = Subspace::span(&[1.0, 1.0]);
        let c = v.complement_in(&v).unwrap();
        assert!(c.is_zero());
    }

    #[test]
    fn complement_of_axis_in_plane() {
        let r2 = Subspace::full(2);
        let c = r2.complement_in(&Subspace::span(&[1.0, 0.0])).unwrap();
        assert!(c.approx_eq(&Subspace::span(&[0.0, 1.0])));
    }

    #[test]
    fn complement_in_via_gram_schmidt_oracle() {
        // Gram-Schmidt of [1,1,0] against the plane {x3=0} leaves [1,-1,0].
        let s2 = 2.0f64.sqrt();
        let plane = Subspace::kernel(&dmatrix![0.0, 0.0, 1.0]);
        let w = Subspace::span(&[1.0 / s2, 1.0 / s2, 0.0]);
        let c = plane.complement_in(&w).unwrap();
        assert!(c.approx_eq(&Subspace::span(&[1.0 / s2, -1.0 / s2, 0.0])));
    }

    #[test]
    fn complement_in_rejects_non_subset() {
        let v = Subspace::span(&[1.0, 0.0]);
        let w = Subspace::span(&[0.0, 1.0]);
        assert_eq!(v.complement_in(&w), Err(SubspaceError::NotContained));
    }

    #[test]
    fn canonical_projection_of_zero_subspace() {
        let p = Subspace::zero(3).canonical_projection();
        assert_eq!((p.nrows(), p.ncols()), (3, 3));
        assert!((&p * p.transpose() - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn canonical_projection_of_full_space_is_empty() {
        let p = Subspace::full(3).canonical_projection();
        assert_eq!((p.nrows(), p.ncols()), (0, 3));
    }

    #[test]
    fn canonical_projection_annihilates_the_subspace() {
        let s2 = 2.0f64.sqrt();
        let s = Subspace::span(&[0.0, 0.0, -1.0 / s2, 1.0 / s2]);
        let p = s.canonical_projection();
        assert_eq!((p.nrows(), p.ncols()), (3, 4));
        let image = &p * DMatrix::from_column_slice(4, 1, &[0.0, 0.0, -1.0, 1.0]);
        assert!(image.norm() < 1e-12);
        assert!((&p * p.transpose() - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn idempotent_under_renormalization() {
        let a = dmatrix![1.0, 3.0; -2.0, 0.5; 0.25, 1.0];
        let v = Subspace::image(&a);
        let again = Subspace::image(v.basis());
        assert!(v.approx_eq(&again));
    }
}
