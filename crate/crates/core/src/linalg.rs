//! Dense linear-algebra helpers shared by the analysis modules.

use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::{CMatrix, CVector, C64};

/// Relative threshold below which a matrix is treated as numerically singular.
pub const NEAR_SINGULAR_REL: f64 = 1e-13;

/// Default relative tolerance for rank and null-space decisions.
pub const RANK_REL_TOL: f64 = 1e-8;

/// Singular values in descending order.
pub fn singular_values<T>(m: &DMatrix<T>) -> Vec<f64>
where
    T: ComplexField<RealField = f64>,
{
    if m.is_empty() {
        return Vec::new();
    }
    let sv = m.clone().singular_values();
    let mut v: Vec<f64> = sv.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `(smallest, largest)` singular value.
pub fn singular_extremes<T>(m: &DMatrix<T>) -> (f64, f64)
where
    T: ComplexField<RealField = f64>,
{
    let sv = singular_values(m);
    match (sv.last(), sv.first()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0.0, 0.0),
    }
}

/// `||m^{-1}||_2 = 1 / sigma_min`, or `+inf` when `m` is singular to working precision.
pub fn inverse_norm<T>(m: &DMatrix<T>) -> f64
where
    T: ComplexField<RealField = f64>,
{
    let (lo, hi) = singular_extremes(m);
    if !(lo > NEAR_SINGULAR_REL * hi) {
        f64::INFINITY
    } else {
        1.0 / lo
    }
}

/// Numerical rank with respect to `rel_tol * sigma_max`.
pub fn rank<T>(m: &DMatrix<T>, rel_tol: f64) -> usize
where
    T: ComplexField<RealField = f64>,
{
    let sv = singular_values(m);
    let Some(&hi) = sv.first() else { return 0 };
    sv.iter().filter(|&&s| s > rel_tol * hi).count()
}

/// Orthonormal basis of the right null space: right singular vectors with
/// singular value below `rel_tol * sigma_max`.
pub fn null_space(m: &CMatrix, rel_tol: f64) -> Vec<CVector> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Vec::new();
    }
    // pad wide matrices so the SVD returns a full set of right vectors
    let a = if rows < cols {
        let mut p = CMatrix::zeros(cols, cols);
        p.rows_mut(0, rows).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let hi = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut out = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if hi == 0.0 || s <= rel_tol * hi {
            let row = v_t.row(i);
            out.push(DVector::from_iterator(cols, row.iter().map(|z| z.conj())));
        }
    }
    out
}

/// Determinant by LU factorization.
pub fn det(m: &CMatrix) -> C64 {
    if m.nrows() == 0 {
        return C64::new(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

/// Solves `m x = b`; `None` if the LU factorization hits an exact zero pivot.
pub fn solve(m: &CMatrix, b: &CVector) -> Option<CVector> {
    m.clone().lu().solve(b)
}

/// Number of eigenvalues strictly below `shift` of the symmetric tridiagonal
/// matrix with diagonal `diag` and off-diagonal `off` (Sturm sequence via LDL^T).
pub fn sturm_count(diag: &[f64], off: &[f64], shift: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0f64;
    for (i, &a) in diag.iter().enumerate() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        d = a - shift - if i == 0 { 0.0 } else { b2 / d };
        if d == 0.0 {
            d = -f64::EPSILON * (a.abs() + shift.abs() + 1.0);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Euclidean inner product `<x, y> = sum x_k conj(y_k)`.
pub fn inner(x: &CVector, y: &CVector) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RMatrix;
    use alloc::vec;

    #[test]
    fn null_space_of_ones_and_identity() {
        let ones = CMatrix::from_element(3, 3, C64::new(1.0, 0.0));
        let ns = null_space(&ones, RANK_REL_TOL);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!((ones.clone() * v).norm() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        assert!(null_space(&CMatrix::identity(4, 4), RANK_REL_TOL).is_empty());
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = CMatrix::from_row_slice(1, 3, &[C64::new(1.0, 0.0); 3]);
        assert_eq!(null_space(&m, RANK_REL_TOL).len(), 2);
    }

    #[test]
    fn sturm_matches_dense_eigensolve() {
        let diag = [1.0, -2.0, 0.5, 3.0, -0.1];
        let off = [0.3, -0.7, 0.2, 1.1];
        let mut m = RMatrix::zeros(5, 5);
        for i in 0..5 {
            m[(i, i)] = diag[i];
            if i + 1 < 5 {
                m[(i, i + 1)] = off[i];
                m[(i + 1, i)] = off[i];
            }
        }
        let ev = m.symmetric_eigenvalues();
        for shift in [-3.0, -1.0, 0.0, 0.7, 2.0, 5.0] {
            let dense = ev.iter().filter(|&&e| e < shift).count();
            assert_eq!(sturm_count(&diag, &off, shift), dense);
        }
    }

    #[test]
    fn inverse_norm_sentinel() {
        let m = CMatrix::from_element(2, 2, C64::new(1.0, 0.0));
        assert!(inverse_norm(&m).is_infinite());
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![C64::new(2.0, 0.0), C64::new(0.0, 0.5)]));
        assert!((inverse_norm(&d) - 2.0).abs() < 1e-14);
    }
}
