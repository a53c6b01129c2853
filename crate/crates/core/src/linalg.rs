//! Small dense helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative cutoff below which eigenvalues / singular values count as zero.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted
/// ascending and each eigenvector's largest-magnitude entry made positive.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = symmetrize(m);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        fix_sign(&mut col);
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Flip `v` so that its largest-magnitude component is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.neg_mut();
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest absolute asymmetry relative to the largest absolute entry.
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).amax() / scale
}

fn truncated_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let cutoff = RANK_CUTOFF * svd.singular_values.max();
    let inv_s = svd.singular_values.map(|s| if s > cutoff && s > 0.0 { 1.0 / s } else { 0.0 });
    (u, inv_s, v_t)
}

/// Moore-Penrose pseudo-inverse with singular values below
/// `RANK_CUTOFF * max` treated as zero.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (u, inv_s, v_t) = truncated_svd(m);
    let mut vs = v_t.transpose();
    for (j, mut col) in vs.column_iter_mut().enumerate() {
        col *= inv_s[j];
    }
    vs * u.transpose()
}

/// `pinv(m) * b` without forming the pseudo-inverse.
pub fn pinv_solve(m: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (u, inv_s, v_t) = truncated_svd(m);
    let c = u.tr_mul(b).component_mul(&inv_s);
    v_t.tr_mul(&c)
}

/// Solve `m x = b` for symmetric positive-definite `m`.
pub fn spd_solve(m: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = symmetrize(m)
        .cholesky()
        .ok_or_else(|| Error::Singular("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}

/// Number of eigenvalues above the relative cutoff for a symmetric PSD matrix.
pub fn numerical_rank(eigenvalues: &DVector<f64>) -> usize {
    let max = eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return 0;
    }
    eigenvalues.iter().filter(|&&l| l >= RANK_CUTOFF * max).count()
}

/// Stack row vectors (one sample per entry) into an `n x d` matrix.
pub fn rows_to_matrix(rows: &[DVector<f64>]) -> DMatrix<f64> {
    let d = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_and_sign_fixed() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = sorted_symmetric_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        for c in 0..2 {
            let col = vecs.column(c);
            let idx = col.iamax();
            assert!(col[idx] > 0.0);
        }
    }

    #[test]
    fn pinv_of_rank_deficient() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let p = pinv(&m);
        assert!((&m * &p * &m - &m).amax() < 1e-12);
        assert!((p[(0, 0)] - 0.25).abs() < 1e-12);
    }
}
