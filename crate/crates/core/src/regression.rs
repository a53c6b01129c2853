//! Linear least squares, ridge and kernel ridge regression.
//!
//! Data matrices hold one sample per column: `X` is `p x n`, targets `T`
//! are `q x n`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::kernel::{gram_matrix, kernel_expansion, KernelSpec};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// `p x q`; predictions are `W' x`.
    pub weights: DMatrix<f64>,
    /// When set, inputs are extended by a trailing constant 1 before the product.
    pub includes_bias: bool,
}

impl LinearModel {
    pub fn predict(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if self.includes_bias {
            check_dim(self.weights.nrows(), x.len() + 1)?;
            let aug = x.clone().push(1.0);
            Ok(self.weights.tr_mul(&aug))
        } else {
            check_dim(self.weights.nrows(), x.len())?;
            Ok(self.weights.tr_mul(x))
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelModel {
    /// `n x q`; predictions are `A' k(x)`.
    pub coefficients: DMatrix<f64>,
    pub anchors: Vec<DVector<f64>>,
    pub spec: KernelSpec,
}

impl KernelModel {
    pub fn predict(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if let Some(a) = self.anchors.first() {
            check_dim(a.len(), x.len())?;
        }
        Ok(self.coefficients.tr_mul(&kernel_expansion(&self.spec, &self.anchors, x)))
    }
}

/// Append a constant-1 row to a `p x n` data matrix.
pub fn augment_bias(x: &DMatrix<f64>) -> DMatrix<f64> {
    let p = x.nrows();
    x.clone().insert_row(p, 1.0)
}

fn check_shapes(x: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<()> {
    check_dim(x.ncols(), t.ncols())?;
    if x.ncols() == 0 {
        return Err(Error::input("regression needs at least one sample"));
    }
    Ok(())
}

pub fn least_squares(x: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<LinearModel> {
    check_shapes(x, t)?;
    let cov = x * x.transpose();
    let (vals, _) = linalg::sorted_symmetric_eigen(&cov);
    let rank = linalg::numerical_rank(&vals);
    if rank < x.nrows() {
        return Err(Error::Singular(format!(
            "input covariance has rank {rank} < {} (inputs linearly dependent)",
            x.nrows()
        )));
    }
    let weights = linalg::spd_solve(&cov, &(x * t.transpose()))?;
    Ok(LinearModel { weights, includes_bias: false })
}

pub fn ridge(x: &DMatrix<f64>, t: &DMatrix<f64>, lambda: f64) -> Result<LinearModel> {
    if !(lambda >= 0.0) {
        return Err(Error::input("ridge penalty must be non-negative"));
    }
    if lambda == 0.0 {
        return least_squares(x, t);
    }
    check_shapes(x, t)?;
    let p = x.nrows();
    let cov = x * x.transpose() + DMatrix::identity(p, p) * lambda;
    let weights = linalg::spd_solve(&cov, &(x * t.transpose()))?;
    Ok(LinearModel { weights, includes_bias: false })
}

pub fn kernel_ridge(spec: &KernelSpec, x: &DMatrix<f64>, t: &DMatrix<f64>, lambda: f64) -> Result<KernelModel> {
    spec.validate()?;
    if !(lambda > 0.0) {
        return Err(Error::input("kernel ridge penalty must be positive"));
    }
    check_shapes(x, t)?;
    let anchors: Vec<DVector<f64>> = x.column_iter().map(|c| c.into_owned()).collect();
    let k = gram_matrix(spec, &anchors)?.0;
    let n = k.nrows();
    let reg = k + DMatrix::identity(n, n) * lambda;
    let coefficients = match linalg::spd_solve(&reg, &t.transpose()) {
        Ok(a) => a,
        // K + lambda I is PD in exact arithmetic; fall back for round-off
        Err(_) => {
            let pinv = linalg::pinv(&reg);
            pinv * t.transpose()
        }
    };
    Ok(KernelModel { coefficients, anchors, spec: *spec })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn residual(w: &DMatrix<f64>, x: &DMatrix<f64>, t: &DMatrix<f64>) -> f64 {
        (w.transpose() * x - t).norm_squared()
    }

    #[test]
    fn least_squares_examples() {
        let t = random(2, 4, 1);
        let m = least_squares(&DMatrix::identity(4, 4), &t).unwrap();
        assert!((m.weights - t.transpose()).amax() < 1e-12);

        let x = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let t = DMatrix::from_row_slice(1, 2, &[2.0, 4.0]);
        assert!((least_squares(&x, &t).unwrap().weights[(0, 0)] - 2.0).abs() < 1e-12);

        let x = random(3, 10, 2);
        let m = least_squares(&x, &DMatrix::zeros(2, 10)).unwrap();
        assert_eq!(m.weights, DMatrix::zeros(3, 2));
    }

    #[test]
    fn least_squares_rank_deficient_errors() {
        let mut x = random(3, 10, 3);
        let r0 = x.row(0).into_owned();
        x.set_row(2, &(r0 * 2.0));
        assert!(matches!(least_squares(&x, &random(1, 10, 4)), Err(Error::Singular(_))));
        assert!(matches!(ridge(&x, &random(1, 10, 4), 0.0), Err(Error::Singular(_))));
        assert!(ridge(&x, &random(1, 10, 4), 0.1).is_ok());
    }

    #[test]
    fn least_squares_is_locally_optimal() {
        let x = random(4, 30, 5);
        let t = random(2, 30, 6);
        let w = least_squares(&x, &t).unwrap().weights;
        let base = residual(&w, &x, &t);
        for seed in 0..20 {
            let dw = random(4, 2, 100 + seed) * 1e-3;
            assert!(residual(&(&w + dw), &x, &t) >= base);
        }
    }

    #[test]
    fn ridge_examples() {
        let x = random(3, 20, 7);
        let t = random(2, 20, 8);
        let ls = least_squares(&x, &t).unwrap();
        let r0 = ridge(&x, &t, 0.0).unwrap();
        assert!((ls.weights - &r0.weights).amax() < 1e-10);

        let one = DMatrix::from_element(1, 1, 1.0);
        assert!((ridge(&one, &one, 1.0).unwrap().weights[(0, 0)] - 0.5).abs() < 1e-15);

        let mut last = f64::INFINITY;
        for lambda in [0.0, 0.1, 1.0, 10.0, 100.0] {
            let n = ridge(&x, &t, lambda).unwrap().weights.norm();
            assert!(n <= last + 1e-12);
            last = n;
        }
        assert!(ridge(&x, &t, -1.0).is_err());
    }

    #[test]
    fn kernel_ridge_examples() {
        let x = random(3, 15, 9);
        let t = random(2, 15, 10);
        let lambda = 0.3;
        let km = kernel_ridge(&KernelSpec::linear(), &x, &t, lambda).unwrap();
        let rm = ridge(&x, &t, lambda).unwrap();
        for seed in 0..5 {
            let q = random(3, 1, 200 + seed).column(0).into_owned();
            let a = km.predict(&q).unwrap();
            let b = rm.predict(&q).unwrap();
            assert!((a - b).amax() < 1e-8);
            // representer consistency: A' X' q == (X A)' q
            let direct = (&x * &km.coefficients).tr_mul(&q);
            assert!((km.predict(&q).unwrap() - direct).amax() < 1e-10);
        }

        // n = 1 with k(x,x) = 1
        let x1 = DMatrix::from_element(1, 1, 1.0);
        let km = kernel_ridge(&KernelSpec::gaussian(1.0), &x1, &x1, 1.0).unwrap();
        assert!((km.coefficients[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((km.predict(&DVector::from_element(1, 1.0)).unwrap()[0] - 0.5).abs() < 1e-15);

        let km = kernel_ridge(&KernelSpec::gaussian(1.0), &x, &DMatrix::zeros(1, 15), 0.1).unwrap();
        assert_eq!(km.coefficients, DMatrix::zeros(15, 1));
        assert!(kernel_ridge(&KernelSpec::linear(), &x, &t, 0.0).is_err());
    }

    #[test]
    fn bias_augmentation() {
        // t = 2 x + 1
        let x = DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 2.0]);
        let t = DMatrix::from_row_slice(1, 3, &[1.0, 3.0, 5.0]);
        let mut m = least_squares(&augment_bias(&x), &t).unwrap();
        m.includes_bias = true;
        let y = m.predict(&DVector::from_element(1, 4.0)).unwrap();
        assert!((y[0] - 9.0).abs() < 1e-12);
    }
}
