use nalgebra::{DMatrix, DVector};

use super::engine::{self, Sphering};
use super::model::{Expansion, SfaLinearModel};
use crate::error::{Error, Result};

/// Linear SFA on a `d x n` data matrix (one sample per column).
///
/// `breaks` lists sample indices that start a new trajectory segment; the
/// difference pair ending at such an index is not used.
pub fn linear_sfa(x: &DMatrix<f64>, breaks: &[usize], k: usize) -> Result<SfaLinearModel> {
    let (d, n) = x.shape();
    if d == 0 {
        return Err(Error::input("empty observation dimension"));
    }
    let moments = engine::accumulate(n, d, breaks, |s, e| x.columns(s, e - s).clone_owned())?;
    let sol = engine::solve(&moments, k, Sphering::Direct)?;
    Ok(SfaLinearModel {
        weights: sol.weights,
        bias: sol.bias,
        slowness: sol.slowness.iter().cloned().collect(),
        expansion: Expansion::None,
    })
}

/// All monomials up to degree two: `x_1..x_p`, then `x_i x_j` for `i <= j`
/// in row-major order (`x_1 x_1, x_1 x_2, ..., x_1 x_p, x_2 x_2, ...`).
pub fn quadratic_expand(x: &DVector<f64>) -> DVector<f64> {
    let p = x.len();
    let mut out = Vec::with_capacity(p + p * (p + 1) / 2);
    out.extend(x.iter().cloned());
    for i in 0..p {
        for j in i..p {
            out.push(x[i] * x[j]);
        }
    }
    DVector::from_vec(out)
}

/// Linear SFA on the quadratic expansion of the data.
pub fn quadratic_sfa(x: &DMatrix<f64>, breaks: &[usize], k: usize) -> Result<SfaLinearModel> {
    let expanded_cols: Vec<DVector<f64>> =
        x.column_iter().map(|c| quadratic_expand(&c.into_owned())).collect();
    let expanded = DMatrix::from_columns(&expanded_cols);
    let mut model = linear_sfa(&expanded, breaks, k)?;
    model.expansion = Expansion::Quadratic;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sfa::{output_moments, slowness, SfaModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn quadratic_expand_examples() {
        assert_eq!(quadratic_expand(&DVector::from_vec(vec![2.0])).as_slice(), &[2.0, 4.0]);
        assert_eq!(quadratic_expand(&DVector::from_vec(vec![1.0, 1.0])).as_slice(), &[1.0; 5]);
        assert!(quadratic_expand(&DVector::zeros(4)).iter().all(|&v| v == 0.0));
        assert_eq!(quadratic_expand(&DVector::zeros(4)).len(), 4 + 10);
        let e = quadratic_expand(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        assert_eq!(e.as_slice(), &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
    }

    /// Slow cosine in the first latent, fast noise in the rest, mixed linearly.
    fn mixed_data(n: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 5;
        let slow: Vec<f64> = (0..n).map(|t| (PI * t as f64 / n as f64).cos()).collect();
        let latent = DMatrix::from_fn(d, n, |i, t| if i == 0 { slow[t] } else { rng.gen_range(-1.0..1.0) });
        let mix = DMatrix::from_fn(d, d, |i, j| if i == j { 2.0 } else { 0.3 * ((i + 2 * j) as f64).sin() });
        (mix * latent, slow)
    }

    #[test]
    fn recovers_slow_cosine() {
        let (x, slow) = mixed_data(3000, 1);
        let model = linear_sfa(&x, &[], 3).unwrap();
        let out = SfaModel::Linear(model.clone()).apply_columns(&x).unwrap();
        let f1: Vec<f64> = out.column(0).iter().cloned().collect();
        let corr = crate::stats::correlation(&f1, &slow);
        assert!(corr.abs() >= 0.99, "corr {corr}");

        let s = slowness(&out, &[]).unwrap();
        for j in 1..s.len() {
            assert!(s[j] >= s[j - 1] - 1e-12);
        }
        let mom = output_moments(&out);
        assert!(mom.max_abs_mean <= 1e-8);
        assert!(mom.max_cov_deviation <= 1e-6);
        // engine slowness equals measured slowness on unit-variance outputs
        for j in 0..3 {
            assert!((s[j] - model.slowness[j]).abs() < 1e-8);
        }
    }

    #[test]
    fn too_many_filters_reports_rank() {
        let (x, _) = mixed_data(200, 2);
        match linear_sfa(&x, &[], 6) {
            Err(Error::Rank { requested: 6, achievable: 5 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn breaks_exclude_cross_segment_pairs() {
        let (x, _) = mixed_data(400, 3);
        let a = linear_sfa(&x, &[200], 2).unwrap();
        let b = linear_sfa(&x, &[], 2).unwrap();
        assert!((a.slowness[0] - b.slowness[0]).abs() > 0.0);
    }
}
