//! Shared two-pass moment accumulation and the sphere-then-rotate solve.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::pp_eigendecomposition;
use crate::linalg::{self, RANK_CUTOFF};

const CHUNK: usize = 1024;

/// Centered second moment and derivative second moment of a feature stream.
pub(crate) struct Moments {
    pub n: usize,
    pub mean: DVector<f64>,
    /// `sum (f - mean)(f - mean)'`
    pub centered: DMatrix<f64>,
    /// `sum over usable pairs of (f_t - f_{t-1})(f_t - f_{t-1})'`
    pub derivative: DMatrix<f64>,
    pub pairs: usize,
}

/// Marks, for each sample index, whether the pair `(t-1, t)` is usable.
pub(crate) fn usable_pairs(n: usize, breaks: &[usize]) -> Vec<bool> {
    let mut ok = vec![true; n];
    if n > 0 {
        ok[0] = false;
    }
    for &b in breaks {
        if b < n {
            ok[b] = false;
        }
    }
    ok
}

/// Accumulate moments of `p`-dimensional features. `features(s, e)` returns
/// the features of samples `s..e` as a `p x (e - s)` matrix.
pub(crate) fn accumulate<F>(n: usize, p: usize, breaks: &[usize], features: F) -> Result<Moments>
where
    F: Fn(usize, usize) -> DMatrix<f64> + Sync,
{
    if n < 2 {
        return Err(Error::input("SFA needs at least two samples"));
    }
    let usable = usable_pairs(n, breaks);
    let pairs = usable.iter().filter(|&&u| u).count();
    if pairs == 0 {
        return Err(Error::input("no usable derivative pairs"));
    }
    let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();

    let sum = starts
        .par_iter()
        .map(|&s| {
            let e = (s + CHUNK).min(n);
            features(s, e).column_sum()
        })
        .collect::<Vec<_>>() // summed in chunk order, independent of scheduling
        .into_iter()
        .fold(DVector::zeros(p), |a, b| a + b);
    let mean = sum / n as f64;

    let (centered, derivative) = starts
        .par_iter()
        .map(|&s| {
            let e = (s + CHUNK).min(n);
            // one extra leading sample so pairs straddling chunks are kept
            let lead = if s > 0 { 1 } else { 0 };
            let f = features(s - lead, e);
            let own = f.columns(lead, e - s);
            let mut c = own.clone_owned();
            for mut col in c.column_iter_mut() {
                col -= &mean;
            }
            let cc = &c * c.transpose();
            let idx: Vec<usize> = (s.max(1)..e).filter(|&t| usable[t]).collect();
            let mut diffs = DMatrix::zeros(p, idx.len());
            for (j, &t) in idx.iter().enumerate() {
                let local = t - (s - lead);
                diffs.set_column(j, &(f.column(local) - f.column(local - 1)));
            }
            let dd = &diffs * diffs.transpose();
            (cc, dd)
        })
        .collect::<Vec<_>>() // summed in chunk order, independent of scheduling
        .into_iter()
        .fold((DMatrix::zeros(p, p), DMatrix::zeros(p, p)), |a, b| (a.0 + b.0, a.1 + b.1));

    Ok(Moments { n, mean, centered, derivative, pairs })
}

pub(crate) enum Sphering {
    /// Eigendecomposition of the feature covariance.
    Direct,
    /// Square-rooted spectrum of the accumulated kernel product.
    ProjectedProcess,
}

pub(crate) struct SfaSolution {
    /// `p x k`
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub slowness: DVector<f64>,
}

pub(crate) fn solve(m: &Moments, k: usize, sphering: Sphering) -> Result<SfaSolution> {
    let n = m.n as f64;
    // rows of `sphere` map centered features to white coordinates
    let sphere = match sphering {
        Sphering::Direct => {
            let cov = &m.centered / n;
            let (vals, vecs) = linalg::sorted_symmetric_eigen(&cov);
            let max = vals.max().max(0.0);
            let keep: Vec<usize> =
                (0..vals.len()).rev().filter(|&i| max > 0.0 && vals[i] >= RANK_CUTOFF * max).collect();
            let mut s = DMatrix::zeros(keep.len(), cov.nrows());
            for (r, &i) in keep.iter().enumerate() {
                s.set_row(r, &(vecs.column(i).transpose() / vals[i].sqrt()));
            }
            s
        }
        Sphering::ProjectedProcess => {
            let spec = pp_eigendecomposition(&linalg::symmetrize(&m.centered))?;
            let r = spec.eigenvalues.len();
            let mut s = DMatrix::zeros(r, m.centered.nrows());
            for i in 0..r {
                s.set_row(i, &(spec.eigenvectors.column(i).transpose() * (n.sqrt() / spec.eigenvalues[i])));
            }
            s
        }
    };
    let rank = sphere.nrows();
    if k == 0 || k > rank {
        return Err(Error::Rank { requested: k, achievable: rank });
    }
    let dcov = &sphere * (&m.derivative / m.pairs as f64) * sphere.transpose();
    let (vals, vecs) = linalg::sorted_symmetric_eigen(&dcov);
    let rot = vecs.columns(0, k);
    let weights = sphere.transpose() * rot;
    let bias = weights.tr_mul(&m.mean);
    let slowness = DVector::from_iterator(k, vals.iter().take(k).cloned());
    Ok(SfaSolution { weights, bias, slowness })
}
