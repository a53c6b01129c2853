//! Kernel functions, Gram matrices, greedy support-vector selection by
//! approximated linear dependence (ALD) and the projected-process spectrum.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, RANK_CUTOFF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Linear,
    Polynomial,
    NormalizedPolynomial,
    Rbf,
}

/// Kernel family plus parameters.
///
/// `degree` is the polynomial degree for the polynomial families and the
/// exponent of the scaled distance for `Rbf` (2 gives the Gaussian kernel,
/// 1 the Laplacian). `width` is only read by `Rbf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    #[serde(default = "default_degree")]
    pub degree: u32,
    #[serde(default = "default_width")]
    pub width: f64,
}

fn default_degree() -> u32 {
    2
}

fn default_width() -> f64 {
    1.0
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec { family: KernelFamily::Linear, degree: 1, width: 1.0 }
    }

    pub fn polynomial(degree: u32) -> Self {
        KernelSpec { family: KernelFamily::Polynomial, degree, width: 1.0 }
    }

    pub fn normalized_polynomial(degree: u32) -> Self {
        KernelSpec { family: KernelFamily::NormalizedPolynomial, degree, width: 1.0 }
    }

    /// Gaussian RBF kernel `exp(-|x-y|^2 / (2 width^2))`.
    pub fn gaussian(width: f64) -> Self {
        KernelSpec { family: KernelFamily::Rbf, degree: 2, width }
    }

    pub fn rbf(width: f64, degree: u32) -> Self {
        KernelSpec { family: KernelFamily::Rbf, degree, width }
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            KernelFamily::Linear => Ok(()),
            KernelFamily::Polynomial | KernelFamily::NormalizedPolynomial => {
                if self.degree < 1 {
                    return Err(Error::input("polynomial degree must be >= 1"));
                }
                Ok(())
            }
            KernelFamily::Rbf => {
                if !(self.width > 0.0 && self.width.is_finite()) {
                    return Err(Error::input("rbf width must be positive"));
                }
                if self.degree < 1 {
                    return Err(Error::input("rbf exponent must be >= 1"));
                }
                Ok(())
            }
        }
    }

    /// Kernel value without dimension checks.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Linear => dot(x, y),
            KernelFamily::Polynomial => (dot(x, y) + 1.0).powi(self.degree as i32),
            KernelFamily::NormalizedPolynomial => {
                let nx = dot(x, x).sqrt();
                let ny = dot(y, y).sqrt();
                // cosine is undefined at the origin; the kernel is 0 there
                if nx == 0.0 || ny == 0.0 {
                    return 0.0;
                }
                (dot(x, y) / (nx * ny)).powi(self.degree as i32)
            }
            KernelFamily::Rbf => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                if self.degree == 2 {
                    (-d2 / (2.0 * self.width * self.width)).exp()
                } else {
                    let scaled = d2.sqrt() / (std::f64::consts::SQRT_2 * self.width);
                    (-scaled.powi(self.degree as i32)).exp()
                }
            }
        }
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Evaluate `k(x, y)`.
pub fn kernel_eval(spec: &KernelSpec, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    Ok(spec.eval_unchecked(x.as_slice(), y.as_slice()))
}

/// Symmetric kernel matrix over a set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(pub DMatrix<f64>);

impl GramMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }
}

pub fn gram_matrix(spec: &KernelSpec, points: &[DVector<f64>]) -> Result<GramMatrix> {
    if points.is_empty() {
        return Err(Error::input("gram matrix of an empty point set"));
    }
    let d = points[0].len();
    for p in points {
        check_dim(d, p.len())?;
    }
    let n = points.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = spec.eval_unchecked(points[i].as_slice(), points[j].as_slice());
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(GramMatrix(k))
}

/// Double-centre a kernel matrix: `(I - 11'/n) K (I - 11'/n)`.
pub fn center_gram(k: &GramMatrix) -> Result<GramMatrix> {
    let m = &k.0;
    if m.nrows() != m.ncols() {
        return Err(Error::input("center_gram needs a square matrix"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(k.clone());
    }
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| m.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| m.column(j).sum() / nf).collect();
    let total = m.sum() / (nf * nf);
    Ok(GramMatrix(DMatrix::from_fn(n, n, |i, j| {
        m[(i, j)] - row_means[i] - col_means[j] + total
    })))
}

/// Kernel expansion `k(x) = [k(sv_1, x), ..., k(sv_m, x)]`.
pub fn kernel_expansion(spec: &KernelSpec, anchors: &[DVector<f64>], x: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        anchors.len(),
        anchors.iter().map(|a| spec.eval_unchecked(a.as_slice(), x.as_slice())),
    )
}

/// Kernel expansions of many samples, one column per sample (`m x n`).
pub fn kernel_expansion_matrix(
    spec: &KernelSpec,
    anchors: &[DVector<f64>],
    samples: &[DVector<f64>],
) -> DMatrix<f64> {
    let m = anchors.len();
    let cols: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|x| anchors.iter().map(|a| spec.eval_unchecked(a.as_slice(), x.as_slice())).collect())
        .collect();
    let mut out = DMatrix::zeros(m, samples.len());
    for (j, c) in cols.iter().enumerate() {
        out.column_mut(j).copy_from_slice(c);
    }
    out
}

/// Support vectors selected by the ALD criterion together with the inverse
/// of their Gram matrix.
#[derive(Debug, Clone)]
pub struct SupportVectorSet {
    pub spec: KernelSpec,
    pub nu: f64,
    pub vectors: Vec<DVector<f64>>,
    pub inverse_gram: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct SupportVectorSetDoc {
    kernel: KernelSpec,
    nu: f64,
    vectors: Vec<Vec<f64>>,
}

impl SupportVectorSet {
    /// Build a set from explicit vectors, inverting their Gram matrix.
    pub fn from_vectors(spec: KernelSpec, nu: f64, vectors: Vec<DVector<f64>>) -> Result<Self> {
        spec.validate()?;
        let gram = gram_matrix(&spec, &vectors)?;
        let m = gram.len();
        let inverse_gram = linalg::spd_solve(&gram.0, &DMatrix::identity(m, m))
            .map_err(|_| Error::Singular("support-vector Gram matrix is not invertible".into()))?;
        Ok(SupportVectorSet { spec, nu, vectors, inverse_gram })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.len())
    }

    pub fn gram(&self) -> GramMatrix {
        gram_matrix(&self.spec, &self.vectors).expect("non-empty, uniform")
    }

    /// ALD residual of `x` against the current set, clamped at 0.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        let k = kernel_expansion(&self.spec, &self.vectors, x);
        let kxx = self.spec.eval_unchecked(x.as_slice(), x.as_slice());
        (kxx - k.dot(&(&self.inverse_gram * &k))).max(0.0)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = SupportVectorSetDoc {
            kernel: self.spec,
            nu: self.nu,
            vectors: self.vectors.iter().map(|v| v.as_slice().to_vec()).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: SupportVectorSetDoc = serde_json::from_str(s)?;
        let vectors = doc.vectors.into_iter().map(DVector::from_vec).collect();
        Self::from_vectors(doc.kernel, doc.nu, vectors)
    }
}

/// Outcome of offering one sample to an [`AldSelector`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AldDecision {
    pub accepted: bool,
    pub residual: f64,
}

/// Streaming greedy support-vector selection.
///
/// The inverse Gram matrix is grown with the block-inverse (Woodbury) update
/// on every acceptance, so each offer costs O(m^2).
#[derive(Debug, Clone)]
pub struct AldSelector {
    set: SupportVectorSet,
}

impl AldSelector {
    pub fn new(spec: KernelSpec, nu: f64) -> Result<Self> {
        spec.validate()?;
        if !(nu > 0.0) {
            return Err(Error::input("ALD threshold nu must be positive"));
        }
        Ok(AldSelector {
            set: SupportVectorSet { spec, nu, vectors: Vec::new(), inverse_gram: DMatrix::zeros(0, 0) },
        })
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    /// Support vectors and incrementally updated inverse Gram so far.
    pub fn current(&self) -> &SupportVectorSet {
        &self.set
    }

    pub fn offer(&mut self, x: &DVector<f64>) -> Result<AldDecision> {
        let spec = self.set.spec;
        let kxx = spec.eval_unchecked(x.as_slice(), x.as_slice());
        if self.set.is_empty() {
            // the first sample with a non-degenerate feature image starts the set
            if kxx <= 0.0 {
                return Ok(AldDecision { accepted: false, residual: 0.0 });
            }
            self.set.vectors.push(x.clone());
            self.set.inverse_gram = DMatrix::from_element(1, 1, 1.0 / kxx);
            return Ok(AldDecision { accepted: true, residual: kxx });
        }
        check_dim(self.set.dim(), x.len())?;
        let k = kernel_expansion(&spec, &self.set.vectors, x);
        let a = &self.set.inverse_gram * &k;
        let eps = (kxx - k.dot(&a)).max(0.0);
        if eps < self.set.nu {
            return Ok(AldDecision { accepted: false, residual: eps });
        }
        let m = self.set.len();
        let mut inv = DMatrix::zeros(m + 1, m + 1);
        {
            let mut top = inv.view_mut((0, 0), (m, m));
            top.copy_from(&self.set.inverse_gram);
            top.ger(1.0 / eps, &a, &a, 1.0);
        }
        for i in 0..m {
            inv[(i, m)] = -a[i] / eps;
            inv[(m, i)] = -a[i] / eps;
        }
        inv[(m, m)] = 1.0 / eps;
        self.set.inverse_gram = inv;
        self.set.vectors.push(x.clone());
        Ok(AldDecision { accepted: true, residual: eps })
    }

    pub fn finish(self) -> Result<SupportVectorSet> {
        if self.set.is_empty() {
            return Err(Error::input("no sample has a positive self-kernel"));
        }
        Ok(self.set)
    }
}

/// Select support vectors from `samples` in order.
pub fn ald_select(spec: &KernelSpec, samples: &[DVector<f64>], nu: f64) -> Result<SupportVectorSet> {
    if samples.is_empty() {
        return Err(Error::input("ALD selection over an empty stream"));
    }
    let mut sel = AldSelector::new(*spec, nu)?;
    for x in samples {
        sel.offer(x)?;
    }
    sel.finish()
}

/// Median Euclidean distance between (at most about 200) evenly strided
/// samples; a scale for Gaussian widths.
pub fn median_pairwise_distance(samples: &[DVector<f64>]) -> f64 {
    let stride = (samples.len() / 200).max(1);
    let pick: Vec<&DVector<f64>> = samples.iter().step_by(stride).collect();
    let mut d = Vec::new();
    for i in 0..pick.len() {
        for j in 0..i {
            d.push((pick[i] - pick[j]).norm());
        }
    }
    d.sort_by(f64::total_cmp);
    d.get(d.len() / 2).copied().unwrap_or(1.0).max(1e-6)
}

/// Bisect the Gaussian width so that ALD selection with fixed `nu` yields
/// roughly `target` support vectors. Wider kernels select fewer vectors.
pub fn tune_width_for_budget(
    samples: &[DVector<f64>],
    nu: f64,
    target: usize,
    mut lo: f64,
    mut hi: f64,
    iterations: usize,
) -> Result<(f64, usize)> {
    let count = |w: f64| ald_select(&KernelSpec::gaussian(w), samples, nu).map(|s| s.len());
    let mut best = (hi, count(hi)?);
    for _ in 0..iterations {
        let mid = (lo * hi).sqrt();
        let c = count(mid)?;
        if c.abs_diff(target) < best.1.abs_diff(target) {
            best = (mid, c);
        }
        if c > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// Square-rooted spectrum of an accumulated `K^ K^'` product: its
/// eigenvectors approximate those of `K`, the square roots of its
/// eigenvalues approximate `K`'s eigenvalues.
#[derive(Debug, Clone)]
pub struct PpSpectrum {
    /// Retained eigenvectors, one per column, ordered by descending eigenvalue.
    pub eigenvectors: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
}

pub fn pp_eigendecomposition(kk_t: &DMatrix<f64>) -> Result<PpSpectrum> {
    if kk_t.nrows() != kk_t.ncols() {
        return Err(Error::input("projected-process input must be square"));
    }
    if linalg::relative_asymmetry(kk_t) > 1e-8 {
        return Err(Error::input("projected-process input is not symmetric"));
    }
    let (vals, vecs) = linalg::sorted_symmetric_eigen(kk_t);
    let max = vals.iter().cloned().fold(0.0f64, f64::max);
    let keep: Vec<usize> = (0..vals.len())
        .rev()
        .filter(|&i| max > 0.0 && vals[i] >= RANK_CUTOFF * max)
        .collect();
    let m = kk_t.nrows();
    let mut eigenvectors = DMatrix::zeros(m, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        eigenvectors.set_column(c, &vecs.column(i));
    }
    let eigenvalues = DVector::from_iterator(keep.len(), keep.iter().map(|&i| vals[i].sqrt()));
    Ok(PpSpectrum { eigenvectors, eigenvalues })
}
