use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::quadratic_expand;
use crate::error::{check_dim, Result};
use crate::kernel::{kernel_expansion, KernelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expansion {
    None,
    Quadratic,
}

/// Affine filters `phi(x) = W' x - c`, optionally on quadratically expanded input.
#[derive(Debug, Clone, PartialEq)]
pub struct SfaLinearModel {
    /// `d x k`
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    /// Training-set slowness per filter, ascending.
    pub slowness: Vec<f64>,
    pub expansion: Expansion,
}

/// Kernel filters `phi(x) = A' k(x) - c` over a support-vector expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct SfaKernelModel {
    pub kernel: KernelSpec,
    pub support_vectors: Vec<DVector<f64>>,
    /// `m x k`
    pub coefficients: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub slowness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SfaModel {
    Linear(SfaLinearModel),
    Kernel(SfaKernelModel),
}

impl SfaModel {
    /// Keeps only the `k` slowest filters.
    pub fn truncate(&mut self, k: usize) {
        match self {
            SfaModel::Linear(m) => {
                let k = k.min(m.weights.ncols());
                m.weights = m.weights.columns(0, k).into_owned();
                m.bias = m.bias.rows(0, k).into_owned();
                m.slowness.truncate(k);
            }
            SfaModel::Kernel(m) => {
                let k = k.min(m.coefficients.ncols());
                m.coefficients = m.coefficients.columns(0, k).into_owned();
                m.bias = m.bias.rows(0, k).into_owned();
                m.slowness.truncate(k);
            }
        }
    }

    pub fn n_filters(&self) -> usize {
        match self {
            SfaModel::Linear(m) => m.weights.ncols(),
            SfaModel::Kernel(m) => m.coefficients.ncols(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            SfaModel::Linear(m) => match m.expansion {
                Expansion::None => m.weights.nrows(),
                // p + p(p+1)/2 = rows
                Expansion::Quadratic => {
                    let r = m.weights.nrows() as f64;
                    ((-3.0 + (9.0 + 8.0 * r).sqrt()) / 2.0).round() as usize
                }
            },
            SfaModel::Kernel(m) => m.support_vectors.first().map_or(0, |v| v.len()),
        }
    }

    pub fn training_slowness(&self) -> &[f64] {
        match self {
            SfaModel::Linear(m) => &m.slowness,
            SfaModel::Kernel(m) => &m.slowness,
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(match self {
            SfaModel::Linear(m) => match m.expansion {
                Expansion::None => m.weights.tr_mul(x) - &m.bias,
                Expansion::Quadratic => m.weights.tr_mul(&quadratic_expand(x)) - &m.bias,
            },
            SfaModel::Kernel(m) => {
                m.coefficients.tr_mul(&kernel_expansion(&m.kernel, &m.support_vectors, x)) - &m.bias
            }
        })
    }

    /// Apply to many samples; row `t` of the result is the output for `xs[t]`.
    pub fn apply_batch(&self, xs: &[DVector<f64>]) -> Result<DMatrix<f64>> {
        let rows: Vec<DVector<f64>> = xs.par_iter().map(|x| self.apply(x)).collect::<Result<_>>()?;
        let k = self.n_filters();
        Ok(DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]))
    }

    /// Apply to the columns of a `d x n` matrix.
    pub fn apply_columns(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let cols: Vec<DVector<f64>> = x.column_iter().map(|c| c.into_owned()).collect();
        self.apply_batch(&cols)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelDoc::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(s)?;
        doc.into_model()
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

fn rows_matrix(rows: &[Vec<f64>], ncols: usize) -> Result<DMatrix<f64>> {
    for r in rows {
        check_dim(ncols, r.len())?;
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ModelDoc {
    Linear {
        #[serde(rename = "W")]
        w: Vec<Vec<f64>>,
        c: Vec<f64>,
        slowness: Vec<f64>,
    },
    Quadratic {
        #[serde(rename = "W")]
        w: Vec<Vec<f64>>,
        c: Vec<f64>,
        slowness: Vec<f64>,
    },
    Kernel {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        c: Vec<f64>,
        slowness: Vec<f64>,
        kernel: KernelSpec,
        svs: Vec<Vec<f64>>,
    },
}

impl From<&SfaModel> for ModelDoc {
    fn from(m: &SfaModel) -> Self {
        match m {
            SfaModel::Linear(l) => {
                let w = matrix_rows(&l.weights);
                let c = l.bias.iter().cloned().collect();
                let slowness = l.slowness.clone();
                match l.expansion {
                    Expansion::None => ModelDoc::Linear { w, c, slowness },
                    Expansion::Quadratic => ModelDoc::Quadratic { w, c, slowness },
                }
            }
            SfaModel::Kernel(k) => ModelDoc::Kernel {
                a: matrix_rows(&k.coefficients),
                c: k.bias.iter().cloned().collect(),
                slowness: k.slowness.clone(),
                kernel: k.kernel,
                svs: k.support_vectors.iter().map(|v| v.as_slice().to_vec()).collect(),
            },
        }
    }
}

impl ModelDoc {
    fn into_model(self) -> Result<SfaModel> {
        Ok(match self {
            ModelDoc::Linear { w, c, slowness } => linear_from_doc(w, c, slowness, Expansion::None)?,
            ModelDoc::Quadratic { w, c, slowness } => linear_from_doc(w, c, slowness, Expansion::Quadratic)?,
            ModelDoc::Kernel { a, c, slowness, kernel, svs } => {
                kernel.validate()?;
                let k = c.len();
                let coefficients = rows_matrix(&a, k)?;
                check_dim(svs.len(), coefficients.nrows())?;
                SfaModel::Kernel(SfaKernelModel {
                    kernel,
                    support_vectors: svs.into_iter().map(DVector::from_vec).collect(),
                    coefficients,
                    bias: DVector::from_vec(c),
                    slowness,
                })
            }
        })
    }
}

fn linear_from_doc(w: Vec<Vec<f64>>, c: Vec<f64>, slowness: Vec<f64>, expansion: Expansion) -> Result<SfaModel> {
    let weights = rows_matrix(&w, c.len())?;
    Ok(SfaModel::Linear(SfaLinearModel { weights, bias: DVector::from_vec(c), slowness, expansion }))
}
