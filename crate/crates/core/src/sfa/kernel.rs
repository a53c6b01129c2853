use nalgebra::DVector;

use super::engine::{self, Sphering};
use super::model::SfaKernelModel;
use crate::error::{check_dim, Error, Result};
use crate::kernel::{kernel_expansion_matrix, KernelSpec, SupportVectorSet};

/// Kernel SFA with the projected-process approximation over the given
/// support vectors.
///
/// The stream is read twice (mean, then centred products), keeping only
/// `m x m` accumulators alive.
pub fn kernel_sfa_pp(
    samples: &[DVector<f64>],
    breaks: &[usize],
    svs: &SupportVectorSet,
    k: usize,
) -> Result<SfaKernelModel> {
    kernel_sfa_anchors(samples, breaks, &svs.spec, &svs.vectors, k)
}

/// Same as [`kernel_sfa_pp`] for an arbitrary anchor set, which need not
/// have an invertible Gram matrix.
pub fn kernel_sfa_anchors(
    samples: &[DVector<f64>],
    breaks: &[usize],
    spec: &KernelSpec,
    anchors: &[DVector<f64>],
    k: usize,
) -> Result<SfaKernelModel> {
    spec.validate()?;
    if anchors.is_empty() {
        return Err(Error::input("kernel SFA needs at least one support vector"));
    }
    let m = anchors.len();
    if k > m {
        return Err(Error::Rank { requested: k, achievable: m });
    }
    let d = anchors[0].len();
    for s in samples {
        check_dim(d, s.len())?;
    }
    let moments = engine::accumulate(samples.len(), m, breaks, |s, e| {
        kernel_expansion_matrix(spec, anchors, &samples[s..e])
    })?;
    let sol = engine::solve(&moments, k, Sphering::ProjectedProcess)?;
    Ok(SfaKernelModel {
        kernel: *spec,
        support_vectors: anchors.to_vec(),
        coefficients: sol.weights,
        bias: sol.bias,
        slowness: sol.slowness.iter().cloned().collect(),
    })
}
