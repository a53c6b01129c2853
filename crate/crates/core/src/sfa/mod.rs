//! Slow feature analysis: linear, quadratic-expanded and kernelized with the
//! projected-process approximation, plus slowness measurement and the
//! closed-form optimal responses used to validate trained filters.

mod engine;
mod kernel;
mod linear;
mod model;
pub(crate) mod optimal;
mod slowness;

pub use kernel::{kernel_sfa_anchors, kernel_sfa_pp};
pub use linear::{linear_sfa, quadratic_expand, quadratic_sfa};
pub use model::{SfaKernelModel, SfaLinearModel, SfaModel};
pub use optimal::{box3d_indices, optimal_response, Boundary};
pub use slowness::{
    mixture_slowness_check, output_moments, slowness, slowness_report, MixtureCheck, OutputMoments,
    SlownessReport,
};
