//! Slow-feature state representations and least-squares policy iteration
//! for a simulated mobile robot.
//!
//! The crate is organised along the training pipeline:
//!
//! * [`kernel`]: kernels, Gram matrices, ALD support-vector selection
//! * [`regression`]: least squares, ridge and kernel ridge
//! * [`sfa`]: linear, quadratic and kernel slow feature analysis
//! * [`env`]: room geometry, kinematics, rewards, synthetic observations
//! * [`rl`]: state representations, LSTD, LSQ, LSPI
//! * [`eval`]: reference policies, rollouts, convergence quality
//! * [`pipeline`]: configuration and end-to-end orchestration

pub mod env;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod linalg;
pub mod pipeline;
pub mod regression;
pub mod rl;
pub mod sfa;
pub mod stats;

pub use error::{Error, Result};
