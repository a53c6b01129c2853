//! Configuration and end-to-end orchestration: random walk, support
//! vectors and SFA, LSPI on the learned features, evaluation.

mod config;
mod run;

pub use config::{phase_rng, streams, DataMode, EnvKind, ExperimentConfig, ReprChoice};
pub use run::{
    eval_policy, gen_data, report, run_experiment, select_sv, train_lspi, train_sfa, Artifacts, ReprDoc, Summary,
};
