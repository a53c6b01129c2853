//! Linear value estimation and policy iteration.

mod grid;
mod lspi;
mod mrp;
mod repr;

pub use grid::GridWorld;
pub use lspi::{
    greedy_action, lsq, lspi, lstd, FeatureData, FeatureSample, InitialPolicy, LspiConfig, LspiIteration, LspiResult,
    LsqSystem, NextPolicy, QWeights,
};
pub use mrp::{solve_mrp_value, TabularMrp};
pub use repr::{sa_embed, trig_dim, trig_repr, StateRepr};
