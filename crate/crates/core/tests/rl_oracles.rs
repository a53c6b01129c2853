mod common;

use nalgebra::DVector;
use slownav::rl::{
    greedy_action, lsq, lspi, solve_mrp_value, FeatureData, FeatureSample, GridWorld, InitialPolicy, LspiConfig,
    NextPolicy, StateRepr,
};

fn unit(m: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(m);
    v[i] = 1.0;
    v
}

#[test]
fn lsq_two_state_chain() {
    // 0 --a1--> 1 (reward 0), 1 --a0--> absorbing (reward 1); a0 from 0 and a1 from 1 stay put at reward 0
    let samples = vec![
        FeatureSample { phi: unit(2, 0), action: 1, reward: 0.0, next: Some(unit(2, 1)) },
        FeatureSample { phi: unit(2, 1), action: 0, reward: 1.0, next: None },
        FeatureSample { phi: unit(2, 0), action: 0, reward: 0.0, next: Some(unit(2, 0)) },
        FeatureSample { phi: unit(2, 1), action: 1, reward: 0.0, next: Some(unit(2, 1)) },
    ];
    let data = FeatureData::new(2, 2, samples).unwrap();
    let res = lspi(&data, &LspiConfig::new(0.5)).unwrap();
    let q = |s: usize| res.weights.q_values(&unit(2, s));
    assert!((q(1)[0] - 1.0).abs() < 1e-9);
    assert!((q(1)[1] - 0.5).abs() < 1e-9);
    assert!((q(0)[1] - 0.5).abs() < 1e-9);
    assert!((q(0)[0] - 0.25).abs() < 1e-9);
    assert_eq!(greedy_action(&res.weights, &unit(2, 0)), 1);
}

#[test]
fn all_actions_average_on_chain() {
    let samples = vec![
        FeatureSample { phi: unit(1, 0), action: 0, reward: 1.0, next: Some(unit(1, 0)) },
        FeatureSample { phi: unit(1, 0), action: 1, reward: 0.0, next: Some(unit(1, 0)) },
    ];
    let data = FeatureData::new(1, 2, samples).unwrap();
    // Q0 = 1 + g (Q0+Q1)/2, Q1 = g (Q0+Q1)/2 with g = 0.5 gives Q0 = 1.5, Q1 = 0.5
    let w = lsq(&data, NextPolicy::AllActions, 0.5).unwrap();
    assert!((w.w[0] - 1.5).abs() < 1e-9);
    assert!((w.w[1] - 0.5).abs() < 1e-9);
}

#[test]
fn zero_rewards_give_zero_weights() {
    let grid = GridWorld::new(6, 5, (2, 2)).unwrap();
    let mut data = grid.exhaustive_data().unwrap();
    for s in &mut data.samples {
        s.reward = 0.0;
    }
    let res = lspi(&data, &LspiConfig::new(0.9)).unwrap();
    assert!(res.weights.w.amax() < 1e-12);
}

#[test]
fn lspi_fixed_point_is_idempotent() {
    let grid = GridWorld::new(10, 8, (7, 2)).unwrap();
    let data = grid.exhaustive_data().unwrap();
    let first = lspi(&data, &LspiConfig::new(0.9)).unwrap();
    let mut cfg = LspiConfig::new(0.9);
    cfg.initial = InitialPolicy::Weights(first.weights.clone());
    let again = lspi(&data, &cfg).unwrap();
    assert_eq!(again.trace.len(), 1);
    assert!((&again.weights.w - &first.weights.w).amax() < 1e-9);
}

#[test]
fn lspi_values_match_value_iteration() {
    let grid = GridWorld::new(12, 9, (3, 6)).unwrap();
    let res = lspi(&grid.exhaustive_data().unwrap(), &LspiConfig::new(0.9)).unwrap();
    let q = common::grid_value_iteration(&grid, 0.9);
    let repr = StateRepr::Tabular { n_states: grid.n_states() };
    for s in 0..grid.n_states() {
        if s == grid.goal_state() {
            continue;
        }
        let lq = res.weights.q_values(&repr.tabular(s).unwrap());
        for a in 0..4 {
            assert!((lq[a] - q[s][a]).abs() < 1e-6, "state {s} action {a}: {} vs {}", lq[a], q[s][a]);
        }
    }
}

#[test]
fn tabular_policy_value_has_zero_residual() {
    let grid = GridWorld::new(9, 9, (0, 8)).unwrap();
    let mrp = grid.policy_mrp(|s| grid.toward_goal(s), 0.8).unwrap();
    let v = solve_mrp_value(&mrp).unwrap();
    assert!(mrp.bellman_residual(&v) < 1e-10);
    assert_eq!(v[grid.goal_state()], 0.0);
}
