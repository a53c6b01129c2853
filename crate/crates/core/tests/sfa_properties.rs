mod common;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use slownav::kernel::{ald_select, KernelSpec};
use slownav::sfa::{kernel_sfa_pp, linear_sfa, slowness, SfaModel};

fn walk_obs(n: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    common::reflected_walk(n, 0.04, &mut rng).into_iter().map(common::smooth_observation).collect()
}

#[test]
fn training_slowness_is_sorted_and_reproduced() {
    let obs = walk_obs(2000, 1);
    let svs = ald_select(&KernelSpec::gaussian(0.6), &obs, 0.05).unwrap();
    let model = SfaModel::Kernel(kernel_sfa_pp(&obs, &[], &svs, 6).unwrap());
    let train = model.training_slowness().to_vec();
    assert!(train.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    let measured = slowness(&model.apply_batch(&obs).unwrap(), &[]).unwrap();
    for (a, b) in train.iter().zip(measured.iter()) {
        assert!((a - b).abs() < 1e-8 * a.max(1.0), "{a} vs {b}");
    }
}

#[test]
fn json_roundtrip_preserves_outputs() {
    let obs = walk_obs(1500, 2);
    let svs = ald_select(&KernelSpec::gaussian(0.6), &obs, 0.05).unwrap();
    let model = SfaModel::Kernel(kernel_sfa_pp(&obs, &[], &svs, 4).unwrap());
    let back = SfaModel::from_json(&model.to_json().unwrap()).unwrap();
    let probe = walk_obs(50, 3);
    assert_eq!(model.apply_batch(&probe).unwrap(), back.apply_batch(&probe).unwrap());
}

#[test]
fn linear_sfa_ignores_input_scaling() {
    let obs = walk_obs(2000, 4);
    let x = DMatrix::from_columns(&obs);
    let a = SfaModel::Linear(linear_sfa(&x, &[], 3).unwrap()).apply_columns(&x).unwrap();
    let scaled = &x * 7.5;
    let b = SfaModel::Linear(linear_sfa(&scaled, &[], 3).unwrap()).apply_columns(&scaled).unwrap();
    for j in 0..3 {
        let d = (a.column(j) - b.column(j)).amax().min((a.column(j) + b.column(j)).amax());
        assert!(d < 1e-6, "filter {j}: {d}");
    }
}

#[test]
fn truncation_keeps_slowest_prefix() {
    let obs = walk_obs(1500, 5);
    let svs = ald_select(&KernelSpec::gaussian(0.6), &obs, 0.05).unwrap();
    let full = SfaModel::Kernel(kernel_sfa_pp(&obs, &[], &svs, 6).unwrap());
    let mut short = full.clone();
    short.truncate(2);
    assert_eq!(short.n_filters(), 2);
    let a = full.apply(&obs[10]).unwrap();
    let b = short.apply(&obs[10]).unwrap();
    assert!((a.rows(0, 2) - b).amax() < 1e-12);
}
