#![allow(dead_code)]

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use slownav::rl::GridWorld;

/// Q-values of the optimal policy by value iteration on the grid, goal
/// absorbing. `q[s][a]`.
pub fn grid_value_iteration(g: &GridWorld, gamma: f64) -> Vec<[f64; 4]> {
    let n = g.n_states();
    let mut v = vec![0.0; n];
    let mut q = vec![[0.0; 4]; n];
    for _ in 0..5000 {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if s == g.goal_state() {
                continue;
            }
            for a in 0..4 {
                let t = g.next_state(s, a);
                let cont = if t == g.goal_state() { 0.0 } else { v[t] };
                q[s][a] = g.reward(t) + gamma * cont;
            }
            let best = q[s].iter().cloned().fold(f64::MIN, f64::max);
            delta = delta.max((best - v[s]).abs());
            v[s] = best;
        }
        if delta < 1e-14 {
            break;
        }
    }
    q
}

/// Reflected Gaussian random walk on `[0, 1]`.
pub fn reflected_walk<R: Rng>(n: usize, sigma: f64, rng: &mut R) -> Vec<f64> {
    let step = Normal::new(0.0, sigma).unwrap();
    let mut x = rng.gen_range(0.0..1.0);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(x);
        x += step.sample(rng);
        while !(0.0..=1.0).contains(&x) {
            x = if x < 0.0 { -x } else { 2.0 - x };
        }
    }
    out
}

/// Drifting Gaussian random walk on the circle `[0, 1)`.
pub fn cyclic_walk<R: Rng>(n: usize, drift: f64, sigma: f64, rng: &mut R) -> Vec<f64> {
    let step = Normal::new(0.0, sigma).unwrap();
    let mut x: f64 = rng.gen_range(0.0..1.0);
    (0..n)
        .map(|_| {
            let cur = x;
            x = (x + drift + step.sample(rng)).rem_euclid(1.0);
            cur
        })
        .collect()
}

/// Smooth injective map of `[0, 1]` into ten dimensions: the identity in
/// the first coordinate, sines of increasing frequency in the rest.
pub fn smooth_observation(x: f64) -> DVector<f64> {
    DVector::from_fn(10, |i, _| {
        if i == 0 {
            x
        } else {
            ((0.5 + 0.35 * i as f64) * std::f64::consts::PI * x + 0.7 * i as f64).sin()
        }
    })
}

/// Zero-mean, unit-variance copy.
pub fn standardize(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    v.iter().map(|x| (x - m) / sd).collect()
}

/// Mean squared successive difference.
pub fn slowness_of(v: &[f64]) -> f64 {
    v.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}
