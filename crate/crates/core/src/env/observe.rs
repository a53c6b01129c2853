use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::{Environment, Polygon, Pose};
use crate::error::{Error, Result};

const TEXTURE_TERMS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObsConfig {
    /// Number of rays across the field of view.
    pub rays: usize,
    /// Field of view, radians.
    pub fov: f64,
    /// Standard deviation of additive sensor noise; 0 disables it.
    pub noise: f64,
    pub texture_seed: u64,
}

impl Default for ObsConfig {
    fn default() -> Self {
        ObsConfig { rays: 16, fov: 66f64.to_radians(), noise: 0.0, texture_seed: 1 }
    }
}

impl ObsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rays < 1 || !(self.fov > 0.0 && self.fov < TAU) || !(self.noise >= 0.0) {
            return Err(Error::input("observation needs >= 1 ray, a field of view in (0, 2pi) and noise >= 0"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        2 * self.rays
    }
}

/// Smooth pseudo-random brightness profile along one wall: an offset plus
/// a few sinusoids in the arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct WallTexture {
    pub offset: f64,
    pub terms: Vec<(f64, f64, f64)>,
}

impl WallTexture {
    pub fn value(&self, s: f64) -> f64 {
        self.offset + self.terms.iter().map(|&(a, f, p)| a * (TAU * f * s + p).sin()).sum::<f64>()
    }
}

pub(crate) fn make_textures(polygon: &Polygon, seed: u64) -> Vec<WallTexture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..polygon.n_segments())
        .map(|_| WallTexture {
            offset: rng.gen_range(-1.0..1.0),
            terms: (0..TEXTURE_TERMS)
                .map(|_| (rng.gen_range(0.2..0.6), rng.gen_range(0.3..1.5), rng.gen_range(0.0..TAU)))
                .collect(),
        })
        .collect()
}

impl Environment {
    /// Ray panorama centred on the heading: for each ray, left to right,
    /// the wall distance, then for each ray the wall texture at the hit
    /// point. The frame is shifted to zero mean.
    pub fn observe(&self, pose: &Pose) -> DVector<f64> {
        let r = self.obs.rays;
        let mut out = DVector::zeros(2 * r);
        for i in 0..r {
            let frac = if r == 1 { 0.5 } else { i as f64 / (r - 1) as f64 };
            let angle = pose.theta + self.obs.fov * (0.5 - frac);
            if let Some(hit) = self.geometry.polygon.ray_cast(pose.x, pose.y, angle) {
                out[i] = hit.distance;
                out[r + i] = self.textures()[hit.segment].value(hit.along);
            }
        }
        let mean = out.mean();
        out.add_scalar_mut(-mean);
        out
    }

    /// [`Environment::observe`] plus the configured sensor noise.
    pub fn observe_noisy<R: Rng + ?Sized>(&self, pose: &Pose, rng: &mut R) -> DVector<f64> {
        let mut o = self.observe(pose);
        if self.obs.noise > 0.0 {
            let n = Normal::new(0.0, self.obs.noise).expect("finite std");
            o.iter_mut().for_each(|v| *v += n.sample(rng));
        }
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::test_map;
    use rayon::prelude::*;

    #[test]
    fn deterministic_and_sized() {
        let env = Environment::rectangle();
        let p = Pose::new(0.7, 0.4, 1.0);
        let a = env.observe(&p);
        assert_eq!(a, env.observe(&p));
        assert_eq!(a.len(), 2 * env.obs.rays);
        assert!(a.mean().abs() < 1e-12);
    }

    #[test]
    fn small_moves_change_little() {
        let env = Environment::rectangle();
        let a = env.observe(&Pose::new(1.0, 0.8, 0.3));
        let b = env.observe(&Pose::new(1.001, 0.8, 0.3));
        assert!((a - b).amax() < 0.05);
    }

    #[test]
    fn injective_on_test_maps() {
        let env = Environment::rectangle();
        let mut obs = Vec::new();
        for m in 0..8 {
            for p in test_map(&env, m as f64 * TAU / 8.0, 64, 32).unwrap() {
                obs.push(env.observe(&p));
            }
        }
        assert_eq!(obs.len(), 8 * 64 * 32);
        let min = (0..obs.len())
            .into_par_iter()
            .map(|i| {
                let mut best = f64::INFINITY;
                for j in 0..i {
                    let d: f64 = obs[i].iter().zip(obs[j].iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                    best = best.min(d);
                }
                best
            })
            .reduce(|| f64::INFINITY, f64::min);
        assert!(min > 0.0, "min squared distance {min}");
    }
}
