use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Boundary condition of the latent state a random walk is confined to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Reflecting limits on `[0, 1]`.
    Free,
    /// `0` and `1` identified.
    Cyclic,
    /// `[0,1]^3`: free in the first two coordinates, cyclic in the third.
    Box3d,
}

fn free_basis(j: usize, x: f64) -> f64 {
    (j as f64 * PI * x).cos()
}

fn cyclic_basis(j: usize, x: f64) -> f64 {
    if j % 2 == 0 {
        (j as f64 * PI * x).cos()
    } else {
        ((j + 1) as f64 * PI * x).sin()
    }
}

/// Closed-form slowest response for the given boundary and index.
///
/// `Free` and `Cyclic` take one index `>= 1` and a scalar state. `Box3d`
/// takes `(i, j, l) != (0, 0, 0)` and a state `(x, y, theta)`; each nonzero
/// index contributes a factor `sqrt(2)` so that every response has unit
/// variance under the uniform distribution.
pub fn optimal_response(boundary: Boundary, indices: &[usize], state: &[f64]) -> Result<f64> {
    match boundary {
        Boundary::Free | Boundary::Cyclic => {
            if indices.len() != 1 || state.len() != 1 {
                return Err(Error::input("1-D optimal response takes one index and one coordinate"));
            }
            if indices[0] == 0 {
                return Err(Error::input("optimal response index must be >= 1"));
            }
            check_unit(state)?;
            let f = if boundary == Boundary::Free { free_basis } else { cyclic_basis };
            Ok(SQRT_2 * f(indices[0], state[0]))
        }
        Boundary::Box3d => {
            if indices.len() != 3 || state.len() != 3 {
                return Err(Error::input("box3d optimal response takes three indices and a 3-D state"));
            }
            if indices.iter().all(|&i| i == 0) {
                return Err(Error::input("index (0,0,0) is the constant and has no response"));
            }
            check_unit(state)?;
            Ok(box3d_unchecked(indices[0], indices[1], indices[2], state))
        }
    }
}

pub(crate) fn box3d_unchecked(i: usize, j: usize, l: usize, s: &[f64]) -> f64 {
    let scale = |n: usize| if n == 0 { 1.0 } else { SQRT_2 };
    scale(i) * free_basis(i, s[0]) * scale(j) * free_basis(j, s[1]) * scale(l) * cyclic_basis(l, s[2])
}

fn check_unit(state: &[f64]) -> Result<()> {
    const SLACK: f64 = 1e-12;
    if state.iter().any(|&x| !(-SLACK..=1.0 + SLACK).contains(&x)) {
        return Err(Error::input("optimal-response state must lie in [0, 1]"));
    }
    Ok(())
}

/// All box3d index triples with entries `<= max_index`, excluding `(0,0,0)`.
pub fn box3d_indices(max_index: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for i in 0..=max_index {
        for j in 0..=max_index {
            for l in 0..=max_index {
                if i + j + l > 0 {
                    out.push([i, j, l]);
                }
            }
        }
    }
    out
}
