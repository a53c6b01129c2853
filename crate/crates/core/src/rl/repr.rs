use std::f64::consts::PI;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::env::{Environment, Pose, TransitionSet};
use crate::error::{Error, Result};
use crate::sfa::{box3d_indices, SfaModel};

fn trig_basis(n: usize, x: f64) -> f64 {
    if n % 2 == 0 {
        (n as f64 * PI * x).cos()
    } else {
        ((n + 1) as f64 * PI * x).sin()
    }
}

/// `prod (2 d_i + 1)`
pub fn trig_dim(degrees: &[usize]) -> usize {
    degrees.iter().map(|d| 2 * d + 1).product()
}

/// Product basis over `[-1, 1]^p`. Component `mu(n_1..n_p)` with the last
/// coordinate running fastest is `prod psi_{n_i}(x_i)`, where `psi_n` is
/// `cos(n pi x)` for even `n` and `sin((n + 1) pi x)` for odd `n`.
pub fn trig_repr(x: &[f64], degrees: &[usize]) -> Result<DVector<f64>> {
    if x.len() != degrees.len() {
        return Err(Error::Dimension { expected: degrees.len(), actual: x.len() });
    }
    if x.iter().any(|v| !(-1.0..=1.0).contains(v)) {
        return Err(Error::input("trigonometric representation expects inputs in [-1, 1]"));
    }
    let mut out = vec![1.0];
    for (&xi, &d) in x.iter().zip(degrees) {
        let psi: Vec<f64> = (0..=2 * d).map(|n| trig_basis(n, xi)).collect();
        out = out.iter().flat_map(|&a| psi.iter().map(move |&b| a * b)).collect();
    }
    Ok(DVector::from_vec(out))
}

/// Places `features` in block `action` of a `k`-block vector.
pub fn sa_embed(features: &DVector<f64>, action: usize, k: usize) -> Result<DVector<f64>> {
    if action >= k {
        return Err(Error::input(format!("action {action} out of range for {k} actions")));
    }
    let m = features.len();
    let mut out = DVector::zeros(m * k);
    out.rows_mut(action * m, m).copy_from(features);
    Ok(out)
}

/// Maps states to feature vectors.
#[derive(Debug, Clone)]
pub enum StateRepr {
    /// One-hot over `n_states` indices.
    Tabular { n_states: usize },
    /// Product trigonometric basis of a point in `[-1, 1]^p`.
    Trigonometric { degrees: Vec<usize> },
    /// Constant followed by closed-form slow responses of the unit-scaled
    /// pose; an artificial stand-in for perfectly learned slow features.
    OptimalResponses { indices: Vec<[usize; 3]> },
    /// Constant followed by the outputs of a trained SFA model on the
    /// observation of the pose.
    Sfa { model: SfaModel },
    /// The point itself.
    Raw { dim: usize },
}

impl StateRepr {
    pub fn dim(&self) -> usize {
        match self {
            StateRepr::Tabular { n_states } => *n_states,
            StateRepr::Trigonometric { degrees } => trig_dim(degrees),
            StateRepr::OptimalResponses { indices } => indices.len() + 1,
            StateRepr::Sfa { model } => model.n_filters() + 1,
            StateRepr::Raw { dim } => *dim,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            StateRepr::Tabular { .. } => "tabular",
            StateRepr::Trigonometric { .. } => "trigonometric",
            StateRepr::OptimalResponses { .. } => "optimal",
            StateRepr::Sfa { .. } => "sfa",
            StateRepr::Raw { .. } => "raw",
        }
    }

    pub fn tabular(&self, state: usize) -> Result<DVector<f64>> {
        match self {
            StateRepr::Tabular { n_states } if state < *n_states => {
                let mut v = DVector::zeros(*n_states);
                v[state] = 1.0;
                Ok(v)
            }
            StateRepr::Tabular { .. } => Err(Error::input(format!("state {state} out of range"))),
            _ => Err(Error::input("indexed states need a tabular representation")),
        }
    }

    /// Features of a continuous point: `[-1, 1]^p` for trigonometric,
    /// `[0, 1]^3` for optimal responses.
    pub fn point(&self, x: &[f64]) -> Result<DVector<f64>> {
        match self {
            StateRepr::Trigonometric { degrees } => trig_repr(x, degrees),
            StateRepr::OptimalResponses { indices } => {
                if x.len() != 3 {
                    return Err(Error::Dimension { expected: 3, actual: x.len() });
                }
                let mut v = DVector::zeros(indices.len() + 1);
                v[0] = 1.0;
                for (j, t) in indices.iter().enumerate() {
                    v[j + 1] = crate::sfa::optimal::box3d_unchecked(t[0], t[1], t[2], x);
                }
                Ok(v)
            }
            StateRepr::Raw { dim } => {
                crate::error::check_dim(*dim, x.len())?;
                Ok(DVector::from_column_slice(x))
            }
            StateRepr::Sfa { model } => {
                let y = model.apply(&DVector::from_column_slice(x))?;
                Ok(with_constant(&y))
            }
            StateRepr::Tabular { .. } => Err(Error::input("tabular representation takes state indices")),
        }
    }

    /// Features of a pose. `obs` is used by SFA representations when given
    /// and generated from the environment otherwise.
    pub fn pose_features(&self, env: &Environment, pose: &Pose, obs: Option<&DVector<f64>>) -> Result<DVector<f64>> {
        match self {
            StateRepr::Sfa { model } => {
                let y = match obs {
                    Some(o) => model.apply(o)?,
                    None => model.apply(&env.observe(pose))?,
                };
                Ok(with_constant(&y))
            }
            StateRepr::Trigonometric { .. } => {
                let u = env.unit_state(pose);
                self.point(&u.map(|v| 2.0 * v - 1.0))
            }
            StateRepr::OptimalResponses { .. } | StateRepr::Raw { .. } => self.point(&env.unit_state(pose)),
            StateRepr::Tabular { .. } => Err(Error::input("tabular representation takes state indices")),
        }
    }

    /// Artificial representation with `size` features: the constant plus
    /// the `size - 1` optimal responses that vary least between the start
    /// and end poses of `transitions`.
    pub fn slowest_responses(env: &Environment, transitions: &TransitionSet, size: usize) -> Result<Self> {
        let pairs: Vec<(Pose, Pose)> = transitions.transitions.iter().map(|t| (t.pose, t.next_pose)).collect();
        Self::slowest_responses_on_pairs(env, &pairs, size)
    }

    /// Constant plus the `size - 1` box responses with the smallest mean
    /// squared difference over consecutive pose pairs.
    pub fn slowest_responses_on_pairs(env: &Environment, pairs: &[(Pose, Pose)], size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::input("artificial representation needs size >= 2"));
        }
        if pairs.is_empty() {
            return Err(Error::input("ranking responses needs pose pairs"));
        }
        let mut max_index = 3;
        while (max_index + 1usize).pow(3) < 4 * size {
            max_index += 1;
        }
        let pairs: Vec<([f64; 3], [f64; 3])> =
            pairs.iter().map(|(a, b)| (env.unit_state(a), env.unit_state(b))).collect();
        let mut scored: Vec<(f64, [usize; 3])> = box3d_indices(max_index)
            .into_par_iter()
            .map(|t| {
                let s: f64 = pairs
                    .iter()
                    .map(|(a, b)| {
                        let d = crate::sfa::optimal::box3d_unchecked(t[0], t[1], t[2], b)
                            - crate::sfa::optimal::box3d_unchecked(t[0], t[1], t[2], a);
                        d * d
                    })
                    .sum();
                (s / pairs.len() as f64, t)
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(StateRepr::OptimalResponses { indices: scored.into_iter().take(size - 1).map(|(_, t)| t).collect() })
    }
}

fn with_constant(y: &DVector<f64>) -> DVector<f64> {
    let mut v = DVector::zeros(y.len() + 1);
    v[0] = 1.0;
    v.rows_mut(1, y.len()).copy_from(y);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_examples() {
        assert_eq!(trig_repr(&[0.3], &[0]).unwrap().as_slice(), &[1.0]);
        let v = trig_repr(&[0.0], &[1]).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 0.0, 1.0]);
        assert_eq!(trig_repr(&[0.1, -0.4], &[1, 1]).unwrap().len(), 9);
        assert!(trig_repr(&[1.5], &[1]).is_err());
        assert!(trig_repr(&[0.5], &[1, 2]).is_err());
    }

    #[test]
    fn trig_ordering_last_axis_fastest() {
        let x = [0.2, -0.7];
        let v = trig_repr(&x, &[1, 2]).unwrap();
        assert_eq!(v.len(), trig_dim(&[1, 2]));
        for n1 in 0..3 {
            for n2 in 0..5 {
                let expect = trig_basis(n1, x[0]) * trig_basis(n2, x[1]);
                assert!((v[n1 * 5 + n2] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sa_embed_blocks() {
        let f = DVector::from_vec(vec![1.0, 2.0]);
        let g = DVector::from_vec(vec![3.0, -1.0]);
        let e = sa_embed(&f, 1, 3).unwrap();
        assert_eq!(e.as_slice(), &[0.0, 0.0, 1.0, 2.0, 0.0, 0.0]);
        assert_eq!(e.dot(&sa_embed(&g, 2, 3).unwrap()), 0.0);
        assert!(sa_embed(&f, 3, 3).is_err());
    }

    #[test]
    fn tabular_one_hot() {
        let r = StateRepr::Tabular { n_states: 4 };
        assert_eq!(r.tabular(2).unwrap().as_slice(), &[0.0, 0.0, 1.0, 0.0]);
        assert!(r.tabular(4).is_err());
        assert!(r.point(&[0.0]).is_err());
    }
}
