use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::repr::StateRepr;
use crate::env::{Environment, TransitionSet};
use crate::error::{check_dim, Error, Result};
use crate::linalg;

/// `w = pinv(sum phi (phi - gamma phi')^T) sum phi r`
pub fn lstd(triples: &[(DVector<f64>, f64, DVector<f64>)], gamma: f64) -> Result<DVector<f64>> {
    check_gamma(gamma)?;
    let m = triples.first().ok_or_else(|| Error::input("LSTD needs at least one transition"))?.0.len();
    let mut a = DMatrix::zeros(m, m);
    let mut b = DVector::zeros(m);
    for (phi, r, next) in triples {
        check_dim(m, phi.len())?;
        check_dim(m, next.len())?;
        a.ger(1.0, phi, &(phi - next * gamma), 1.0);
        b.axpy(*r, phi, 1.0);
    }
    if triples.iter().all(|(phi, _, _)| phi.iter().all(|&v| v == 0.0)) {
        return Err(Error::input("all features are zero"));
    }
    Ok(linalg::pinv_solve(&a, &b))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::input("gamma must lie in (0, 1]"));
    }
    Ok(())
}

/// One transition in feature space; `next` is `None` when the successor
/// is absorbing and contributes no future value.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSample {
    pub phi: DVector<f64>,
    pub action: usize,
    pub reward: f64,
    pub next: Option<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureData {
    pub m: usize,
    pub k: usize,
    pub samples: Vec<FeatureSample>,
}

impl FeatureData {
    pub fn new(m: usize, k: usize, samples: Vec<FeatureSample>) -> Result<Self> {
        if samples.is_empty() || k == 0 {
            return Err(Error::input("feature data needs samples and at least one action"));
        }
        for s in &samples {
            check_dim(m, s.phi.len())?;
            if let Some(n) = &s.next {
                check_dim(m, n.len())?;
            }
            if s.action >= k {
                return Err(Error::input(format!("action {} out of range", s.action)));
            }
        }
        Ok(FeatureData { m, k, samples })
    }

    /// Featurises environment transitions. With `absorbing_goal`, a
    /// successor inside the goal disc ends the episode.
    pub fn from_transitions(
        env: &Environment,
        transitions: &TransitionSet,
        repr: &StateRepr,
        absorbing_goal: bool,
    ) -> Result<Self> {
        let samples = transitions
            .transitions
            .par_iter()
            .map(|t| {
                let phi = repr.pose_features(env, &t.pose, t.obs.as_ref())?;
                let next = if absorbing_goal && env.in_goal(&t.next_pose) {
                    None
                } else {
                    Some(repr.pose_features(env, &t.next_pose, t.next_obs.as_ref())?)
                };
                Ok(FeatureSample { phi, action: t.action.index(), reward: t.reward, next })
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureData::new(repr.dim(), crate::env::Action::COUNT, samples)
    }
}

/// Block-structured linear Q-function: block `j` of `w` holds the weights
/// of action `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QWeights {
    pub gamma: f64,
    pub k: usize,
    pub m: usize,
    #[serde(with = "dvec")]
    pub w: DVector<f64>,
}

mod dvec {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

impl QWeights {
    pub fn zeros(m: usize, k: usize, gamma: f64) -> Self {
        QWeights { gamma, k, m, w: DVector::zeros(m * k) }
    }

    pub fn q_values(&self, features: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.k, (0..self.k).map(|a| self.w.rows(a * self.m, self.m).dot(features)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let q: QWeights = serde_json::from_str(s)?;
        if q.w.len() != q.m * q.k || !q.w.iter().all(|v| v.is_finite()) {
            return Err(Error::input("weights must be finite with length m * k"));
        }
        Ok(q)
    }
}

/// Argmax over actions of `w^T sa_embed(features, a)`; the lowest index
/// wins ties.
pub fn greedy_action(w: &QWeights, features: &DVector<f64>) -> usize {
    let q = w.q_values(features);
    let mut best = 0;
    for a in 1..w.k {
        if q[a] > q[best] {
            best = a;
        }
    }
    best
}

/// How the successor's action is chosen when estimating Q-values.
#[derive(Debug, Clone, Copy)]
pub enum NextPolicy<'a> {
    /// Average over all actions with equal weight.
    AllActions,
    /// Greedy with respect to the given weights.
    Greedy(&'a QWeights),
    /// Per-sample action probabilities, `k` entries each.
    Probabilities(&'a [Vec<f64>]),
}

/// LSQ normal equations grouped by the action taken, so that repeated
/// solves under different successor policies reuse the fixed blocks.
pub struct LsqSystem<'a> {
    data: &'a FeatureData,
    /// Per action: sample indices, features `m x n_a`, successors `m x n_a`.
    groups: Vec<(Vec<usize>, DMatrix<f64>, DMatrix<f64>)>,
    diag: Vec<DMatrix<f64>>,
    b: DVector<f64>,
}

impl<'a> LsqSystem<'a> {
    pub fn new(data: &'a FeatureData) -> Result<Self> {
        if data.samples.iter().all(|s| s.phi.iter().all(|&v| v == 0.0)) {
            return Err(Error::input("all features are zero"));
        }
        let (m, k) = (data.m, data.k);
        let mut b = DVector::zeros(m * k);
        let mut groups = Vec::with_capacity(k);
        let mut diag = Vec::with_capacity(k);
        for a in 0..k {
            let idx: Vec<usize> = (0..data.samples.len()).filter(|&i| data.samples[i].action == a).collect();
            let f = DMatrix::from_fn(m, idx.len(), |r, c| data.samples[idx[c]].phi[r]);
            let fn_ = DMatrix::from_fn(m, idx.len(), |r, c| data.samples[idx[c]].next.as_ref().map_or(0.0, |v| v[r]));
            let rewards = DVector::from_iterator(idx.len(), idx.iter().map(|&i| data.samples[i].reward));
            b.rows_mut(a * m, m).copy_from(&(&f * rewards));
            diag.push(&f * f.transpose());
            groups.push((idx, f, fn_));
        }
        Ok(LsqSystem { data, groups, diag, b })
    }

    /// Probability of each successor action for every sample of group `a`,
    /// as an `n_a x k` matrix.
    fn next_probabilities(&self, a: usize, policy: NextPolicy) -> Result<DMatrix<f64>> {
        let (idx, _, next) = &self.groups[a];
        let k = self.data.k;
        Ok(match policy {
            NextPolicy::AllActions => DMatrix::from_element(idx.len(), k, 1.0 / k as f64),
            NextPolicy::Greedy(w) => {
                check_dim(self.data.m, w.m)?;
                check_dim(k, w.k)?;
                let wm = DMatrix::from_column_slice(w.m, w.k, w.w.as_slice());
                let q = next.tr_mul(&wm);
                let mut p = DMatrix::zeros(idx.len(), k);
                for (i, row) in q.row_iter().enumerate() {
                    let mut best = 0;
                    for b in 1..k {
                        if row[b] > row[best] {
                            best = b;
                        }
                    }
                    p[(i, best)] = 1.0;
                }
                p
            }
            NextPolicy::Probabilities(probs) => {
                check_dim(self.data.samples.len(), probs.len())?;
                let mut p = DMatrix::zeros(idx.len(), k);
                for (i, &s) in idx.iter().enumerate() {
                    check_dim(k, probs[s].len())?;
                    for b in 0..k {
                        p[(i, b)] = probs[s][b];
                    }
                }
                p
            }
        })
    }

    /// The `mk x mk` system matrix for the given successor policy.
    pub fn matrix(&self, policy: NextPolicy, gamma: f64) -> Result<DMatrix<f64>> {
        let (m, k) = (self.data.m, self.data.k);
        let mut a_mat = DMatrix::zeros(m * k, m * k);
        for a in 0..k {
            a_mat.view_mut((a * m, a * m), (m, m)).copy_from(&self.diag[a]);
            let (_, f, next) = &self.groups[a];
            let probs = self.next_probabilities(a, policy)?;
            for b in 0..k {
                let cols: Vec<usize> = (0..probs.nrows()).filter(|&i| probs[(i, b)] > 0.0).collect();
                if cols.is_empty() {
                    continue;
                }
                let fs = f.select_columns(&cols);
                let mut ns = next.select_columns(&cols);
                for (c, &i) in cols.iter().enumerate() {
                    ns.column_mut(c).scale_mut(probs[(i, b)]);
                }
                let cross = fs * ns.transpose();
                let mut block = a_mat.view_mut((a * m, b * m), (m, m));
                block -= cross * gamma;
            }
        }
        Ok(a_mat)
    }

    pub fn solve(&self, policy: NextPolicy, gamma: f64) -> Result<QWeights> {
        check_gamma(gamma)?;
        let a = self.matrix(policy, gamma)?;
        let w = linalg::pinv_solve(&a, &self.b);
        Ok(QWeights { gamma, k: self.data.k, m: self.data.m, w })
    }
}

/// Q-value weights of the successor policy by least-squares TD.
pub fn lsq(data: &FeatureData, policy: NextPolicy, gamma: f64) -> Result<QWeights> {
    LsqSystem::new(data)?.solve(policy, gamma)
}

/// Successor actions in the first iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialPolicy {
    /// Average over all actions.
    AllActions,
    /// Greedy with respect to given weights, e.g. to resume from a result.
    Weights(QWeights),
    /// Greedy with respect to zero weights, i.e. always action 0. Kept as a
    /// negative control: it reproduces the slow start of plain sampled
    /// successor actions.
    GreedyFromZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LspiConfig {
    pub gamma: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub initial: InitialPolicy,
}

impl LspiConfig {
    pub fn new(gamma: f64) -> Self {
        LspiConfig { gamma, eps: 1e-6, max_iter: 50, initial: InitialPolicy::AllActions }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LspiIteration {
    pub iter: usize,
    /// Euclidean distance to the previous weights.
    pub delta: f64,
    /// Seconds since the start of the run.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LspiResult {
    pub weights: QWeights,
    pub trace: Vec<LspiIteration>,
    pub converged: bool,
}

impl LspiResult {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,delta,wall_time\n");
        for it in &self.trace {
            out.push_str(&format!("{},{},{}\n", it.iter, it.delta, it.wall_time));
        }
        out
    }
}

/// Policy iteration with LSQ evaluation and greedy improvement. Stops
/// when successive weights differ by less than `eps`; otherwise returns
/// the iterate that moved least, flagged as unconverged.
pub fn lspi(data: &FeatureData, config: &LspiConfig) -> Result<LspiResult> {
    check_gamma(config.gamma)?;
    if !(config.eps > 0.0) || config.max_iter == 0 {
        return Err(Error::input("LSPI needs eps > 0 and max_iter >= 1"));
    }
    let start = Instant::now();
    let system = LsqSystem::new(data)?;
    let zero = QWeights::zeros(data.m, data.k, config.gamma);
    let mut prev = match &config.initial {
        InitialPolicy::Weights(w) => {
            check_dim(data.m * data.k, w.w.len())?;
            w.clone()
        }
        _ => zero.clone(),
    };
    let mut trace = Vec::new();
    let mut best: Option<(f64, QWeights)> = None;
    for iter in 1..=config.max_iter {
        let policy = match (iter, &config.initial) {
            (1, InitialPolicy::AllActions) => NextPolicy::AllActions,
            (1, InitialPolicy::GreedyFromZero) => NextPolicy::Greedy(&zero),
            _ => NextPolicy::Greedy(&prev),
        };
        let w = system.solve(policy, config.gamma)?;
        let delta = (&w.w - &prev.w).norm();
        trace.push(LspiIteration { iter, delta, wall_time: start.elapsed().as_secs_f64() });
        if delta < config.eps {
            return Ok(LspiResult { weights: w, trace, converged: true });
        }
        if best.as_ref().map_or(true, |(d, _)| delta < *d) {
            best = Some((delta, w.clone()));
        }
        prev = w;
    }
    let weights = best.map(|(_, w)| w).unwrap_or(prev);
    Ok(LspiResult { weights, trace, converged: false })
}
