//! Hand-made reference controllers, rollouts and the convergence quality
//! of a policy relative to the reference.

mod sweep;

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{sample_free_pose, Action, Environment, NoiseDraw, Pose, Region, RoomKind};
use crate::error::{Error, Result};
use crate::rl::{greedy_action, QWeights, StateRepr};

pub use sweep::{slowness_vs_sv_report, SvSweepConfig, SvSweepReport};

/// Forward when the goal lies within 45 degrees of the heading, otherwise
/// turn towards it. `dtheta = theta - bearing` is wrapped to `(-pi, pi]`,
/// so a goal straight behind gives a right turn. At the goal centre the
/// bearing is taken as the heading and the answer is forward.
pub fn reference_policy(pose: &Pose, goal: [f64; 2]) -> Action {
    let (dx, dy) = (goal[0] - pose.x, goal[1] - pose.y);
    if dx == 0.0 && dy == 0.0 {
        return Action::Forward;
    }
    let bearing = dy.atan2(dx);
    let mut d = (pose.theta - bearing).rem_euclid(TAU);
    if d > PI {
        d -= TAU;
    }
    if d.abs() <= PI / 4.0 {
        Action::Forward
    } else if d < 0.0 {
        Action::TurnLeft
    } else {
        Action::TurnRight
    }
}

/// Within half a metre of a corridor mouth the subgoal moves this far into
/// the corridor, so that the robot passes the mouth instead of circling it.
const MOUTH_LEAD: f64 = 0.5;

/// Subgoal for two rooms joined by a corridor along the x axis: the mouth
/// on the robot's side until in the corridor, then the mouth on the goal's
/// side, then the goal itself.
pub fn two_room_subgoal(pose: &Pose, goal: [f64; 2], corridor: ([f64; 2], [f64; 2])) -> [f64; 2] {
    let region = |x: f64| {
        if x < corridor.0[0] {
            Region::Left
        } else if x > corridor.1[0] {
            Region::Right
        } else {
            Region::Corridor
        }
    };
    let (rp, rg) = (region(pose.x), region(goal[0]));
    let toward_right = goal[0] > pose.x;
    let (near, far) = if toward_right { (corridor.0, corridor.1) } else { (corridor.1, corridor.0) };
    let lead = if toward_right { MOUTH_LEAD } else { -MOUTH_LEAD };
    if rp == rg {
        goal
    } else if rp == Region::Corridor {
        far
    } else if (pose.x - near[0]).hypot(pose.y - near[1]) < MOUTH_LEAD {
        [near[0] + lead, near[1]]
    } else {
        near
    }
}

pub fn two_room_reference(pose: &Pose, goal: [f64; 2], corridor: ([f64; 2], [f64; 2])) -> Action {
    reference_policy(pose, two_room_subgoal(pose, goal, corridor))
}

/// The reference controller suited to the environment's layout. In the
/// two-room layout a forward move that a wall would cut short becomes a
/// turn towards the subgoal, since subgoals on the corridor mouths can sit
/// behind a wall corner.
pub fn environment_reference(env: &Environment) -> impl Fn(&Pose) -> Action + Sync + '_ {
    move |p: &Pose| match (env.geometry.kind, env.geometry.corridor_endpoints) {
        (RoomKind::TwoRoom, Some(c)) => {
            let target = two_room_subgoal(p, env.reward.goal_center, c);
            let a = reference_policy(p, target);
            let (next, _) = env.step_with(p, a, NoiseDraw::NONE);
            let moved = (next.x - p.x).hypot(next.y - p.y);
            if a == Action::Forward && moved < 0.5 * env.actions.forward {
                let bearing = (target[1] - p.y).atan2(target[0] - p.x);
                let mut d = (p.theta - bearing).rem_euclid(TAU);
                if d > PI {
                    d -= TAU;
                }
                if d < 0.0 {
                    Action::TurnLeft
                } else {
                    Action::TurnRight
                }
            } else {
                a
            }
        }
        _ => reference_policy(p, env.reward.goal_center),
    }
}

/// Greedy control from learned Q-weights.
pub struct QPolicy<'a> {
    env: &'a Environment,
    repr: &'a StateRepr,
    weights: &'a QWeights,
}

impl<'a> QPolicy<'a> {
    pub fn new(env: &'a Environment, repr: &'a StateRepr, weights: &'a QWeights) -> Result<Self> {
        if repr.dim() != weights.m || weights.k != Action::COUNT {
            return Err(Error::Dimension { expected: repr.dim() * Action::COUNT, actual: weights.m * weights.k });
        }
        let probe = Pose::new(env.reward.goal_center[0], env.reward.goal_center[1], 0.0);
        repr.pose_features(env, &probe, None)?;
        Ok(QPolicy { env, repr, weights })
    }

    pub fn features(&self, pose: &Pose) -> DVector<f64> {
        self.repr.pose_features(self.env, pose, None).expect("representation validated at construction")
    }

    pub fn act(&self, pose: &Pose) -> Action {
        Action::ALL[greedy_action(self.weights, &self.features(pose))]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    /// Steps until the goal was entered; `None` when the horizon ran out.
    pub steps: Option<usize>,
    /// Visited poses, starting with the start pose.
    pub trace: Vec<Pose>,
}

pub fn rollout<R: Rng + ?Sized>(
    env: &Environment,
    policy: &dyn Fn(&Pose) -> Action,
    start: Pose,
    horizon: usize,
    rng: &mut R,
) -> Result<Rollout> {
    if horizon < 1 {
        return Err(Error::input("rollout horizon must be >= 1"));
    }
    let mut trace = vec![start];
    if env.in_goal(&start) {
        return Ok(Rollout { steps: Some(0), trace });
    }
    let mut pose = start;
    for t in 1..=horizon {
        pose = env.step(&pose, policy(&pose), rng);
        trace.push(pose);
        if env.in_goal(&pose) {
            return Ok(Rollout { steps: Some(t), trace });
        }
    }
    Ok(Rollout { steps: None, trace })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityRecord {
    pub start: [f64; 3],
    pub tau_policy: Option<usize>,
    pub tau_ref: Option<usize>,
    /// `None` when the reference missed and the start was excluded.
    pub ratio: Option<f64>,
}

impl QualityRecord {
    /// `gamma^(tau_policy - tau_ref)` capped at 1, or 0 if the policy
    /// never arrived.
    pub fn new(start: [f64; 3], tau_policy: Option<usize>, tau_ref: Option<usize>, gamma: f64) -> Self {
        let ratio = tau_ref.map(|r| match tau_policy {
            Some(p) => gamma.powi(p as i32 - r as i32).min(1.0),
            None => 0.0,
        });
        QualityRecord { start, tau_policy, tau_ref, ratio }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    #[serde(rename = "C")]
    pub c: f64,
    /// `log_gamma C`; `None` stands for infinity when `C = 0`.
    pub mean_extra_steps: Option<f64>,
    pub n_trajectories: usize,
    pub n_excluded: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub records: Vec<QualityRecord>,
}

impl QualityReport {
    pub fn from_records(records: Vec<QualityRecord>, gamma: f64, horizon: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::input("gamma must lie in (0, 1)"));
        }
        let used: Vec<f64> = records.iter().filter_map(|r| r.ratio).collect();
        if used.is_empty() {
            return Err(Error::input("no start reached by the reference policy"));
        }
        let c = used.iter().sum::<f64>() / used.len() as f64;
        let mean_extra_steps = if c > 0.0 { Some(c.ln() / gamma.ln()) } else { None };
        Ok(QualityReport {
            c,
            mean_extra_steps,
            n_trajectories: used.len(),
            n_excluded: records.len() - used.len(),
            horizon,
            gamma,
            records,
        })
    }

    pub fn success_rate(&self) -> f64 {
        let reached = self.records.iter().filter(|r| r.ratio.is_some() && r.tau_policy.is_some()).count();
        reached as f64 / self.n_trajectories as f64
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
        let mut out = String::from("start_x,start_y,start_theta,tau_policy,tau_ref,ratio\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.start[0],
                r.start[1],
                r.start[2],
                opt(r.tau_policy),
                opt(r.tau_ref),
                r.ratio.map_or(String::new(), |v| v.to_string())
            ));
        }
        out
    }
}

/// Default rollout horizon: ten times the reference bound for the room.
pub fn default_horizon(env: &Environment) -> usize {
    10 * env.reference_steps_bound()
}

/// Mean discounted-arrival ratio of `policy` against `reference` over
/// uniform starts outside the goal. Both rollouts from a start share one
/// noise stream, so identical policies give identical trajectories.
pub fn convergence_quality<R: Rng + ?Sized>(
    env: &Environment,
    policy: &(dyn Fn(&Pose) -> Action + Sync),
    reference: &(dyn Fn(&Pose) -> Action + Sync),
    n_starts: usize,
    horizon: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<QualityReport> {
    if n_starts < 1 || horizon < 1 {
        return Err(Error::input("need n_starts >= 1 and horizon >= 1"));
    }
    let starts: Vec<(Pose, u64)> = (0..n_starts)
        .map(|_| loop {
            let p = sample_free_pose(env, rng);
            if !env.in_goal(&p) {
                break (p, rng.gen::<u64>());
            }
        })
        .collect();
    let records = starts
        .par_iter()
        .map(|&(start, seed)| {
            let tr = rollout(env, reference, start, horizon, &mut ChaCha8Rng::seed_from_u64(seed))?.steps;
            let tp = rollout(env, policy, start, horizon, &mut ChaCha8Rng::seed_from_u64(seed))?.steps;
            Ok(QualityRecord::new(start.to_array(), tp, tr, gamma))
        })
        .collect::<Result<Vec<_>>>()?;
    QualityReport::from_records(records, gamma, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ActionSet;

    #[test]
    fn reference_examples() {
        let g = [2.0, 1.0];
        assert_eq!(reference_policy(&Pose::new(1.0, 1.0, 0.0), g), Action::Forward);
        assert_eq!(reference_policy(&Pose::new(2.0, 0.0, 0.0), g), Action::TurnLeft);
        assert_eq!(reference_policy(&Pose::new(3.0, 1.0, 0.0), g), Action::TurnRight);
        assert_eq!(reference_policy(&Pose::new(2.0, 1.0, 1.0), g), Action::Forward);
        assert_eq!(reference_policy(&Pose::new(1.0, 1.0, PI / 4.0), g), Action::Forward);
    }

    #[test]
    fn rollout_examples() {
        let env = Environment::rectangle().with_actions(ActionSet::noiseless());
        let goal = env.reward.goal_center;
        let pol = |p: &Pose| reference_policy(p, goal);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = rollout(&env, &pol, Pose::new(goal[0], goal[1], 0.0), 5, &mut rng).unwrap();
        assert_eq!(r.steps, Some(0));
        let start = Pose::new(goal[0] - env.reward.goal_radius - 0.9, goal[1], 0.0);
        let r = rollout(&env, &pol, start, 10, &mut rng).unwrap();
        assert_eq!(r.steps, Some(3));
        assert_eq!(r.trace.len(), 4);
        let stay = |_: &Pose| Action::TurnLeft;
        assert_eq!(rollout(&env, &stay, start, 10, &mut rng).unwrap().steps, None);
    }

    #[test]
    fn quality_examples() {
        let env = Environment::rectangle();
        let goal = env.reward.goal_center;
        let reference = move |p: &Pose| reference_policy(p, goal);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = convergence_quality(&env, &reference, &reference, 40, 200, 0.9, &mut rng).unwrap();
        assert_eq!(q.c, 1.0);
        assert_eq!(q.mean_extra_steps, Some(0.0));
        let never = |_: &Pose| Action::TurnRight;
        let q = convergence_quality(&env, &never, &reference, 40, 200, 0.9, &mut rng).unwrap();
        assert_eq!(q.c, 0.0);
        assert_eq!(q.mean_extra_steps, None);

        let r = QualityRecord::new([0.0; 3], Some(7), Some(5), 0.9);
        assert!((r.ratio.unwrap() - 0.81).abs() < 1e-12);
        let rep = QualityReport::from_records(vec![r], 0.9, 50).unwrap();
        assert!((rep.mean_extra_steps.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn report_roundtrip_and_csv() {
        let recs = vec![
            QualityRecord::new([0.5, 0.5, 1.0], Some(4), Some(3), 0.9),
            QualityRecord::new([1.0, 0.5, 2.0], None, Some(3), 0.9),
            QualityRecord::new([2.0, 0.5, 3.0], Some(2), None, 0.9),
        ];
        let rep = QualityReport::from_records(recs, 0.9, 100).unwrap();
        assert_eq!(rep.n_trajectories, 2);
        assert_eq!(rep.n_excluded, 1);
        assert!((rep.c - 0.45).abs() < 1e-12);
        let s = rep.to_json().unwrap();
        assert_eq!(QualityReport::from_json(&s).unwrap().to_json().unwrap(), s);
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(2).unwrap().ends_with(",,3,0"));
    }

    #[test]
    fn two_room_subgoals() {
        let env = Environment::two_room();
        let c = env.geometry.corridor_endpoints.unwrap();
        let goal = env.reward.goal_center;
        // same room as the goal: plain reference
        let p = Pose::new(5.5, 1.0, 2.0);
        assert_eq!(two_room_reference(&p, goal, c), reference_policy(&p, goal));
        // other room: facing the left mouth means forward, facing away means a turn
        let p = Pose::new(1.0, 1.5, 0.0);
        assert_eq!(two_room_reference(&p, goal, c), Action::Forward);
        assert_ne!(two_room_reference(&Pose::new(1.0, 1.5, PI), goal, c), Action::Forward);
        // corridor: towards the right mouth
        let p = Pose::new(3.5, 1.5, PI / 2.0);
        assert_eq!(two_room_reference(&p, goal, c), reference_policy(&p, c.1));

        let reference = environment_reference(&env);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = convergence_quality(&env, &reference, &reference, 200, default_horizon(&env), 0.95, &mut rng).unwrap();
        assert_eq!(q.n_excluded, 0, "{:?}", q.records);
    }
}
