use std::f64::consts::TAU;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Action, Environment, NoiseDraw, Pose};
use crate::error::{Error, Result};

/// Uniform pose over free space by rejection from the bounding box.
pub fn sample_free_pose<R: Rng + ?Sized>(env: &Environment, rng: &mut R) -> Pose {
    let (lo, hi) = env.geometry.polygon.bounding_box();
    loop {
        let x = rng.gen_range(lo[0]..hi[0]);
        let y = rng.gen_range(lo[1]..hi[1]);
        let theta = rng.gen_range(0.0..TAU);
        if env.geometry.polygon.contains(x, y) {
            return Pose::new(x, y, theta);
        }
    }
}

/// Movement statistics of the exploratory random walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionStats {
    /// Probability of attempting a forward step; turns split the rest.
    pub p_forward: f64,
    /// Number of recording sessions, each starting at a fresh random pose.
    pub sessions: usize,
}

impl Default for MotionStats {
    fn default() -> Self {
        MotionStats { p_forward: 0.6, sessions: 3 }
    }
}

/// Time-ordered poses of a random walk.
///
/// `actions[t]` is the action executed at `poses[t]`; it is `None` for the
/// last pose of each session. `breaks` lists the indices that start a new
/// session (never 0).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub poses: Vec<Pose>,
    pub actions: Vec<Option<Action>>,
    pub session: Vec<usize>,
    pub breaks: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn observations(&self, env: &Environment) -> Vec<DVector<f64>> {
        self.poses.par_iter().map(|p| env.observe(p)).collect()
    }
}

pub fn random_walk<R: Rng + ?Sized>(
    env: &Environment,
    n_steps: usize,
    stats: MotionStats,
    rng: &mut R,
) -> Result<Trajectory> {
    if n_steps < 2 {
        return Err(Error::input("random walk needs at least 2 steps"));
    }
    if !(0.0..=1.0).contains(&stats.p_forward) || stats.sessions < 1 || 2 * stats.sessions > n_steps {
        return Err(Error::input("p_forward must lie in [0, 1] and every session needs >= 2 steps"));
    }
    let mut poses = Vec::with_capacity(n_steps);
    let mut actions = Vec::with_capacity(n_steps);
    let mut session = Vec::with_capacity(n_steps);
    let mut breaks = Vec::new();
    for s in 0..stats.sessions {
        let len = n_steps / stats.sessions + usize::from(s < n_steps % stats.sessions);
        if s > 0 {
            breaks.push(poses.len());
        }
        let mut pose = sample_free_pose(env, rng);
        for t in 0..len {
            poses.push(pose);
            session.push(s);
            if t + 1 == len {
                actions.push(None);
                break;
            }
            let mut action = if rng.gen_bool(stats.p_forward) {
                Action::Forward
            } else if rng.gen_bool(0.5) {
                Action::TurnLeft
            } else {
                Action::TurnRight
            };
            let mut noise = NoiseDraw::sample(&env.actions, rng);
            let (mut next, clamped) = env.step_with(&pose, action, noise);
            if clamped {
                // wall avoidance: turn away instead of bumping
                action = if rng.gen_bool(0.5) { Action::TurnLeft } else { Action::TurnRight };
                noise = NoiseDraw::sample(&env.actions, rng);
                next = env.step_with(&pose, action, noise).0;
            }
            actions.push(Some(action));
            pose = next;
        }
    }
    Ok(Trajectory { poses, actions, session, breaks })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub pose: Pose,
    pub action: Action,
    pub reward: f64,
    pub next_pose: Pose,
    pub obs: Option<DVector<f64>>,
    pub next_obs: Option<DVector<f64>>,
    pub session: usize,
}

/// Single-step samples `(s, a, r, s')`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransitionSet {
    pub transitions: Vec<Transition>,
}

#[derive(Serialize, Deserialize)]
struct Record {
    i: usize,
    pose: [f64; 3],
    action: usize,
    reward: f64,
    next_pose: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    obs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    next_obs: Option<Vec<f64>>,
    session: usize,
}

fn pose_from(a: [f64; 3]) -> Pose {
    Pose { x: a[0], y: a[1], theta: a[2] }
}

/// Starts uniform over free space, actions uniform over the three.
pub fn uniform_transitions<R: Rng + ?Sized>(env: &Environment, n: usize, rng: &mut R) -> Result<TransitionSet> {
    if n < 1 {
        return Err(Error::input("need at least one transition"));
    }
    let transitions = (0..n)
        .map(|_| {
            let pose = sample_free_pose(env, rng);
            let action = Action::ALL[rng.gen_range(0..Action::COUNT)];
            let next_pose = env.step(&pose, action, rng);
            Transition { pose, action, reward: env.reward(&next_pose), next_pose, obs: None, next_obs: None, session: 0 }
        })
        .collect();
    Ok(TransitionSet { transitions })
}

impl TransitionSet {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Successive pose pairs of a walk within a session.
    pub fn from_trajectory(env: &Environment, traj: &Trajectory) -> Self {
        let mut transitions = Vec::new();
        for t in 0..traj.len() {
            if let Some(action) = traj.actions[t] {
                let next_pose = traj.poses[t + 1];
                transitions.push(Transition {
                    pose: traj.poses[t],
                    action,
                    reward: env.reward(&next_pose),
                    next_pose,
                    obs: None,
                    next_obs: None,
                    session: traj.session[t],
                });
            }
        }
        TransitionSet { transitions }
    }

    /// Fills both observation slots from the noiseless generator.
    pub fn observe(&mut self, env: &Environment) {
        self.transitions.par_iter_mut().for_each(|t| {
            t.obs = Some(env.observe(&t.pose));
            t.next_obs = Some(env.observe(&t.next_pose));
        });
    }

    /// Rebuilds the observation sequence of a walk stored as transitions:
    /// samples in time order and the session break indices.
    pub fn sequence(&self) -> Result<(Vec<DVector<f64>>, Vec<Pose>, Vec<usize>)> {
        let mut obs = Vec::new();
        let mut poses = Vec::new();
        let mut breaks = Vec::new();
        for (i, t) in self.transitions.iter().enumerate() {
            let (o, no) = match (&t.obs, &t.next_obs) {
                (Some(o), Some(no)) => (o, no),
                _ => return Err(Error::input("transition set carries no observations")),
            };
            let continues = i > 0 && {
                let prev = &self.transitions[i - 1];
                prev.session == t.session && prev.next_pose == t.pose
            };
            if !continues {
                if i > 0 {
                    let prev = &self.transitions[i - 1];
                    obs.push(prev.next_obs.clone().expect("checked"));
                    poses.push(prev.next_pose);
                    breaks.push(obs.len());
                }
                obs.push(o.clone());
                poses.push(t.pose);
            } else {
                obs.push(o.clone());
                poses.push(t.pose);
            }
            if i + 1 == self.transitions.len() {
                obs.push(no.clone());
                poses.push(t.next_pose);
            }
        }
        Ok((obs, poses, breaks))
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for (i, t) in self.transitions.iter().enumerate() {
            let rec = Record {
                i,
                pose: t.pose.to_array(),
                action: t.action.index(),
                reward: t.reward,
                next_pose: t.next_pose.to_array(),
                obs: t.obs.as_ref().map(|o| o.iter().cloned().collect()),
                next_obs: t.next_obs.as_ref().map(|o| o.iter().cloned().collect()),
                session: t.session,
            };
            out.push_str(&serde_json::to_string(&rec)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        Self::read(text.as_bytes())
    }

    pub fn read<B: BufRead>(reader: B) -> Result<Self> {
        let mut transitions = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let r: Record = serde_json::from_str(&line)?;
            transitions.push(Transition {
                pose: pose_from(r.pose),
                action: Action::from_index(r.action)?,
                reward: r.reward,
                next_pose: pose_from(r.next_pose),
                obs: r.obs.map(DVector::from_vec),
                next_obs: r.next_obs.map(DVector::from_vec),
                session: r.session,
            });
        }
        Ok(TransitionSet { transitions })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_jsonl()?.as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Cell-centred `nx x ny` lattice over the bounding box, keeping the
/// points inside the room, all with heading `theta`.
pub fn test_map(env: &Environment, theta: f64, nx: usize, ny: usize) -> Result<Vec<Pose>> {
    if nx < 1 || ny < 1 {
        return Err(Error::input("test map needs nx, ny >= 1"));
    }
    let (lo, hi) = env.geometry.polygon.bounding_box();
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = lo[0] + (i as f64 + 0.5) * (hi[0] - lo[0]) / nx as f64;
            let y = lo[1] + (j as f64 + 0.5) * (hi[1] - lo[1]) / ny as f64;
            if env.geometry.polygon.contains(x, y) {
                out.push(Pose::new(x, y, theta));
            }
        }
    }
    Ok(out)
}
