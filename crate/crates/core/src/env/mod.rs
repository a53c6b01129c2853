//! Planar navigation simulator: room geometry, three discrete actions with
//! execution noise, a sparse reward field and a synthetic ray panorama as
//! the robot's observation.

mod geometry;
mod observe;
mod sampling;

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use geometry::{Polygon, RayHit, Region, RoomGeometry, RoomKind};
pub use observe::{ObsConfig, WallTexture};
pub use sampling::{
    random_walk, sample_free_pose, test_map, uniform_transitions, MotionStats, Trajectory, Transition,
    TransitionSet,
};

/// Distance kept between the robot and a wall it runs into.
pub const CLEARANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians in `[0, 2pi)`.
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose { x, y, theta: wrap_angle(theta) }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.theta]
    }
}

/// Wraps to `[0, 2pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Action indices are fixed: 0 forward, 1 turn left (counter-clockwise),
/// 2 turn right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Forward = 0,
    TurnLeft = 1,
    TurnRight = 2,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Forward, Action::TurnLeft, Action::TurnRight];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Action::ALL.get(i).copied().ok_or_else(|| Error::input(format!("action index {i} out of range 0..3")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionSet {
    /// Metres per forward step.
    pub forward: f64,
    /// Radians per turn.
    pub turn: f64,
    /// Relative standard deviation of the forward distance.
    pub distance_noise: f64,
    /// Standard deviation of the turn angle, radians.
    pub angle_noise: f64,
}

impl Default for ActionSet {
    fn default() -> Self {
        ActionSet { forward: 0.30, turn: PI / 4.0, distance_noise: 0.05, angle_noise: 2f64.to_radians() }
    }
}

impl ActionSet {
    pub fn noiseless() -> Self {
        ActionSet { distance_noise: 0.0, angle_noise: 0.0, ..Default::default() }
    }
}

/// One realisation of the execution noise: a multiplicative factor on the
/// forward distance and an additive offset on the turn angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDraw {
    pub distance_factor: f64,
    pub angle_offset: f64,
}

impl NoiseDraw {
    pub const NONE: NoiseDraw = NoiseDraw { distance_factor: 1.0, angle_offset: 0.0 };

    pub fn sample<R: Rng + ?Sized>(actions: &ActionSet, rng: &mut R) -> Self {
        let factor = if actions.distance_noise > 0.0 {
            1.0 + Normal::new(0.0, actions.distance_noise).expect("finite std").sample(rng)
        } else {
            1.0
        };
        let offset =
            if actions.angle_noise > 0.0 { Normal::new(0.0, actions.angle_noise).expect("finite std").sample(rng) } else { 0.0 };
        NoiseDraw { distance_factor: factor.max(0.0), angle_offset: offset }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub goal_center: [f64; 2],
    pub goal_radius: f64,
    pub goal_reward: f64,
    pub wall_margin: f64,
    pub wall_penalty: f64,
}

impl RewardSpec {
    pub fn new(goal_center: [f64; 2], goal_radius: f64) -> Self {
        RewardSpec { goal_center, goal_radius, goal_reward: 1.0, wall_margin: 0.5, wall_penalty: -1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Environment {
    pub geometry: RoomGeometry,
    pub actions: ActionSet,
    pub reward: RewardSpec,
    pub obs: ObsConfig,
    textures: Vec<WallTexture>,
}

impl Environment {
    pub fn new(geometry: RoomGeometry, actions: ActionSet, reward: RewardSpec, obs: ObsConfig) -> Result<Self> {
        let g = &reward.goal_center;
        if !(reward.goal_radius > 0.0) || !(reward.wall_margin > 0.0) {
            return Err(Error::input("goal radius and wall margin must be positive"));
        }
        if !geometry.polygon.contains(g[0], g[1])
            || geometry.polygon.distance_to_boundary(g[0], g[1]) < reward.goal_radius
        {
            return Err(Error::input("goal disc must lie inside the room"));
        }
        if !(actions.forward > 0.0) || actions.distance_noise < 0.0 || actions.angle_noise < 0.0 {
            return Err(Error::input("forward step must be positive and noise levels non-negative"));
        }
        obs.validate()?;
        let textures = observe::make_textures(&geometry.polygon, obs.texture_seed);
        Ok(Environment { geometry, actions, reward, obs, textures })
    }

    /// 3.0 m x 1.8 m room with a 20 cm goal disc at the centre.
    pub fn rectangle() -> Self {
        let g = RoomGeometry::default_rectangle();
        Environment::new(g, ActionSet::default(), RewardSpec::new([1.5, 0.9], 0.2), ObsConfig::default())
            .expect("valid default")
    }

    /// Two 3 m rooms joined by a 1 m x 1.5 m corridor, 45 cm goal disc in
    /// the far corner of the right room.
    pub fn two_room() -> Self {
        let g = RoomGeometry::default_two_room();
        Environment::new(g, ActionSet::default(), RewardSpec::new([6.8, 2.3], 0.45), ObsConfig::default())
            .expect("valid default")
    }

    pub fn with_actions(mut self, actions: ActionSet) -> Self {
        self.actions = actions;
        self
    }

    pub fn contains(&self, pose: &Pose) -> bool {
        self.geometry.polygon.contains(pose.x, pose.y)
    }

    pub fn in_goal(&self, pose: &Pose) -> bool {
        let g = &self.reward.goal_center;
        (pose.x - g[0]).hypot(pose.y - g[1]) <= self.reward.goal_radius + 1e-9
    }

    pub fn wall_distance(&self, pose: &Pose) -> f64 {
        self.geometry.polygon.distance_to_boundary(pose.x, pose.y)
    }

    /// Reward for arriving at `next`; the goal wins over the wall penalty.
    pub fn reward(&self, next: &Pose) -> f64 {
        if self.in_goal(next) {
            self.reward.goal_reward
        } else if self.wall_distance(next) < self.reward.wall_margin {
            self.reward.wall_penalty
        } else {
            0.0
        }
    }

    pub fn step<R: Rng + ?Sized>(&self, pose: &Pose, action: Action, rng: &mut R) -> Pose {
        let noise = NoiseDraw::sample(&self.actions, rng);
        self.step_with(pose, action, noise).0
    }

    /// Deterministic step under a given noise draw; the flag reports
    /// whether a forward move was clamped at a wall.
    pub fn step_with(&self, pose: &Pose, action: Action, noise: NoiseDraw) -> (Pose, bool) {
        match action {
            Action::Forward => {
                let want = self.actions.forward * noise.distance_factor;
                let limit = match self.geometry.polygon.ray_cast(pose.x, pose.y, pose.theta) {
                    Some(hit) => (hit.distance - CLEARANCE).max(0.0),
                    None => 0.0,
                };
                let d = want.min(limit);
                let next = Pose { x: pose.x + d * pose.theta.cos(), y: pose.y + d * pose.theta.sin(), theta: pose.theta };
                (next, want > limit)
            }
            Action::TurnLeft => (Pose::new(pose.x, pose.y, pose.theta + self.actions.turn + noise.angle_offset), false),
            Action::TurnRight => {
                (Pose::new(pose.x, pose.y, pose.theta - self.actions.turn + noise.angle_offset), false)
            }
        }
    }

    pub fn textures(&self) -> &[WallTexture] {
        &self.textures
    }

    /// `(x, y, theta)` scaled to `[0, 1]^3` over the bounding box.
    pub fn unit_state(&self, pose: &Pose) -> [f64; 3] {
        let (lo, hi) = self.geometry.polygon.bounding_box();
        [
            ((pose.x - lo[0]) / (hi[0] - lo[0])).clamp(0.0, 1.0),
            ((pose.y - lo[1]) / (hi[1] - lo[1])).clamp(0.0, 1.0),
            pose.theta / TAU,
        ]
    }

    /// Generous bound on the reference controller's steps to the goal
    /// from anywhere in the room: the bounding-box diagonal walked in
    /// forward steps plus a half turn, doubled for a detour via a corridor.
    pub fn reference_steps_bound(&self) -> usize {
        let (lo, hi) = self.geometry.polygon.bounding_box();
        let diag = (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
        let turns = (PI / self.actions.turn).ceil() as usize;
        let base = (diag / self.actions.forward).ceil() as usize + turns;
        match self.geometry.kind {
            RoomKind::Rectangle => base,
            RoomKind::TwoRoom => 2 * base,
        }
    }
}
