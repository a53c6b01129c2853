use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{ActionSet, Environment, MotionStats, ObsConfig, RewardSpec, RoomGeometry};
use crate::error::{Error, Result};

/// Random stream ids derived from the experiment seed.
pub mod streams {
    pub const WALK: u64 = 1;
    pub const TRANSITIONS: u64 = 2;
    pub const SENSOR_NOISE: u64 = 3;
    pub const EVAL: u64 = 4;
}

/// One ChaCha stream per phase, all keyed by the same seed, so changing
/// one phase's consumption never shifts another's numbers.
pub fn phase_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    Rectangle,
    TwoRoom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataMode {
    /// LSPI gets its own uniform transitions.
    Disjoint,
    /// LSPI reuses the transitions of the SFA walk.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReprChoice {
    Sfa,
    /// Slowest box optimal responses of the true pose.
    Optimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    pub room_width: f64,
    pub room_depth: f64,
    pub room_size: f64,
    pub corridor_width: f64,
    pub corridor_length: f64,
    pub goal: [f64; 2],
    pub goal_radius: f64,
    pub wall_margin: f64,
    pub actions: ActionSet,
    pub obs: ObsConfig,
    pub walk_steps: usize,
    pub motion: MotionStats,
    pub n_transitions: usize,
    pub data_mode: DataMode,
    /// Gaussian width; `None` tunes it so ALD lands near `sv_budget`.
    pub kernel_width: Option<f64>,
    pub nu: f64,
    pub sv_budget: usize,
    pub n_filters: usize,
    pub tune_iterations: usize,
    pub repr: ReprChoice,
    /// Dimension of the optimal-response representation, constant included.
    pub repr_size: usize,
    pub gamma: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub absorbing_goal: bool,
    pub n_starts: usize,
    /// `None` uses ten times the reference bound of the room.
    pub horizon: Option<usize>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub const PRESETS: [&'static str; 3] = ["rectangle", "smoke", "two_room"];

    pub fn preset(name: &str) -> Result<Self> {
        let rectangle = ExperimentConfig {
            env: EnvKind::Rectangle,
            room_width: 3.0,
            room_depth: 1.8,
            room_size: 3.0,
            corridor_width: 1.0,
            corridor_length: 1.5,
            goal: [1.5, 0.9],
            goal_radius: 0.2,
            wall_margin: 0.5,
            actions: ActionSet::default(),
            obs: ObsConfig::default(),
            walk_steps: 8000,
            motion: MotionStats::default(),
            n_transitions: 6000,
            data_mode: DataMode::Disjoint,
            kernel_width: None,
            nu: 0.1,
            sv_budget: 500,
            n_filters: 128,
            tune_iterations: 16,
            repr: ReprChoice::Sfa,
            repr_size: 50,
            gamma: 0.9,
            eps: 1e-6,
            max_iter: 50,
            absorbing_goal: true,
            n_starts: 200,
            horizon: None,
            seed: 0,
        };
        match name {
            "rectangle" => Ok(rectangle),
            "smoke" => Ok(ExperimentConfig {
                walk_steps: 2000,
                n_transitions: 2000,
                sv_budget: 100,
                n_filters: 30,
                tune_iterations: 12,
                n_starts: 100,
                ..rectangle
            }),
            "two_room" => Ok(ExperimentConfig {
                env: EnvKind::TwoRoom,
                goal: [6.8, 2.3],
                goal_radius: 0.45,
                walk_steps: 12000,
                n_transitions: 10000,
                sv_budget: 600,
                gamma: 0.95,
                ..rectangle
            }),
            other => Err(Error::Config(format!("unknown preset '{other}' (known: {})", Self::PRESETS.join(", ")))),
        }
    }

    /// Preset name, or a path to a key-value file.
    pub fn load(spec: &str) -> Result<Self> {
        if Self::PRESETS.contains(&spec) {
            return Self::preset(spec);
        }
        let text = std::fs::read_to_string(Path::new(spec))
            .map_err(|e| Error::Config(format!("cannot read config '{spec}': {e}")))?;
        Self::from_kv(&text)
    }

    /// Parses `key = value` lines; `#` starts a comment. An optional
    /// `preset` key picks the base the other keys override.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let base = pairs.iter().rev().find(|(k, _)| k == "preset").map_or("rectangle", |(_, v)| v.as_str());
        let mut cfg = Self::preset(base)?;
        for (k, v) in &pairs {
            if k != "preset" {
                cfg.set(k, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
        }
        fn auto<T: FromStr>(key: &str, v: &str) -> Result<Option<T>> {
            if v == "auto" {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        }
        let v = value;
        match key {
            "env" => {
                self.env = match v {
                    "rectangle" => EnvKind::Rectangle,
                    "two_room" => EnvKind::TwoRoom,
                    _ => return Err(Error::Config(format!("env: unknown room '{v}'"))),
                }
            }
            "room.width" => self.room_width = num(key, v)?,
            "room.depth" => self.room_depth = num(key, v)?,
            "room.size" => self.room_size = num(key, v)?,
            "corridor.width" => self.corridor_width = num(key, v)?,
            "corridor.length" => self.corridor_length = num(key, v)?,
            "goal.x" => self.goal[0] = num(key, v)?,
            "goal.y" => self.goal[1] = num(key, v)?,
            "goal.radius" => self.goal_radius = num(key, v)?,
            "wall.margin" => self.wall_margin = num(key, v)?,
            "action.forward" => self.actions.forward = num(key, v)?,
            "action.turn_deg" => self.actions.turn = num::<f64>(key, v)?.to_radians(),
            "action.distance_noise" => self.actions.distance_noise = num(key, v)?,
            "action.angle_noise_deg" => self.actions.angle_noise = num::<f64>(key, v)?.to_radians(),
            "obs.rays" => self.obs.rays = num(key, v)?,
            "obs.fov_deg" => self.obs.fov = num::<f64>(key, v)?.to_radians(),
            "obs.noise" => self.obs.noise = num(key, v)?,
            "obs.texture_seed" => self.obs.texture_seed = num(key, v)?,
            "walk.steps" => self.walk_steps = num(key, v)?,
            "walk.p_forward" => self.motion.p_forward = num(key, v)?,
            "walk.sessions" => self.motion.sessions = num(key, v)?,
            "data.n" => self.n_transitions = num(key, v)?,
            "data.mode" => {
                self.data_mode = match v {
                    "disjoint" => DataMode::Disjoint,
                    "shared" => DataMode::Shared,
                    _ => return Err(Error::Config(format!("data.mode: expected disjoint or shared, got '{v}'"))),
                }
            }
            "sfa.kernel" if v != "gaussian" => {
                return Err(Error::Config(format!("sfa.kernel: only 'gaussian' is supported, got '{v}'")))
            }
            "sfa.kernel" => {}
            "sfa.width" => self.kernel_width = auto(key, v)?,
            "sfa.nu" => self.nu = num(key, v)?,
            "sfa.sv_budget" => self.sv_budget = num(key, v)?,
            "sfa.n_filters" => self.n_filters = num(key, v)?,
            "sfa.tune_iterations" => self.tune_iterations = num(key, v)?,
            "rl.repr" => {
                self.repr = match v {
                    "sfa" => ReprChoice::Sfa,
                    "optimal" => ReprChoice::Optimal,
                    _ => return Err(Error::Config(format!("rl.repr: expected sfa or optimal, got '{v}'"))),
                }
            }
            "rl.size" => self.repr_size = num(key, v)?,
            "rl.gamma" => self.gamma = num(key, v)?,
            "rl.eps" => self.eps = num(key, v)?,
            "rl.max_iter" => self.max_iter = num(key, v)?,
            "rl.absorbing_goal" => self.absorbing_goal = num(key, v)?,
            "eval.n_starts" => self.n_starts = num(key, v)?,
            "eval.horizon" => self.horizon = auto(key, v)?,
            "seed" => self.seed = num(key, v)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let env = match self.env {
            EnvKind::Rectangle => "rectangle",
            EnvKind::TwoRoom => "two_room",
        };
        let mode = match self.data_mode {
            DataMode::Disjoint => "disjoint",
            DataMode::Shared => "shared",
        };
        let repr = match self.repr {
            ReprChoice::Sfa => "sfa",
            ReprChoice::Optimal => "optimal",
        };
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let lines: Vec<(&str, String)> = vec![
            ("env", env.into()),
            ("room.width", self.room_width.to_string()),
            ("room.depth", self.room_depth.to_string()),
            ("room.size", self.room_size.to_string()),
            ("corridor.width", self.corridor_width.to_string()),
            ("corridor.length", self.corridor_length.to_string()),
            ("goal.x", self.goal[0].to_string()),
            ("goal.y", self.goal[1].to_string()),
            ("goal.radius", self.goal_radius.to_string()),
            ("wall.margin", self.wall_margin.to_string()),
            ("action.forward", self.actions.forward.to_string()),
            ("action.turn_deg", self.actions.turn.to_degrees().to_string()),
            ("action.distance_noise", self.actions.distance_noise.to_string()),
            ("action.angle_noise_deg", self.actions.angle_noise.to_degrees().to_string()),
            ("obs.rays", self.obs.rays.to_string()),
            ("obs.fov_deg", self.obs.fov.to_degrees().to_string()),
            ("obs.noise", self.obs.noise.to_string()),
            ("obs.texture_seed", self.obs.texture_seed.to_string()),
            ("walk.steps", self.walk_steps.to_string()),
            ("walk.p_forward", self.motion.p_forward.to_string()),
            ("walk.sessions", self.motion.sessions.to_string()),
            ("data.n", self.n_transitions.to_string()),
            ("data.mode", mode.into()),
            ("sfa.kernel", "gaussian".into()),
            ("sfa.width", opt(self.kernel_width.map(|w| w.to_string()))),
            ("sfa.nu", self.nu.to_string()),
            ("sfa.sv_budget", self.sv_budget.to_string()),
            ("sfa.n_filters", self.n_filters.to_string()),
            ("sfa.tune_iterations", self.tune_iterations.to_string()),
            ("rl.repr", repr.into()),
            ("rl.size", self.repr_size.to_string()),
            ("rl.gamma", self.gamma.to_string()),
            ("rl.eps", self.eps.to_string()),
            ("rl.max_iter", self.max_iter.to_string()),
            ("rl.absorbing_goal", self.absorbing_goal.to_string()),
            ("eval.n_starts", self.n_starts.to_string()),
            ("eval.horizon", opt(self.horizon.map(|h| h.to_string()))),
            ("seed", self.seed.to_string()),
        ];
        for (k, v) in lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_filters == 0 || self.n_filters > self.sv_budget {
            return fail("sfa.n_filters must lie in 1..=sfa.sv_budget");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail("rl.gamma must lie in (0, 1)");
        }
        if !(self.eps > 0.0) || self.max_iter == 0 {
            return fail("rl.eps must be positive and rl.max_iter at least 1");
        }
        if !(self.nu > 0.0) || self.kernel_width.is_some_and(|w| !(w > 0.0)) {
            return fail("sfa.nu and sfa.width must be positive");
        }
        if self.walk_steps < 2 * self.motion.sessions.max(1) || !(0.0..=1.0).contains(&self.motion.p_forward) {
            return fail("walk needs >= 2 steps per session and p_forward in [0, 1]");
        }
        if self.n_transitions == 0 || self.n_starts == 0 || self.horizon == Some(0) {
            return fail("data.n, eval.n_starts and eval.horizon must be positive");
        }
        if self.repr == ReprChoice::Optimal && self.repr_size < 2 {
            return fail("rl.size must be at least 2");
        }
        if self.tune_iterations == 0 && self.kernel_width.is_none() {
            return fail("sfa.tune_iterations must be positive when sfa.width = auto");
        }
        self.environment().map(|_| ()).map_err(|e| Error::Config(format!("environment: {e}")))
    }

    pub fn environment(&self) -> Result<Environment> {
        let geometry = match self.env {
            EnvKind::Rectangle => RoomGeometry::rectangle(self.room_width, self.room_depth)?,
            EnvKind::TwoRoom => RoomGeometry::two_room(self.room_size, self.corridor_width, self.corridor_length)?,
        };
        let reward = RewardSpec { wall_margin: self.wall_margin, ..RewardSpec::new(self.goal, self.goal_radius) };
        Environment::new(geometry, self.actions, reward, self.obs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        for name in ExperimentConfig::PRESETS {
            let cfg = ExperimentConfig::preset(name).unwrap();
            let back = ExperimentConfig::from_kv(&cfg.to_kv()).unwrap();
            assert_eq!(back.to_kv(), cfg.to_kv());
        }
    }

    #[test]
    fn overrides_and_errors() {
        let cfg = ExperimentConfig::from_kv("preset = smoke\n# comment\nrl.gamma = 0.8\nsfa.width = 2.5\n").unwrap();
        assert_eq!(cfg.walk_steps, 2000);
        assert_eq!(cfg.gamma, 0.8);
        assert_eq!(cfg.kernel_width, Some(2.5));
        assert!(ExperimentConfig::from_kv("sfa.n_filters = 600").is_err());
        assert!(ExperimentConfig::from_kv("rl.gamma = 1").is_err());
        assert!(ExperimentConfig::from_kv("bogus = 1").is_err());
        assert!(ExperimentConfig::from_kv("rl.gamma 0.9").is_err());
        assert!(ExperimentConfig::from_kv("goal.x = 2.95").is_err());
    }

    #[test]
    fn phase_streams_differ() {
        use rand::Rng;
        let a: u64 = phase_rng(7, streams::WALK).gen();
        let b: u64 = phase_rng(7, streams::TRANSITIONS).gen();
        let c: u64 = phase_rng(7, streams::WALK).gen();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
