use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::config::{phase_rng, streams, DataMode, EnvKind, ExperimentConfig, ReprChoice};
use crate::env::{random_walk, uniform_transitions, Environment, Pose, Trajectory, TransitionSet};
use crate::error::{Error, Result};
use crate::eval::{convergence_quality, default_horizon, environment_reference, QPolicy, QualityReport};
use crate::kernel::{ald_select, median_pairwise_distance, tune_width_for_budget, KernelSpec, SupportVectorSet};
use crate::rl::{lspi, FeatureData, LspiConfig, QWeights, StateRepr};
use crate::sfa::{box3d_indices, kernel_sfa_pp, slowness, slowness_report, SfaModel};

/// File layout of one experiment directory.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Artifacts { dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn config(&self) -> PathBuf {
        self.path("config.txt")
    }
    pub fn walk(&self) -> PathBuf {
        self.path("walk.jsonl")
    }
    pub fn transitions(&self) -> PathBuf {
        self.path("transitions.jsonl")
    }
    pub fn svs(&self) -> PathBuf {
        self.path("svs.json")
    }
    pub fn sfa_model(&self) -> PathBuf {
        self.path("sfa_model.json")
    }
    pub fn slowness(&self) -> PathBuf {
        self.path("slowness.csv")
    }
    pub fn repr(&self) -> PathBuf {
        self.path("repr.json")
    }
    pub fn qweights(&self) -> PathBuf {
        self.path("qweights.json")
    }
    pub fn lspi_trace(&self) -> PathBuf {
        self.path("lspi_trace.csv")
    }
    pub fn quality_json(&self) -> PathBuf {
        self.path("quality.json")
    }
    pub fn quality_csv(&self) -> PathBuf {
        self.path("quality.csv")
    }
    pub fn summary(&self) -> PathBuf {
        self.path("summary.json")
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read_set(path: &Path) -> Result<TransitionSet> {
    TransitionSet::read_file(path).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        e => e,
    })
}

/// Representation used by LSPI, as stored next to the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReprDoc {
    /// Constant plus the filters of `sfa_model.json`.
    Sfa { n_filters: usize },
    /// Constant plus box optimal responses of the pose.
    Optimal { indices: Vec<[usize; 3]> },
}

impl ReprDoc {
    fn build(&self, art: &Artifacts) -> Result<StateRepr> {
        match self {
            ReprDoc::Sfa { n_filters } => {
                let mut model = SfaModel::from_json(&read(&art.sfa_model())?)?;
                if model.n_filters() < *n_filters {
                    return Err(Error::input("SFA model has fewer filters than the representation needs"));
                }
                model.truncate(*n_filters);
                Ok(StateRepr::Sfa { model })
            }
            ReprDoc::Optimal { indices } => Ok(StateRepr::OptimalResponses { indices: indices.clone() }),
        }
    }
}

fn fill_observations<R: rand::Rng>(env: &Environment, set: &mut TransitionSet, poses: &[Pose], rng: &mut R) {
    // one draw per distinct pose so that a walk stays continuous
    let obs: Vec<DVector<f64>> = if env.obs.noise > 0.0 {
        poses.iter().map(|p| env.observe_noisy(p, rng)).collect()
    } else {
        poses.iter().map(|p| env.observe(p)).collect()
    };
    for (i, t) in set.transitions.iter_mut().enumerate() {
        t.obs = Some(obs[2 * i].clone());
        t.next_obs = Some(obs[2 * i + 1].clone());
    }
}

fn walk_observations<R: rand::Rng>(env: &Environment, walk: &Trajectory, rng: &mut R) -> TransitionSet {
    let mut set = TransitionSet::from_trajectory(env, walk);
    let obs: Vec<DVector<f64>> = if env.obs.noise > 0.0 {
        walk.poses.iter().map(|p| env.observe_noisy(p, rng)).collect()
    } else {
        walk.observations(env)
    };
    let mut k = 0;
    for t in 0..walk.len() {
        if walk.actions[t].is_some() {
            set.transitions[k].obs = Some(obs[t].clone());
            set.transitions[k].next_obs = Some(obs[t + 1].clone());
            k += 1;
        }
    }
    set
}

/// Phase a: exploratory walk for SFA and the LSPI transition set.
pub fn gen_data(cfg: &ExperimentConfig, art: &Artifacts) -> Result<()> {
    let inner = || -> Result<()> {
        let env = cfg.environment()?;
        write(&art.config(), &cfg.to_kv())?;
        let walk = random_walk(&env, cfg.walk_steps, cfg.motion, &mut phase_rng(cfg.seed, streams::WALK))?;
        let mut noise = phase_rng(cfg.seed, streams::SENSOR_NOISE);
        let walk_set = walk_observations(&env, &walk, &mut noise);
        walk_set.write_file(&art.walk())?;
        let lspi_set = match cfg.data_mode {
            DataMode::Shared => walk_set,
            DataMode::Disjoint => {
                let mut set =
                    uniform_transitions(&env, cfg.n_transitions, &mut phase_rng(cfg.seed, streams::TRANSITIONS))?;
                let poses: Vec<Pose> = set.transitions.iter().flat_map(|t| [t.pose, t.next_pose]).collect();
                fill_observations(&env, &mut set, &poses, &mut noise);
                set
            }
        };
        lspi_set.write_file(&art.transitions())
    };
    inner().map_err(|e| e.in_phase("gen-data"))
}

/// Phase b, first half: ALD support vectors on the walk observations.
pub fn select_sv(cfg: &ExperimentConfig, art: &Artifacts) -> Result<SupportVectorSet> {
    let inner = || -> Result<SupportVectorSet> {
        let (obs, _, _) = read_set(&art.walk())?.sequence()?;
        let width = match cfg.kernel_width {
            Some(w) => w,
            None => {
                let med = median_pairwise_distance(&obs);
                tune_width_for_budget(&obs, cfg.nu, cfg.sv_budget, med / 100.0, med * 10.0, cfg.tune_iterations)?.0
            }
        };
        let spec = KernelSpec::gaussian(width);
        let mut svs = ald_select(&spec, &obs, cfg.nu)?;
        if svs.len() > cfg.sv_budget {
            // a prefix of an ALD selection is itself an ALD selection
            let keep = svs.vectors[..cfg.sv_budget].to_vec();
            svs = SupportVectorSet::from_vectors(spec, cfg.nu, keep)?;
        }
        write(&art.svs(), &svs.to_json()?)?;
        Ok(svs)
    };
    inner().map_err(|e| e.in_phase("select-sv"))
}

fn slowness_csv(env_kind: EnvKind, env: &Environment, model: &SfaModel, walk: &TransitionSet) -> Result<String> {
    let (obs, poses, breaks) = walk.sequence()?;
    let outputs = model.apply_batch(&obs)?;
    if env_kind == EnvKind::TwoRoom {
        let s = slowness(&outputs, &breaks)?;
        let mut out = String::from("filter_index,sfa_slowness\n");
        for (j, v) in s.iter().enumerate() {
            out.push_str(&format!("{},{v}\n", j + 1));
        }
        return Ok(out);
    }
    let k = model.n_filters();
    let mut max_index = 2;
    while (max_index + 1usize).pow(3) < 4 * (k + 1) {
        max_index += 1;
    }
    let idx: Vec<[usize; 3]> = box3d_indices(max_index).into_iter().filter(|t| t != &[0, 0, 0]).collect();
    let states: Vec<[f64; 3]> = poses.iter().map(|p| env.unit_state(p)).collect();
    let optimal = DMatrix::from_fn(states.len(), idx.len(), |t, j| {
        crate::sfa::optimal::box3d_unchecked(idx[j][0], idx[j][1], idx[j][2], &states[t])
    });
    Ok(slowness_report(&outputs, &optimal, &breaks)?.to_csv())
}

/// Phase b, second half: kernel SFA over the selected support vectors.
pub fn train_sfa(cfg: &ExperimentConfig, art: &Artifacts) -> Result<SfaModel> {
    let inner = || -> Result<SfaModel> {
        let env = cfg.environment()?;
        let walk = read_set(&art.walk())?;
        let svs = SupportVectorSet::from_json(&read(&art.svs())?)?;
        let (obs, _, breaks) = walk.sequence()?;
        let model = SfaModel::Kernel(kernel_sfa_pp(&obs, &breaks, &svs, cfg.n_filters)?);
        write(&art.sfa_model(), &model.to_json()?)?;
        write(&art.slowness(), &slowness_csv(cfg.env, &env, &model, &walk)?)?;
        Ok(model)
    };
    inner().map_err(|e| e.in_phase("train-sfa"))
}

/// Phase c: LSPI on the chosen representation of the transition set.
pub fn train_lspi(cfg: &ExperimentConfig, art: &Artifacts) -> Result<QWeights> {
    let inner = || -> Result<QWeights> {
        let env = cfg.environment()?;
        let transitions = read_set(&art.transitions())?;
        let doc = match cfg.repr {
            ReprChoice::Sfa => ReprDoc::Sfa { n_filters: cfg.n_filters },
            ReprChoice::Optimal => match StateRepr::slowest_responses(&env, &transitions, cfg.repr_size)? {
                StateRepr::OptimalResponses { indices } => ReprDoc::Optimal { indices },
                _ => unreachable!("slowest_responses builds optimal responses"),
            },
        };
        let repr = doc.build(art)?;
        let data = FeatureData::from_transitions(&env, &transitions, &repr, cfg.absorbing_goal)?;
        let result = lspi(&data, &LspiConfig { eps: cfg.eps, max_iter: cfg.max_iter, ..LspiConfig::new(cfg.gamma) })?;
        write(&art.repr(), &serde_json::to_string_pretty(&doc)?)?;
        write(&art.qweights(), &result.weights.to_json()?)?;
        write(&art.lspi_trace(), &result.trace_csv())?;
        Ok(result.weights)
    };
    inner().map_err(|e| e.in_phase("train-lspi"))
}

/// Phase d: convergence quality of the greedy policy against the
/// reference controller. `weights` overrides `qweights.json`.
pub fn eval_policy(cfg: &ExperimentConfig, art: &Artifacts, weights: Option<&Path>) -> Result<QualityReport> {
    let inner = || -> Result<QualityReport> {
        let env = cfg.environment()?;
        let w = QWeights::from_json(&read(weights.unwrap_or(&art.qweights()))?)?;
        let doc: ReprDoc = serde_json::from_str(&read(&art.repr())?)?;
        let repr = doc.build(art)?;
        let policy = QPolicy::new(&env, &repr, &w)?;
        let act = |p: &Pose| policy.act(p);
        let reference = environment_reference(&env);
        let horizon = cfg.horizon.unwrap_or_else(|| default_horizon(&env));
        let mut rng = phase_rng(cfg.seed, streams::EVAL);
        let report = convergence_quality(&env, &act, &reference, cfg.n_starts, horizon, cfg.gamma, &mut rng)?;
        write(&art.quality_json(), &report.to_json()?)?;
        write(&art.quality_csv(), &report.to_csv())?;
        Ok(report)
    };
    inner().map_err(|e| e.in_phase("eval-policy"))
}

/// Headline numbers of one experiment directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub walk_transitions: usize,
    pub lspi_transitions: usize,
    pub n_support_vectors: usize,
    pub kernel_width: f64,
    pub n_filters: usize,
    pub slowest_filters: Vec<f64>,
    pub repr_dim: usize,
    pub lspi_iterations: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub mean_extra_steps: Option<f64>,
    pub success_rate: f64,
    pub n_trajectories: usize,
    pub n_excluded: usize,
}

impl Summary {
    pub fn to_text(&self) -> String {
        let extra = self.mean_extra_steps.map_or("inf".to_string(), |v| format!("{v:.3}"));
        format!(
            "support vectors {} (width {:.4})\nfilters {} (slowest {:?})\nLSPI: {} iterations, representation dim {}\nC = {:.4}, mean extra steps {}, success {:.1}% of {} starts ({} excluded)\n",
            self.n_support_vectors,
            self.kernel_width,
            self.n_filters,
            self.slowest_filters.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            self.lspi_iterations,
            self.repr_dim,
            self.c,
            extra,
            100.0 * self.success_rate,
            self.n_trajectories,
            self.n_excluded
        )
    }
}

/// Collects the headline numbers from the artifacts and writes
/// `summary.json`.
pub fn report(cfg: &ExperimentConfig, art: &Artifacts) -> Result<Summary> {
    let inner = || -> Result<Summary> {
        let count = |p: PathBuf| -> Result<usize> { Ok(read(&p)?.lines().filter(|l| !l.trim().is_empty()).count()) };
        let svs = SupportVectorSet::from_json(&read(&art.svs())?)?;
        let model = SfaModel::from_json(&read(&art.sfa_model())?)?;
        let w = QWeights::from_json(&read(&art.qweights())?)?;
        let quality = QualityReport::from_json(&read(&art.quality_json())?)?;
        let trace = count(art.lspi_trace())?.saturating_sub(1);
        let summary = Summary {
            seed: cfg.seed,
            walk_transitions: count(art.walk())?,
            lspi_transitions: count(art.transitions())?,
            n_support_vectors: svs.len(),
            kernel_width: svs.spec.width,
            n_filters: model.n_filters(),
            slowest_filters: model.training_slowness().iter().take(10).copied().collect(),
            repr_dim: w.m,
            lspi_iterations: trace,
            c: quality.c,
            mean_extra_steps: quality.mean_extra_steps,
            success_rate: quality.success_rate(),
            n_trajectories: quality.n_trajectories,
            n_excluded: quality.n_excluded,
        };
        write(&art.summary(), &serde_json::to_string_pretty(&summary)?)?;
        Ok(summary)
    };
    inner().map_err(|e| e.in_phase("report"))
}

/// All four phases in order, then the summary.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<Summary> {
    cfg.validate().map_err(|e| e.in_phase("config"))?;
    let art = Artifacts::new(dir).map_err(|e| e.in_phase("setup"))?;
    gen_data(cfg, &art)?;
    select_sv(cfg, &art)?;
    train_sfa(cfg, &art)?;
    train_lspi(cfg, &art)?;
    eval_policy(cfg, &art, None)?;
    report(cfg, &art)
}
