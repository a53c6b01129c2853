use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{random_walk, Environment, MotionStats};
use crate::error::{Error, Result};
use crate::kernel::{ald_select, median_pairwise_distance, tune_width_for_budget, KernelSpec};
use crate::sfa::{box3d_indices, kernel_sfa_pp, slowness};

const GROUP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvSweepConfig {
    pub walk_steps: usize,
    pub motion: MotionStats,
    pub nu: f64,
    /// Groups of ten filters to report.
    pub n_groups: usize,
    /// Width tuning runs on every `tune_stride`-th sample.
    pub tune_stride: usize,
    pub seed: u64,
}

impl Default for SvSweepConfig {
    fn default() -> Self {
        SvSweepConfig { walk_steps: 6000, motion: MotionStats::default(), nu: 0.1, n_groups: 3, tune_stride: 4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvSweepRow {
    pub budget: usize,
    pub n_svs: usize,
    pub width: f64,
    pub groups: Vec<f64>,
}

/// Mean training slowness per group of ten filters for each support-vector
/// budget, next to the same statistic for the optimal responses.
#[derive(Debug, Clone, PartialEq)]
pub struct SvSweepReport {
    pub baseline: Vec<f64>,
    pub rows: Vec<SvSweepRow>,
}

impl SvSweepReport {
    pub fn to_csv(&self) -> String {
        let g = self.baseline.len();
        let mut out = String::from("budget,n_svs");
        for i in 1..=g {
            out.push_str(&format!(",group_{i}"));
        }
        out.push('\n');
        let join = |v: &[f64]| v.iter().map(|x| format!(",{x}")).collect::<String>();
        out.push_str(&format!("optimal,{}\n", join(&self.baseline)));
        for r in &self.rows {
            out.push_str(&format!("{},{}{}\n", r.budget, r.n_svs, join(&r.groups)));
        }
        out
    }
}

fn group_means(sorted: &[f64], n_groups: usize) -> Vec<f64> {
    (0..n_groups).map(|g| sorted[g * GROUP..(g + 1) * GROUP].iter().sum::<f64>() / GROUP as f64).collect()
}

pub fn slowness_vs_sv_report(env: &Environment, budgets: &[usize], config: &SvSweepConfig) -> Result<SvSweepReport> {
    let k = GROUP * config.n_groups;
    if config.n_groups == 0 || budgets.is_empty() {
        return Err(Error::input("sweep needs budgets and at least one filter group"));
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) || budgets[0] <= k {
        return Err(Error::input(format!("budgets must ascend and exceed the {k} reported filters")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let walk = random_walk(env, config.walk_steps, config.motion, &mut rng)?;
    let samples = walk.observations(env);

    let mut max_index = 2;
    while (max_index + 1usize).pow(3) <= 2 * k {
        max_index += 1;
    }
    let states: Vec<[f64; 3]> = walk.poses.iter().map(|p| env.unit_state(p)).collect();
    let idx = box3d_indices(max_index);
    let responses = DMatrix::from_fn(states.len(), idx.len(), |t, j| {
        crate::sfa::optimal::box3d_unchecked(idx[j][0], idx[j][1], idx[j][2], &states[t])
    });
    let mut opt: Vec<f64> = slowness(&responses, &walk.breaks)?.iter().copied().collect();
    opt.sort_by(f64::total_cmp);
    let baseline = group_means(&opt, config.n_groups);

    let tune: Vec<DVector<f64>> = samples.iter().step_by(config.tune_stride.max(1)).cloned().collect();
    let med = median_pairwise_distance(&samples);
    let mut rows = Vec::new();
    for &budget in budgets {
        let sub_target = (budget / config.tune_stride.max(1)).max(k + 1);
        let (width, _) = tune_width_for_budget(&tune, config.nu, sub_target, med / 100.0, med * 10.0, 14)?;
        let svs = ald_select(&KernelSpec::gaussian(width), &samples, config.nu)?;
        let model = kernel_sfa_pp(&samples, &walk.breaks, &svs, k)?;
        let mut s: Vec<f64> = model.slowness.iter().copied().collect();
        s.sort_by(f64::total_cmp);
        rows.push(SvSweepRow { budget, n_svs: svs.len(), width, groups: group_means(&s, config.n_groups) });
    }
    Ok(SvSweepReport { baseline, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shape() {
        let r = SvSweepReport {
            baseline: vec![0.1, 0.2],
            rows: vec![SvSweepRow { budget: 30, n_svs: 31, width: 1.0, groups: vec![0.3, 0.4] }],
        };
        let csv = r.to_csv();
        assert!(csv.lines().all(|l| l.split(',').count() == 4), "{csv}");
        assert!(csv.lines().nth(1).unwrap().starts_with("optimal,,"));
    }

    #[test]
    fn rejects_small_budgets() {
        let env = Environment::rectangle();
        let cfg = SvSweepConfig { n_groups: 2, ..Default::default() };
        assert!(slowness_vs_sv_report(&env, &[15, 40], &cfg).is_err());
        assert!(slowness_vs_sv_report(&env, &[60, 40], &cfg).is_err());
    }
}
