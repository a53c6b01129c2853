use nalgebra::{DMatrix, DVector};

use super::engine::usable_pairs;
use crate::error::{check_dim, Error, Result};

/// Mean squared successive difference per output column of a time-ordered
/// `n x k` matrix, skipping pairs that straddle a trajectory break.
pub fn slowness(outputs: &DMatrix<f64>, breaks: &[usize]) -> Result<DVector<f64>> {
    let (n, k) = outputs.shape();
    let usable = usable_pairs(n, breaks);
    let pairs = usable.iter().filter(|&&u| u).count();
    if pairs < 2 {
        return Err(Error::input(format!("slowness needs at least 2 usable pairs, got {pairs}")));
    }
    let mut acc = DVector::zeros(k);
    for t in 1..n {
        if usable[t] {
            for j in 0..k {
                let d = outputs[(t, j)] - outputs[(t - 1, j)];
                acc[j] += d * d;
            }
        }
    }
    Ok(acc / pairs as f64)
}

fn derivative_cross(a: &[f64], b: &[f64], usable: &[bool]) -> (f64, f64, f64, usize) {
    let (mut aa, mut bb, mut ab, mut pairs) = (0.0, 0.0, 0.0, 0usize);
    for t in 1..a.len() {
        if usable[t] {
            let da = a[t] - a[t - 1];
            let db = b[t] - b[t - 1];
            aa += da * da;
            bb += db * db;
            ab += da * db;
            pairs += 1;
        }
    }
    let p = pairs.max(1) as f64;
    (aa / p, bb / p, ab / p, pairs)
}

/// Slowness of a normalised rotation of two filters, together with the
/// prediction from the individual slownesses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureCheck {
    pub slowness: f64,
    pub slowness_i: f64,
    pub slowness_j: f64,
    /// `a^2 s_i + b^2 s_j`
    pub predicted: f64,
    /// `E[phi_i' phi_j']` over usable pairs.
    pub derivative_cross: f64,
    /// `2 |a b| |E[phi_i' phi_j']|`
    pub cross_term_bound: f64,
}

impl MixtureCheck {
    pub fn derivative_correlation(&self) -> f64 {
        self.derivative_cross / (self.slowness_i * self.slowness_j).sqrt()
    }

    pub fn within_bound(&self) -> bool {
        (self.slowness - self.predicted).abs() <= self.cross_term_bound + 1e-12 * self.predicted.abs().max(1.0)
    }
}

pub fn mixture_slowness_check(
    outputs_i: &[f64],
    outputs_j: &[f64],
    a: f64,
    b: f64,
    breaks: &[usize],
) -> Result<MixtureCheck> {
    if ((a * a + b * b) - 1.0).abs() > 1e-12 {
        return Err(Error::input("mixture coefficients must satisfy a^2 + b^2 = 1"));
    }
    check_dim(outputs_i.len(), outputs_j.len())?;
    let usable = usable_pairs(outputs_i.len(), breaks);
    let (si, sj, cross, pairs) = derivative_cross(outputs_i, outputs_j, &usable);
    if pairs < 2 {
        return Err(Error::input("mixture check needs at least 2 usable pairs"));
    }
    let mix: Vec<f64> = outputs_i.iter().zip(outputs_j).map(|(x, y)| a * x + b * y).collect();
    let (s, _, _, _) = derivative_cross(&mix, &mix, &usable);
    Ok(MixtureCheck {
        slowness: s,
        slowness_i: si,
        slowness_j: sj,
        predicted: a * a * si + b * b * sj,
        derivative_cross: cross,
        cross_term_bound: 2.0 * (a * b).abs() * cross.abs(),
    })
}

/// Empirical mean and covariance of `n x k` outputs and their deviation
/// from the SFA constraints.
#[derive(Debug, Clone)]
pub struct OutputMoments {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub max_abs_mean: f64,
    pub max_cov_deviation: f64,
}

pub fn output_moments(outputs: &DMatrix<f64>) -> OutputMoments {
    let (n, k) = outputs.shape();
    let mean = outputs.row_mean().transpose();
    let mut centered = outputs.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let covariance = centered.tr_mul(&centered) / n as f64;
    let max_cov_deviation = (&covariance - DMatrix::<f64>::identity(k, k)).amax();
    OutputMoments { max_abs_mean: mean.amax(), mean, covariance, max_cov_deviation }
}

/// Per-filter SFA slowness against the optimal-response slowness on the
/// same trajectory, both sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SlownessReport {
    pub sfa: Vec<f64>,
    pub optimal: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl SlownessReport {
    /// Largest violation of `sfa[j] >= optimal[j]`; non-positive when dominated.
    pub fn worst_violation(&self) -> f64 {
        self.sfa.iter().zip(&self.optimal).map(|(s, o)| o - s).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("filter_index,sfa_slowness,optimal_slowness,ratio\n");
        for j in 0..self.sfa.len() {
            out.push_str(&format!("{},{},{},{}\n", j + 1, self.sfa[j], self.optimal[j], self.ratios[j]));
        }
        out
    }
}

pub fn slowness_report(
    sfa_outputs: &DMatrix<f64>,
    optimal_outputs: &DMatrix<f64>,
    breaks: &[usize],
) -> Result<SlownessReport> {
    check_dim(sfa_outputs.nrows(), optimal_outputs.nrows())?;
    let mut sfa: Vec<f64> = slowness(sfa_outputs, breaks)?.iter().cloned().collect();
    let mut optimal: Vec<f64> = slowness(optimal_outputs, breaks)?.iter().cloned().collect();
    sfa.sort_by(f64::total_cmp);
    optimal.sort_by(f64::total_cmp);
    let k = sfa.len().min(optimal.len());
    sfa.truncate(k);
    optimal.truncate(k);
    let ratios = sfa.iter().zip(&optimal).map(|(s, o)| s / o).collect();
    Ok(SlownessReport { sfa, optimal, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn slowness_examples() {
        assert_eq!(slowness(&col(&[3.0; 5]), &[]).unwrap()[0], 0.0);
        let alt: Vec<f64> = (0..9).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((slowness(&col(&alt), &[]).unwrap()[0] - 4.0).abs() < 1e-15);
        let ramp: Vec<f64> = (0..7).map(|t| 0.25 * t as f64).collect();
        assert!((slowness(&col(&ramp), &[]).unwrap()[0] - 0.0625).abs() < 1e-15);
        assert!(slowness(&col(&[1.0, 2.0]), &[]).is_err());
    }

    #[test]
    fn breaks_skip_jumps() {
        let v = [0.0, 0.0, 0.0, 10.0, 10.0, 10.0];
        assert_eq!(slowness(&col(&v), &[3]).unwrap()[0], 0.0);
    }

    #[test]
    fn sign_flip_invariance() {
        let v: Vec<f64> = (0..50).map(|t| (t as f64 * 0.3).sin()).collect();
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        assert_eq!(slowness(&col(&v), &[]).unwrap()[0], slowness(&col(&neg), &[]).unwrap()[0]);
    }

    #[test]
    fn mixture_examples() {
        let a: Vec<f64> = (0..200).map(|t| (t as f64 * 0.05).cos()).collect();
        let b: Vec<f64> = (0..200).map(|t| (t as f64 * 0.05).sin()).collect();
        let m = mixture_slowness_check(&a, &b, 1.0, 0.0, &[]).unwrap();
        assert_eq!(m.slowness, m.slowness_i);
        let m = mixture_slowness_check(&a, &b, 0.0, 1.0, &[]).unwrap();
        assert_eq!(m.slowness, m.slowness_j);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = mixture_slowness_check(&a, &b, h, h, &[]).unwrap();
        assert!(m.within_bound());
        assert!((m.slowness - m.slowness_i).abs() <= (m.slowness_i - m.slowness_j).abs() + m.cross_term_bound + 1e-12);
        assert!(mixture_slowness_check(&a, &b, 1.0, 1.0, &[]).is_err());
    }

    #[test]
    fn report_csv_shape() {
        let a = DMatrix::from_fn(20, 2, |t, j| ((t * (j + 1)) as f64 * 0.1).sin());
        let r = slowness_report(&a, &a, &[]).unwrap();
        assert!(r.worst_violation() <= 0.0);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("filter_index,sfa_slowness,optimal_slowness,ratio"));
    }
}
