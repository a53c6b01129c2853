use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Finite Markov reward process with rewards tied to the target state.
///
/// Terminal states end the process: entering one still collects its
/// reward, but nothing is collected afterwards, so their value is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMrp {
    pub p: DMatrix<f64>,
    pub r: DVector<f64>,
    pub gamma: f64,
    pub terminal: Vec<bool>,
}

impl TabularMrp {
    pub fn new(p: DMatrix<f64>, r: DVector<f64>, gamma: f64) -> Result<Self> {
        let n = p.nrows();
        if p.ncols() != n || r.len() != n {
            return Err(Error::input("MRP needs a square transition matrix and one reward per state"));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::input("gamma must lie in (0, 1]"));
        }
        for (i, row) in p.row_iter().enumerate() {
            if row.iter().any(|&v| v < 0.0) || (row.sum() - 1.0).abs() > 1e-12 {
                return Err(Error::input(format!("row {i} of the transition matrix is not stochastic")));
            }
        }
        Ok(TabularMrp { p, r, gamma, terminal: vec![false; n] })
    }

    pub fn with_terminal(mut self, states: &[usize]) -> Result<Self> {
        for &s in states {
            if s >= self.terminal.len() {
                return Err(Error::input(format!("terminal state {s} out of range")));
            }
            self.terminal[s] = true;
        }
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.r.len()
    }

    /// Transition matrix with terminal rows removed.
    pub fn effective_p(&self) -> DMatrix<f64> {
        let mut p = self.p.clone();
        for (i, &t) in self.terminal.iter().enumerate() {
            if t {
                p.row_mut(i).fill(0.0);
            }
        }
        p
    }

    /// Largest componentwise violation of `V = P (R + gamma V)`.
    pub fn bellman_residual(&self, v: &DVector<f64>) -> f64 {
        let p = self.effective_p();
        (&p * (&self.r + v * self.gamma) - v).amax()
    }
}

/// `V = (I - gamma P)^-1 P R` by a direct solve.
pub fn solve_mrp_value(mrp: &TabularMrp) -> Result<DVector<f64>> {
    let n = mrp.n_states();
    let p = mrp.effective_p();
    let a = DMatrix::identity(n, n) - &p * mrp.gamma;
    let rhs = &p * &mrp.r;
    let lu = a.lu();
    let v = lu.solve(&rhs).ok_or_else(|| Error::Singular("I - gamma P is singular".into()))?;
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::Singular("value solve produced non-finite entries".into()));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let p = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.2, 0.8]);
        let m = TabularMrp::new(p, DVector::zeros(2), 0.9).unwrap();
        assert_eq!(solve_mrp_value(&m).unwrap(), DVector::zeros(2));

        let p = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
        let m = TabularMrp::new(p, DVector::from_vec(vec![0.0, 1.0]), 0.9).unwrap().with_terminal(&[1]).unwrap();
        let v = solve_mrp_value(&m).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1] == 0.0);
    }

    #[test]
    fn bellman_residual_small() {
        let p = DMatrix::from_row_slice(3, 3, &[0.1, 0.6, 0.3, 0.5, 0.5, 0.0, 0.2, 0.2, 0.6]);
        let m = TabularMrp::new(p, DVector::from_vec(vec![1.0, -2.0, 0.5]), 0.95).unwrap();
        let v = solve_mrp_value(&m).unwrap();
        assert!(m.bellman_residual(&v) <= 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        let p = DMatrix::from_row_slice(2, 2, &[0.5, 0.4, 0.0, 1.0]);
        assert!(TabularMrp::new(p, DVector::zeros(2), 0.9).is_err());
        let p = DMatrix::identity(2, 2);
        let m = TabularMrp::new(p, DVector::zeros(2), 1.0).unwrap();
        assert!(matches!(solve_mrp_value(&m), Err(Error::Singular(_))));
    }
}
