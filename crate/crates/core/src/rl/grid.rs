use nalgebra::{DMatrix, DVector};

use super::lspi::{FeatureData, FeatureSample};
use super::mrp::TabularMrp;
use super::repr::StateRepr;
use crate::error::{Error, Result};

/// Deterministic grid world with four moves (0 up, 1 down, 2 left,
/// 3 right). Moving into the border leaves the state unchanged; entering
/// the goal pays 1 and ends the episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridWorld {
    pub width: usize,
    pub height: usize,
    pub goal: (usize, usize),
}

impl GridWorld {
    pub const ACTIONS: usize = 4;

    pub fn new(width: usize, height: usize, goal: (usize, usize)) -> Result<Self> {
        if width == 0 || height == 0 || goal.0 >= width || goal.1 >= height {
            return Err(Error::input("goal must lie on a non-empty grid"));
        }
        Ok(GridWorld { width, height, goal })
    }

    pub fn n_states(&self) -> usize {
        self.width * self.height
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, s: usize) -> (usize, usize) {
        (s % self.width, s / self.width)
    }

    pub fn goal_state(&self) -> usize {
        self.index(self.goal.0, self.goal.1)
    }

    pub fn next_state(&self, s: usize, action: usize) -> usize {
        let (x, y) = self.coords(s);
        let (nx, ny) = match action {
            0 if y + 1 < self.height => (x, y + 1),
            1 if y > 0 => (x, y - 1),
            2 if x > 0 => (x - 1, y),
            3 if x + 1 < self.width => (x + 1, y),
            _ => (x, y),
        };
        self.index(nx, ny)
    }

    pub fn reward(&self, next: usize) -> f64 {
        if next == self.goal_state() {
            1.0
        } else {
            0.0
        }
    }

    /// Horizontal moves until the goal column, then vertical ones.
    pub fn toward_goal(&self, s: usize) -> usize {
        let (x, y) = self.coords(s);
        let (gx, gy) = self.goal;
        if x < gx {
            3
        } else if x > gx {
            2
        } else if y < gy {
            0
        } else {
            1
        }
    }

    /// Markov reward process of a deterministic policy with the goal
    /// terminal.
    pub fn policy_mrp(&self, policy: impl Fn(usize) -> usize, gamma: f64) -> Result<TabularMrp> {
        let n = self.n_states();
        let mut p = DMatrix::zeros(n, n);
        for s in 0..n {
            p[(s, self.next_state(s, policy(s)))] = 1.0;
        }
        let r = DVector::from_iterator(n, (0..n).map(|s| self.reward(s)));
        TabularMrp::new(p, r, gamma)?.with_terminal(&[self.goal_state()])
    }

    /// Every non-goal state with every action once, tabular features.
    pub fn exhaustive_data(&self) -> Result<FeatureData> {
        let repr = StateRepr::Tabular { n_states: self.n_states() };
        let mut samples = Vec::new();
        for s in 0..self.n_states() {
            if s == self.goal_state() {
                continue;
            }
            for a in 0..Self::ACTIONS {
                let next = self.next_state(s, a);
                samples.push(FeatureSample {
                    phi: repr.tabular(s)?,
                    action: a,
                    reward: self.reward(next),
                    next: if next == self.goal_state() { None } else { Some(repr.tabular(next)?) },
                });
            }
        }
        FeatureData::new(self.n_states(), Self::ACTIONS, samples)
    }
}
