//! A small game with strategic complementarities in the strong,
//! step-function sense, used to exercise the monotone structure of the
//! solvers.
//!
//! Each row of the kernel mixes a fixed "up" law `H` and a "down" law `L`
//! (`H` dominates `L`) with weight `θ(s, a, z)`, where `θ` is supermodular in
//! `(s, a)` and has increasing differences in `(s, a)` and the normalized mean
//! state `m(z)`:
//!
//! ```text
//! θ = 0.05 + 0.4 s̃ + 0.2 ã + 0.1 s̃ ã + 0.2 ã m(z)     s̃, ã, m ∈ [0, 1]
//! r = 0.4 s̃ + 0.1 s̃ ã + 0.3 ã m(z) - cost ã
//! ```

use rand::RngCore;

use crate::base::MeanField;
use crate::error::{ensure, Result};
use crate::model::{sample_row, GameModel};

#[derive(Debug, Clone)]
pub struct Ladder {
    num_states: usize,
    num_actions: usize,
    gamma: f64,
    cost: f64,
    up: Vec<f64>,
    down: Vec<f64>,
}

impl Ladder {
    pub fn new(num_states: usize, num_actions: usize, gamma: f64, cost: f64) -> Result<Self> {
        ensure(num_states >= 2 && num_actions >= 2, || "need at least 2 states and 2 actions".into())?;
        ensure((0.0..1.0).contains(&gamma), || format!("gamma must lie in [0, 1), got {gamma}"))?;
        ensure((0.0..=0.2).contains(&cost), || format!("cost must lie in [0, 0.2], got {cost}"))?;
        let geometric = |rev: bool| {
            let w: Vec<f64> = (0..num_states).map(|s| 0.6f64.powi(if rev { (num_states - 1 - s) as i32 } else { s as i32 })).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect::<Vec<_>>()
        };
        Ok(Self { num_states, num_actions, gamma, cost, up: geometric(true), down: geometric(false) })
    }

    fn scaled(&self, s: usize, a: usize, z: &MeanField) -> (f64, f64, f64) {
        let top = (self.num_states - 1) as f64;
        (s as f64 / top, a as f64 / (self.num_actions - 1) as f64, z.mean_state() / top)
    }

    pub fn theta(&self, s: usize, a: usize, z: &MeanField) -> f64 {
        let (s, a, m) = self.scaled(s, a, z);
        0.05 + 0.4 * s + 0.2 * a + 0.1 * s * a + 0.2 * a * m
    }
}

impl GameModel for Ladder {
    fn num_states(&self) -> usize {
        self.num_states
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn reward(&self, s: usize, a: usize, z: &MeanField) -> f64 {
        let (s, a, m) = self.scaled(s, a, z);
        0.4 * s + 0.1 * s * a + 0.3 * a * m - self.cost * a
    }

    fn kernel(&self, s: usize, a: usize, z: &MeanField) -> Option<Vec<f64>> {
        let t = self.theta(s, a, z);
        Some(self.up.iter().zip(&self.down).map(|(h, l)| t * h + (1.0 - t) * l).collect())
    }

    fn sample_next(&self, s: usize, a: usize, z: &MeanField, rng: &mut dyn RngCore) -> usize {
        let t = self.theta(s, a, z);
        let u = rand::Rng::gen::<f64>(rng);
        if u < t {
            sample_row(&self.up, rng)
        } else {
            sample_row(&self.down, rng)
        }
    }
}
