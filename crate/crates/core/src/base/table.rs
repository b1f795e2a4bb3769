use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::Rng;
use rand::RngCore;

use crate::error::{ensure, MfgError, Result};

/// Action values indexed by `(state, action)`, stored row-major by state.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self::constant(num_states, num_actions, 0.0)
    }

    pub fn constant(num_states: usize, num_actions: usize, value: f64) -> Self {
        Self { num_states, num_actions, values: vec![value; num_states * num_actions] }
    }

    pub fn from_values(num_states: usize, num_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_states * num_actions {
            return Err(MfgError::DimensionMismatch { left: values.len(), right: num_states * num_actions });
        }
        ensure(values.iter().all(|v| v.is_finite()), || "Q-values must be finite".into())?;
        Ok(Self { num_states, num_actions, values })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, value: f64) {
        self.values[s * self.num_actions + a] = value;
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn row_mut(&mut self, s: usize) -> &mut [f64] {
        &mut self.values[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `max |Q1 - Q2|` over all entries.
    pub fn sup_distance(&self, other: &QTable) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(MfgError::DimensionMismatch { left: self.values.len(), right: other.values.len() });
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Greedy action of state `s`; ties go to the largest action index.
    #[inline]
    pub fn greedy_action(&self, s: usize) -> usize {
        greedy_index(self.row(s))
    }
}

/// Index of the row maximum, ties broken toward the largest index.
#[inline]
pub(crate) fn greedy_index(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in row.iter().enumerate().skip(1) {
        if v >= row[best] {
            best = a;
        }
    }
    best
}

/// An ε-trembling stationary strategy: state `s` plays its designated action
/// with probability `1 - ε` and each other action with `ε / (|A| - 1)`.
///
/// Every member of the strategy class is determined by its designated
/// actions, which is how the strategy is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct TremblingStrategy {
    num_actions: usize,
    epsilon: f64,
    greedy: Vec<usize>,
}

impl TremblingStrategy {
    pub fn new(num_actions: usize, epsilon: f64, greedy: Vec<usize>) -> Result<Self> {
        validate_trembling(num_actions, epsilon)?;
        ensure(greedy.iter().all(|&a| a < num_actions), || "greedy action out of range".into())?;
        Ok(Self { num_actions, epsilon, greedy })
    }

    pub fn num_states(&self) -> usize {
        self.greedy.len()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn greedy_actions(&self) -> &[usize] {
        &self.greedy
    }

    pub fn greedy_action(&self, s: usize) -> usize {
        self.greedy[s]
    }

    pub fn tremble_prob(&self) -> f64 {
        self.epsilon / (self.num_actions - 1) as f64
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize) -> f64 {
        if a == self.greedy[s] {
            1.0 - self.epsilon
        } else {
            self.tremble_prob()
        }
    }

    pub fn row(&self, s: usize) -> Vec<f64> {
        (0..self.num_actions).map(|a| self.prob(s, a)).collect()
    }

    pub fn sample_action<R: RngCore + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        sample_trembling(self.greedy[s], self.num_actions, self.epsilon, rng)
    }

    /// Rowwise stochastic dominance. With `1 - ε > ε / (|A| - 1)` a row
    /// dominates another exactly when its designated action is at least as large.
    pub fn dominates(&self, other: &TremblingStrategy) -> bool {
        self.greedy.iter().zip(&other.greedy).all(|(a, b)| a >= b)
    }

    /// Whether the designated action is nondecreasing in the state.
    pub fn is_monotone(&self) -> bool {
        self.greedy.windows(2).all(|w| w[0] <= w[1])
    }

    /// Stable fingerprint of the designated actions.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.greedy.hash(&mut h);
        self.epsilon.to_bits().hash(&mut h);
        h.finish()
    }
}

pub(crate) fn validate_trembling(num_actions: usize, epsilon: f64) -> Result<()> {
    ensure(num_actions >= 2, || format!("trembling strategies need at least 2 actions, got {num_actions}"))?;
    let cap = (num_actions - 1) as f64 / num_actions as f64;
    ensure((0.0..cap).contains(&epsilon), || format!("epsilon must lie in [0, {cap}), got {epsilon}"))
}

#[inline]
pub(crate) fn sample_trembling<R: RngCore + ?Sized>(greedy: usize, num_actions: usize, epsilon: f64, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    if u < 1.0 - epsilon {
        greedy
    } else {
        let other = rng.gen_range(0..num_actions - 1);
        if other >= greedy {
            other + 1
        } else {
            other
        }
    }
}
