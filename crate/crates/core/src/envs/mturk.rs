//! Worker reputation in a crowd-sourcing marketplace.
//!
//! State `s` is a worker's quality score and `a` the effort spent on a task.
//! With probability `1 - ζ` the next state is `(s + a - w1)+`, `w1` uniform on
//! {0, 1, 2, 3}; otherwise the worker is replaced by a newcomer at `w2`,
//! uniform on {0, …, |S|} w.p. 0.9 and 0 otherwise. Both are clipped to the top
//! state. The reward `δ1 s + δ2 Σ_s s z(s) - δ3 a` is divided by
//! `(δ1 + δ2) |S|` so that it stays within [-1, 1].

use rand::Rng;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::base::MeanField;
use crate::error::{ensure, Result};
use crate::model::GameModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MTurkParams {
    pub num_states: usize,
    pub num_actions: usize,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub zeta: f64,
    pub gamma: f64,
    /// Divide rewards by `(δ1 + δ2) |S|`.
    pub normalize: bool,
}

impl Default for MTurkParams {
    fn default() -> Self {
        Self { num_states: 100, num_actions: 5, delta1: 0.5, delta2: 0.2, delta3: 0.1, zeta: 0.1, gamma: 0.75, normalize: true }
    }
}

const W2_SPREAD: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct MTurk {
    params: MTurkParams,
}

impl MTurk {
    pub fn new(params: MTurkParams) -> Result<Self> {
        let q = &params;
        ensure(q.num_states >= 2 && q.num_actions >= 2, || "need at least 2 states and 2 actions".into())?;
        ensure(q.delta1 >= 0.0 && q.delta2 >= 0.0 && q.delta3 >= 0.0, || "reward weights must be nonnegative".into())?;
        ensure(!q.normalize || q.delta1 + q.delta2 > 0.0, || "normalization needs δ1 + δ2 > 0".into())?;
        ensure((0.0..=1.0).contains(&q.zeta), || format!("zeta must lie in [0, 1], got {}", q.zeta))?;
        ensure((0.0..1.0).contains(&q.gamma), || format!("gamma must lie in [0, 1), got {}", q.gamma))?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &MTurkParams {
        &self.params
    }

    pub fn raw_reward(&self, s: usize, a: usize, z: &MeanField) -> f64 {
        let q = &self.params;
        q.delta1 * s as f64 + q.delta2 * z.mean_state() - q.delta3 * a as f64
    }

    /// Factor applied to the raw reward.
    pub fn reward_scale(&self) -> f64 {
        let q = &self.params;
        if q.normalize {
            1.0 / ((q.delta1 + q.delta2) * q.num_states as f64)
        } else {
            1.0
        }
    }

    #[inline]
    fn clip(&self, s: usize) -> usize {
        s.min(self.params.num_states - 1)
    }
}

impl GameModel for MTurk {
    fn num_states(&self) -> usize {
        self.params.num_states
    }

    fn num_actions(&self) -> usize {
        self.params.num_actions
    }

    fn gamma(&self) -> f64 {
        self.params.gamma
    }

    fn reward(&self, s: usize, a: usize, z: &MeanField) -> f64 {
        self.raw_reward(s, a, z) * self.reward_scale()
    }

    fn kernel(&self, s: usize, a: usize, _z: &MeanField) -> Option<Vec<f64>> {
        let n = self.params.num_states;
        let zeta = self.params.zeta;
        let mut row = vec![0.0; n];
        for w1 in 0..4 {
            row[self.clip((s + a).saturating_sub(w1))] += (1.0 - zeta) / 4.0;
        }
        row[0] += zeta * (1.0 - W2_SPREAD);
        let each = zeta * W2_SPREAD / (n + 1) as f64;
        for w2 in 0..=n {
            row[self.clip(w2)] += each;
        }
        Some(row)
    }

    fn sample_next(&self, s: usize, a: usize, _z: &MeanField, rng: &mut dyn RngCore) -> usize {
        if rng.gen::<f64>() < self.params.zeta {
            if rng.gen::<f64>() < W2_SPREAD {
                self.clip(rng.gen_range(0..=self.params.num_states))
            } else {
                0
            }
        } else {
            self.clip((s + a).saturating_sub(rng.gen_range(0..4)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::seeded;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reward_examples() {
        let m = MTurk::new(MTurkParams::default()).unwrap();
        assert_eq!(m.reward(0, 0, &MeanField::point_mass(100, 0)), 0.0);
        assert_abs_diff_eq!(m.raw_reward(10, 2, &MeanField::uniform(100)), 14.7, epsilon = 1e-12);
        assert_abs_diff_eq!(m.reward(10, 2, &MeanField::uniform(100)), 14.7 / 70.0, epsilon = 1e-12);
        let z = MeanField::point_mass(100, 99);
        for s in 0..100 {
            for a in 0..5 {
                assert!(m.reward(s, a, &z).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn certain_regeneration_is_w2_law() {
        let m = MTurk::new(MTurkParams { zeta: 1.0, ..Default::default() }).unwrap();
        let row = m.kernel(40, 3, &MeanField::uniform(100)).unwrap();
        assert_abs_diff_eq!(row[0], 0.1 + 0.9 / 101.0, epsilon = 1e-15);
        assert_abs_diff_eq!(row[50], 0.9 / 101.0, epsilon = 1e-15);
        assert_abs_diff_eq!(row[99], 2.0 * 0.9 / 101.0, epsilon = 1e-15);
        assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sampler_matches_kernel() {
        let m = MTurk::new(MTurkParams::default()).unwrap();
        let z = MeanField::uniform(100);
        let mut rng = seeded(3);
        for (s, a) in [(0, 0), (50, 4), (98, 3)] {
            let row = m.kernel(s, a, &z).unwrap();
            let mut counts = vec![0.0; 100];
            let n = 100_000;
            for _ in 0..n {
                counts[m.sample_next(s, a, &z, &mut rng)] += 1.0;
            }
            let tv: f64 = counts.iter().zip(&row).map(|(c, p)| (c / n as f64 - p).abs()).sum::<f64>() / 2.0;
            assert!(tv <= 0.015, "tv {tv}");
        }
    }
}
