//! Infection spread among agents who invest in their own health.
//!
//! State `s` is a health level and `p(s)` the susceptibility at that level.
//! With intensity `i_z = c_f p(Σ_s s z(s))` the next state is
//!
//! ```text
//! s' = (s + a - w1)+   w.p. i_z (1 - ζ)        infected
//!      s + a           w.p. (1 - i_z)(1 - ζ)   not infected
//!      w2              w.p. ζ                  replaced by a newcomer
//! ```
//!
//! clipped to the top state, with reward
//! `δ1 (1 - p(s)) + δ2 Σ_s z(s)(1 - p(s)) - δ3 a`.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rand::Rng;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::base::MeanField;
use crate::error::{ensure, Result};
use crate::model::GameModel;

/// Law of the state a newcomer starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regeneration {
    /// uniform{0, …, s} w.p. 0.9, else 0; depends on the leaving agent's state.
    #[default]
    BelowState,
    /// Uniform over all states.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InfectionParams {
    pub num_states: usize,
    pub num_actions: usize,
    pub c_f: f64,
    pub k: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub zeta: f64,
    pub gamma: f64,
    pub regeneration: Regeneration,
}

impl Default for InfectionParams {
    fn default() -> Self {
        Self {
            num_states: 25,
            num_actions: 5,
            c_f: 0.1,
            k: 0.05,
            delta1: 1.0,
            delta2: 0.2,
            delta3: 0.01,
            zeta: 0.1,
            gamma: 0.75,
            regeneration: Regeneration::BelowState,
        }
    }
}

/// Probability of the `w1 = 0` branch; the rest is uniform on {1, 2, 3}.
const W1_ZERO: f64 = 0.1;
/// Probability that a below-state newcomer draws uniformly rather than starting at 0.
const W2_SPREAD: f64 = 0.9;

type Susceptibility = dyn Fn(f64) -> f64 + Send + Sync;

pub struct Infection {
    params: InfectionParams,
    susceptibility: Arc<Susceptibility>,
    clamped: AtomicBool,
}

impl fmt::Debug for Infection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Infection").field("params", &self.params).finish_non_exhaustive()
    }
}

impl Clone for Infection {
    fn clone(&self) -> Self {
        Self {
            params: self.params.clone(),
            susceptibility: Arc::clone(&self.susceptibility),
            clamped: AtomicBool::new(self.clamping_fired()),
        }
    }
}

impl Infection {
    /// Uses `p(s) = exp(-k s)`.
    pub fn new(params: InfectionParams) -> Result<Self> {
        let k = params.k;
        Self::with_susceptibility(params, move |s| (-k * s).exp())
    }

    /// Any decreasing `p` with values in [0, 1] on `[0, |S| - 1]`.
    pub fn with_susceptibility(params: InfectionParams, p: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let q = &params;
        ensure(q.num_states >= 2 && q.num_actions >= 2, || "need at least 2 states and 2 actions".into())?;
        ensure((0.0..=1.0).contains(&q.c_f), || format!("c_f must lie in [0, 1], got {}", q.c_f))?;
        ensure(q.k >= 0.0, || format!("k must be nonnegative, got {}", q.k))?;
        ensure(q.delta1 >= 0.0 && q.delta2 >= 0.0 && q.delta3 >= 0.0, || "reward weights must be nonnegative".into())?;
        ensure((0.0..=1.0).contains(&q.zeta), || format!("zeta must lie in [0, 1], got {}", q.zeta))?;
        ensure((0.0..1.0).contains(&q.gamma), || format!("gamma must lie in [0, 1), got {}", q.gamma))?;
        for s in 0..q.num_states {
            let v = p(s as f64);
            ensure((0.0..=1.0).contains(&v), || format!("p({s}) = {v} is not a probability"))?;
        }
        Ok(Self { params, susceptibility: Arc::new(p), clamped: AtomicBool::new(false) })
    }

    pub fn params(&self) -> &InfectionParams {
        &self.params
    }

    pub fn susceptibility(&self, s: f64) -> f64 {
        (self.susceptibility)(s)
    }

    /// `i_z = c_f p(mean state of z)`.
    pub fn intensity(&self, z: &MeanField) -> f64 {
        self.params.c_f * self.susceptibility(z.mean_state())
    }

    /// Reward before any clamping.
    pub fn raw_reward(&self, s: usize, a: usize, z: &MeanField) -> f64 {
        let q = &self.params;
        let immunity: f64 = z.probs().iter().enumerate().map(|(x, w)| w * (1.0 - self.susceptibility(x as f64))).sum();
        q.delta1 * (1.0 - self.susceptibility(s as f64)) + q.delta2 * immunity - q.delta3 * a as f64
    }

    /// Whether any reward evaluation so far had to be clamped into [-1, 1].
    pub fn clamping_fired(&self) -> bool {
        self.clamped.load(Ordering::Relaxed)
    }

    #[inline]
    fn clip(&self, s: usize) -> usize {
        s.min(self.params.num_states - 1)
    }

    fn add_regeneration(&self, s: usize, weight: f64, row: &mut [f64]) {
        match self.params.regeneration {
            Regeneration::BelowState => {
                row[0] += weight * (1.0 - W2_SPREAD);
                let each = weight * W2_SPREAD / (s + 1) as f64;
                for x in 0..=s {
                    row[self.clip(x)] += each;
                }
            }
            Regeneration::Uniform => {
                let each = weight / row.len() as f64;
                row.iter_mut().for_each(|r| *r += each);
            }
        }
    }
}

impl GameModel for Infection {
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
        let r = self.raw_reward(s, a, z);
        if r.abs() > 1.0 {
            self.clamped.store(true, Ordering::Relaxed);
            r.clamp(-1.0, 1.0)
        } else {
            r
        }
    }

    fn kernel(&self, s: usize, a: usize, z: &MeanField) -> Option<Vec<f64>> {
        let zeta = self.params.zeta;
        let i = self.intensity(z);
        let mut row = vec![0.0; self.params.num_states];
        let up = s + a;
        let infected = i * (1.0 - zeta);
        row[self.clip(up)] += (1.0 - i) * (1.0 - zeta) + infected * W1_ZERO;
        for w1 in 1..=3 {
            row[self.clip(up.saturating_sub(w1))] += infected * (1.0 - W1_ZERO) / 3.0;
        }
        self.add_regeneration(s, zeta, &mut row);
        Some(row)
    }

    fn sample_next(&self, s: usize, a: usize, z: &MeanField, rng: &mut dyn RngCore) -> usize {
        if rng.gen::<f64>() < self.params.zeta {
            return match self.params.regeneration {
                Regeneration::BelowState => {
                    if rng.gen::<f64>() < W2_SPREAD {
                        self.clip(rng.gen_range(0..=s))
                    } else {
                        0
                    }
                }
                Regeneration::Uniform => rng.gen_range(0..self.params.num_states),
            };
        }
        let up = s + a;
        if rng.gen::<f64>() < self.intensity(z) {
            let w1 = if rng.gen::<f64>() < W1_ZERO { 0 } else { rng.gen_range(1..=3) };
            self.clip(up.saturating_sub(w1))
        } else {
            self.clip(up)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{random_simplex, seeded};
    use approx::assert_abs_diff_eq;

    fn model(f: impl FnOnce(&mut InfectionParams)) -> Infection {
        let mut p = InfectionParams::default();
        f(&mut p);
        Infection::new(p).unwrap()
    }

    #[test]
    fn reward_examples() {
        let m = model(|_| {});
        assert_eq!(m.reward(0, 0, &MeanField::point_mass(25, 0)), 0.0);
        let cost = model(|p| {
            p.delta1 = 0.0;
            p.delta2 = 0.0;
        });
        assert_abs_diff_eq!(cost.reward(7, 2, &MeanField::uniform(25)), -0.02, epsilon = 1e-15);
        let top = m.reward(24, 0, &MeanField::point_mass(25, 24));
        assert_abs_diff_eq!(top, 1.2 * (1.0 - (-1.2f64).exp()), epsilon = 1e-12);
        assert_abs_diff_eq!(top, 0.8386, epsilon = 1e-4);
        assert!(!m.clamping_fired());
    }

    #[test]
    fn clamping_is_flagged() {
        let m = model(|p| p.delta1 = 3.0);
        assert_eq!(m.reward(24, 0, &MeanField::point_mass(25, 24)), 1.0);
        assert!(m.clamping_fired());
    }

    #[test]
    fn no_infection_no_regeneration_is_deterministic() {
        let m = model(|p| {
            p.zeta = 0.0;
            p.c_f = 0.0;
        });
        let z = MeanField::uniform(25);
        let mut rng = seeded(1);
        for (s, a) in [(0, 0), (5, 3), (23, 4)] {
            let row = m.kernel(s, a, &z).unwrap();
            let target = (s + a).min(24);
            assert_eq!(row[target], 1.0);
            for _ in 0..20 {
                assert_eq!(m.sample_next(s, a, &z, &mut rng), target);
            }
        }
    }

    #[test]
    fn certain_regeneration_is_w2_law() {
        let m = model(|p| p.zeta = 1.0);
        let z = MeanField::uniform(25);
        let row = m.kernel(4, 3, &z).unwrap();
        assert_abs_diff_eq!(row[0], 0.1 + 0.9 / 5.0, epsilon = 1e-15);
        for x in 1..=4 {
            assert_abs_diff_eq!(row[x], 0.9 / 5.0, epsilon = 1e-15);
        }
        assert!(row[5..].iter().all(|&p| p == 0.0));
        assert_eq!(m.kernel(4, 0, &z), Some(row));
    }

    #[test]
    fn kernel_matches_enumeration() {
        let m = model(|_| {});
        let z = MeanField::uniform(25);
        let (s, a) = (5usize, 1usize);
        let i = 0.1 * (-0.05f64 * 12.0).exp();
        let mut want = [0.0f64; 25];
        // (event, w1, w2) enumeration
        for w1 in 0..4usize {
            let pw = if w1 == 0 { 0.1 } else { 0.3 };
            want[(s + a).saturating_sub(w1)] += i * 0.9 * pw;
        }
        want[s + a] += (1.0 - i) * 0.9;
        want[0] += 0.1 * 0.1;
        for w2 in 0..=s {
            want[w2] += 0.1 * 0.9 / (s + 1) as f64;
        }
        let row = m.kernel(s, a, &z).unwrap();
        for x in 0..25 {
            assert_abs_diff_eq!(row[x], want[x], epsilon = 1e-15);
        }
    }

    #[test]
    fn rows_sum_to_one() {
        let mut rng = seeded(7);
        for regeneration in [Regeneration::BelowState, Regeneration::Uniform] {
            let m = model(|p| p.regeneration = regeneration);
            for _ in 0..100 {
                let z = random_simplex(25, &mut rng);
                for s in 0..25 {
                    for a in 0..5 {
                        let total: f64 = m.kernel(s, a, &z).unwrap().iter().sum();
                        assert!((total - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn sampler_matches_kernel() {
        let m = model(|_| {});
        let z = MeanField::uniform(25);
        let mut rng = seeded(11);
        for (s, a) in [(0, 0), (10, 2), (24, 4)] {
            let row = m.kernel(s, a, &z).unwrap();
            let mut counts = vec![0.0; 25];
            let n = 100_000;
            for _ in 0..n {
                counts[m.sample_next(s, a, &z, &mut rng)] += 1.0;
            }
            let tv: f64 = counts.iter().zip(&row).map(|(c, p)| (c / n as f64 - p).abs()).sum::<f64>() / 2.0;
            assert!(tv <= 0.01, "tv {tv} at ({s}, {a})");
        }
    }

    #[test]
    fn intensity_decreases_under_dominance() {
        let m = model(|_| {});
        let mut rng = seeded(2);
        for _ in 0..200 {
            let (low, high) = crate::base::random_ordered_pair(25, &mut rng);
            assert!(m.intensity(&high) <= m.intensity(&low));
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(Infection::new(InfectionParams { zeta: 1.5, ..Default::default() }).is_err());
        assert!(Infection::new(InfectionParams { gamma: 1.0, ..Default::default() }).is_err());
        assert!(Infection::new(InfectionParams { delta3: -0.1, ..Default::default() }).is_err());
        assert!(Infection::with_susceptibility(InfectionParams::default(), |s| 2.0 - s).is_err());
    }
}
