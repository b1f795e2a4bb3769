//! Trembling-hand value machinery: the ε-greedy strategy map, the aggregator
//! `G`, the TQ-value operator, TQ-value iteration and TQ-learning.
//!
//! For a value table `Q` the trembling strategy plays the greedy action (ties
//! to the largest index) with probability `1 - ε` and every other action with
//! `ε / (|A| - 1)`. The aggregator is the value of that strategy,
//!
//! ```text
//! G(Q)(s) = Σ_a π^ε_Q(s, a) Q(s, a)
//! ```
//!
//! and the TQ-value operator for a frozen mean field `z` is
//!
//! ```text
//! F_z(Q)(s, a) = r(s, a, z) + γ Σ_s' P(s' | s, a, z) G(Q)(s')
//! ```
//!
//! which is a γ-contraction in the sup norm.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::base::table::{greedy_index, sample_trembling, validate_trembling};
use crate::base::{MeanField, QTable, TremblingStrategy};
use crate::error::{ensure, MfgError, Result};
use crate::model::{reward_table, GameModel, InducedMdp};

pub const DEFAULT_VI_TOL: f64 = 1e-10;
pub const DEFAULT_LEARNING_RESIDUAL: f64 = 1e-4;
pub const DEFAULT_W: f64 = 0.7;

pub fn trembling_policy(q: &QTable, epsilon: f64) -> Result<TremblingStrategy> {
    validate_trembling(q.num_actions(), epsilon)?;
    let greedy = (0..q.num_states()).map(|s| q.greedy_action(s)).collect();
    TremblingStrategy::new(q.num_actions(), epsilon, greedy)
}

pub fn g_value(q: &QTable, epsilon: f64, s: usize) -> Result<f64> {
    validate_trembling(q.num_actions(), epsilon)?;
    ensure(s < q.num_states(), || format!("state {s} out of range"))?;
    Ok(g_row(q.row(s), epsilon))
}

#[inline]
pub(crate) fn g_row(row: &[f64], epsilon: f64) -> f64 {
    let best = greedy_index(row);
    let rest: f64 = row.iter().sum::<f64>() - row[best];
    (1.0 - epsilon) * row[best] + epsilon / (row.len() - 1) as f64 * rest
}

fn g_all(q: &QTable, epsilon: f64) -> Vec<f64> {
    (0..q.num_states()).map(|s| g_row(q.row(s), epsilon)).collect()
}

/// Applies the TQ-value operator `F_z` once; the model must expose its kernel.
pub fn tq_operator<M: GameModel + ?Sized>(model: &M, z: &MeanField, q: &QTable, epsilon: f64) -> Result<QTable> {
    validate_trembling(model.num_actions(), epsilon)?;
    let mdp = InducedMdp::exact(model, z)?;
    mdp.check_table(q)?;
    Ok(mdp.apply_tq(q, epsilon))
}

/// Outcome of TQ-value iteration.
#[derive(Debug, Clone)]
pub struct ValueIteration {
    pub q: QTable,
    pub iterations: usize,
    /// `‖Q_{m+1} - Q_m‖∞` for every sweep.
    pub residuals: Vec<f64>,
}

impl InducedMdp {
    fn check_table(&self, q: &QTable) -> Result<()> {
        if q.num_states() != self.num_states || q.num_actions() != self.num_actions {
            return Err(MfgError::DimensionMismatch { left: q.num_states() * q.num_actions(), right: self.num_states * self.num_actions });
        }
        Ok(())
    }

    pub(crate) fn apply_tq_into(&self, q: &QTable, epsilon: f64, out: &mut QTable) {
        let g = g_all(q, epsilon);
        let na = self.num_actions;
        let values = out.values_mut();
        for s in 0..self.num_states {
            for a in 0..na {
                let cont: f64 = self.kernel.row(s, a).iter().zip(&g).map(|(p, v)| p * v).sum();
                values[s * na + a] = self.rewards[s * na + a] + self.gamma * cont;
            }
        }
    }

    /// `F_z(Q)` on this frozen model.
    pub fn apply_tq(&self, q: &QTable, epsilon: f64) -> QTable {
        let mut out = QTable::zeros(self.num_states, self.num_actions);
        self.apply_tq_into(q, epsilon, &mut out);
        out
    }

    /// Iterates `F_z` from `init` (zeros when absent) until the returned table
    /// is provably within `tol` of the fixed point in the sup norm, i.e. until
    /// `γ/(1-γ) ‖Q_{m+1} - Q_m‖∞ <= tol`.
    pub fn value_iteration(&self, epsilon: f64, tol: f64, max_iters: usize, init: Option<&QTable>) -> Result<ValueIteration> {
        validate_trembling(self.num_actions, epsilon)?;
        ensure(tol > 0.0, || format!("tolerance must be positive, got {tol}"))?;
        let mut q = match init {
            Some(q0) => {
                self.check_table(q0)?;
                q0.clone()
            }
            None => QTable::zeros(self.num_states, self.num_actions),
        };
        let mut next = q.clone();
        let mut residuals = Vec::new();
        let factor = self.gamma / (1.0 - self.gamma);
        for m in 1..=max_iters {
            self.apply_tq_into(&q, epsilon, &mut next);
            let residual = next.sup_distance(&q)?;
            residuals.push(residual);
            std::mem::swap(&mut q, &mut next);
            if factor * residual <= tol {
                return Ok(ValueIteration { q, iterations: m, residuals });
            }
        }
        Err(MfgError::NotConverged { iterations: max_iters, residual: residuals.last().copied().unwrap_or(f64::INFINITY) })
    }
}

/// TQ-value iteration for the exact model at mean field `z`, started from zero.
pub fn tq_value_iteration<M: GameModel + ?Sized>(model: &M, z: &MeanField, epsilon: f64, tol: f64, max_iters: usize) -> Result<ValueIteration> {
    InducedMdp::exact(model, z)?.value_iteration(epsilon, tol, max_iters, None)
}

/// Step-size schedule indexed by the visit count `n` of the updated pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum LearningRate {
    /// `α = 1 / (n + 1)^w` with `w ∈ (1/2, 1)`.
    Polynomial { w: f64 },
    Constant { alpha: f64 },
}

impl Default for LearningRate {
    fn default() -> Self {
        LearningRate::Polynomial { w: DEFAULT_W }
    }
}

impl LearningRate {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LearningRate::Polynomial { w } => ensure(w > 0.5 && w < 1.0, || format!("w must lie in (1/2, 1), got {w}")),
            LearningRate::Constant { alpha } => ensure(alpha > 0.0 && alpha <= 1.0, || format!("alpha must lie in (0, 1], got {alpha}")),
        }
    }

    #[inline]
    pub fn alpha(&self, visits: u64) -> f64 {
        match *self {
            LearningRate::Polynomial { w } => ((visits + 1) as f64).powf(-w),
            LearningRate::Constant { alpha } => alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

/// One asynchronous TQ-learning update of the visited entry; returns its new value.
pub fn tq_learning_step(q: &mut QTable, t: Transition, visits: u64, rate: LearningRate, epsilon: f64, gamma: f64) -> Result<f64> {
    rate.validate()?;
    validate_trembling(q.num_actions(), epsilon)?;
    ensure(t.state < q.num_states() && t.next_state < q.num_states() && t.action < q.num_actions(), || "transition out of range".into())?;
    Ok(step_unchecked(q, t, rate.alpha(visits), epsilon, gamma))
}

#[inline]
fn step_unchecked(q: &mut QTable, t: Transition, alpha: f64, epsilon: f64, gamma: f64) -> f64 {
    let target = t.reward + gamma * g_row(q.row(t.next_state), epsilon);
    let old = q.get(t.state, t.action);
    let new = (1.0 - alpha) * old + alpha * target;
    q.set(t.state, t.action, new);
    new
}

/// A Q-table together with the per-pair visit counts that drive its step sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct TqLearner {
    pub q: QTable,
    pub visits: Vec<u64>,
}

impl TqLearner {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self::from_q(QTable::zeros(num_states, num_actions))
    }

    /// Warm start from a table with fresh visit counts.
    pub fn from_q(q: QTable) -> Self {
        let n = q.num_states() * q.num_actions();
        Self { q, visits: vec![0; n] }
    }

    pub fn reset_visits(&mut self) {
        self.visits.iter_mut().for_each(|v| *v = 0);
    }

    #[inline]
    pub fn visits(&self, s: usize, a: usize) -> u64 {
        self.visits[s * self.q.num_actions() + a]
    }

    /// Applies one asynchronous update and bumps the visit count.
    #[inline]
    pub fn update(&mut self, t: Transition, rate: LearningRate, epsilon: f64, gamma: f64) -> f64 {
        let idx = t.state * self.q.num_actions() + t.action;
        let alpha = rate.alpha(self.visits[idx]);
        self.visits[idx] += 1;
        step_unchecked(&mut self.q, t, alpha, epsilon, gamma)
    }

    /// Greedy action of the current table at `s`, ties to the largest index.
    #[inline]
    pub fn act<R: RngCore + ?Sized>(&self, s: usize, epsilon: f64, rng: &mut R) -> usize {
        sample_trembling(self.q.greedy_action(s), self.q.num_actions(), epsilon, rng)
    }
}

/// When an asynchronous TQ-learning run stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub max_steps: u64,
    /// Stop once a block of `|S||A|` consecutive updates moves the table by
    /// less than this amount in the sup norm.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LearningOutcome {
    pub learner: TqLearner,
    pub steps: u64,
    /// `false` when the step budget ran out first.
    pub stopped_on_residual: bool,
    pub last_residual: Option<f64>,
    pub final_state: usize,
}

/// Asynchronous TQ-learning along a single trajectory with the mean field held
/// fixed at `z`. The behaviour policy is the trembling strategy of the current
/// table, re-derived after every update.
pub fn tq_learning_run<M: GameModel + ?Sized>(
    model: &M,
    z: &MeanField,
    epsilon: f64,
    rate: LearningRate,
    stop: StopRule,
    warm_start: Option<TqLearner>,
    rng: &mut dyn RngCore,
) -> Result<LearningOutcome> {
    tq_learning_from(model, z, epsilon, rate, stop, warm_start, None, rng)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn tq_learning_from<M: GameModel + ?Sized>(
    model: &M,
    z: &MeanField,
    epsilon: f64,
    rate: LearningRate,
    stop: StopRule,
    warm_start: Option<TqLearner>,
    start_state: Option<usize>,
    rng: &mut dyn RngCore,
) -> Result<LearningOutcome> {
    let (ns, na) = (model.num_states(), model.num_actions());
    validate_trembling(na, epsilon)?;
    rate.validate()?;
    if z.len() != ns {
        return Err(MfgError::DimensionMismatch { left: z.len(), right: ns });
    }
    let mut learner = match warm_start {
        Some(l) => {
            if l.q.num_states() != ns || l.q.num_actions() != na {
                return Err(MfgError::DimensionMismatch { left: l.q.num_states(), right: ns });
            }
            l
        }
        None => TqLearner::zeros(ns, na),
    };
    let rewards = reward_table(model, z);
    let gamma = model.gamma();
    let block = (ns * na) as u64;
    let mut snapshot = learner.q.clone();
    let mut last_residual = None;
    let mut s = start_state.unwrap_or_else(|| z.sample(rng));

    for step in 1..=stop.max_steps {
        let a = learner.act(s, epsilon, rng);
        let next = model.sample_next(s, a, z, rng);
        learner.update(Transition { state: s, action: a, reward: rewards[s * na + a], next_state: next }, rate, epsilon, gamma);
        s = next;
        if let Some(threshold) = stop.residual {
            if step % block == 0 {
                let residual = learner.q.sup_distance(&snapshot)?;
                last_residual = Some(residual);
                if residual < threshold {
                    return Ok(LearningOutcome { learner, steps: step, stopped_on_residual: true, last_residual, final_state: s });
                }
                snapshot.clone_from(&learner.q);
            }
        }
    }
    Ok(LearningOutcome { learner, steps: stop.max_steps, stopped_on_residual: false, last_residual, final_state: s })
}

/// Transitions collected in one round, grouped by `(s, a)`.
#[derive(Debug, Clone)]
pub struct TransitionBuffer {
    num_states: usize,
    num_actions: usize,
    counts: Vec<u32>,
    reward_sums: Vec<f64>,
    /// Sparse next-state histogram per pair.
    next: Vec<Vec<(u32, u32)>>,
    len: usize,
}

impl TransitionBuffer {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        let n = num_states * num_actions;
        Self { num_states, num_actions, counts: vec![0; n], reward_sums: vec![0.0; n], next: vec![Vec::new(); n], len: 0 }
    }

    pub fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
        self.reward_sums.iter_mut().for_each(|r| *r = 0.0);
        self.next.iter_mut().for_each(Vec::clear);
        self.len = 0;
    }

    pub fn push(&mut self, t: Transition) {
        let idx = t.state * self.num_actions + t.action;
        self.counts[idx] += 1;
        self.reward_sums[idx] += t.reward;
        let hist = &mut self.next[idx];
        match hist.iter_mut().find(|(s, _)| *s as usize == t.next_state) {
            Some(entry) => entry.1 += 1,
            None => hist.push((t.next_state as u32, 1)),
        }
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count(&self, s: usize, a: usize) -> u32 {
        self.counts[s * self.num_actions + a]
    }

    pub fn uncovered(&self) -> Vec<(usize, usize)> {
        (0..self.num_states)
            .flat_map(|s| (0..self.num_actions).map(move |a| (s, a)))
            .filter(|&(s, a)| self.count(s, a) == 0)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncOutcome {
    /// Pairs without samples, left untouched.
    pub uncovered: Vec<(usize, usize)>,
    /// `‖ΔQ‖∞` of the final pass.
    pub last_change: f64,
}

/// Synchronous TQ-learning on a buffer: every covered pair is updated once per
/// pass toward its averaged sample target `r̄(s,a) + γ · mean_s' G(Q)(s')`,
/// with all targets of a pass read from the same table.
///
/// With `require_coverage` a pair without samples is an error; otherwise such
/// pairs keep their values and are reported.
#[allow(clippy::too_many_arguments)]
pub fn sync_tq_learning(
    buffer: &TransitionBuffer,
    learner: &mut TqLearner,
    rate: LearningRate,
    epsilon: f64,
    gamma: f64,
    passes: usize,
    require_coverage: bool,
) -> Result<SyncOutcome> {
    rate.validate()?;
    validate_trembling(learner.q.num_actions(), epsilon)?;
    if learner.q.num_states() != buffer.num_states || learner.q.num_actions() != buffer.num_actions {
        return Err(MfgError::DimensionMismatch { left: learner.q.num_states(), right: buffer.num_states });
    }
    let uncovered = buffer.uncovered();
    if require_coverage && !uncovered.is_empty() {
        return Err(MfgError::UncoveredPairs(uncovered));
    }
    let na = buffer.num_actions;
    let covered: Vec<usize> = (0..buffer.counts.len()).filter(|&i| buffer.counts[i] > 0).collect();
    let mean_rewards: Vec<f64> = covered.iter().map(|&i| buffer.reward_sums[i] / buffer.counts[i] as f64).collect();
    let mut last_change = 0.0;
    let mut targets = vec![0.0; covered.len()];
    for _ in 0..passes {
        let g = g_all(&learner.q, epsilon);
        for (k, &i) in covered.iter().enumerate() {
            let n = buffer.counts[i] as f64;
            let cont: f64 = buffer.next[i].iter().map(|&(s, c)| c as f64 * g[s as usize]).sum::<f64>() / n;
            targets[k] = mean_rewards[k] + gamma * cont;
        }
        last_change = 0.0f64;
        for (k, &i) in covered.iter().enumerate() {
            let alpha = rate.alpha(learner.visits[i]);
            learner.visits[i] += 1;
            let (s, a) = (i / na, i % na);
            let old = learner.q.get(s, a);
            let new = (1.0 - alpha) * old + alpha * targets[k];
            learner.q.set(s, a, new);
            last_change = last_change.max((new - old).abs());
        }
    }
    Ok(SyncOutcome { uncovered, last_change })
}
