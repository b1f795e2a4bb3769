//! The environment contract and the finite MDP obtained by freezing the mean
//! field.

use rand::Rng;
use rand::RngCore;

use crate::base::{MeanField, TremblingStrategy};
use crate::error::{ensure, MfgError, Result};

/// A stationary mean-field game on finite, integer-ordered states and actions.
///
/// Rewards must satisfy `|r| <= 1`. Sampler-only models return `None` from
/// [`GameModel::kernel`] and `false` from [`GameModel::has_exact_kernel`].
pub trait GameModel: Send + Sync {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn gamma(&self) -> f64;
    fn reward(&self, s: usize, a: usize, z: &MeanField) -> f64;

    fn has_exact_kernel(&self) -> bool {
        true
    }

    /// Exact law of the next state.
    fn kernel(&self, s: usize, a: usize, z: &MeanField) -> Option<Vec<f64>>;

    fn sample_next(&self, s: usize, a: usize, z: &MeanField, rng: &mut dyn RngCore) -> usize;
}

/// Inverse-CDF draw from a probability row.
pub fn sample_row<R: RngCore + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

/// Dense next-state probabilities for every `(s, a)` under one mean field.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl KernelTable {
    pub fn from_rows(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        let expected = num_states * num_actions * num_states;
        if probs.len() != expected {
            return Err(MfgError::DimensionMismatch { left: probs.len(), right: expected });
        }
        let table = Self { num_states, num_actions, probs };
        for s in 0..num_states {
            for a in 0..num_actions {
                let row = table.row(s, a);
                let total: f64 = row.iter().sum();
                if row.iter().any(|p| !(*p >= -1e-12)) || (total - 1.0).abs() > 1e-9 {
                    return Err(MfgError::InvalidDistribution(format!("kernel row ({s}, {a}) sums to {total}")));
                }
            }
        }
        Ok(table)
    }

    /// Exact kernel of `model` at mean field `z`.
    pub fn exact<M: GameModel + ?Sized>(model: &M, z: &MeanField) -> Result<Self> {
        if !model.has_exact_kernel() {
            return Err(MfgError::NoExactKernel);
        }
        let (ns, na) = (model.num_states(), model.num_actions());
        let mut probs = Vec::with_capacity(ns * na * ns);
        for s in 0..ns {
            for a in 0..na {
                let row = model.kernel(s, a, z).ok_or(MfgError::NoExactKernel)?;
                if row.len() != ns {
                    return Err(MfgError::DimensionMismatch { left: row.len(), right: ns });
                }
                probs.extend(row);
            }
        }
        Self::from_rows(ns, na, probs)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.probs[start..start + self.num_states]
    }

    /// State-to-state kernel `P_μ(s'|s) = Σ_a μ(s,a) P(s'|s,a)` as one row per `s`.
    pub fn under_strategy(&self, mu: &TremblingStrategy) -> Vec<Vec<f64>> {
        (0..self.num_states)
            .map(|s| {
                let mut out = vec![0.0; self.num_states];
                for a in 0..self.num_actions {
                    let w = mu.prob(s, a);
                    for (o, p) in out.iter_mut().zip(self.row(s, a)) {
                        *o += w * p;
                    }
                }
                out
            })
            .collect()
    }

    /// One-step push-forward `z'(s') = Σ_s Σ_a z(s) μ(s,a) P(s'|s,a)`.
    pub fn push_forward(&self, z: &MeanField, mu: &TremblingStrategy) -> Result<MeanField> {
        if z.len() != self.num_states {
            return Err(MfgError::DimensionMismatch { left: z.len(), right: self.num_states });
        }
        if mu.num_states() != self.num_states || mu.num_actions() != self.num_actions {
            return Err(MfgError::DimensionMismatch { left: mu.num_states(), right: self.num_states });
        }
        let mut next = vec![0.0; self.num_states];
        for s in 0..self.num_states {
            let zs = z.prob(s);
            if zs == 0.0 {
                continue;
            }
            for a in 0..self.num_actions {
                let w = zs * mu.prob(s, a);
                for (n, p) in next.iter_mut().zip(self.row(s, a)) {
                    *n += w * p;
                }
            }
        }
        MeanField::new(next)
    }
}

/// The finite MDP an individual agent faces when the mean field is held fixed:
/// a reward table, a kernel (exact or estimated) and the discount.
#[derive(Debug, Clone)]
pub struct InducedMdp {
    pub(crate) num_states: usize,
    pub(crate) num_actions: usize,
    pub(crate) gamma: f64,
    pub(crate) rewards: Vec<f64>,
    pub(crate) kernel: KernelTable,
}

impl InducedMdp {
    pub fn exact<M: GameModel + ?Sized>(model: &M, z: &MeanField) -> Result<Self> {
        let kernel = KernelTable::exact(model, z)?;
        Self::with_kernel(model, z, kernel)
    }

    /// Rewards from `model` at `z`, transitions from a supplied kernel.
    pub fn with_kernel<M: GameModel + ?Sized>(model: &M, z: &MeanField, kernel: KernelTable) -> Result<Self> {
        if kernel.num_states() != model.num_states() || kernel.num_actions() != model.num_actions() {
            return Err(MfgError::DimensionMismatch { left: kernel.num_states(), right: model.num_states() });
        }
        Ok(Self {
            num_states: model.num_states(),
            num_actions: model.num_actions(),
            gamma: model.gamma(),
            rewards: reward_table(model, z),
            kernel,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.num_actions + a]
    }

    pub fn kernel(&self) -> &KernelTable {
        &self.kernel
    }
}

/// `r(s, a, z)` for every pair, row-major by state.
pub fn reward_table<M: GameModel + ?Sized>(model: &M, z: &MeanField) -> Vec<f64> {
    let (ns, na) = (model.num_states(), model.num_actions());
    let mut out = Vec::with_capacity(ns * na);
    for s in 0..ns {
        for a in 0..na {
            out.push(model.reward(s, a, z));
        }
    }
    out
}

type RewardFn = dyn Fn(usize, usize, &MeanField) -> f64 + Send + Sync;
type KernelFn = dyn Fn(usize, usize, &MeanField) -> Vec<f64> + Send + Sync;

/// A game given by closures, for crafted instances and tests.
pub struct FnGame {
    num_states: usize,
    num_actions: usize,
    gamma: f64,
    reward: Box<RewardFn>,
    kernel: Box<KernelFn>,
}

impl FnGame {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        gamma: f64,
        reward: impl Fn(usize, usize, &MeanField) -> f64 + Send + Sync + 'static,
        kernel: impl Fn(usize, usize, &MeanField) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        ensure(num_states >= 1, || "need at least one state".into())?;
        ensure(num_actions >= 1, || "need at least one action".into())?;
        ensure((0.0..1.0).contains(&gamma), || format!("gamma must lie in [0, 1), got {gamma}"))?;
        Ok(Self { num_states, num_actions, gamma, reward: Box::new(reward), kernel: Box::new(kernel) })
    }
}

impl GameModel for FnGame {
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
        (self.reward)(s, a, z)
    }
    fn kernel(&self, s: usize, a: usize, z: &MeanField) -> Option<Vec<f64>> {
        Some((self.kernel)(s, a, z))
    }
    fn sample_next(&self, s: usize, a: usize, z: &MeanField, rng: &mut dyn RngCore) -> usize {
        sample_row(&(self.kernel)(s, a, z), rng)
    }
}

/// Hides the exact kernel of a model, leaving only its sampler.
pub struct SamplerOnly<M>(pub M);

impl<M: GameModel> GameModel for SamplerOnly<M> {
    fn num_states(&self) -> usize {
        self.0.num_states()
    }
    fn num_actions(&self) -> usize {
        self.0.num_actions()
    }
    fn gamma(&self) -> f64 {
        self.0.gamma()
    }
    fn reward(&self, s: usize, a: usize, z: &MeanField) -> f64 {
        self.0.reward(s, a, z)
    }
    fn has_exact_kernel(&self) -> bool {
        false
    }
    fn kernel(&self, _: usize, _: usize, _: &MeanField) -> Option<Vec<f64>> {
        None
    }
    fn sample_next(&self, s: usize, a: usize, z: &MeanField, rng: &mut dyn RngCore) -> usize {
        self.0.sample_next(s, a, z, rng)
    }
}

impl<M: GameModel + ?Sized> GameModel for Box<M> {
    fn num_states(&self) -> usize {
        (**self).num_states()
    }
    fn num_actions(&self) -> usize {
        (**self).num_actions()
    }
    fn gamma(&self) -> f64 {
        (**self).gamma()
    }
    fn reward(&self, s: usize, a: usize, z: &MeanField) -> f64 {
        (**self).reward(s, a, z)
    }
    fn has_exact_kernel(&self) -> bool {
        (**self).has_exact_kernel()
    }
    fn kernel(&self, s: usize, a: usize, z: &MeanField) -> Option<Vec<f64>> {
        (**self).kernel(s, a, z)
    }
    fn sample_next(&self, s: usize, a: usize, z: &MeanField, rng: &mut dyn RngCore) -> usize {
        (**self).sample_next(s, a, z, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::seeded;

    #[test]
    fn sample_row_respects_support() {
        let mut rng = seeded(2);
        let row = [0.0, 0.25, 0.0, 0.75];
        let mut counts = [0usize; 4];
        for _ in 0..40_000 {
            counts[sample_row(&row, &mut rng)] += 1;
        }
        assert_eq!(counts[0] + counts[2], 0);
        assert!((counts[1] as f64 / 40_000.0 - 0.25).abs() < 0.01);
    }

    #[test]
    fn sampler_only_has_no_kernel() {
        let g = FnGame::new(2, 2, 0.5, |_, _, _| 0.0, |s, _, _| if s == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] }).unwrap();
        let z = MeanField::uniform(2);
        assert!(KernelTable::exact(&g, &z).is_ok());
        let hidden = SamplerOnly(g);
        assert_eq!(KernelTable::exact(&hidden, &z), Err(MfgError::NoExactKernel));
        let mut rng = seeded(0);
        assert_eq!(hidden.sample_next(1, 0, &z, &mut rng), 1);
    }

    #[test]
    fn kernel_rows_are_validated() {
        assert!(KernelTable::from_rows(2, 1, vec![0.5, 0.5, 0.2, 0.2]).is_err());
        assert!(KernelTable::from_rows(2, 1, vec![0.5, 0.5]).is_err());
    }
}
