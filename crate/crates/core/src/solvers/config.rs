use serde::{Deserialize, Serialize};

use crate::base::MeanField;
use crate::dynamics::{NextMfConfig, DEFAULT_EPS2, DEFAULT_MAX_SAMPLES};
use crate::error::{ensure, MfgError, Result};
use crate::tq::{LearningRate, DEFAULT_VI_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Tbr,
    Tmfq,
    Gmbl,
    Online,
    Iql,
    Mfq,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [Algorithm::Tbr, Algorithm::Tmfq, Algorithm::Gmbl, Algorithm::Online, Algorithm::Iql, Algorithm::Mfq];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Tbr => "tbr",
            Algorithm::Tmfq => "tmfq",
            Algorithm::Gmbl => "gmbl",
            Algorithm::Online => "online",
            Algorithm::Iql => "iql",
            Algorithm::Mfq => "mfq",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    /// Whether the algorithm needs the exact kernel.
    pub fn is_exact(self) -> bool {
        self == Algorithm::Tbr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialField {
    /// Point mass at state 0, the least element under stochastic dominance.
    #[default]
    Lowest,
    Uniform,
}

impl InitialField {
    pub fn build(self, num_states: usize) -> MeanField {
        match self {
            InitialField::Lowest => MeanField::point_mass(num_states, 0),
            InitialField::Uniform => MeanField::uniform(num_states),
        }
    }
}

/// How the online solver's visit counts behave between rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BufferVisits {
    /// Counts accumulate over rounds, so step sizes keep decaying.
    #[default]
    Persist,
    /// Counts restart every round.
    Reset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub seed: u64,
    /// Trembling probability ε.
    pub epsilon: f64,
    /// Outer iterations (rounds for population methods).
    pub outer_iters: usize,
    /// Stop when `‖z_{k+1} - z_k‖₁` is at most this; defaults to 1e-6 for
    /// T-BR and 1e-3 for sampled solvers.
    pub tol: Option<f64>,
    pub initial: InitialField,

    pub vi_tol: f64,
    pub vi_max_iters: usize,

    pub rate: LearningRate,
    /// TQ-learning steps per outer iteration.
    pub learning_steps: u64,
    /// Early stop for the inner TQ-learning run.
    pub learning_residual: Option<f64>,

    pub eps2: f64,
    /// Defaults to `10 |S|`.
    pub min_samples: Option<u64>,
    pub max_samples: u64,

    pub n0: usize,

    pub agents: usize,
    /// Step sizes for synchronous learning on the online solver's buffer.
    /// Counts advance once per pass, so this decays faster than `rate`.
    pub sync_rate: LearningRate,
    pub sync_passes: usize,
    pub buffer_visits: BufferVisits,
    /// Extra per-step probability that an agent is replaced by a uniformly
    /// drawn newcomer, on top of any regeneration inside the model.
    pub regeneration: f64,

    pub subset_size: usize,
    /// Mean-state buckets for the MFQ baseline; defaults to `⌈|S| / 5⌉`.
    pub buckets: Option<usize>,

    /// Explicit initial field; overrides `initial` when present.
    #[serde(skip)]
    pub start: Option<MeanField>,
    /// Reference mean field for the `l1_to_ref` trace column.
    #[serde(skip)]
    pub reference: Option<MeanField>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            epsilon: 0.3,
            outer_iters: 500,
            tol: None,
            initial: InitialField::Lowest,
            vi_tol: DEFAULT_VI_TOL,
            vi_max_iters: 100_000,
            rate: LearningRate::default(),
            learning_steps: 1000,
            learning_residual: None,
            eps2: DEFAULT_EPS2,
            min_samples: None,
            max_samples: DEFAULT_MAX_SAMPLES,
            n0: 500,
            agents: 1000,
            sync_rate: LearningRate::Polynomial { w: DEFAULT_SYNC_W },
            sync_passes: 200,
            buffer_visits: BufferVisits::Persist,
            regeneration: 0.0,
            subset_size: 512,
            buckets: None,
            start: None,
            reference: None,
        }
    }
}

pub const DEFAULT_SYNC_W: f64 = 0.9;
pub const EXACT_TOL: f64 = 1e-6;
pub const SAMPLED_TOL: f64 = 1e-3;

impl SolverConfig {
    pub fn tol_for(&self, algorithm: Algorithm) -> f64 {
        self.tol.unwrap_or(if algorithm.is_exact() { EXACT_TOL } else { SAMPLED_TOL })
    }

    pub fn initial_field(&self, num_states: usize) -> Result<MeanField> {
        match &self.start {
            Some(z) if z.len() != num_states => Err(MfgError::DimensionMismatch { left: z.len(), right: num_states }),
            Some(z) => Ok(z.clone()),
            None => Ok(self.initial.build(num_states)),
        }
    }

    pub fn next_mf(&self, num_states: usize) -> NextMfConfig {
        NextMfConfig { eps2: self.eps2, min_samples: self.min_samples.unwrap_or(10 * num_states as u64), max_samples: self.max_samples }
    }

    pub fn buckets_for(&self, num_states: usize) -> usize {
        self.buckets.unwrap_or(num_states.div_ceil(5))
    }

    pub fn validate(&self, num_actions: usize) -> Result<()> {
        let cap = (num_actions - 1) as f64 / num_actions as f64;
        ensure(self.epsilon > 0.0 && self.epsilon < cap, || format!("epsilon must lie in (0, {cap}), got {}", self.epsilon))?;
        ensure(self.outer_iters >= 1, || "outer_iters must be positive".into())?;
        ensure(self.tol.is_none_or(|t| t > 0.0), || "tol must be positive".into())?;
        ensure(self.vi_tol > 0.0 && self.vi_max_iters >= 1, || "value-iteration budget must be positive".into())?;
        self.rate.validate()?;
        self.sync_rate.validate()?;
        ensure(self.learning_steps >= 1, || "learning_steps must be positive".into())?;
        ensure(self.learning_residual.is_none_or(|r| r > 0.0), || "learning_residual must be positive".into())?;
        ensure(self.eps2 > 0.0, || "eps2 must be positive".into())?;
        ensure(self.n0 >= 1, || "n0 must be at least 1".into())?;
        ensure(self.agents >= 1, || "agents must be at least 1".into())?;
        ensure(self.sync_passes >= 1, || "sync_passes must be positive".into())?;
        ensure((0.0..=1.0).contains(&self.regeneration), || format!("regeneration must lie in [0, 1], got {}", self.regeneration))?;
        ensure(self.subset_size >= 1, || "subset_size must be positive".into())?;
        ensure(self.buckets.is_none_or(|b| b >= 1), || "buckets must be positive".into())
    }
}
