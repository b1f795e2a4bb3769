//! Trembling-hand mean-field equilibrium computation for stationary
//! mean-field games on ordered finite state and action spaces.

pub mod base;
pub mod complexity;
pub mod dynamics;
pub mod envs;
pub mod error;
pub mod model;
pub mod solvers;
pub mod tq;

pub use base::{MeanField, QTable, RunRecord, SimRng, TremblingStrategy};
pub use error::{MfgError, Result};
pub use model::{FnGame, GameModel, InducedMdp, KernelTable, SamplerOnly};
