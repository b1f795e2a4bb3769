//! Concrete games and the strategic-complementarity checker.

pub mod infection;
pub mod ladder;
pub mod mturk;
pub mod verify;

pub use infection::{Infection, InfectionParams, Regeneration};
pub use ladder::Ladder;
pub use mturk::{MTurk, MTurkParams};
pub use verify::{ordered_pairs, verify_sc, Clause, ClauseResult, ScReport};
