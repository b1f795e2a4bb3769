//! Distributions, strategies, value tables and the ordering utilities the
//! solvers share.

pub mod field;
pub mod record;
pub mod rng;
pub mod table;

pub use field::{random_ordered_pair, random_simplex, random_sparse, MeanField};
pub use record::RunRecord;
pub use rng::{derive_seed, seeded, stream, SimRng};
pub use table::{QTable, TremblingStrategy};
