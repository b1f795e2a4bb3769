use crate::base::{MeanField, QTable, RunRecord, TremblingStrategy};
use crate::dynamics::mckean_vlasov;
use crate::error::Result;
use crate::model::GameModel;
use crate::tq::{trembling_policy, tq_value_iteration};

use super::config::Algorithm;

/// Outcome of one solver run.
///
/// For the equilibrium solvers `strategy` was computed against `final_field`,
/// and the trace ends with the field that strategy induces. Population
/// baselines keep one table per agent; they report no strategy, and `q` is
/// the agents' average table (at the final mean-state bucket for MFQ).
#[derive(Debug, Clone)]
pub struct SolverResult {
    pub algorithm: Algorithm,
    pub final_field: MeanField,
    pub strategy: Option<TremblingStrategy>,
    pub q: Option<QTable>,
    pub trace: Vec<RunRecord>,
    pub converged: bool,
    pub samples_used: u64,
    pub warnings: Vec<String>,
}

impl SolverResult {
    pub fn final_mean_state(&self) -> f64 {
        self.final_field.mean_state()
    }

    pub fn final_l1_to_reference(&self) -> Option<f64> {
        self.trace.last().and_then(|r| r.l1_to_reference)
    }
}

/// Checks a candidate equilibrium against the exact model.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// `‖Φ(z, μ) - z‖₁`.
    pub consistency: f64,
    /// Whether μ is the trembling strategy of the exact TQ fixed point at `z`.
    pub optimal: bool,
}

pub fn certify<M: GameModel + ?Sized>(model: &M, z: &MeanField, mu: &TremblingStrategy, vi_tol: f64) -> Result<Certificate> {
    let consistency = mckean_vlasov(model, z, mu)?.l1_distance(z)?;
    let q = tq_value_iteration(model, z, mu.epsilon(), vi_tol, 1_000_000)?.q;
    let best = trembling_policy(&q, mu.epsilon())?;
    // ties within the value-iteration tolerance may resolve either way
    let optimal = (0..z.len()).all(|s| {
        let chosen = mu.greedy_action(s);
        chosen == best.greedy_action(s) || q.get(s, chosen) >= q.get(s, best.greedy_action(s)) - 10.0 * vi_tol
    });
    Ok(Certificate { consistency, optimal })
}
