//! Equilibrium solvers and population baselines. Every solver returns a
//! [`SolverResult`] whose trace starts with the initial field at `k = 0`.

pub mod config;
pub mod exact;
pub mod online;
pub mod population;
pub mod result;
pub mod tmfq;

pub use config::{Algorithm, BufferVisits, InitialField, SolverConfig, DEFAULT_SYNC_W, EXACT_TOL, SAMPLED_TOL};
pub use exact::{gmbl_run, tbr_run};
pub use online::online_tmfq_run;
pub use population::{iql_run, mfq_run};
pub use result::{certify, Certificate, SolverResult};
pub use tmfq::tmfq_run;

use crate::base::{MeanField, QTable, RunRecord, TremblingStrategy};
use crate::error::Result;
use crate::model::GameModel;

/// Runs `algorithm` on `model`.
pub fn run<M: GameModel + ?Sized>(algorithm: Algorithm, model: &M, cfg: &SolverConfig) -> Result<SolverResult> {
    match algorithm {
        Algorithm::Tbr => tbr_run(model, cfg),
        Algorithm::Tmfq => tmfq_run(model, cfg),
        Algorithm::Gmbl => gmbl_run(model, cfg),
        Algorithm::Online => online_tmfq_run(model, cfg),
        Algorithm::Iql => iql_run(model, cfg),
        Algorithm::Mfq => mfq_run(model, cfg),
    }
}

/// Smallest `k` such that every record from `k` on lies within `eps_bar` of
/// `z_star` in L1, or `None` if the last record is outside.
pub fn detect_k0(trace: &[RunRecord], z_star: &MeanField, eps_bar: f64) -> Result<Option<usize>> {
    let mut first_inside = None;
    for record in trace.iter().rev() {
        if record.mean_field.l1_distance(z_star)? > eps_bar {
            break;
        }
        first_inside = Some(record.k);
    }
    Ok(first_inside)
}

pub(crate) struct Tracer {
    reference: Option<MeanField>,
    trace: Vec<RunRecord>,
    warnings: Vec<String>,
    pub samples: u64,
}

impl Tracer {
    fn new(cfg: &SolverConfig, z0: &MeanField) -> Self {
        let reference = cfg.reference.clone();
        let first = RunRecord::new(0, z0.clone(), None, reference.as_ref(), 0);
        Self { reference, trace: vec![first], warnings: Vec::new(), samples: 0 }
    }

    /// Appends `z` as record `k` and returns its L1 step from the previous record.
    fn push(&mut self, k: usize, z: MeanField) -> f64 {
        let previous = &self.trace.last().expect("initial record").mean_field;
        let record = RunRecord::new(k, z, Some(previous), self.reference.as_ref(), self.samples);
        let step = record.l1_to_previous;
        self.trace.push(record);
        step
    }

    fn push_strategies(&mut self, k: usize, z: MeanField, acting: u64, learned: u64) -> f64 {
        let step = self.push(k, z);
        let last = self.trace.last_mut().expect("just pushed");
        last.acting_strategy = Some(acting);
        last.learned_strategy = Some(learned);
        step
    }

    fn warn(&mut self, message: String) {
        self.warnings.push(message);
    }

    fn finish(self, algorithm: Algorithm, z: MeanField, strategy: Option<TremblingStrategy>, q: Option<QTable>, converged: bool) -> SolverResult {
        SolverResult { algorithm, final_field: z, strategy, q, trace: self.trace, converged, samples_used: self.samples, warnings: self.warnings }
    }
}
