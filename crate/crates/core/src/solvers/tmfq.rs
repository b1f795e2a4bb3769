use crate::base::seeded;
use crate::dynamics::next_mf_sampled;
use crate::error::Result;
use crate::model::GameModel;
use crate::tq::{tq_learning_run, trembling_policy, StopRule, TqLearner};

use super::config::{Algorithm, SolverConfig};
use super::result::SolverResult;
use super::Tracer;

/// TMFQ-learning: for each `z_k` run TQ-learning on the simulator with the
/// mean field frozen (warm-started from the previous table and visit counts),
/// then estimate `z_{k+1}` with Next-MF under the learned trembling strategy.
pub fn tmfq_run<M: GameModel + ?Sized>(model: &M, cfg: &SolverConfig) -> Result<SolverResult> {
    cfg.validate(model.num_actions())?;
    let algorithm = Algorithm::Tmfq;
    let tol = cfg.tol_for(algorithm);
    let next_cfg = cfg.next_mf(model.num_states());
    let stop = StopRule { max_steps: cfg.learning_steps, residual: cfg.learning_residual };
    let mut rng = seeded(cfg.seed);
    let mut z = cfg.initial_field(model.num_states())?;
    let mut tracer = Tracer::new(cfg, &z);
    let mut learner: Option<TqLearner> = None;
    let mut budget_hits = 0usize;
    let mut last = None;

    for k in 0..cfg.outer_iters {
        let out = tq_learning_run(model, &z, cfg.epsilon, cfg.rate, stop, learner.take(), &mut rng)?;
        let mu = trembling_policy(&out.learner.q, cfg.epsilon)?;
        let est = next_mf_sampled(model, &z, &mu, next_cfg, &mut rng)?;
        budget_hits += est.hit_budget as usize;
        tracer.samples += out.steps + est.samples;
        let step = tracer.push(k + 1, est.field.clone());
        learner = Some(out.learner);
        if step <= tol {
            last = Some((z, mu, true));
            break;
        }
        last = Some((z, mu, false));
        z = est.field;
    }
    if budget_hits > 0 {
        tracer.warn(format!("Next-MF hit its sample budget in {budget_hits} iterations"));
    }
    let (z, mu, converged) = last.expect("at least one outer iteration");
    Ok(tracer.finish(algorithm, z, Some(mu), learner.map(|l| l.q), converged))
}
