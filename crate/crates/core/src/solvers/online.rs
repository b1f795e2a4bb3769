use rand::Rng;

use crate::base::{stream, MeanField, SimRng};
use crate::error::Result;
use crate::model::{reward_table, GameModel};
use crate::tq::{sync_tq_learning, trembling_policy, TqLearner, Transition, TransitionBuffer};

use super::config::{Algorithm, BufferVisits, SolverConfig};
use super::result::SolverResult;
use super::Tracer;

/// Stream tag for the per-agent generators.
pub(crate) const AGENT_STREAM: u64 = 1;

/// Online TMFQ-learning on a simulated population of `I` agents.
///
/// In round `k` every agent acts with the strategy learned in the previous
/// round, `μ_{k-1}`, under the current empirical mean field. The round's
/// transitions fill a fresh buffer, the population moves, and synchronous
/// TQ-learning on the buffer (warm-started) yields `μ_k`. The population is
/// the mean field; nothing is ever reset on the simulator side.
pub fn online_tmfq_run<M: GameModel + ?Sized>(model: &M, cfg: &SolverConfig) -> Result<SolverResult> {
    cfg.validate(model.num_actions())?;
    let algorithm = Algorithm::Online;
    let (ns, na) = (model.num_states(), model.num_actions());
    let tol = cfg.tol_for(algorithm);
    let (mut rngs, mut states) = spawn_population(cfg, ns)?;
    let mut z = empirical(&states, ns)?;
    let mut tracer = Tracer::new(cfg, &z);
    let mut learner = TqLearner::zeros(ns, na);
    let mut acting = trembling_policy(&learner.q, cfg.epsilon)?;
    let mut buffer = TransitionBuffer::new(ns, na);
    let mut uncovered_rounds = 0usize;
    let mut converged = false;

    for k in 1..=cfg.outer_iters {
        let rewards = reward_table(model, &z);
        buffer.clear();
        for (s, rng) in states.iter_mut().zip(rngs.iter_mut()) {
            let a = acting.sample_action(*s, rng);
            let mut next = model.sample_next(*s, a, &z, rng);
            buffer.push(Transition { state: *s, action: a, reward: rewards[*s * na + a], next_state: next });
            if cfg.regeneration > 0.0 && rng.gen::<f64>() < cfg.regeneration {
                next = rng.gen_range(0..ns);
            }
            *s = next;
        }
        let next_z = empirical(&states, ns)?;
        if cfg.buffer_visits == BufferVisits::Reset {
            learner.reset_visits();
        }
        let sync = sync_tq_learning(&buffer, &mut learner, cfg.sync_rate, cfg.epsilon, model.gamma(), cfg.sync_passes, false)?;
        uncovered_rounds += !sync.uncovered.is_empty() as usize;
        let learned = trembling_policy(&learner.q, cfg.epsilon)?;
        tracer.samples += states.len() as u64;
        let step = tracer.push_strategies(k, next_z.clone(), acting.fingerprint(), learned.fingerprint());
        acting = learned;
        z = next_z;
        if step <= tol {
            converged = true;
            break;
        }
    }
    if uncovered_rounds > 0 {
        tracer.warn(format!("buffer missed some state-action pairs in {uncovered_rounds} rounds; only covered pairs were updated"));
    }
    Ok(tracer.finish(algorithm, z, Some(acting), Some(learner.q), converged))
}

/// Per-agent generators and initial states drawn i.i.d. from the initial field.
pub(crate) fn spawn_population(cfg: &SolverConfig, num_states: usize) -> Result<(Vec<SimRng>, Vec<usize>)> {
    let z0 = cfg.initial_field(num_states)?;
    let mut rngs: Vec<SimRng> = (0..cfg.agents as u64).map(|i| stream(cfg.seed, &[AGENT_STREAM, i])).collect();
    let states = rngs.iter_mut().map(|r| z0.sample(r)).collect();
    Ok((rngs, states))
}

pub(crate) fn empirical(states: &[usize], num_states: usize) -> Result<MeanField> {
    let mut counts = vec![0u64; num_states];
    for &s in states {
        counts[s] += 1;
    }
    MeanField::from_counts(&counts)
}
