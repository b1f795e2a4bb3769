//! Population baselines without a shared mean-field model: independent
//! learners (IQL) and learners whose table is indexed by the bucketed mean
//! state of a fixed subset of the population (MFQ).

use rand::seq::index::sample;
use rand::Rng;

use crate::base::table::sample_trembling;
use crate::base::{stream, QTable};
use crate::error::Result;
use crate::model::{reward_table, GameModel};
use crate::tq::{TqLearner, Transition};

use super::config::{Algorithm, SolverConfig};
use super::online::{empirical, spawn_population};
use super::result::SolverResult;
use super::Tracer;

const SUBSET_STREAM: u64 = 2;

/// Independent TQ-learners: each agent keeps its own table and updates it
/// from its own transitions, ignoring the population.
pub fn iql_run<M: GameModel + ?Sized>(model: &M, cfg: &SolverConfig) -> Result<SolverResult> {
    let identity: Vec<usize> = (0..cfg.agents).collect();
    population_run(model, cfg, Algorithm::Iql, 1, identity, Vec::new())
}

/// Mean-field Q baseline: each agent's table is indexed by `(s, bucket, a)`
/// where the bucket discretizes the mean state of a fixed random subset of
/// `subset_size` agents; agent `i` learns from the transition of subset
/// member `i mod |subset|`.
pub fn mfq_run<M: GameModel + ?Sized>(model: &M, cfg: &SolverConfig) -> Result<SolverResult> {
    let mut warnings = Vec::new();
    let subset = if cfg.agents <= cfg.subset_size {
        if cfg.agents < cfg.subset_size {
            warnings.push(format!("population of {} is smaller than the subset size {}; using every agent", cfg.agents, cfg.subset_size));
        }
        (0..cfg.agents).collect()
    } else {
        let mut rng = stream(cfg.seed, &[SUBSET_STREAM]);
        let mut chosen = sample(&mut rng, cfg.agents, cfg.subset_size).into_vec();
        chosen.sort_unstable();
        chosen
    };
    population_run(model, cfg, Algorithm::Mfq, cfg.buckets_for(model.num_states()), subset, warnings)
}

fn bucket(mean_state: f64, num_states: usize, buckets: usize) -> usize {
    if num_states < 2 {
        return 0;
    }
    ((mean_state / (num_states - 1) as f64 * buckets as f64) as usize).min(buckets - 1)
}

fn population_run<M: GameModel + ?Sized>(
    model: &M,
    cfg: &SolverConfig,
    algorithm: Algorithm,
    buckets: usize,
    subset: Vec<usize>,
    warnings: Vec<String>,
) -> Result<SolverResult> {
    cfg.validate(model.num_actions())?;
    let (ns, na) = (model.num_states(), model.num_actions());
    let tol = cfg.tol_for(algorithm);
    let gamma = model.gamma();
    let (mut rngs, mut states) = spawn_population(cfg, ns)?;
    let mut z = empirical(&states, ns)?;
    let mut tracer = Tracer::new(cfg, &z);
    for w in warnings {
        tracer.warn(w);
    }
    let mut learners = vec![TqLearner::zeros(ns * buckets, na); cfg.agents];
    let subset_bucket = |states: &[usize]| {
        let mean = subset.iter().map(|&j| states[j] as f64).sum::<f64>() / subset.len() as f64;
        bucket(mean, ns, buckets)
    };
    let mut actions = vec![0usize; cfg.agents];
    let mut landed = vec![0usize; cfg.agents];
    let mut previous = states.clone();
    let mut converged = false;

    for k in 1..=cfg.outer_iters {
        let rewards = reward_table(model, &z);
        let b = subset_bucket(&states);
        previous.copy_from_slice(&states);
        for i in 0..cfg.agents {
            let s = states[i];
            let rng = &mut rngs[i];
            let a = sample_trembling(learners[i].q.greedy_action(s * buckets + b), na, cfg.epsilon, rng);
            actions[i] = a;
            let mut next = model.sample_next(s, a, &z, rng);
            landed[i] = next;
            if cfg.regeneration > 0.0 && rng.gen::<f64>() < cfg.regeneration {
                next = rng.gen_range(0..ns);
            }
            states[i] = next;
        }
        let b_next = subset_bucket(&states);
        for (i, learner) in learners.iter_mut().enumerate() {
            let j = subset[i % subset.len()];
            let (s, a) = (previous[j], actions[j]);
            let t = Transition { state: s * buckets + b, action: a, reward: rewards[s * na + a], next_state: landed[j] * buckets + b_next };
            learner.update(t, cfg.rate, cfg.epsilon, gamma);
        }
        let next_z = empirical(&states, ns)?;
        tracer.samples += cfg.agents as u64;
        let step = tracer.push(k, next_z.clone());
        z = next_z;
        if step <= tol {
            converged = true;
            break;
        }
    }
    let q = population_table(&learners, ns, na, buckets, subset_bucket(&states));
    Ok(tracer.finish(algorithm, z, None, Some(q), converged))
}

/// Average of the agents' tables, restricted to mean-state bucket `b`.
fn population_table(learners: &[TqLearner], ns: usize, na: usize, buckets: usize, b: usize) -> QTable {
    let mut values = vec![0.0; ns * na];
    for learner in learners {
        for s in 0..ns {
            for (v, q) in values[s * na..(s + 1) * na].iter_mut().zip(learner.q.row(s * buckets + b)) {
                *v += q / learners.len() as f64;
            }
        }
    }
    QTable::from_values(ns, na, values).expect("finite averages")
}

#[cfg(test)]
mod tests {
    use super::bucket;

    #[test]
    fn buckets_cover_the_state_range() {
        assert_eq!(bucket(0.0, 25, 5), 0);
        assert_eq!(bucket(24.0, 25, 5), 4);
        assert_eq!(bucket(12.0, 25, 5), 2);
        assert_eq!(bucket(4.7, 25, 5), 0);
        assert_eq!(bucket(4.9, 25, 5), 1);
        assert_eq!(bucket(3.0, 1, 1), 0);
    }
}
