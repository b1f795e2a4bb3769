//! Model-based solvers: trembling best response on the exact model (T-BR) and
//! its generative-model counterpart on estimated kernels (GMBL).

use crate::base::{seeded, MeanField, QTable, TremblingStrategy};
use crate::dynamics::{estimate_kernel, mckean_vlasov_estimated};
use crate::error::{MfgError, Result};
use crate::model::{GameModel, InducedMdp, KernelTable};
use crate::tq::trembling_policy;

use super::config::{Algorithm, SolverConfig};
use super::result::SolverResult;
use super::Tracer;

/// Trembling best response: for each `z_k` solve the TQ fixed point exactly,
/// play its trembling strategy `μ_k` and move to `z_{k+1} = Φ(z_k, μ_k)`.
///
/// Stops when `‖z_{k+1} - z_k‖₁ ≤ tol` and returns `(z_k, μ_k)`, whose
/// consistency residual is therefore at most `tol`.
pub fn tbr_run<M: GameModel + ?Sized>(model: &M, cfg: &SolverConfig) -> Result<SolverResult> {
    if !model.has_exact_kernel() {
        return Err(MfgError::NoExactKernel);
    }
    iterate(model, cfg, Algorithm::Tbr, |z, _| Ok((KernelTable::exact(model, z)?, 0)))
}

/// Generative-model-based learning: each outer step estimates the kernel at
/// `z_k` from `n0` samples per pair, solves the estimated model exactly and
/// pushes `z_k` forward through the estimated kernel.
pub fn gmbl_run<M: GameModel + ?Sized>(model: &M, cfg: &SolverConfig) -> Result<SolverResult> {
    let per_iteration = (cfg.n0 * model.num_states() * model.num_actions()) as u64;
    let mut rng = seeded(cfg.seed);
    iterate(model, cfg, Algorithm::Gmbl, |z, _| Ok((estimate_kernel(model, z, cfg.n0, &mut rng)?, per_iteration)))
}

fn iterate<M, K>(model: &M, cfg: &SolverConfig, algorithm: Algorithm, mut kernel_at: K) -> Result<SolverResult>
where
    M: GameModel + ?Sized,
    K: FnMut(&MeanField, usize) -> Result<(KernelTable, u64)>,
{
    cfg.validate(model.num_actions())?;
    let tol = cfg.tol_for(algorithm);
    let mut z = cfg.initial_field(model.num_states())?;
    let mut tracer = Tracer::new(cfg, &z);
    let mut q: Option<QTable> = None;
    let mut last: Option<(MeanField, TremblingStrategy)> = None;

    for k in 0..cfg.outer_iters {
        let (kernel, samples) = kernel_at(&z, k)?;
        tracer.samples += samples;
        let mdp = InducedMdp::with_kernel(model, &z, kernel)?;
        let vi = mdp.value_iteration(cfg.epsilon, cfg.vi_tol, cfg.vi_max_iters, q.as_ref())?;
        let mu = trembling_policy(&vi.q, cfg.epsilon)?;
        let next = mckean_vlasov_estimated(mdp.kernel(), &z, &mu)?;
        let step = tracer.push(k + 1, next.clone());
        q = Some(vi.q);
        if step <= tol {
            return Ok(tracer.finish(algorithm, z, Some(mu), q, true));
        }
        last = Some((z, mu));
        z = next;
    }
    let (z, mu) = last.expect("at least one outer iteration");
    Ok(tracer.finish(algorithm, z, Some(mu), q, false))
}
