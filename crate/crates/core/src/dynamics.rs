//! Mean-field evolution: the exact one-step McKean–Vlasov map `Φ`, its
//! sampling estimator and the empirical kernel used by model-based learning.

use rand::RngCore;
use rayon::prelude::*;

use crate::base::{stream, MeanField, TremblingStrategy};
use crate::error::{ensure, MfgError, Result};
use crate::model::{GameModel, KernelTable};

pub const DEFAULT_EPS2: f64 = 1e-3;
pub const DEFAULT_MAX_SAMPLES: u64 = 1_000_000;

/// `Φ(z, μ)(s') = Σ_s Σ_a z(s) μ(s,a) P(s'|s,a,z)` with the exact kernel.
pub fn mckean_vlasov<M: GameModel + ?Sized>(model: &M, z: &MeanField, mu: &TremblingStrategy) -> Result<MeanField> {
    KernelTable::exact(model, z)?.push_forward(z, mu)
}

/// `Φ̂(z, μ)` over an estimated kernel.
pub fn mckean_vlasov_estimated(kernel_hat: &KernelTable, z: &MeanField, mu: &TremblingStrategy) -> Result<MeanField> {
    kernel_hat.push_forward(z, mu)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NextMfConfig {
    pub eps2: f64,
    pub min_samples: u64,
    pub max_samples: u64,
}

impl NextMfConfig {
    pub fn for_states(num_states: usize) -> Self {
        Self { eps2: DEFAULT_EPS2, min_samples: 10 * num_states as u64, max_samples: DEFAULT_MAX_SAMPLES }
    }
}

#[derive(Debug, Clone)]
pub struct NextMfEstimate {
    pub field: MeanField,
    pub samples: u64,
    /// The sample budget ran out before the stopping rule fired.
    pub hit_budget: bool,
}

/// Estimates `Φ(z, μ)` by repeated independent draws `s ~ z`, `a ~ μ(s)`,
/// `s' ~ P(·|s,a,z)`, stopping once the running frequency vector moves by at
/// most `eps2` in L1 after at least `min_samples` draws.
pub fn next_mf_sampled<M: GameModel + ?Sized>(
    model: &M,
    z: &MeanField,
    mu: &TremblingStrategy,
    cfg: NextMfConfig,
    rng: &mut dyn RngCore,
) -> Result<NextMfEstimate> {
    let ns = model.num_states();
    ensure(cfg.eps2 > 0.0, || format!("eps2 must be positive, got {}", cfg.eps2))?;
    ensure(cfg.min_samples >= ns as u64, || format!("min_samples must be at least |S| = {ns}"))?;
    ensure(cfg.max_samples >= cfg.min_samples, || "max_samples below min_samples".into())?;
    if z.len() != ns || mu.num_states() != ns {
        return Err(MfgError::DimensionMismatch { left: z.len(), right: ns });
    }
    let mut counts = vec![0u64; ns];
    let mut j = 0u64;
    loop {
        let s = z.sample(rng);
        let a = mu.sample_action(s, rng);
        let next = model.sample_next(s, a, z, rng);
        let before = counts[next];
        counts[next] += 1;
        j += 1;
        // ‖z̄_j − z̄_{j−1}‖₁ = 2 (j − 1 − c) / (j (j − 1)), c = prior count of the new state
        let step = if j == 1 { 2.0 } else { 2.0 * (j - 1 - before) as f64 / (j as f64 * (j - 1) as f64) };
        if j >= cfg.min_samples && step <= cfg.eps2 {
            return Ok(NextMfEstimate { field: MeanField::from_counts(&counts)?, samples: j, hit_budget: false });
        }
        if j >= cfg.max_samples {
            return Ok(NextMfEstimate { field: MeanField::from_counts(&counts)?, samples: j, hit_budget: true });
        }
    }
}

/// Empirical kernel from `n0` next-state draws per `(s, a)`. Each pair draws
/// from its own stream derived from one root value taken from `rng`, so the
/// result does not depend on scheduling.
pub fn estimate_kernel<M: GameModel + ?Sized>(model: &M, z: &MeanField, n0: usize, rng: &mut dyn RngCore) -> Result<KernelTable> {
    ensure(n0 >= 1, || "n0 must be at least 1".into())?;
    let (ns, na) = (model.num_states(), model.num_actions());
    if z.len() != ns {
        return Err(MfgError::DimensionMismatch { left: z.len(), right: ns });
    }
    let root = rng.next_u64();
    let rows: Vec<Vec<f64>> = (0..ns * na)
        .into_par_iter()
        .map(|idx| {
            let (s, a) = (idx / na, idx % na);
            let mut pair_rng = stream(root, &[s as u64, a as u64]);
            let mut counts = vec![0u32; ns];
            for _ in 0..n0 {
                counts[model.sample_next(s, a, z, &mut pair_rng)] += 1;
            }
            counts.into_iter().map(|c| c as f64 / n0 as f64).collect()
        })
        .collect();
    KernelTable::from_rows(ns, na, rows.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::seeded;
    use crate::model::FnGame;
    use approx::assert_abs_diff_eq;

    fn identity(ns: usize) -> FnGame {
        FnGame::new(ns, 2, 0.5, |_, _, _| 0.0, move |s, _, _| {
            let mut row = vec![0.0; ns];
            row[s] = 1.0;
            row
        })
        .unwrap()
    }

    #[test]
    fn identity_kernel_is_fixed() {
        let g = identity(4);
        let z = MeanField::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mu = TremblingStrategy::new(2, 0.3, vec![0, 1, 0, 1]).unwrap();
        let out = mckean_vlasov(&g, &z, &mu).unwrap();
        assert!(out.l1_distance(&z).unwrap() < 1e-15);
    }

    #[test]
    fn constant_kernel_mixes_in_one_step() {
        let q = vec![0.5, 0.25, 0.25];
        let qc = q.clone();
        let g = FnGame::new(3, 2, 0.5, |_, _, _| 0.0, move |_, _, _| qc.clone()).unwrap();
        let mu = TremblingStrategy::new(2, 0.1, vec![1, 0, 1]).unwrap();
        let out = mckean_vlasov(&g, &MeanField::point_mass(3, 2), &mu).unwrap();
        assert_eq!(out.probs(), &q[..]);
    }

    #[test]
    fn two_state_chain() {
        let g = FnGame::new(2, 2, 0.5, |_, _, _| 0.0, |s, _, _| if s == 0 { vec![0.7, 0.3] } else { vec![0.1, 0.9] }).unwrap();
        let mu = TremblingStrategy::new(2, 0.0, vec![0, 0]).unwrap();
        let out = mckean_vlasov(&g, &MeanField::point_mass(2, 0), &mu).unwrap();
        assert_abs_diff_eq!(out.prob(0), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(out.prob(1), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn estimated_push_forward_matches_triple_sum() {
        let mut rng = seeded(3);
        let rows: Vec<f64> = (0..6).flat_map(|_| crate::base::random_simplex(3, &mut rng).probs().to_vec()).collect();
        let kernel = KernelTable::from_rows(3, 2, rows).unwrap();
        let z = crate::base::random_simplex(3, &mut rng);
        let mu = TremblingStrategy::new(2, 0.35, vec![1, 0, 1]).unwrap();
        let out = mckean_vlasov_estimated(&kernel, &z, &mu).unwrap();
        for sp in 0..3 {
            let mut want = 0.0;
            for s in 0..3 {
                for a in 0..2 {
                    want += z.prob(s) * mu.prob(s, a) * kernel.row(s, a)[sp];
                }
            }
            assert_abs_diff_eq!(out.prob(sp), want, epsilon = 1e-15);
        }
    }

    #[test]
    fn next_mf_deterministic_is_exact() {
        // s' = s + 1 (mod 3) regardless of action
        let g = FnGame::new(3, 2, 0.5, |_, _, _| 0.0, |s, _, _| {
            let mut row = vec![0.0; 3];
            row[(s + 1) % 3] = 1.0;
            row
        })
        .unwrap();
        let mu = TremblingStrategy::new(2, 0.0, vec![0, 0, 0]).unwrap();
        let cfg = NextMfConfig { eps2: 1.0, min_samples: 30, max_samples: 1000 };
        let est = next_mf_sampled(&g, &MeanField::point_mass(3, 1), &mu, cfg, &mut seeded(1)).unwrap();
        assert_eq!(est.field.probs(), &[0.0, 0.0, 1.0]);
        assert_eq!(est.samples, 30);
    }

    #[test]
    fn next_mf_identity_tracks_z() {
        let g = identity(4);
        let z = MeanField::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mu = TremblingStrategy::new(2, 0.3, vec![0; 4]).unwrap();
        let est = next_mf_sampled(&g, &z, &mu, NextMfConfig { eps2: 1e-5, min_samples: 40, max_samples: 1_000_000 }, &mut seeded(5)).unwrap();
        assert!(!est.hit_budget);
        assert!(est.field.l1_distance(&z).unwrap() < 0.03);
    }

    #[test]
    fn next_mf_budget_flag_and_guards() {
        let g = identity(4);
        let z = MeanField::uniform(4);
        let mu = TremblingStrategy::new(2, 0.3, vec![0; 4]).unwrap();
        let est = next_mf_sampled(&g, &z, &mu, NextMfConfig { eps2: 1e-9, min_samples: 4, max_samples: 50 }, &mut seeded(5)).unwrap();
        assert!(est.hit_budget);
        assert_eq!(est.samples, 50);
        assert!(next_mf_sampled(&g, &z, &mu, NextMfConfig { eps2: 1e-3, min_samples: 3, max_samples: 50 }, &mut seeded(5)).is_err());
        assert!(next_mf_sampled(&g, &z, &mu, NextMfConfig { eps2: 0.0, min_samples: 4, max_samples: 50 }, &mut seeded(5)).is_err());
    }

    #[test]
    fn kernel_estimation_cases() {
        let g = identity(3);
        let z = MeanField::uniform(3);
        let k = estimate_kernel(&g, &z, 1, &mut seeded(0)).unwrap();
        assert_eq!(k, KernelTable::exact(&g, &z).unwrap());

        let coin = FnGame::new(2, 2, 0.5, |_, _, _| 0.0, |_, _, _| vec![0.5, 0.5]).unwrap();
        let k = estimate_kernel(&coin, &MeanField::uniform(2), 1, &mut seeded(0)).unwrap();
        for s in 0..2 {
            for a in 0..2 {
                assert!(k.row(s, a).contains(&1.0));
            }
        }
        let k = estimate_kernel(&coin, &MeanField::uniform(2), 10_000, &mut seeded(0)).unwrap();
        assert!((k.row(1, 1)[0] - 0.5).abs() < 0.02);
        assert_eq!(k, estimate_kernel(&coin, &MeanField::uniform(2), 10_000, &mut seeded(0)).unwrap());
        assert!(estimate_kernel(&coin, &MeanField::uniform(2), 0, &mut seeded(0)).is_err());
    }
}
