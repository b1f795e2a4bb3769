//! Finite-enumeration check of the strategic-complementarity conditions.
//!
//! States and actions are chains, so supermodularity reduces to increasing
//! differences on adjacent pairs, and stochastic orderings reduce to the tail
//! probabilities `P(s' ≥ c)`, i.e. to the step test functions `1{s' ≥ c}`.
//! The mean-field argument is checked across the supplied ordered pairs.

use std::fmt;

use crate::base::MeanField;
use crate::error::{ensure, MfgError, Result};
use crate::model::{reward_table, GameModel, KernelTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    /// r nondecreasing in s.
    RewardMonotone,
    /// r has increasing differences in (s, a).
    RewardSupermodular,
    /// r(·, ·, z_hi) - r(·, ·, z_lo) nondecreasing in (s, a).
    RewardMeanFieldDifferences,
    /// max_a r nondecreasing in s.
    MaxRewardMonotone,
    /// P(·|s,a,z) stochastically nondecreasing in s, a and z.
    KernelMonotone,
    /// Tail probabilities supermodular in (s, a) with increasing differences in (s, a) and z.
    KernelSupermodular,
}

impl Clause {
    pub const ALL: [Clause; 6] = [
        Clause::RewardMonotone,
        Clause::RewardSupermodular,
        Clause::RewardMeanFieldDifferences,
        Clause::MaxRewardMonotone,
        Clause::KernelMonotone,
        Clause::KernelSupermodular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Clause::RewardMonotone => "reward-monotone",
            Clause::RewardSupermodular => "reward-supermodular",
            Clause::RewardMeanFieldDifferences => "reward-mean-field-differences",
            Clause::MaxRewardMonotone => "max-reward-monotone",
            Clause::KernelMonotone => "kernel-monotone",
            Clause::KernelSupermodular => "kernel-supermodular",
        }
    }
}

/// The most negative slack found for one clause and where it occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct ClauseResult {
    pub clause: Clause,
    pub passed: bool,
    /// Smallest value of the checked difference; negative means a violation.
    pub worst: f64,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScReport {
    pub clauses: Vec<ClauseResult>,
}

impl ScReport {
    pub fn all_passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn get(&self, clause: Clause) -> &ClauseResult {
        self.clauses.iter().find(|c| c.clause == clause).expect("every clause is reported")
    }
}

impl fmt::Display for ScReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            let status = if c.passed { "pass" } else { "FAIL" };
            write!(f, "{:<30} {status}  worst {:+.3e}", c.clause.name(), c.worst)?;
            if let Some(w) = &c.witness {
                write!(f, "  at {w}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Rounding allowance when confirming that supplied pairs are ordered.
const ORDER_SLACK: f64 = 1e-12;

struct Tracker {
    clause: Clause,
    tol: f64,
    worst: f64,
    witness: Option<String>,
}

impl Tracker {
    fn new(clause: Clause, tol: f64) -> Self {
        Self { clause, tol, worst: f64::INFINITY, witness: None }
    }

    fn check(&mut self, value: f64, at: impl FnOnce() -> String) {
        if value < self.worst {
            self.worst = value;
            if value < -self.tol {
                self.witness = Some(at());
            }
        }
    }

    fn finish(self) -> ClauseResult {
        let worst = if self.worst.is_finite() { self.worst } else { 0.0 };
        let passed = worst >= -self.tol;
        ClauseResult { clause: self.clause, passed, worst, witness: if passed { None } else { self.witness } }
    }
}

/// Tails `P(s' ≥ c | s, a)` for c = 1..|S|-1, indexed `[(s * na + a) * (ns - 1) + c - 1]`.
fn tails(kernel: &KernelTable) -> Vec<f64> {
    let (ns, na) = (kernel.num_states(), kernel.num_actions());
    let mut out = Vec::with_capacity(ns * na * (ns - 1));
    for s in 0..ns {
        for a in 0..na {
            let row = kernel.row(s, a);
            let mut acc = 0.0;
            let mut t = vec![0.0; ns - 1];
            for c in (1..ns).rev() {
                acc += row[c];
                t[c - 1] = acc;
            }
            out.extend(t);
        }
    }
    out
}

/// Checks every clause on all fields appearing in `z_pairs`; each pair is
/// `(high, low)` with `high` stochastically dominating `low`.
pub fn verify_sc<M: GameModel + ?Sized>(model: &M, z_pairs: &[(MeanField, MeanField)], tol: f64) -> Result<ScReport> {
    ensure(tol >= 0.0, || format!("tolerance must be nonnegative, got {tol}"))?;
    ensure(!z_pairs.is_empty(), || "need at least one mean-field pair".into())?;
    let (ns, na) = (model.num_states(), model.num_actions());
    for (index, (hi, lo)) in z_pairs.iter().enumerate() {
        if hi.len() != ns || lo.len() != ns {
            return Err(MfgError::DimensionMismatch { left: hi.len(), right: ns });
        }
        if !hi.sd_dominates(lo, ORDER_SLACK)? {
            return Err(MfgError::NotOrdered { index });
        }
    }

    let mut r_mono = Tracker::new(Clause::RewardMonotone, tol);
    let mut r_super = Tracker::new(Clause::RewardSupermodular, tol);
    let mut r_diff = Tracker::new(Clause::RewardMeanFieldDifferences, tol);
    let mut r_max = Tracker::new(Clause::MaxRewardMonotone, tol);
    let mut k_mono = Tracker::new(Clause::KernelMonotone, tol);
    let mut k_super = Tracker::new(Clause::KernelSupermodular, tol);
    let nc = ns - 1;
    let ti = |s: usize, a: usize, c: usize| (s * na + a) * nc + c - 1;

    for (p, (hi, lo)) in z_pairs.iter().enumerate() {
        let r_hi = reward_table(model, hi);
        let r_lo = reward_table(model, lo);
        let t_hi = tails(&KernelTable::exact(model, hi)?);
        let t_lo = tails(&KernelTable::exact(model, lo)?);

        for (label, r, t) in [("hi", &r_hi, &t_hi), ("lo", &r_lo, &t_lo)] {
            let rv = |s: usize, a: usize| r[s * na + a];
            for s in 0..ns {
                for a in 0..na {
                    if s + 1 < ns {
                        r_mono.check(rv(s + 1, a) - rv(s, a), || format!("pair {p} ({label}) s={s} a={a}"));
                        for c in 1..ns {
                            k_mono.check(t[ti(s + 1, a, c)] - t[ti(s, a, c)], || format!("pair {p} ({label}) s={s}->{} a={a} c={c}", s + 1));
                        }
                    }
                    if a + 1 < na {
                        for c in 1..ns {
                            k_mono.check(t[ti(s, a + 1, c)] - t[ti(s, a, c)], || format!("pair {p} ({label}) s={s} a={a}->{} c={c}", a + 1));
                        }
                    }
                    if s + 1 < ns && a + 1 < na {
                        r_super.check(rv(s + 1, a + 1) - rv(s, a + 1) - rv(s + 1, a) + rv(s, a), || format!("pair {p} ({label}) s={s} a={a}"));
                        for c in 1..ns {
                            let d = t[ti(s + 1, a + 1, c)] - t[ti(s, a + 1, c)] - t[ti(s + 1, a, c)] + t[ti(s, a, c)];
                            k_super.check(d, || format!("pair {p} ({label}) supermodularity s={s} a={a} c={c}"));
                        }
                    }
                }
                if s + 1 < ns {
                    let max = |s: usize| r[s * na..(s + 1) * na].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    r_max.check(max(s + 1) - max(s), || format!("pair {p} ({label}) s={s}"));
                }
            }
        }

        for s in 0..ns {
            for a in 0..na {
                for c in 1..ns {
                    k_mono.check(t_hi[ti(s, a, c)] - t_lo[ti(s, a, c)], || format!("pair {p} z_hi vs z_lo s={s} a={a} c={c}"));
                }
                let d = |s: usize, a: usize| r_hi[s * na + a] - r_lo[s * na + a];
                let dt = |s: usize, a: usize, c: usize| t_hi[ti(s, a, c)] - t_lo[ti(s, a, c)];
                if s + 1 < ns {
                    r_diff.check(d(s + 1, a) - d(s, a), || format!("pair {p} s={s}->{} a={a}", s + 1));
                    for c in 1..ns {
                        k_super.check(dt(s + 1, a, c) - dt(s, a, c), || format!("pair {p} z-differences s={s}->{} a={a} c={c}", s + 1));
                    }
                }
                if a + 1 < na {
                    r_diff.check(d(s, a + 1) - d(s, a), || format!("pair {p} s={s} a={a}->{}", a + 1));
                    for c in 1..ns {
                        k_super.check(dt(s, a + 1, c) - dt(s, a, c), || format!("pair {p} z-differences s={s} a={a}->{} c={c}", a + 1));
                    }
                }
            }
        }
    }

    Ok(ScReport { clauses: vec![r_mono.finish(), r_super.finish(), r_diff.finish(), r_max.finish(), k_mono.finish(), k_super.finish()] })
}

/// `count` ordered pairs `(high, low)` for [`verify_sc`], including the
/// extreme point masses.
pub fn ordered_pairs<R: rand::RngCore + ?Sized>(num_states: usize, count: usize, rng: &mut R) -> Vec<(MeanField, MeanField)> {
    let mut out = vec![(MeanField::point_mass(num_states, num_states - 1), MeanField::point_mass(num_states, 0))];
    while out.len() < count {
        let (low, high) = crate::base::random_ordered_pair(num_states, rng);
        out.push((high, low));
    }
    out.truncate(count.max(1));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::seeded;
    use crate::envs::Ladder;
    use crate::model::FnGame;

    #[test]
    fn constant_reward_identity_kernel_passes() {
        let g = FnGame::new(4, 3, 0.5, |_, _, _| 0.3, |s, _, _| {
            let mut row = vec![0.0; 4];
            row[s] = 1.0;
            row
        })
        .unwrap();
        let pairs = ordered_pairs(4, 10, &mut seeded(1));
        let report = verify_sc(&g, &pairs, 0.0).unwrap();
        assert!(report.all_passed(), "{report}");
        assert!(report.clauses.iter().all(|c| c.worst == 0.0));
    }

    #[test]
    fn negated_reward_fails_monotonicity_with_witness() {
        let g = FnGame::new(3, 2, 0.5, |s, _, _| -(s as f64) / 3.0, |_, _, _| vec![1.0 / 3.0; 3]).unwrap();
        let report = verify_sc(&g, &ordered_pairs(3, 4, &mut seeded(1)), 1e-12).unwrap();
        let c = report.get(Clause::RewardMonotone);
        assert!(!c.passed);
        assert!(c.witness.is_some());
        assert!((c.worst + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ladder_passes() {
        let g = Ladder::new(8, 3, 0.8, 0.05).unwrap();
        let report = verify_sc(&g, &ordered_pairs(8, 50, &mut seeded(4)), 1e-12).unwrap();
        assert!(report.all_passed(), "{report}");
    }

    #[test]
    fn unordered_pair_is_rejected() {
        let g = Ladder::new(3, 2, 0.8, 0.05).unwrap();
        let pairs = vec![(MeanField::point_mass(3, 0), MeanField::point_mass(3, 2))];
        assert_eq!(verify_sc(&g, &pairs, 0.0).unwrap_err(), MfgError::NotOrdered { index: 0 });
    }
}
