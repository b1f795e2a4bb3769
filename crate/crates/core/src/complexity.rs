//! Sample-complexity expressions for the learning algorithms and empirical
//! estimates of the Lipschitz constants they depend on.
//!
//! The expressions are asymptotic orders; every absolute constant hidden by
//! the order notation is set to 1, so the values are meaningful up to absolute
//! constants only. They are evaluated in log space because `B` grows
//! geometrically in `k0`. Logarithms whose argument falls below 1 are clamped
//! at zero.

use rand::Rng;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::base::{random_simplex, random_sparse, MeanField, QTable};
use crate::error::{ensure, MfgError, Result};
use crate::model::{reward_table, GameModel, KernelTable};
use crate::tq::trembling_policy;

/// Which closed form to use for `D`, the Lipschitz constant of `z ↦ Q*_z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DForm {
    /// `C1/(1-γ) + γ C2/(1-γ)²`.
    #[default]
    Split,
    /// `(C1 + γ C2)/(1-γ)²`, an upper bound on `Split`.
    Squared,
    /// `(C1 + γ C2)/(1-γ)`, the shorthand form.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LipschitzConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// Contraction constants of the mean-field map, for the `k0`-free bound.
    pub c4: Option<f64>,
    pub c5: Option<f64>,
}

impl LipschitzConstants {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Self {
        Self { c1, c2, c3, c4: None, c5: None }
    }

    fn validate(&self) -> Result<()> {
        let all = [Some(self.c1), Some(self.c2), Some(self.c3), self.c4, self.c5];
        ensure(all.iter().flatten().all(|c| c.is_finite() && *c >= 0.0), || "Lipschitz constants must be finite and nonnegative".into())
    }

    pub fn d(&self, gamma: f64, form: DForm) -> f64 {
        let h = 1.0 - gamma;
        match form {
            DForm::Split => self.c1 / h + gamma * self.c2 / (h * h),
            DForm::Squared => (self.c1 + gamma * self.c2) / (h * h),
            DForm::Linear => (self.c1 + gamma * self.c2) / h,
        }
    }
}

pub fn v_max(gamma: f64) -> f64 {
    1.0 / (1.0 - gamma)
}

pub fn beta(gamma: f64) -> f64 {
    (1.0 - gamma) / 2.0
}

/// Inputs shared by the three bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundInputs {
    pub eps_bar: f64,
    pub delta_bar: f64,
    pub k0: u32,
    pub w: f64,
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    pub d_form: DForm,
}

impl Default for BoundInputs {
    fn default() -> Self {
        Self { eps_bar: 0.1, delta_bar: 0.1, k0: 3, w: 0.7, num_states: 25, num_actions: 5, gamma: 0.75, d_form: DForm::Split }
    }
}

impl BoundInputs {
    fn validate(&self, needs_w: bool) -> Result<()> {
        ensure(self.eps_bar > 0.0 && self.eps_bar < 1.0, || format!("eps_bar must lie in (0, 1), got {}", self.eps_bar))?;
        ensure(self.delta_bar > 0.0 && self.delta_bar < 1.0, || format!("delta_bar must lie in (0, 1), got {}", self.delta_bar))?;
        ensure(self.k0 >= 1, || "k0 must be at least 1".into())?;
        ensure(!needs_w || (self.w > 0.5 && self.w < 1.0), || format!("w must lie in (1/2, 1), got {}", self.w))?;
        ensure(self.num_states >= 1 && self.num_actions >= 1, || "state and action counts must be positive".into())?;
        ensure(self.gamma > 0.0 && self.gamma < 1.0, || format!("gamma must lie in (0, 1), got {}", self.gamma))
    }

    fn ln_pairs(&self) -> f64 {
        ((self.num_states * self.num_actions) as f64).ln()
    }
}

/// A bound value with its base-10 logarithm, which stays finite when the
/// value itself overflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub value: f64,
    pub log10: f64,
}

impl Bound {
    fn from_ln(ln: f64) -> Self {
        Self { value: ln.exp(), log10: ln / std::f64::consts::LN_10 }
    }
}

/// How `B` is formed in the asynchronous bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum T0Mode {
    /// `B = (1 + C2 + C3 D)^{k0+1} (C3 + 1)`.
    #[default]
    General,
    /// `B = (C5 + 1)/(1 - (C4 + C5 D))`, requiring `C4 + C5 D < 1`.
    Contractive,
}

fn ln_clamped(ln_arg: f64) -> f64 {
    ln_arg.max(0.0)
}

fn ln_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// ln of `(scale · ln⁺(arg))^{power}` given `ln scale` and `ln arg`.
fn ln_power_term(ln_scale: f64, ln_arg: f64, power: f64) -> f64 {
    let l = ln_clamped(ln_arg);
    if l == 0.0 {
        f64::NEG_INFINITY
    } else {
        power * (ln_scale + l.ln())
    }
}

/// The common two-term shape of the asynchronous and synchronous bounds:
/// `(B² L^{1+3w} V²/(β² ε̄²) ln⁺(2 B k0 |S||A| V/(δ̄ β ε̄)))^{1/w} + (L/β ln⁺(B V/ε̄))^{1/(1-w)}`.
fn ln_learning_terms(inp: &BoundInputs, ln_b: f64, ln_l: f64) -> f64 {
    let (w, g) = (inp.w, inp.gamma);
    let (ln_v, ln_beta, ln_eps) = (v_max(g).ln(), beta(g).ln(), inp.eps_bar.ln());
    let scale1 = 2.0 * ln_b + (1.0 + 3.0 * w) * ln_l + 2.0 * ln_v - 2.0 * ln_beta - 2.0 * ln_eps;
    let arg1 = 2f64.ln() + ln_b + (inp.k0 as f64).ln() + inp.ln_pairs() + ln_v - inp.delta_bar.ln() - ln_beta - ln_eps;
    let first = ln_power_term(scale1, arg1, 1.0 / w);
    let second = ln_power_term(ln_l - ln_beta, ln_b + ln_v - ln_eps, 1.0 / (1.0 - w));
    ln_add(first, second)
}

/// Steps of TQ-learning per outer iteration for TMFQ-learning, given an upper
/// bound `covering` on the covering time.
pub fn t0_bound(c: &LipschitzConstants, inp: &BoundInputs, covering: f64, mode: T0Mode) -> Result<Bound> {
    c.validate()?;
    inp.validate(true)?;
    ensure(covering >= 1.0, || format!("covering time must be at least 1, got {covering}"))?;
    let d = c.d(inp.gamma, inp.d_form);
    let ln_b = match mode {
        T0Mode::General => (inp.k0 as f64 + 1.0) * (1.0 + c.c2 + c.c3 * d).ln() + (c.c3 + 1.0).ln(),
        T0Mode::Contractive => {
            let (c4, c5) = match (c.c4, c.c5) {
                (Some(c4), Some(c5)) => (c4, c5),
                _ => return Err(MfgError::InvalidParameter("contractive mode needs C4 and C5".into())),
            };
            let rate = c4 + c5 * d;
            ensure(rate < 1.0, || format!("contractive mode needs C4 + C5 D < 1, got {rate}"))?;
            (c5 + 1.0).ln() - (1.0 - rate).ln()
        }
    };
    Ok(Bound::from_ln(ln_learning_terms(inp, ln_b, covering.ln())))
}

/// Number of agents for online TMFQ-learning with regeneration probability
/// `zeta` and trembling probability `epsilon`.
pub fn i0_bound(c: &LipschitzConstants, inp: &BoundInputs, zeta: f64, epsilon: f64) -> Result<Bound> {
    c.validate()?;
    inp.validate(true)?;
    ensure(zeta > 0.0 && zeta < 1.0, || format!("zeta must lie in (0, 1), got {zeta}"))?;
    ensure(epsilon > 0.0 && epsilon < 1.0, || format!("epsilon must lie in (0, 1), got {epsilon}"))?;
    ensure(c.c3 > 0.0, || "the agent bound needs C3 > 0".into())?;
    let d = c.d(inp.gamma, inp.d_form);
    let a = (1.0 + c.c2).max(c.c3 * d);
    ensure(a > 1.0, || format!("the agent bound needs max(1 + C2, C3 D) > 1, got {a}"))?;
    let ln_b = inp.k0 as f64 * ((1.0 - zeta) * 2.0 * a).ln() + (c.c3 * epsilon).ln() - (1.0 - zeta).ln() - (a - 1.0).ln();
    let lead = inp.ln_pairs() - epsilon.ln() - zeta.ln();
    Ok(Bound::from_ln(lead + ln_learning_terms(inp, ln_b, 0.0)))
}

/// Next-state samples per state-action pair for GMBL.
pub fn n0_bound(c: &LipschitzConstants, inp: &BoundInputs) -> Result<Bound> {
    c.validate()?;
    inp.validate(false)?;
    let d = c.d(inp.gamma, inp.d_form);
    let ln_b = (inp.k0 as f64 + 1.0) * (1.0 + c.c2 + c.c3 * d).ln();
    let base = 2f64.ln() + 2.0 * ln_b - 2.0 * inp.eps_bar.ln();
    let ln_rest = inp.ln_pairs() + (inp.k0 as f64).ln() - inp.delta_bar.ln();
    let hoeffding = ln_power_term(base + 4.0 * v_max(inp.gamma).ln(), 2f64.ln() + ln_rest, 1.0);
    let l1 = base + (inp.num_states as f64 * 2f64.ln() + ln_rest).max(0.0).ln();
    Ok(Bound::from_ln(hoeffding.max(l1)))
}

/// Empirical lower bounds on C1, C2, C3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    pub constants: LipschitzConstants,
    pub pairs_used: usize,
}

fn random_field<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> MeanField {
    match rng.gen_range(0..3) {
        0 => random_simplex(n, rng),
        1 => random_sparse(n, rng),
        _ => MeanField::point_mass(n, rng.gen_range(0..n)),
    }
}

/// `z` with a random share of one occupied state's mass moved to another state.
fn nudge<R: RngCore + ?Sized>(z: &MeanField, rng: &mut R) -> MeanField {
    let n = z.len();
    if n < 2 {
        return z.clone();
    }
    let mut probs = z.probs().to_vec();
    let from = z.sample(rng);
    let to = (from + rng.gen_range(1..n)) % n;
    let moved = probs[from] * rng.gen_range(0.0..1.0f64).max(1e-6);
    probs[from] -= moved;
    probs[to] += moved;
    MeanField::new(probs).expect("mass moved within the simplex")
}

fn random_table<R: RngCore + ?Sized>(ns: usize, na: usize, bound: f64, rng: &mut R) -> QTable {
    let values = (0..ns * na).map(|_| rng.gen_range(-bound..=bound)).collect();
    QTable::from_values(ns, na, values).expect("finite values")
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn flat(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.concat()
}

/// Estimates the constants as maxima of the defining ratios over `pairs`
/// random draws each. Mean fields mix flat-Dirichlet, two-point and point-mass
/// draws, and half of the field pairs are a field and a copy with some mass
/// moved between two states, so that nearby pairs are probed too. Q-tables are uniform on `[-V_max, V_max]`. Norms over rewards and
/// kernels sum over every `(s, a)` (and `s'`). The results are lower bounds
/// on the true constants.
///
/// C3 only counts draws whose trembling strategies differ. Because the greedy
/// action jumps at ties, arbitrarily close tables can induce different
/// strategies, so no finite C3 holds for every pair; the estimate describes
/// tables at the natural scale `V_max`.
pub fn estimate_lipschitz<M: GameModel + ?Sized>(model: &M, epsilon: f64, pairs: usize, rng: &mut dyn RngCore) -> Result<LipschitzEstimate> {
    ensure(pairs >= 1, || "need at least one pair".into())?;
    let (ns, na) = (model.num_states(), model.num_actions());
    let vmax = v_max(model.gamma());
    let (mut c1, mut c2, mut c3) = (0.0f64, 0.0f64, 0.0f64);
    let (mut used_z, mut used_q) = (0usize, 0usize);
    for _ in 0..pairs {
        let z1 = random_field(ns, rng);
        let z2 = if rng.gen() { random_field(ns, rng) } else { nudge(&z1, rng) };
        let dz = z1.l1_distance(&z2)?;
        if dz > 1e-12 {
            used_z += 1;
            c1 = c1.max(l1(&reward_table(model, &z1), &reward_table(model, &z2)) / dz);
            let k1 = KernelTable::exact(model, &z1)?;
            let k2 = KernelTable::exact(model, &z2)?;
            let diff: f64 = (0..ns).flat_map(|s| (0..na).map(move |a| (s, a))).map(|(s, a)| l1(k1.row(s, a), k2.row(s, a))).sum();
            c2 = c2.max(diff / dz);
        }

        let z = random_field(ns, rng);
        let q1 = random_table(ns, na, vmax, rng);
        let q2 = random_table(ns, na, vmax, rng);
        let mu1 = trembling_policy(&q1, epsilon)?;
        let mu2 = trembling_policy(&q2, epsilon)?;
        let dq = q1.sup_distance(&q2)?;
        if mu1 != mu2 && dq > 1e-12 {
            used_q += 1;
            let kernel = KernelTable::exact(model, &z)?;
            let p1 = flat(&kernel.under_strategy(&mu1));
            let p2 = flat(&kernel.under_strategy(&mu2));
            c3 = c3.max(l1(&p1, &p2) / dq);
        }
    }
    if used_z == 0 && used_q == 0 {
        return Err(MfgError::DegenerateSample("no pair had distinct mean fields or distinct strategies".into()));
    }
    Ok(LipschitzEstimate { constants: LipschitzConstants::new(c1, c2, c3), pairs_used: used_z.max(used_q) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (LipschitzConstants, BoundInputs) {
        (LipschitzConstants::new(1.0, 1.0, 1.0), BoundInputs::default())
    }

    #[test]
    fn d_forms() {
        let c = LipschitzConstants::new(1.0, 2.0, 0.0);
        assert!((c.d(0.5, DForm::Split) - (2.0 + 4.0)).abs() < 1e-12);
        assert!((c.d(0.5, DForm::Squared) - 8.0).abs() < 1e-12);
        assert!((c.d(0.5, DForm::Linear) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn halving_eps_bar_raises_every_bound() {
        let (c, inp) = fixture();
        let half = BoundInputs { eps_bar: inp.eps_bar / 2.0, ..inp };
        assert!(t0_bound(&c, &half, 125.0, T0Mode::General).unwrap().log10 > t0_bound(&c, &inp, 125.0, T0Mode::General).unwrap().log10);
        assert!(i0_bound(&c, &half, 0.1, 0.3).unwrap().log10 > i0_bound(&c, &inp, 0.1, 0.3).unwrap().log10);
        assert!(n0_bound(&c, &half).unwrap().log10 > n0_bound(&c, &inp).unwrap().log10);
    }

    #[test]
    fn contractive_mode_ignores_k0() {
        let c = LipschitzConstants { c4: Some(0.1), c5: Some(0.01), ..LipschitzConstants::new(0.5, 0.5, 1.0) };
        let inp = BoundInputs::default();
        let a = t0_bound(&c, &inp, 125.0, T0Mode::Contractive).unwrap();
        let b = t0_bound(&c, &BoundInputs { k0: 50, ..inp }, 125.0, T0Mode::Contractive).unwrap();
        // k0 still enters through the union bound inside the logarithm
        assert!((b.log10 - a.log10) < 0.5);
        let general = t0_bound(&c, &BoundInputs { k0: 50, ..inp }, 125.0, T0Mode::General).unwrap();
        assert!(general.log10 > b.log10 + 10.0);
        let bad = LipschitzConstants { c4: Some(0.9), c5: Some(1.0), ..c };
        assert!(t0_bound(&bad, &inp, 125.0, T0Mode::Contractive).is_err());
        assert!(t0_bound(&LipschitzConstants::new(0.5, 0.5, 1.0), &inp, 125.0, T0Mode::Contractive).is_err());
    }

    #[test]
    fn agent_bound_diverges_as_zeta_vanishes() {
        let (c, inp) = fixture();
        let a = i0_bound(&c, &inp, 1e-3, 0.3).unwrap().log10;
        let b = i0_bound(&c, &inp, 1e-6, 0.3).unwrap().log10;
        assert!(b > a + 2.9);
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        let (c, inp) = fixture();
        assert!(t0_bound(&c, &BoundInputs { eps_bar: 1.0, ..inp }, 125.0, T0Mode::General).is_err());
        assert!(t0_bound(&c, &BoundInputs { w: 0.5, ..inp }, 125.0, T0Mode::General).is_err());
        assert!(t0_bound(&c, &BoundInputs { k0: 0, ..inp }, 125.0, T0Mode::General).is_err());
        assert!(t0_bound(&c, &inp, 0.5, T0Mode::General).is_err());
        assert!(i0_bound(&LipschitzConstants::new(0.0, 0.0, 0.01), &inp, 0.1, 0.3).is_err());
        assert!(n0_bound(&LipschitzConstants::new(-1.0, 0.0, 0.0), &inp).is_err());
    }
}
