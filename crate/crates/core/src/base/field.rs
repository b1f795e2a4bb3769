use rand::Rng;
use rand::RngCore;

use crate::error::{MfgError, Result};

/// Entries this far below zero are treated as rounding noise and clamped.
pub const NEGATIVE_CLAMP: f64 = 1e-12;
/// Allowed deviation of the total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-9;
/// Allowance for rounding in CDF comparisons.
pub const ROUNDING: f64 = 1e-12;

/// A probability distribution over the states `0..n`, ordered by index.
///
/// Construction validates the simplex constraints, so every `MeanField` in the
/// program is a proper distribution. The cumulative distribution and the mean
/// state are cached because samplers and dominance checks read them often.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanField {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    mean: f64,
}

impl MeanField {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(MfgError::InvalidDistribution("empty state space".into()));
        }
        for (s, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() {
                return Err(MfgError::InvalidDistribution(format!("entry {s} is not finite")));
            }
            if *p < 0.0 {
                if *p < -NEGATIVE_CLAMP {
                    return Err(MfgError::InvalidDistribution(format!("entry {s} is negative ({p:e})")));
                }
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(MfgError::InvalidDistribution(format!("mass sums to {total}")));
        }
        Ok(Self::from_valid(probs))
    }

    fn from_valid(probs: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let mean = probs.iter().enumerate().map(|(s, p)| s as f64 * p).sum();
        Self { probs, cumulative, mean }
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(MfgError::InvalidDistribution("weights must be nonnegative with positive mass".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        Self::from_weights(counts.iter().map(|&c| c as f64).collect())
    }

    pub fn point_mass(num_states: usize, state: usize) -> Self {
        assert!(state < num_states, "state {state} outside 0..{num_states}");
        let mut probs = vec![0.0; num_states];
        probs[state] = 1.0;
        Self::from_valid(probs)
    }

    pub fn uniform(num_states: usize) -> Self {
        assert!(num_states > 0);
        Self::from_valid(vec![1.0 / num_states as f64; num_states])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, s: usize) -> f64 {
        self.probs[s]
    }

    /// Prefix sums `F(s) = sum_{s' <= s} z(s')`.
    pub fn cdf(&self) -> &[f64] {
        &self.cumulative
    }

    /// Expected state index `sum_s s z(s)`.
    pub fn mean_state(&self) -> f64 {
        self.mean
    }

    fn check_dim(&self, other: &MeanField) -> Result<()> {
        if self.len() != other.len() {
            return Err(MfgError::DimensionMismatch { left: self.len(), right: other.len() });
        }
        Ok(())
    }

    pub fn l1_distance(&self, other: &MeanField) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum())
    }

    /// First-order stochastic dominance of `self` over `other`: on a chain this
    /// is pointwise ordering of the CDFs, relaxed by `slack`. A further
    /// [`ROUNDING`] absorbs the error of the cached prefix sums.
    pub fn sd_dominates(&self, other: &MeanField, slack: f64) -> Result<bool> {
        self.check_dim(other)?;
        if !(slack >= 0.0) {
            return Err(MfgError::InvalidParameter(format!("slack must be >= 0, got {slack}")));
        }
        Ok(self.cumulative.iter().zip(&other.cumulative).all(|(mine, theirs)| *mine <= theirs + slack + ROUNDING))
    }

    /// Draws a state with probability `z(s)` by inverting the cached CDF.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // rounding can leave the last prefix sum a hair below u
        let mut s = idx.min(self.len() - 1);
        while self.probs[s] == 0.0 && s > 0 {
            s -= 1;
        }
        s
    }
}

/// A uniformly random point of the simplex (flat Dirichlet).
pub fn random_simplex<R: RngCore + ?Sized>(num_states: usize, rng: &mut R) -> MeanField {
    let weights: Vec<f64> = (0..num_states).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-300).collect();
    MeanField::from_weights(weights).expect("positive weights")
}

/// A random distribution supported on at most two states. Together with
/// [`random_simplex`] this reaches the vertices and edges of the simplex,
/// where Lipschitz ratios tend to peak.
pub fn random_sparse<R: RngCore + ?Sized>(num_states: usize, rng: &mut R) -> MeanField {
    let a = rng.gen_range(0..num_states);
    let b = rng.gen_range(0..num_states);
    let w: f64 = rng.gen();
    let mut probs = vec![0.0; num_states];
    probs[a] += w;
    probs[b] += 1.0 - w;
    MeanField::new(probs).expect("two-point mass")
}

/// A pair `(low, high)` with `high` stochastically dominating `low`, built by
/// moving a random fraction of each state's mass to a random higher state.
pub fn random_ordered_pair<R: RngCore + ?Sized>(num_states: usize, rng: &mut R) -> (MeanField, MeanField) {
    let low = if rng.gen_bool(0.5) { random_simplex(num_states, rng) } else { random_sparse(num_states, rng) };
    let mut high = low.probs().to_vec();
    for s in 0..num_states.saturating_sub(1) {
        let moved = low.prob(s) * rng.gen::<f64>();
        let target = rng.gen_range(s + 1..num_states);
        high[s] -= moved;
        high[target] += moved;
    }
    let high = MeanField::new(high).expect("mass preserving shift");
    (low, high)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::rng::seeded;
    use approx::assert_abs_diff_eq;

    fn mf(v: &[f64]) -> MeanField {
        MeanField::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_distributions() {
        assert!(MeanField::new(vec![]).is_err());
        assert!(MeanField::new(vec![0.5, 0.6]).is_err());
        assert!(MeanField::new(vec![1.1, -0.1]).is_err());
        assert!(MeanField::new(vec![f64::NAN, 1.0]).is_err());
        let clamped = MeanField::new(vec![1.0 + 5e-13, -5e-13]).unwrap();
        assert_eq!(clamped.prob(1), 0.0);
    }

    #[test]
    fn l1_examples() {
        let u = MeanField::uniform(4);
        assert_eq!(u.l1_distance(&u).unwrap(), 0.0);
        let p0 = MeanField::point_mass(2, 0);
        let p1 = MeanField::point_mass(2, 1);
        assert_eq!(p0.l1_distance(&p1).unwrap(), 2.0);
        assert_abs_diff_eq!(mf(&[0.5, 0.5]).l1_distance(&mf(&[0.25, 0.75])).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(u.l1_distance(&p0), Err(MfgError::DimensionMismatch { left: 4, right: 2 })));
    }

    #[test]
    fn mean_state_examples() {
        assert_eq!(MeanField::point_mass(10, 7).mean_state(), 7.0);
        assert_abs_diff_eq!(MeanField::uniform(25).mean_state(), 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mf(&[0.2, 0.8]).mean_state(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn cdf_examples() {
        assert!(MeanField::point_mass(5, 0).cdf().iter().all(|&c| c == 1.0));
        assert_eq!(MeanField::uniform(4).cdf(), &[0.25, 0.5, 0.75, 1.0]);
        let c = mf(&[0.1, 0.4, 0.5]).cdf().to_vec();
        for (got, want) in c.iter().zip([0.1, 0.5, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn dominance_examples() {
        let z = mf(&[0.3, 0.7]);
        assert!(z.sd_dominates(&z, 0.0).unwrap());
        let p0 = MeanField::point_mass(2, 0);
        let p1 = MeanField::point_mass(2, 1);
        assert!(p1.sd_dominates(&p0, 0.0).unwrap());
        assert!(!p0.sd_dominates(&p1, 0.0).unwrap());
        assert!(mf(&[0.2, 0.8]).sd_dominates(&mf(&[0.5, 0.5]), 0.0).unwrap());
        assert!(p0.sd_dominates(&MeanField::uniform(3), 0.0).is_err());
        assert!(p0.sd_dominates(&p1, -1.0).is_err());
    }

    #[test]
    fn sampling_examples() {
        let mut rng = seeded(1);
        let z = MeanField::point_mass(6, 3);
        assert!((0..1000).all(|_| z.sample(&mut rng) == 3));

        let u = MeanField::uniform(2);
        let zeros = (0..100_000).filter(|_| u.sample(&mut rng) == 0).count();
        let freq = zeros as f64 / 100_000.0;
        assert!((0.49..=0.51).contains(&freq), "frequency {freq}");

        let draw = |seed| {
            let mut r = seeded(seed);
            (0..50).map(|_| MeanField::uniform(7).sample(&mut r)).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
    }

    #[test]
    fn sampling_never_returns_zero_mass_state() {
        let z = mf(&[0.5, 0.5, 0.0]);
        let mut rng = seeded(3);
        assert!((0..10_000).all(|_| z.sample(&mut rng) < 2));
    }

    #[test]
    fn ordered_pairs_are_ordered() {
        let mut rng = seeded(5);
        for _ in 0..500 {
            let (lo, hi) = random_ordered_pair(9, &mut rng);
            assert!(hi.sd_dominates(&lo, 1e-12).unwrap());
        }
    }
}
