use proptest::prelude::*;
use rand::Rng;
use tmfe::base::{random_ordered_pair, random_simplex, random_sparse, seeded, stream};
use tmfe::complexity::{estimate_lipschitz, v_max};
use tmfe::dynamics::{mckean_vlasov, next_mf_sampled, NextMfConfig};
use tmfe::envs::{Infection, InfectionParams, MTurk, MTurkParams};
use tmfe::tq::trembling_policy;
use tmfe::{GameModel, MeanField, QTable, TremblingStrategy};

fn infection() -> Infection {
    Infection::new(InfectionParams::default()).unwrap()
}

fn random_strategy<R: Rng>(ns: usize, na: usize, rng: &mut R) -> TremblingStrategy {
    let greedy = (0..ns).map(|_| rng.gen_range(0..na)).collect();
    TremblingStrategy::new(na, rng.gen_range(0.0..0.79), greedy).unwrap()
}

fn random_table<R: Rng>(ns: usize, na: usize, bound: f64, rng: &mut R) -> QTable {
    QTable::from_values(ns, na, (0..ns * na).map(|_| rng.gen_range(-bound..=bound)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mckean_vlasov_stays_on_the_simplex(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let models: [Box<dyn GameModel>; 2] = [Box::new(infection()), Box::new(MTurk::new(MTurkParams::default()).unwrap())];
        for model in &models {
            let ns = model.num_states();
            let z = if rng.gen() { random_simplex(ns, &mut rng) } else { random_sparse(ns, &mut rng) };
            let mu = random_strategy(ns, model.num_actions(), &mut rng);
            let next = mckean_vlasov(model, &z, &mu).unwrap();
            prop_assert!(next.probs().iter().all(|&p| p >= 0.0));
            prop_assert!((next.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn mckean_vlasov_is_monotone_in_field_and_strategy() {
    let inf = infection();
    let mut rng = seeded(11);
    for _ in 0..200 {
        let (z_low, z_high) = random_ordered_pair(25, &mut rng);
        let mut low: Vec<usize> = (0..25).map(|_| rng.gen_range(0..5)).collect();
        low.sort_unstable();
        let mut high: Vec<usize> = low.iter().map(|&a| (a + rng.gen_range(0..3)).min(4)).collect();
        // keep the raised strategy nondecreasing in s
        for s in 1..25 {
            high[s] = high[s].max(high[s - 1]);
        }
        let eps = rng.gen_range(0.0..0.79);
        let mu_low = TremblingStrategy::new(5, eps, low).unwrap();
        let mu_high = TremblingStrategy::new(5, eps, high).unwrap();
        assert!(mu_low.is_monotone() && mu_high.is_monotone() && mu_high.dominates(&mu_low));
        let next_low = mckean_vlasov(&inf, &z_low, &mu_low).unwrap();
        let next_high = mckean_vlasov(&inf, &z_high, &mu_high).unwrap();
        assert!(next_high.sd_dominates(&next_low, 0.0).unwrap());
    }
}

#[test]
fn mckean_vlasov_is_lipschitz_in_field_and_table() {
    let inf = infection();
    let eps = 0.3;
    let est = estimate_lipschitz(&inf, eps, 2000, &mut seeded(5)).unwrap().constants;
    let vmax = v_max(inf.gamma());
    let mut rng = seeded(6);
    for _ in 0..200 {
        let z1 = random_simplex(25, &mut rng);
        let z2 = if rng.gen() { random_simplex(25, &mut rng) } else { random_sparse(25, &mut rng) };
        let q1 = random_table(25, 5, vmax, &mut rng);
        let q2 = random_table(25, 5, vmax, &mut rng);
        let lhs = mckean_vlasov(&inf, &z1, &trembling_policy(&q1, eps).unwrap())
            .unwrap()
            .l1_distance(&mckean_vlasov(&inf, &z2, &trembling_policy(&q2, eps).unwrap()).unwrap())
            .unwrap();
        let rhs = (1.0 + est.c2) * z1.l1_distance(&z2).unwrap() + est.c3 * q1.sup_distance(&q2).unwrap();
        assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
    }
}

#[test]
fn next_mf_matches_exact_push_forward() {
    let inf = infection();
    let z = MeanField::uniform(25);
    let mu = trembling_policy(&QTable::zeros(25, 5), 0.3).unwrap();
    let exact = mckean_vlasov(&inf, &z, &mu).unwrap();
    let cfg = NextMfConfig { eps2: 1e-9, min_samples: 100_000, max_samples: 100_000 };
    let close = (0..100u64)
        .filter(|&t| {
            let est = next_mf_sampled(&inf, &z, &mu, cfg, &mut stream(21, &[t])).unwrap();
            assert_eq!(est.samples, 100_000);
            est.field.l1_distance(&exact).unwrap() <= 0.02
        })
        .count();
    assert!(close >= 95, "{close}/100 within 0.02");
}

/// Upper 0.001 quantile of the chi-square law with 4 degrees of freedom.
const CHI2_4DF_999: f64 = 18.467;

#[test]
fn sampler_agrees_with_kernel_on_a_coarse_projection() {
    let inf = infection();
    let z = MeanField::uniform(25);
    let draws = 100_000u32;
    for (i, (s, a)) in [(0, 0), (5, 1), (12, 4), (20, 2), (24, 0)].into_iter().enumerate() {
        let row = inf.kernel(s, a, &z).unwrap();
        let mut expected = [0.0f64; 5];
        for (t, p) in row.iter().enumerate() {
            expected[t / 5] += p * draws as f64;
        }
        let mut observed = [0u32; 5];
        let mut rng = stream(31, &[i as u64]);
        for _ in 0..draws {
            observed[inf.sample_next(s, a, &z, &mut rng) / 5] += 1;
        }
        let stat: f64 = observed
            .iter()
            .zip(&expected)
            .filter(|(_, &e)| e > 0.0)
            .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
            .sum();
        // cells with zero expected mass must stay empty
        assert!(observed.iter().zip(&expected).all(|(&o, &e)| e > 0.0 || o == 0));
        assert!(stat < CHI2_4DF_999, "(s={s}, a={a}) chi-square {stat}");
    }
}
