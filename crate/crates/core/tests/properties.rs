use std::sync::OnceLock;

use additive_core::empirical::{empirical_moments, progression_values, ProgressionSpec};
use additive_core::functions::{builtin, eval, KolmogorovParams, BUILTIN_NAMES};
use additive_core::limitlaws::KolmogorovFunction;
use additive_core::model::{
    central_from_cumulants, cumulants_from_central, exact_moments, TwoValuedModel,
};
use additive_core::predictor::PrimeSumMode;
use additive_core::primes::{gcd, is_prime, primes_up_to_with, SpfTable};
use additive_core::sum::ExactSum;
use proptest::prelude::*;

fn shared_table() -> &'static SpfTable {
    static TABLE: OnceLock<SpfTable> = OnceLock::new();
    TABLE.get_or_init(|| SpfTable::new(1, 9_000_000).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sieve_matches_trial_division(n in 2u64..20_000, seg in 16usize..4096) {
        let set = primes_up_to_with(n, seg).unwrap();
        let brute: Vec<u64> = (2..=n).filter(|&m| is_prime(m)).collect();
        prop_assert_eq!(set.iter().collect::<Vec<_>>(), brute);
    }

    #[test]
    fn factorization_multiplies_back(lo in 1u64..5_000_000, len in 1u64..2000) {
        let table = SpfTable::new(lo, lo + len).unwrap();
        for m in lo..=lo + len {
            let f = table.factorize(m).unwrap();
            prop_assert_eq!(f.product(), m);
            prop_assert!(f.factors.iter().all(|&(p, _)| is_prime(p)));
            prop_assert!(f.factors.windows(2).all(|w| w[0].0 < w[1].0));
        }
    }

    #[test]
    fn builtins_are_additive(a in 1u64..3000, b in 1u64..3000, idx in 0usize..BUILTIN_NAMES.len()) {
        prop_assume!(gcd(a, b) == 1);
        let table = shared_table();
        let f = builtin(BUILTIN_NAMES[idx]).unwrap();
        let lhs = eval(&f, a * b, table).unwrap();
        let rhs = eval(&f, a, table).unwrap() + eval(&f, b, table).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn exact_sum_is_order_independent(mut xs in prop::collection::vec(-1e12f64..1e12, 1..200), seed in any::<u64>()) {
        let mut a = ExactSum::new();
        xs.iter().for_each(|&x| a.add(x));
        // deterministic shuffle
        let mut s = seed | 1;
        for i in (1..xs.len()).rev() {
            s ^= s << 13; s ^= s >> 7; s ^= s << 17;
            xs.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let (left, right) = xs.split_at(xs.len() / 2);
        let mut b = ExactSum::new();
        let mut c = ExactSum::new();
        left.iter().for_each(|&x| b.add(x));
        right.iter().for_each(|&x| c.add(x));
        b.merge(&c);
        prop_assert_eq!(a.value(), b.value());
    }

    #[test]
    fn cumulant_round_trip(k in prop::collection::vec(-3.0f64..3.0, 7)) {
        let mut kappa = vec![0.0, 0.0];
        kappa.push(k[0].abs() + 0.1);
        kappa.extend_from_slice(&k[1..]);
        let mu = central_from_cumulants(&kappa);
        let back = cumulants_from_central(&mu);
        for u in 2..kappa.len() {
            prop_assert!((back[u] - kappa[u]).abs() <= 1e-9 * (1.0 + kappa[u].abs() + mu[u].abs()));
        }
    }

    #[test]
    fn model_variance_is_sum_of_bernoulli_variances(
        values in prop::collection::vec(-5.0f64..5.0, 1..40),
    ) {
        let primes: Vec<u64> = (2..).filter(|&m| is_prime(m)).take(values.len()).collect();
        let entries: Vec<(u64, f64)> = primes.iter().copied().zip(values.iter().copied()).collect();
        let spec = ProgressionSpec::new(1, 1, 1000).unwrap();
        let model = TwoValuedModel::from_entries(entries.clone(), spec, PrimeSumMode::PaperProgression).unwrap();
        let m = exact_moments(&model, 4).unwrap();
        let var: f64 = entries.iter().map(|&(p, v)| v * v / p as f64 * (1.0 - 1.0 / p as f64)).sum();
        let mean: f64 = entries.iter().map(|&(p, v)| v / p as f64).sum();
        prop_assert!((m.variance - var).abs() <= 1e-12 * var.max(1.0));
        prop_assert!((m.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        prop_assert!(m.central_moment(4) >= m.variance * m.variance * (1.0 - 1e-12));
    }

    #[test]
    fn k_function_is_a_distribution_function(
        a in -5.0f64..0.0, c in 0.0f64..5.0, mu in 0.0f64..1.0, t in 0.0f64..1.0,
        us in prop::collection::vec(-8.0f64..8.0, 2..50),
    ) {
        let nu = t * (1.0 - mu);
        let mu = if a == 0.0 { 0.0 } else { mu };
        let nu = if c == 0.0 { 0.0 } else { nu };
        let kf = KolmogorovFunction::new(KolmogorovParams::new(a, c, mu, nu).unwrap()).unwrap();
        let mut us = us;
        us.sort_by(f64::total_cmp);
        let vals: Vec<f64> = us.iter().map(|&u| kf.eval(u)).collect();
        prop_assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn moments_match_direct_computation(k in 1u64..13, l in 1u64..13, n in 50u64..5000) {
        prop_assume!(l <= k && gcd(k, l) == 1 && n >= l);
        let spec = ProgressionSpec::new(k, l, n).unwrap();
        let f = builtin("big_omega").unwrap();
        let r = empirical_moments(&f, spec, 4).unwrap();
        let v = progression_values(&f, spec).unwrap();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        prop_assert_eq!(r.count as usize, v.len());
        prop_assert!((r.mean - mean).abs() < 1e-12 * mean.max(1.0));
        for u in 2..=4 {
            let m = v.iter().map(|x| (x - mean).powi(u as i32)).sum::<f64>() / v.len() as f64;
            prop_assert!((r.central_moment(u) - m).abs() < 1e-10 * m.abs().max(1.0));
        }
    }
}

#[test]
fn mean_minus_prime_sum_stays_bounded() {
    use additive_core::predictor::moment_sums;
    use additive_core::primes::primes_up_to;

    let primes = primes_up_to(1_000_000).unwrap();
    for name in ["omega", "log_phi_ratio", "log_p_sum"] {
        let f = builtin(name).unwrap();
        let gaps: Vec<f64> = [10_000, 100_000, 1_000_000]
            .iter()
            .map(|&n| {
                let spec = ProgressionSpec::new(1, 1, n).unwrap();
                let mean = empirical_moments(&f, spec, 2).unwrap().mean;
                let s1 = moment_sums(&f, spec, PrimeSumMode::PaperProgression, 1, &primes)
                    .unwrap()
                    .sum(1);
                mean - s1
            })
            .collect();
        let spread = gaps.iter().cloned().fold(f64::MIN, f64::max)
            - gaps.iter().cloned().fold(f64::MAX, f64::min);
        assert!(gaps.iter().all(|g| g.abs() < 1.0), "{name}: {gaps:?}");
        assert!(spread < 0.1, "{name}: {gaps:?}");
    }
}
