mod common;

use common::*;
use ctwm_core::{weighted_median, MedianOperator, Multiplicity};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn non_expansive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=12);
        let w = random_network(&mut rng, n);
        let (x, y) = (grid_state(&mut rng, n), uniform_state(&mut rng, n, -2.0, 2.0));
        let op = MedianOperator::new(&w);
        prop_assert!(sup_dist(&op.apply(&x).unwrap(), &op.apply(&y).unwrap()) <= sup_dist(&x, &y));
    }

    #[test]
    fn stays_in_range(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=12);
        let w = random_network(&mut rng, n);
        let x = uniform_state(&mut rng, n, -5.0, 5.0);
        let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        for m in MedianOperator::new(&w).apply(&x).unwrap().iter() {
            prop_assert!(lo <= *m && *m <= hi);
        }
    }

    #[test]
    fn translation_equivariant(seed in any::<u64>(), shift in -8i32..=8) {
        // grid values and half-integer shifts keep every sum exact
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=12);
        let w = random_network(&mut rng, n);
        let x = grid_state(&mut rng, n);
        let c = shift as f64 * 0.5;
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let op = MedianOperator::new(&w);
        let base: Vec<f64> = op.apply(&x).unwrap().iter().map(|v| v + c).collect();
        prop_assert_eq!(op.apply(&shifted).unwrap().into_inner(), base);
    }

    #[test]
    fn matches_definition_scan(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=8);
        let w = if rng.random_bool(0.5) { dyadic_matrix(&mut rng, n) } else { continuous_matrix(&mut rng, n) };
        let x = grid_state(&mut rng, n);
        prop_assert_eq!(MedianOperator::new(&w).apply(&x).unwrap().into_inner(), brute_median_operator(&x, &w));
    }

    #[test]
    fn standalone_median_matches_scan(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=8);
        let w = dyadic_matrix(&mut rng, n);
        let values = grid_state(&mut rng, n);
        let anchor = values[rng.random_range(0..n)];
        let got = weighted_median(&values, w.row(0), anchor).unwrap();
        prop_assert_eq!(got.value, brute_median(&values, w.row(0), anchor));
    }

    #[test]
    fn tie_iff_exact_half_split(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=8);
        let w = dyadic_matrix(&mut rng, n);
        let values = grid_state(&mut rng, n);
        let weights = w.row(0);
        let split = values.iter().any(|&z| {
            let below: f64 = values.iter().zip(weights).filter(|(v, _)| **v < z).map(|(_, w)| w).sum();
            let rest: f64 = values.iter().zip(weights).filter(|(v, _)| **v >= z).map(|(_, w)| w).sum();
            below == 0.5 && rest == 0.5
        });
        let r = weighted_median(&values, weights, values[0]).unwrap();
        prop_assert_eq!(matches!(r.multiplicity, Multiplicity::Tie { .. }), split);
    }
}
