use proptest::prelude::*;
use qds_core::diffusion::ks_statistic;
use qds_core::montecarlo::{coin_marginal_exact, sample_initial};
use qds_core::phase::{CircleMap, Density, SineTerm};
use qds_core::transfer::{apply_transfer, inverse_branches, TransferOperator};

fn map_strategy() -> impl Strategy<Value = CircleMap> {
    (2u32..=3, prop::collection::vec((1u32..=3, -0.04f64..0.04), 0..3))
        .prop_map(|(d, terms)| CircleMap::new(d, terms.into_iter().map(|(freq, amp)| SineTerm { freq, amp })).unwrap())
}

fn density_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..3.0, 8).prop_map(|c| {
        (0..512)
            .map(|i| {
                let x = (i as f64 + 0.5) / 512.0;
                c.iter()
                    .enumerate()
                    .map(|(j, a)| a * (1.0 + (std::f64::consts::TAU * (j + 1) as f64 * x).cos()))
                    .sum::<f64>()
                    + 0.01
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn transfer_conserves_mass_and_sign(map in map_strategy(), h in density_strategy()) {
        let out = apply_transfer(&map, &h).unwrap();
        let before: f64 = h.iter().sum();
        let after: f64 = out.iter().sum();
        prop_assert!((before - after).abs() < 1e-10 * before);
        prop_assert!(out.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn transfer_is_linear(map in map_strategy(), h in density_strategy(), g in density_strategy(), a in -2.0f64..2.0) {
        let op = TransferOperator::new(&map, 512).unwrap();
        let mix: Vec<f64> = h.iter().zip(&g).map(|(x, y)| x + a * y).collect();
        let lhs = op.apply(&mix);
        let (lh, lg) = (op.apply(&h), op.apply(&g));
        for i in 0..lhs.len() {
            prop_assert!((lhs[i] - lh[i] - a * lg[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn preimages_map_back(map in map_strategy(), x in 0.0f64..1.0) {
        let branches = inverse_branches(&map, x).unwrap();
        prop_assert_eq!(branches.len(), map.degree() as usize);
        for b in branches {
            let back = map.apply(b.point);
            let gap = (back - x).abs().min(1.0 - (back - x).abs());
            prop_assert!(gap < 1e-12);
            prop_assert!((b.deriv - map.deriv(b.point)).abs() < 1e-12);
        }
    }

    #[test]
    fn ks_statistic_is_a_distance(sample in prop::collection::vec(-4.0f64..4.0, 100..300), var in 0.1f64..4.0) {
        let d = ks_statistic(&sample, var).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        let mut shuffled = sample.clone();
        shuffled.reverse();
        prop_assert_eq!(d, ks_statistic(&shuffled, var).unwrap());
    }

    #[test]
    fn coin_law_is_a_probability(n in 1usize..400) {
        let table = coin_marginal_exact(n).unwrap();
        let total: f64 = table.probs.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!((table.variance() - 1.0).abs() < 1e-10);
        for j in 0..=n {
            prop_assert!((table.probs[j] - table.probs[n - j]).abs() <= 1e-12 * table.probs[j]);
        }
    }

    #[test]
    fn sampling_is_reproducible(h in density_strategy(), seed in any::<u64>()) {
        let rho = Density::from_values(h).unwrap();
        let a = sample_initial(&rho, 64, seed, "rho").unwrap();
        prop_assert_eq!(&a, &sample_initial(&rho, 64, seed, "rho").unwrap());
        prop_assert!(a.points.iter().all(|x| (0.0..1.0).contains(x)));
    }
}
