use ndarray::Array2;
use otce::ot::{sinkhorn, uniform_marginal, CostMatrix, SinkhornConfig};
use otce::synth::SyntheticTaskSpec;
use otce::{f_otce, generate_task_pair, jc_otce, kendall_tau, spearman_rho, FeatureSet, MetricConfig};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-5.0f64..5.0, rows * cols).prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

fn feature_set(max_n: usize, d: usize, classes: u32) -> impl Strategy<Value = FeatureSet<f64>> {
    (2..=max_n).prop_flat_map(move |n| {
        (matrix(n, d), prop::collection::vec(0..classes, n))
            .prop_map(move |(x, y)| FeatureSet::new("p", x, y, classes as usize).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sinkhorn_plans_are_feasible(
        cost in (1usize..8, 1usize..8).prop_flat_map(|(m, n)| prop::collection::vec(0.0f64..3.0, m * n)
            .prop_map(move |v| Array2::from_shape_vec((m, n), v).unwrap())),
        lambda in 0.05f64..2.0,
    ) {
        let (m, n) = cost.dim();
        let cost = CostMatrix::new(cost).unwrap();
        let r = sinkhorn(&cost, &uniform_marginal(m), &uniform_marginal(n), &SinkhornConfig::with_lambda(lambda)).unwrap();
        prop_assert!(r.coupling.values().iter().all(|&p| p >= 0.0));
        prop_assert!(r.transport_cost >= 0.0);
        if r.converged {
            prop_assert!(r.coupling.marginal_error() <= 1e-9);
        }
    }

    #[test]
    fn scores_lie_in_range(src in feature_set(12, 2, 3), tgt in feature_set(12, 2, 4), gamma in 0.0f64..=1.0) {
        let ct = tgt.present_classes().len().max(1) as f64;
        let floor = -ct.ln() - 1e-12;
        let f = f_otce(&src, &tgt, &MetricConfig::default()).unwrap().value;
        prop_assert!(floor <= f && f <= 0.0, "{}", f);
        let config = MetricConfig { gamma, ..MetricConfig::default() };
        let j = jc_otce(&src, &tgt, &config).unwrap().value;
        prop_assert!(floor <= j && j <= 0.0, "{}", j);
    }

    #[test]
    fn correlations_are_bounded_and_symmetric(
        pairs in prop::collection::vec((0u8..6, 0u8..6), 2..40),
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let tau = kendall_tau(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&tau));
        prop_assert_eq!(tau, kendall_tau(&b, &a).unwrap());
        if let Ok(rho) = spearman_rho(&a, &b) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&rho));
            prop_assert!((rho - spearman_rho(&b, &a).unwrap()).abs() <= 1e-15);
        }
    }

    #[test]
    fn synthetic_pairs_are_valid_and_deterministic(
        classes in 2usize..5,
        extra_dim in 0usize..3,
        shift in 0.0f64..3.0,
        fraction in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let spec = SyntheticTaskSpec {
            classes,
            dim: classes - 1 + extra_dim,
            samples_per_class: 4,
            centroid_separation: 3.0,
            domain_shift: shift,
            label_permutation_fraction: fraction,
            seed,
        };
        let (s1, t1) = generate_task_pair::<f64>(&spec).unwrap();
        let (s2, t2) = generate_task_pair::<f64>(&spec).unwrap();
        prop_assert_eq!(&s1, &s2);
        prop_assert_eq!(&t1, &t2);
        prop_assert_eq!(s1.len(), classes * 4);
        prop_assert_eq!(s1.class_counts(), vec![4; classes]);
        prop_assert_eq!(t1.class_count(), classes);
    }
}
