use otce::synth::simplex_centroids;
use otce::{f_otce, generate_task_pair, jc_otce, make_two_source_toy, Error, MetricConfig, SyntheticTaskSpec};

fn spec() -> SyntheticTaskSpec {
    SyntheticTaskSpec {
        classes: 3,
        dim: 4,
        samples_per_class: 20,
        centroid_separation: 4.0,
        domain_shift: 0.0,
        label_permutation_fraction: 0.0,
        seed: 5,
    }
}

#[test]
fn two_source_toy_separates_only_under_jc() {
    let (a, b, t) = make_two_source_toy::<f64>();
    let config = MetricConfig::default();
    let fa = f_otce(&a, &t, &config).unwrap().value;
    let fb = f_otce(&b, &t, &config).unwrap().value;
    let ja = jc_otce(&a, &t, &config).unwrap().value;
    let jb = jc_otce(&b, &t, &config).unwrap().value;
    assert!((fa - fb).abs() < 0.02, "{fa} {fb}");
    assert!(jb - ja > 0.05, "{ja} {jb}");
    for v in [fa, fb, ja, jb] {
        assert!(-(2f64.ln()) - 1e-12 <= v && v <= 0.0);
    }
    // frozen reference values
    assert!((fa - -0.5642).abs() < 5e-4, "{fa}");
    assert!((fb - -0.5623).abs() < 5e-4, "{fb}");
    assert!((ja - -0.5569).abs() < 5e-4, "{ja}");
    assert!(jb.abs() < 5e-4, "{jb}");
}

#[test]
fn unshifted_clean_pair_recovers_paired_score() {
    let (s, t) = generate_task_pair::<f64>(&spec()).unwrap();
    assert_eq!(s.features(), t.features());
    let v = f_otce(&s, &t, &MetricConfig::with_lambda(1e-3)).unwrap().value;
    assert!(v.abs() <= 1e-3, "{v}");
}

#[test]
fn fully_redrawn_labels_approach_uniform_entropy() {
    let s = SyntheticTaskSpec {
        classes: 2,
        samples_per_class: 200,
        dim: 2,
        label_permutation_fraction: 1.0,
        ..spec()
    };
    let mut total = 0.0;
    for seed in 0..5 {
        let (a, b) = generate_task_pair::<f64>(&SyntheticTaskSpec { seed, ..s }).unwrap();
        total += f_otce(&a, &b, &MetricConfig::default()).unwrap().value;
    }
    assert!((total / 5.0 + 2f64.ln()).abs() <= 0.05, "{}", total / 5.0);
}

#[test]
fn centroid_separation_is_honored() {
    let c = simplex_centroids(6, 9, 2.5).unwrap();
    for a in 0..6 {
        for b in a + 1..6 {
            let d: f64 = (&c.row(a) - &c.row(b)).mapv(|v| v * v).sum().sqrt();
            assert!(d >= 2.5 - 1e-12);
        }
    }
    assert!(matches!(
        simplex_centroids(6, 4, 2.5),
        Err(Error::InfeasibleSeparation { .. })
    ));
}

#[test]
fn invalid_specs_are_rejected() {
    for bad in [
        SyntheticTaskSpec { classes: 1, ..spec() },
        SyntheticTaskSpec { dim: 0, ..spec() },
        SyntheticTaskSpec {
            centroid_separation: 0.0,
            ..spec()
        },
        SyntheticTaskSpec {
            domain_shift: -1.0,
            ..spec()
        },
        SyntheticTaskSpec {
            label_permutation_fraction: 1.5,
            ..spec()
        },
    ] {
        assert!(matches!(generate_task_pair::<f64>(&bad), Err(Error::InvalidConfig(_))));
    }
}

#[test]
fn knobs_share_base_samples() {
    let (s0, _) = generate_task_pair::<f64>(&spec()).unwrap();
    let (s1, t1) = generate_task_pair::<f64>(&SyntheticTaskSpec {
        domain_shift: 2.0,
        label_permutation_fraction: 0.5,
        ..spec()
    })
    .unwrap();
    assert_eq!(s0, s1);
    assert_ne!(s1.features(), t1.features());
    // a rigid motion keeps pairwise distances
    let d = |x: ndarray::ArrayView2<f64>, i: usize, j: usize| (&x.row(i) - &x.row(j)).mapv(|v| v * v).sum();
    for (i, j) in [(0, 1), (3, 40), (17, 59)] {
        assert!((d(s1.features(), i, j) - d(t1.features(), i, j)).abs() < 1e-9);
    }
}
