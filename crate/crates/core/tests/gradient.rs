mod common;

use common::*;
use ndarray::{concatenate, Array2, Axis};
use otce::guidance::{optimize_target_embeddings, GradConfig};
use otce::{f_otce_value_and_grad, FeatureSet, SinkhornConfig};

fn config(k: usize, lambda: f64) -> GradConfig {
    GradConfig {
        unroll_iterations: k,
        sinkhorn: SinkhornConfig::with_lambda(lambda),
        ..GradConfig::default()
    }
}

fn value(xs: &Array2<f64>, ys: &[u32], xt: &Array2<f64>, yt: &[u32], cfg: &GradConfig) -> f64 {
    f_otce_value_and_grad(xs.view(), ys, xt.view(), yt, cfg).unwrap().0
}

#[test]
fn matches_central_differences() {
    let cfg = config(50, 0.1);
    let h = 1e-5;
    let mut rng = rng(31);
    let mut checked = 0;
    while checked < 20 {
        let xs = gaussian(&mut rng, 5, 2);
        let xt = gaussian(&mut rng, 5, 2);
        let ys = labels(&mut rng, 5, 2);
        let yt = labels(&mut rng, 5, 3);
        let (_, grad) = f_otce_value_and_grad(xs.view(), &ys, xt.view(), &yt, &cfg).unwrap();
        for j in 0..5 {
            for k in 0..2 {
                let mut up = xt.clone();
                up[[j, k]] += h;
                let mut down = xt.clone();
                down[[j, k]] -= h;
                let fd = (value(&xs, &ys, &up, &yt, &cfg) - value(&xs, &ys, &down, &yt, &cfg)) / (2.0 * h);
                let err = (grad[[j, k]] - fd).abs();
                assert!(
                    err <= 1e-8 || err <= 1e-4 * fd.abs(),
                    "({j},{k}): {} vs {fd}",
                    grad[[j, k]]
                );
            }
        }
        checked += 1;
    }
}

#[test]
fn value_is_the_k_step_score() {
    let mut rng = rng(32);
    for k in [1, 5, 50] {
        let xs = gaussian(&mut rng, 6, 3);
        let xt = gaussian(&mut rng, 4, 3);
        let ys = labels(&mut rng, 6, 3);
        let yt = labels(&mut rng, 4, 2);
        let got = value(&xs, &ys, &xt, &yt, &config(k, 0.5));
        let want = nce_oracle(&naive_sinkhorn(&sq_dist(&xs, &xt), 0.5, k), &ys, &yt);
        assert!((got - want).abs() < 1e-12, "k={k}: {got} vs {want}");
    }
}

#[test]
fn duplicated_rows_split_the_gradient() {
    let cfg = config(50, 0.1);
    let mut rng = rng(33);
    for _ in 0..5 {
        let xs = gaussian(&mut rng, 5, 2);
        let xt = gaussian(&mut rng, 4, 2);
        let ys = labels(&mut rng, 5, 2);
        let yt = labels(&mut rng, 4, 2);
        let (v, g) = f_otce_value_and_grad(xs.view(), &ys, xt.view(), &yt, &cfg).unwrap();

        // every row duplicated: uniform weights stay uniform per original sample
        let xt2 = concatenate![Axis(0), xt.view(), xt.view()];
        let yt2: Vec<u32> = yt.iter().chain(&yt).copied().collect();
        let (v2, g2) = f_otce_value_and_grad(xs.view(), &ys, xt2.view(), &yt2, &cfg).unwrap();
        assert!((v - v2).abs() <= 1e-8, "{v} vs {v2}");
        for j in 0..4 {
            for k in 0..2 {
                assert!((g2[[j, k]] - g2[[j + 4, k]]).abs() <= 1e-8);
                assert!((g2[[j, k]] + g2[[j + 4, k]] - g[[j, k]]).abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn common_translation_changes_nothing() {
    let cfg = config(30, 0.1);
    let mut rng = rng(34);
    let xs = gaussian(&mut rng, 7, 3);
    let xt = gaussian(&mut rng, 6, 3);
    let ys = labels(&mut rng, 7, 3);
    let yt = labels(&mut rng, 6, 3);
    let offset = ndarray::array![5.0, -2.0, 0.5];
    let a = value(&xs, &ys, &xt, &yt, &cfg);
    let b = value(&(&xs + &offset), &ys, &(&xt + &offset), &yt, &cfg);
    assert!((a - b).abs() <= 1e-9);
}

#[test]
fn single_target_class_is_flat() {
    let mut rng = rng(35);
    let xs = gaussian(&mut rng, 6, 2);
    let xt = gaussian(&mut rng, 5, 2);
    let (v, g) =
        f_otce_value_and_grad(xs.view(), &labels(&mut rng, 6, 3), xt.view(), &[0; 5], &config(40, 0.1)).unwrap();
    assert_eq!(v, 0.0);
    assert!(g.iter().all(|x| x.abs() <= 1e-10));
}

fn task(seed: u64) -> (FeatureSet<f64>, FeatureSet<f64>) {
    let mut rng = rng(seed);
    (random_set(&mut rng, 30, 3, 3), random_set(&mut rng, 40, 3, 3))
}

#[test]
fn zero_steps_is_identity() {
    let (s, t) = task(36);
    let cfg = GradConfig {
        steps: 0,
        ..GradConfig::default()
    };
    let run = optimize_target_embeddings(&s, &t, &cfg).unwrap();
    assert_eq!(run.target.features(), t.features());
    assert_eq!(run.target.labels(), t.labels());
    assert!(run.trace.is_empty());
}

#[test]
fn zero_learning_rate_gives_flat_trace() {
    let (s, t) = task(37);
    let cfg = GradConfig {
        steps: 6,
        learning_rate: 0.0,
        target_batch: 40,
        ..GradConfig::default()
    };
    let run = optimize_target_embeddings(&s, &t, &cfg).unwrap();
    assert_eq!(run.target.features(), t.features());
    assert_eq!(run.trace.len(), 6);
    assert!(run.trace.iter().all(|r| r.f_otce == run.trace[0].f_otce));
}

#[test]
fn runs_are_reproducible() {
    let (s, t) = task(38);
    let cfg = GradConfig {
        steps: 8,
        learning_rate: 0.5,
        source_batch: 20,
        target_batch: 15,
        seed: 4,
        ..GradConfig::default()
    };
    let a = optimize_target_embeddings(&s, &t, &cfg).unwrap();
    let b = optimize_target_embeddings(&s, &t, &cfg).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.target, b.target);
    assert!(a.trace.iter().enumerate().all(|(i, r)| r.step == i));
}
