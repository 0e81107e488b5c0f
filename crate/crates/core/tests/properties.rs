use bai_core::algorithms::{drive, sr_schedule, AlmostTracking, BaiAlgorithm, SequentialHalving, DEFAULT_C_SUF};
use bai_core::allocation::{d_vector, round_allocation, stability, target_allocation_h1, Allocation, H1Allocation};
use bai_core::environment::GaussianEnvironment;
use bai_core::model::{h1, h2, h3, modified_mean};
use bai_core::simulation::replication_rng;
use bai_core::theory::{check_d_bounds, trackability_ratio, Axis};
use proptest::prelude::*;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn unique_best_means(max_k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, 2..=max_k).prop_filter("unique best", |v| {
        let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let second = v.iter().copied().filter(|&x| x < top).fold(f64::NEG_INFINITY, f64::max);
        v.iter().filter(|&&x| x == top).count() == 1 && top - second > 1e-3
    })
}

fn non_constant_means(max_k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, 2..=max_k).prop_filter("non-constant", |v| {
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        hi - lo > 1e-3
    })
}

fn paired_means(max_k: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..=max_k)
        .prop_flat_map(|k| (prop::collection::vec(-5.0..5.0f64, k), prop::collection::vec(-5.0..5.0f64, k)))
        .prop_filter("non-constant Q", |(q, _)| q.iter().any(|&x| x != q[0]))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn complexities_shift_and_scale(p in unique_best_means(30), shift in -10.0..10.0f64, s in 0.1..10.0f64) {
        let q: Vec<f64> = p.iter().map(|x| s * x + shift).collect();
        let f = s * s;
        prop_assert!(close(h1(&q).unwrap() * f, h1(&p).unwrap(), 1e-8));
        prop_assert!(close(h2(&q, false).unwrap() * f, h2(&p, false).unwrap(), 1e-8));
        prop_assert!(close(h3(&q).unwrap() * f, h3(&p).unwrap(), 1e-8));
    }

    #[test]
    fn modified_mean_within_top_range(p in unique_best_means(30)) {
        let mut s = p.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        for j in 2..=s.len() {
            let m = modified_mean(&s, j).unwrap();
            prop_assert!(m >= s[j - 1] && m <= s[0]);
        }
    }

    #[test]
    fn h3_band(p in unique_best_means(40)) {
        let r = h3(&p).unwrap() / h2(&p, true).unwrap();
        prop_assert!(r > 0.5 && r <= 1.0 + 1e-12, "ratio {}", r);
    }

    #[test]
    fn target_allocation_bounds(q in non_constant_means(64)) {
        let k = q.len() as f64;
        let w = target_allocation_h1(&q).unwrap();
        prop_assert!((w.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let floor = 1.0 / (4.0 * k * (2.0 + k.ln()));
        prop_assert!(w.weights().iter().all(|&x| x > 0.0 && x >= floor));
        let dv = d_vector(&q).unwrap();
        prop_assert!(dv.z <= 4.0 * (2.0 + k.ln()));
        let mut sorted = q.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        prop_assert!(check_d_bounds(&sorted).passed());
    }

    #[test]
    fn target_allocation_is_affine_invariant(q in non_constant_means(20), shift in -3.0..3.0f64, s in 0.2..5.0f64) {
        let moved: Vec<f64> = q.iter().map(|x| s * x + shift).collect();
        let a = target_allocation_h1(&q).unwrap();
        let b = target_allocation_h1(&moved).unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            prop_assert!(close(*x, *y, 1e-8));
        }
    }

    #[test]
    fn rounding_lemma(raw in prop::collection::vec(0.0..1.0f64, 2..=64), extra in 0u64..300, seed: u64) {
        prop_assume!(raw.iter().any(|&x| x > 0.0));
        let total: f64 = raw.iter().sum();
        let w = Allocation::new(raw.iter().map(|x| x / total).collect()).unwrap();
        let n = 2 * raw.len() as u64 + extra;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pulls = round_allocation(&w, n, &mut rng).unwrap();
        prop_assert_eq!(pulls.iter().sum::<u64>(), n);
        for (&c, &wi) in pulls.iter().zip(w.weights()) {
            prop_assert!(c as f64 >= wi * n as f64 / 4.0);
            prop_assert_eq!(c == 0, wi == 0.0);
        }
    }

    #[test]
    fn stability_shift_scale_invariant((q, p) in paired_means(6), shift in -3.0..3.0f64, s in 0.2..5.0f64) {
        let a = stability(&q, &p).unwrap();
        let qm: Vec<f64> = q.iter().map(|x| s * x + shift).collect();
        let pm: Vec<f64> = p.iter().map(|x| s * x + shift).collect();
        prop_assert!(close(a, stability(&qm, &pm).unwrap(), 1e-8));
    }

    #[test]
    fn sr_schedule_budget(k in 2usize..60, extra in 1u64..5000) {
        let t = k as u64 + extra;
        let s = sr_schedule(k, t).unwrap();
        prop_assert!(s.cumulative.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(s.total_pulls() <= t && s.total_pulls() + k as u64 >= t);
    }

    #[test]
    fn sh_never_exceeds_budget(k in 2usize..50, extra in 0u64..3000) {
        let min = k as u64 * bai_core::algorithms::ceil_log2(k) as u64;
        let t = min + extra;
        let means: Vec<f64> = (0..k).map(|i| -(i as f64)).collect();
        let mut sh = SequentialHalving::new(k, t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rec = drive(&mut sh, &GaussianEnvironment::noiseless(&means), t, &[t], &mut rng);
        prop_assert!(rec.pulls <= t);
        prop_assert_eq!(rec.recommendations[0].arm, 0);
    }

    #[test]
    fn replication_streams_are_reproducible(seed: u64, rep in 0u64..1000) {
        let mut a = replication_rng(seed, "9", "sr", rep);
        let mut b = replication_rng(seed, "9", "sr", rep);
        prop_assert_eq!(a.next_u64(), b.next_u64());
        let mut c = replication_rng(seed, "9", "sr", rep + 1);
        let mut d = replication_rng(seed, "9", "sh", rep);
        let x = replication_rng(seed, "9", "sr", rep).next_u64();
        prop_assert!(c.next_u64() != x && d.next_u64() != x);
    }
}

#[test]
fn almost_tracking_trace_is_trackable() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for trial in 0..100u64 {
        let p: Vec<f64> = if trial % 10 == 0 { vec![1.0, 0.6, 0.1] } else { vec![1.0, 0.3 + 0.005 * trial as f64] };
        let env = GaussianEnvironment::new(&bai_core::Instance::new("t", p.clone()).unwrap());
        let k = p.len();
        let mut alg = AlmostTracking::new(k, Arc::new(H1Allocation), 2 * k as u64, DEFAULT_C_SUF).unwrap();
        let t = 2 * k as u64 * 30;
        drive(&mut alg, &env, t, &[t], &mut rng);
        assert!(alg.trace().num_batches() >= 29);
        for row in &alg.trace().weights {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let step = if k == 3 { 0.1 } else { 0.05 };
        let r = trackability_ratio(alg.trace(), &p, Axis::new(-3.0, 3.0, step)).unwrap();
        assert!(r.lhs > 0.0 && r.rhs > 0.0 && r.ratio.is_finite() && r.ratio > 0.0, "trial {trial}: {r:?}");
        let _ = alg.recommend();
    }
}
