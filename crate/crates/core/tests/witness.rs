mod common;

use std::time::Instant;

use latentbell::witness::*;
use latentbell::{rng, ForwardMatrix, StatVector};
use proptest::prelude::*;
use rand::Rng as _;

fn toy() -> (ForwardMatrix, StatVector) {
    // two contexts, two outcomes; columns (1,0,1,0) and (0,1,0,1)
    let a = ForwardMatrix::from_dense(2, 2, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
    let p = StatVector::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    (a, p)
}

#[test]
fn toy_optimum_by_hull_scan() {
    // brute force over the one-parameter hull t a_1 + (1 - t) a_2
    let (a, p) = toy();
    let best = (0..=100_000)
        .map(|s| {
            let t = s as f64 / 100_000.0;
            let q = [t, 1.0 - t, t, 1.0 - t];
            q.iter()
                .zip(p.values())
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(f64::INFINITY, f64::min);
    let w = optimal_witness(&p, &a, &SolverOptions::default()).unwrap();
    assert!((w.distance - best).abs() < 1e-9);
    assert!((w.delta_star() - 1.0).abs() < 1e-6);
    for (c, e) in w.witness.iter().zip([0.5, -0.5, -0.5, 0.5]) {
        assert!((c - e).abs() < 1e-6);
    }
}

#[test]
fn matches_interior_point_oracle() {
    let mut r = rng::stream(11, 0);
    for n in 0..20 {
        let contexts = r.random_range(2..=4);
        let outcomes = r.random_range(2..=40 / contexts);
        let regions = r.random_range(3..=50);
        let (a, p) = common::random_instance(&mut r, contexts, outcomes, regions);
        let t = Instant::now();
        let w = optimal_witness(&p, &a, &SolverOptions::default()).unwrap();
        assert!(t.elapsed().as_secs_f64() < 1.0);
        let oracle = common::socp_distance(&a, p.values());
        assert!(
            (w.distance - oracle).abs() <= 1e-6,
            "instance {n}: {} vs {oracle}",
            w.distance
        );
    }
}

#[test]
fn hull_points_are_classical() {
    let mut r = rng::stream(12, 0);
    for _ in 0..10 {
        let (a, _) = common::random_instance(&mut r, 3, 6, 20);
        let mut weights: Vec<f64> = (0..20).map(|_| r.random::<f64>()).collect();
        let s: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|x| *x /= s);
        let p = StatVector::normalized(3, 6, a.apply(&weights).unwrap()).unwrap();
        let w = optimal_witness(&p, &a, &SolverOptions::default()).unwrap();
        assert!(w.classical && w.distance <= 1e-8);
        assert!(classical_membership(&p, &a, 1e-8).unwrap());
        let rebuilt = a.apply(w.weights.as_slice()).unwrap();
        let err = rebuilt
            .iter()
            .zip(p.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8);
    }
}

#[test]
fn certificate_is_consistent() {
    let mut r = rng::stream(13, 0);
    let (a, p) = common::random_instance(&mut r, 4, 8, 30);
    let w = optimal_witness(&p, &a, &SolverOptions::default()).unwrap();
    assert!(!w.classical);
    let norm = w.witness.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((norm - 1.0).abs() < 1e-12);
    assert!((w.statistic - p.dot(&w.witness).unwrap()).abs() < 1e-15);
    assert!((w.classical_bound - s_cl(&w.witness, &a).unwrap()).abs() < 1e-15);
    assert!(w.certificate_residual <= 1e-9);
    let nearest = a.apply(w.weights.as_slice()).unwrap();
    for (x, y) in nearest.iter().zip(&w.nearest) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn serialized_result_round_trips() {
    let (a, p) = toy();
    let w = optimal_witness(&p, &a, &SolverOptions::default()).unwrap();
    let s = serde_json::to_string(&w).unwrap();
    let back: WitnessResult = serde_json::from_str(&s).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), s);
    assert_eq!(back.witness, w.witness);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn no_unit_witness_beats_the_optimum(seed in any::<u64>()) {
        let mut r = rng::stream(seed, 0);
        let (a, p) = common::random_instance(&mut r, 3, 5, 12);
        let best = optimal_witness(&p, &a, &SolverOptions::default()).unwrap();
        prop_assert!(best.gap >= -1e-12);
        for _ in 0..20 {
            let c: Vec<f64> = (0..15).map(|_| r.random::<f64>() - 0.5).collect();
            let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            let c: Vec<f64> = c.iter().map(|x| x / n).collect();
            let g = witness_gap(&c, &p, &a).unwrap();
            prop_assert!(g <= best.delta_star() + 1e-9);
        }
    }

    #[test]
    fn vertices_have_zero_distance(seed in any::<u64>()) {
        let mut r = rng::stream(seed, 1);
        let (a, _) = common::random_instance(&mut r, 2, 4, 8);
        let i = r.random_range(0..8);
        let p = StatVector::normalized(2, 4, a.column_dense(i)).unwrap();
        let w = optimal_witness(&p, &a, &SolverOptions::default()).unwrap();
        prop_assert!(w.classical);
        // the witness bound never undercuts the statistic of a classical point
        prop_assert!(w.gap <= 1e-12);
    }
}

#[test]
fn random_classical_weights_are_sound() {
    let mut r = rng::stream(14, 0);
    let (a, _) = common::random_instance(&mut r, 3, 5, 25);
    for _ in 0..100 {
        let mut w: Vec<f64> = (0..25).map(|_| r.random::<f64>().powi(3)).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let p = StatVector::normalized(3, 5, a.apply(&w).unwrap()).unwrap();
        let res = optimal_witness(&p, &a, &SolverOptions::default()).unwrap();
        assert!(res.gap <= 1e-6);
    }
}

#[test]
fn witness_scaling_preserves_sign() {
    let mut r = rng::stream(15, 0);
    let (a, p) = common::random_instance(&mut r, 3, 4, 10);
    let c: Vec<f64> = (0..12).map(|_| r.random::<f64>() - 0.5).collect();
    let g = p.dot(&c).unwrap() - s_cl(&c, &a).unwrap();
    for s in [0.1, 3.0, 1e4] {
        let cs: Vec<f64> = c.iter().map(|x| x * s).collect();
        let gs = p.dot(&cs).unwrap() - s_cl(&cs, &a).unwrap();
        assert_eq!(g.signum(), gs.signum());
        assert!((gs - s * g).abs() <= 1e-12 * s.max(1.0));
    }
}

#[test]
fn full_scale_bound_matches_exhaustive_scan() {
    let p = latentbell::pipeline::Pipeline::standard().unwrap();
    let mut r = rng::stream(16, 0);
    for _ in 0..3 {
        let c: Vec<f64> = (0..p.matrix.rows()).map(|_| r.random::<f64>() - 0.5).collect();
        let scan = (0..p.matrix.cols())
            .map(|i| p.matrix.column_dense(i).iter().zip(&c).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((s_cl(&c, &p.matrix).unwrap() - scan).abs() < 1e-12);
    }
}

#[test]
fn downsampled_fock_matches_oracle() {
    let p = latentbell::pipeline::Pipeline::uniform(4.0, 20, 5, 20).unwrap();
    let (stats, w) = p.witness_for(&latentbell::QuantumLatentModel::Fock1).unwrap();
    let oracle = common::socp_distance(&p.matrix, stats.values());
    assert!(w.distance > 0.0);
    assert!((w.distance - oracle).abs() <= 1e-6, "{} vs {oracle}", w.distance);
}
