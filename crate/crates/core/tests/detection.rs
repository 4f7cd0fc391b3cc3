use std::sync::OnceLock;

use latentbell::detection::*;
use latentbell::pipeline::Pipeline;
use latentbell::rng;
use latentbell::{QuantumLatentModel, StatVector, WitnessResult};
use proptest::prelude::*;

struct Fixture {
    p_q: StatVector,
    p_cl: StatVector,
    witness: WitnessResult,
}

fn standard_fock() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let pipeline = Pipeline::standard().unwrap();
        let (p_q, witness) = pipeline.witness_for(&QuantumLatentModel::Fock1).unwrap();
        let p_cl = classical_saturator(&pipeline.matrix, &witness.witness).unwrap();
        Fixture { p_q, p_cl, witness }
    })
}

fn closed(f: &Fixture, alpha: f64, kappa: f64, sigma: f64) -> f64 {
    p_det_closed(
        alpha,
        kappa,
        sigma,
        &f.witness.witness,
        &f.p_q,
        f.witness.classical_bound,
    )
    .unwrap()
}

#[test]
fn saturator_attains_the_bound() {
    let f = standard_fock();
    assert_eq!(f.p_cl.dot(&f.witness.witness).unwrap(), f.witness.classical_bound);
}

#[test]
fn endpoints_of_the_closed_form() {
    let f = standard_fock();
    for kappa in [1.0, 2.0, 3.0] {
        for sigma in [0.005, 0.01, 0.02] {
            assert!((closed(f, 1.0, kappa, sigma) - normal_sf(kappa)).abs() <= 1e-12);
            let sigma_s = sigma; // unit witness
            let half = 1.0 - kappa * sigma_s / f.witness.gap;
            if (0.0..=1.0).contains(&half) {
                assert!((closed(f, half, kappa, sigma) - 0.5).abs() <= 1e-12);
            }
        }
    }
    assert!((closed(f, 1.0, 2.0, 0.01) - 0.022_750_131_948_179_2).abs() < 1e-12);
}

#[test]
fn large_gap_starts_at_one() {
    // gap 0.1, sigma 0.01, kappa 2, alpha 0: 1 - Phi(-8)
    let p = StatVector::new(1, 2, vec![1.0, 0.0]).unwrap();
    let c = [1.0, 0.0];
    let v = p_det_closed(0.0, 2.0, 0.01, &c, &p, 0.9).unwrap();
    assert!((v - (1.0 - 6.220_960_574_271_784e-16)).abs() < 1e-15);
}

/// Interior instance: every entry of the statistics and of every column is
/// at least 0.05, so the projection rarely activates at sigma = 0.01.
fn interior() -> Fixture {
    use rand::Rng as _;
    let (contexts, outcomes, regions) = (4, 5, 30);
    let mut r = rng::stream(42, 0);
    let mut block = || {
        let b: Vec<f64> = (0..outcomes).map(|_| 0.5 + r.random::<f64>()).collect();
        let s: f64 = b.iter().sum();
        b.into_iter().map(|x| x / s).collect::<Vec<_>>()
    };
    let dense: Vec<f64> = (0..regions * contexts).flat_map(|_| block()).collect();
    let a = latentbell::ForwardMatrix::from_dense(contexts, outcomes, regions, &dense).unwrap();
    let p_q = StatVector::new(contexts, outcomes, (0..contexts).flat_map(|_| block()).collect()).unwrap();
    let witness = latentbell::witness::optimal_witness(&p_q, &a, &Default::default()).unwrap();
    let p_cl = classical_saturator(&a, &witness.witness).unwrap();
    Fixture { p_q, p_cl, witness }
}

#[test]
fn monte_carlo_agrees_with_closed_form_on_interior_statistics() {
    let f = interior();
    assert!(f.witness.gap > 0.02);
    for sigma in [0.005, 0.01, 0.02] {
        for (n, alpha) in [0.0, 0.25, 0.5, 0.75, 0.9, 1.0].into_iter().enumerate() {
            let config = DetectionConfig {
                alpha,
                sigma,
                n_mc: 10_000,
                seed: 40 + n as u64,
                ..DetectionConfig::default()
            };
            let (freq, se) = p_det_mc(&config, &f.witness, &f.p_q, &f.p_cl).unwrap();
            let want = closed(&f, alpha, 2.0, sigma);
            assert!(
                (freq - want).abs() <= 0.03f64.max(3.0 * se),
                "sigma {sigma}, alpha {alpha}: {freq} vs {want}"
            );
        }
    }
}

#[test]
fn monte_carlo_noiseless_limits() {
    let f = standard_fock();
    let run = |alpha| {
        let config = DetectionConfig {
            alpha,
            sigma: 0.0,
            n_mc: 50,
            ..DetectionConfig::default()
        };
        p_det_mc(&config, &f.witness, &f.p_q, &f.p_cl).unwrap()
    };
    assert_eq!(run(0.0), (1.0, 0.0));
    assert_eq!(run(1.0), (0.0, 0.0));
}

#[test]
fn projection_lowers_the_fock_statistic() {
    // most entries of the Fock statistics sit at zero; clipping the noise
    // there and renormalizing biases c . p_obs downwards
    let f = standard_fock();
    let mut r = rng::stream(43, 0);
    let c = &f.witness.witness;
    let mean = (0..500)
        .map(|_| observe(&f.p_q, 0.01, &mut r).unwrap().dot(c).unwrap())
        .sum::<f64>()
        / 500.0;
    assert!(mean < f.witness.statistic - 0.01);
}

#[test]
fn observation_noise_has_the_stated_scale() {
    let f = standard_fock();
    let p = mix_alpha(&f.p_q, &f.p_cl, 0.3).unwrap();
    // an interior point: few entries near zero would be clipped
    let uniform = StatVector::new(25, 100, vec![0.01; 2500]).unwrap();
    let p = mix_alpha(&p, &uniform, 0.5).unwrap();
    let c = &f.witness.witness;
    let mut r = rng::stream(41, 0);
    let s: Vec<f64> = (0..10_000)
        .map(|_| observe(&p, 0.001, &mut r).unwrap().dot(c).unwrap())
        .collect();
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let sd = (s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (s.len() - 1) as f64).sqrt();
    assert!((sd / 0.001 - 1.0).abs() < 0.05, "{sd}");
}

#[test]
fn curve_is_reproducible_and_monotone() {
    let f = standard_fock();
    let alphas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let a = detection_curve(&alphas, 0.01, 2.0, 500, 7, &f.witness, &f.p_q, &f.p_cl).unwrap();
    let b = detection_curve(&alphas, 0.01, 2.0, 500, 7, &f.witness, &f.p_q, &f.p_cl).unwrap();
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[1].p_closed <= w[0].p_closed));
    assert!(a[0].p_closed > 0.999);
}

#[test]
fn heatmap_on_a_small_configuration() {
    let pipeline = Pipeline::uniform(4.0, 24, 6, 24).unwrap();
    let alphas = [0.0, 0.25, 0.5, 0.75, 1.0];
    let betas = [0.0, 0.3, 0.8, 1.0];
    for mode in [WitnessMode::Reoptimize, WitnessMode::Frozen] {
        let h = heatmap(&alphas, &betas, 0.01, 2.0, &pipeline, mode).unwrap();
        assert_eq!(h.rows.len(), betas.len());
        for row in &h.rows {
            // mu_alpha moves linearly towards S_cl: falling rows for a
            // positive witness gap, rising ones for a frozen witness that
            // undershoots the bound
            if row.witness_gap >= -1e-9 {
                assert!(row.p_det.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{row:?}");
            } else {
                assert_eq!(mode, WitnessMode::Frozen);
                assert!(row.p_det.windows(2).all(|w| w[1] + 1e-12 >= w[0]), "{row:?}");
            }
            assert!((row.p_det[4] - normal_sf(2.0)).abs() < 1e-12 || row.witness_gap <= 0.0);
            if row.beta >= 0.75 {
                assert!(row.classical);
                assert!(row.p_det.iter().all(|&p| p <= normal_sf(2.0) + 1e-3));
            }
        }
        assert!(h.rows[0].p_det[0] > 0.9);
    }
}

#[test]
fn heatmap_rejects_empty_grids() {
    let pipeline = Pipeline::uniform(4.0, 8, 3, 8).unwrap();
    assert!(heatmap(&[], &[0.0], 0.01, 2.0, &pipeline, WitnessMode::Reoptimize).is_err());
    assert!(heatmap(&[0.0], &[1.5], 0.01, 2.0, &pipeline, WitnessMode::Reoptimize).is_err());
}

proptest! {
    #[test]
    fn closed_form_monotonicity(
        a1 in 0.0..1.0f64, a2 in 0.0..1.0f64,
        k1 in 0.1..4.0f64, k2 in 0.1..4.0f64,
        sigma in 0.001..0.05f64,
        g1 in 0.0..0.5f64, g2 in 0.0..0.5f64,
    ) {
        let f = standard_fock();
        let (lo_a, hi_a) = (a1.min(a2), a1.max(a2));
        let (lo_k, hi_k) = (k1.min(k2), k1.max(k2));
        prop_assert!(closed(f, hi_a, lo_k, sigma) <= closed(f, lo_a, lo_k, sigma));
        prop_assert!(closed(f, lo_a, hi_k, sigma) <= closed(f, lo_a, lo_k, sigma));
        // larger gap: lower the classical bound
        let p = StatVector::new(1, 2, vec![1.0, 0.0]).unwrap();
        let c = [1.0, 0.0];
        let (lo_g, hi_g) = (g1.min(g2), g1.max(g2));
        let small = p_det_closed(lo_a, lo_k, sigma, &c, &p, 1.0 - lo_g).unwrap();
        let large = p_det_closed(lo_a, lo_k, sigma, &c, &p, 1.0 - hi_g).unwrap();
        prop_assert!(large >= small);
    }
}
