#![allow(dead_code)]

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use latentbell::{ForwardMatrix, StatVector};
use rand::Rng as _;

/// Distance from `p` to the column hull of `a`, by an interior-point
/// solve of `min t  s.t. ||p - A w|| <= t, w >= 0, sum w = 1`.
pub fn socp_distance(a: &ForwardMatrix, p: &[f64]) -> f64 {
    let (m, n) = (a.rows(), a.cols());
    // variables (w_1..w_n, t); rows: sum w = 1 | -w <= 0 | (t, p - A w) in SOC
    let mut trip = (Vec::new(), Vec::new(), Vec::new());
    let mut push = |r: usize, c: usize, v: f64| {
        trip.0.push(r);
        trip.1.push(c);
        trip.2.push(v);
    };
    for i in 0..n {
        push(0, i, 1.0);
        push(1 + i, i, -1.0);
        for (r, v) in a.column_dense(i).into_iter().enumerate() {
            if v != 0.0 {
                push(2 + n + r, i, v);
            }
        }
    }
    push(1 + n, n, -1.0);
    let rows = 2 + n + m;
    let amat = CscMatrix::new_from_triplets(rows, n + 1, trip.0, trip.1, trip.2);
    let mut b = vec![0.0; rows];
    b[0] = 1.0;
    b[2 + n..].copy_from_slice(p);
    let mut q = vec![0.0; n + 1];
    q[n] = 1.0;
    let cones = [
        SupportedConeT::ZeroConeT(1),
        SupportedConeT::NonnegativeConeT(n),
        SupportedConeT::SecondOrderConeT(m + 1),
    ];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(1e-11)
        .tol_gap_rel(1e-11)
        .tol_feas(1e-11)
        .build()
        .unwrap();
    let pmat = CscMatrix::zeros((n + 1, n + 1));
    let mut solver = DefaultSolver::new(&pmat, &q, &amat, &b, &cones, settings).unwrap();
    solver.solve();
    assert!(
        matches!(
            solver.solution.status,
            SolverStatus::Solved | SolverStatus::AlmostSolved
        ),
        "{:?}",
        solver.solution.status
    );
    // evaluate the objective at the returned weights, projected to the simplex
    let w: Vec<f64> = solver.solution.x[..n].iter().map(|v| v.max(0.0)).collect();
    let s: f64 = w.iter().sum();
    let q = a.apply(&w.iter().map(|v| v / s).collect::<Vec<_>>()).unwrap();
    p.iter().zip(&q).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Random instance: `contexts x outcomes` statistics and `regions` columns,
/// half deterministic indicator columns and half stochastic ones.
pub fn random_instance(
    rng: &mut latentbell::rng::Rng,
    contexts: usize,
    outcomes: usize,
    regions: usize,
) -> (ForwardMatrix, StatVector) {
    let mut random_block = |sharp: bool| {
        let mut b: Vec<f64> = if sharp {
            let mut v = vec![0.0; outcomes];
            v[rng.random_range(0..outcomes)] = 1.0;
            v
        } else {
            (0..outcomes).map(|_| rng.random::<f64>()).collect()
        };
        let s: f64 = b.iter().sum();
        b.iter_mut().for_each(|x| *x /= s);
        b
    };
    let mut dense = Vec::with_capacity(contexts * outcomes * regions);
    for i in 0..regions {
        for _ in 0..contexts {
            dense.extend(random_block(i % 2 == 0));
        }
    }
    let p: Vec<f64> = (0..contexts).flat_map(|_| random_block(false)).collect();
    (
        ForwardMatrix::from_dense(contexts, outcomes, regions, &dense).unwrap(),
        StatVector::new(contexts, outcomes, p).unwrap(),
    )
}
