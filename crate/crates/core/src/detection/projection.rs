/// Euclidean projection of `v` onto the probability simplex.
///
/// Sort-based: with `u` sorted in decreasing order, the threshold is
/// `tau = (sum_{i <= rho} u_i - 1) / rho` for the largest `rho` with
/// `u_rho > tau`, and the projection is `max(v - tau, 0)`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (i, &x) in u.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if x > t {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

/// Project every length-`block` chunk of `v` onto the simplex.
pub fn project_blocks(v: &[f64], block: usize) -> Vec<f64> {
    v.chunks(block).flat_map(project_simplex).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dist2(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }

    #[test]
    fn points_on_the_simplex_are_fixed() {
        let p = [0.2, 0.3, 0.5];
        let q = project_simplex(&p);
        assert!(q.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-15));
        assert_eq!(project_simplex(&[5.0, 0.0, 0.0]), vec![1.0, 0.0, 0.0]);
        assert_eq!(project_simplex(&[0.0, 0.0]), vec![0.5, 0.5]);
    }

    /// Brute force over a lattice of the 2-simplex with spacing 1/400.
    fn brute_force_k3(v: &[f64]) -> (Vec<f64>, f64) {
        let n = 400;
        let mut best = (vec![], f64::INFINITY);
        for a in 0..=n {
            for b in 0..=(n - a) {
                let s = [a as f64 / n as f64, b as f64 / n as f64, (n - a - b) as f64 / n as f64];
                let d = dist2(&s, v);
                if d < best.1 {
                    best = (s.to_vec(), d);
                }
            }
        }
        best
    }

    #[test]
    fn matches_grid_oracle_on_three_outcome_blocks() {
        let cases = [
            [0.9, 0.4, -0.2],
            [-1.0, -0.5, 2.0],
            [0.3, 0.3, 0.3],
            [0.1, -0.05, 0.02],
            [1.2, 1.1, -3.0],
        ];
        let v: Vec<f64> = cases.iter().flatten().copied().collect();
        let q = project_blocks(&v, 3);
        for (block, qb) in v.chunks(3).zip(q.chunks(3)) {
            let (s, d) = brute_force_k3(block);
            let dq = dist2(qb, block);
            assert!(dq <= d + 1e-12, "projection worse than the lattice optimum");
            assert!(dist2(qb, &s).sqrt() < 2.0 / 400.0);
        }
    }

    proptest! {
        #[test]
        fn projection_satisfies_optimality(v in prop::collection::vec(-2.0f64..2.0, 1..30)) {
            let q = project_simplex(&v);
            prop_assert!(q.iter().all(|&x| x >= 0.0));
            prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            // variational inequality (v - q) . (e_k - q) <= 0 for every vertex
            let r: Vec<f64> = v.iter().zip(&q).map(|(a, b)| a - b).collect();
            let rq: f64 = r.iter().zip(&q).map(|(a, b)| a * b).sum();
            for &rk in &r {
                prop_assert!(rk - rq <= 1e-12);
            }
        }
    }
}
