//! Wigner rotation matrices.
//!
//! Basis order is `m = j, j - 1, ..., -j` throughout; row/column `r`
//! corresponds to `m = j - r`.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Small-d matrix `d^j_{m' m}(beta) = <j m'| exp(-i beta J_y) |j m>` for
/// `2j = two_j`.
///
/// Built by adding one spin-1/2 quantum at a time in the Schwinger-boson
/// picture. Each step averages the two ways of reaching an entry (from the
/// same and from the previous column), which keeps the recursion stable for
/// large `j`; no factorials appear.
pub fn small_d(two_j: usize, beta: f64) -> DMatrix<f64> {
    let (c, s) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    // d[p][k]: p, k count "up" quanta, i.e. m' = p - j, m = k - j
    let mut d = vec![vec![1.0]];
    for n in 1..=two_j {
        let nf = n as f64;
        let at = |p: Option<usize>, k: Option<usize>| match (p, k) {
            (Some(p), Some(k)) if p < n && k < n => d[p][k],
            _ => 0.0,
        };
        let mut next = vec![vec![0.0; n + 1]; n + 1];
        for (p, row) in next.iter_mut().enumerate() {
            let (pf, up, dn) = (p as f64, Some(p), p.checked_sub(1));
            for (k, out) in row.iter_mut().enumerate() {
                let (kf, kk, kl) = (k as f64, Some(k), k.checked_sub(1));
                // multiplying by (-s a + c b) from (n-1, k), and by (c a + s b)
                // from (n-1, k-1), averaged with weights sqrt(n-k), sqrt(k)
                let from_k = c * (nf - pf).sqrt() * at(up, kk) - s * pf.sqrt() * at(dn, kk);
                let from_kl = s * (nf - pf).sqrt() * at(up, kl) + c * pf.sqrt() * at(dn, kl);
                *out = ((nf - kf).sqrt() * from_k + kf.sqrt() * from_kl) / nf;
            }
        }
        d = next;
    }
    let dim = two_j + 1;
    DMatrix::from_fn(dim, dim, |r, col| d[two_j - r][two_j - col])
}

/// `D(alpha, beta, gamma) = exp(-i alpha J_z) exp(-i beta J_y) exp(-i gamma J_z)`.
pub fn wigner_d(two_j: usize, alpha: f64, beta: f64, gamma: f64) -> DMatrix<Complex64> {
    let d = small_d(two_j, beta);
    let j = two_j as f64 / 2.0;
    DMatrix::from_fn(two_j + 1, two_j + 1, |r, c| {
        let (mp, m) = (j - r as f64, j - c as f64);
        Complex64::from_polar(d[(r, c)], -alpha * mp - gamma * m)
    })
}

/// The SO(3) rotation matching [`wigner_d`]: `R_z(alpha) R_y(beta) R_z(gamma)`.
pub fn rotation_matrix(alpha: f64, beta: f64, gamma: f64) -> [[f64; 3]; 3] {
    let rz = |t: f64| [[t.cos(), -t.sin(), 0.0], [t.sin(), t.cos(), 0.0], [0.0, 0.0, 1.0]];
    let ry = |t: f64| [[t.cos(), 0.0, t.sin()], [0.0, 1.0, 0.0], [-t.sin(), 0.0, t.cos()]];
    let mul = |a: [[f64; 3]; 3], b: [[f64; 3]; 3]| {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|l| a[i][l] * b[l][k]).sum();
            }
        }
        out
    };
    mul(mul(rz(alpha), ry(beta)), rz(gamma))
}

/// Spin operators `(J_x, J_y, J_z)` in the `|j m>` basis.
pub fn spin_operators(two_j: usize) -> [DMatrix<Complex64>; 3] {
    let dim = two_j + 1;
    let j = two_j as f64 / 2.0;
    let m = |r: usize| j - r as f64;
    // <m+1| J_+ |m> = sqrt(j(j+1) - m(m+1)); row r-1 holds m+1
    let mut jp = DMatrix::<Complex64>::zeros(dim, dim);
    for c in 1..dim {
        let mc = m(c);
        jp[(c - 1, c)] = Complex64::new((j * (j + 1.0) - mc * (mc + 1.0)).sqrt(), 0.0);
    }
    let jm = jp.adjoint();
    let half = Complex64::new(0.5, 0.0);
    let jx = (&jp + &jm) * half;
    let jy = (&jp - &jm) * Complex64::new(0.0, -0.5);
    let jz = DMatrix::from_fn(dim, dim, |r, c| Complex64::new(if r == c { m(r) } else { 0.0 }, 0.0));
    [jx, jy, jz]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_half_matrix() {
        let b = 0.7;
        let d = small_d(1, b);
        let (c, s) = ((b / 2.0).cos(), (b / 2.0).sin());
        let want = [[c, -s], [s, c]];
        for r in 0..2 {
            for k in 0..2 {
                assert!((d[(r, k)] - want[r][k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn spin_one_closed_form() {
        let b: f64 = 1.1;
        let d = small_d(2, b);
        let (cb, sb) = (b.cos(), b.sin());
        let r2 = 2f64.sqrt();
        let want = [
            [(1.0 + cb) / 2.0, -sb / r2, (1.0 - cb) / 2.0],
            [sb / r2, cb, -sb / r2],
            [(1.0 - cb) / 2.0, sb / r2, (1.0 + cb) / 2.0],
        ];
        for r in 0..3 {
            for k in 0..3 {
                assert!((d[(r, k)] - want[r][k]).abs() < 1e-14, "{r},{k}");
            }
        }
    }

    #[test]
    fn large_spin_stays_orthogonal() {
        let d = small_d(100, 2.3);
        let e = d.transpose() * &d - DMatrix::identity(101, 101);
        assert!(e.amax() < 1e-12, "{}", e.amax());
    }
}
