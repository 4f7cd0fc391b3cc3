//! Classical realizability and optimal linear witnesses.
//!
//! For statistics `p` and forward matrix `A`, the best unit witness
//! `max_{||c|| = 1} [c . p - max_i c . a_i]` equals the Euclidean distance
//! from `p` to the classical polytope `conv(a_i)`, attained by
//! `c = (p - q*) / ||p - q*||` where `q*` is the nearest classical point.
//! The solver computes `q*`; the witness and its duality certificate follow.

mod mnp;

use serde::{Deserialize, Serialize};

use crate::io::float_strings;
use crate::phase_space::{dot, norm, ForwardMatrix, StatVector};
use crate::{Error, Result};

pub(crate) use mnp::argmax_columns;

/// Latent weights on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalWeights {
    weights: Vec<f64>,
}

impl ClassicalWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidStatistics("latent weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidStatistics(format!("latent weights sum to {total}")));
        }
        Ok(Self { weights })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Non-zero `(index, weight)` pairs.
    pub fn support(&self) -> Vec<(usize, f64)> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, &w)| (i, w))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct SparseWeights {
    len: usize,
    indices: Vec<usize>,
    #[serde(with = "float_strings")]
    weights: Vec<f64>,
}

impl Serialize for ClassicalWeights {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (indices, weights) = self.support().into_iter().unzip();
        SparseWeights {
            len: self.weights.len(),
            indices,
            weights,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClassicalWeights {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let sparse = SparseWeights::deserialize(d)?;
        let mut weights = vec![0.0; sparse.len];
        for (&i, &w) in sparse.indices.iter().zip(&sparse.weights) {
            *weights
                .get_mut(i)
                .ok_or_else(|| serde::de::Error::custom("weight index out of range"))? = w;
        }
        ClassicalWeights::new(weights).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Distance below which statistics count as classical. The solver runs
    /// until the duality gap is at most `tol^2` or the nearest point found
    /// so far is within `tol` of the statistics.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 200_000,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::config(format!(
                "solver tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("iteration cap must be positive"));
        }
        Ok(())
    }
}

/// Optimal witness and the nearest classical point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessResult {
    /// Unit-norm witness `c`.
    #[serde(with = "float_strings")]
    pub witness: Vec<f64>,
    /// `S_cl = max_i c . a_i`
    pub classical_bound: f64,
    /// `S = c . p`
    pub statistic: f64,
    /// `S - S_cl`
    pub gap: f64,
    /// Distance from `p` to the classical polytope.
    pub distance: f64,
    /// The statistics were found classical (`distance <= tol`); the witness
    /// is then the normalized uniform pattern and carries no information.
    pub classical: bool,
    pub weights: ClassicalWeights,
    /// `q* = A w*`
    #[serde(with = "float_strings")]
    pub nearest: Vec<f64>,
    pub iterations: usize,
    /// Frank-Wolfe duality gap of the nearest-point problem at termination.
    pub duality_gap: f64,
    /// `| (S - S_cl) - ||p - q*|| |`
    pub certificate_residual: f64,
}

impl WitnessResult {
    /// `Delta*`, the optimal witness gap.
    pub fn delta_star(&self) -> f64 {
        self.distance
    }
}

/// Classical bound `max_i c . a_i`.
pub fn s_cl(c: &[f64], matrix: &ForwardMatrix) -> Result<f64> {
    Ok(saturating_column(c, matrix)?.1)
}

/// Column attaining the classical bound (lowest index on ties) and the bound.
pub fn saturating_column(c: &[f64], matrix: &ForwardMatrix) -> Result<(usize, f64)> {
    Error::check_dim(matrix.rows(), c.len())?;
    if matrix.cols() == 0 {
        return Err(Error::config("forward matrix has no columns"));
    }
    Ok(argmax_columns(matrix.cols(), |i| matrix.column(i).dot(c)))
}

/// `Delta(c) = c . p - S_cl(c)`
pub fn witness_gap(c: &[f64], p: &StatVector, matrix: &ForwardMatrix) -> Result<f64> {
    Ok(p.dot(c)? - s_cl(c, matrix)?)
}

/// Normalized all-ones witness, returned when the statistics are classical.
pub fn uniform_witness(len: usize) -> Vec<f64> {
    vec![1.0 / (len as f64).sqrt(); len]
}

/// Nearest classical point to `p` and the optimal unit witness.
pub fn optimal_witness(p: &StatVector, matrix: &ForwardMatrix, options: &SolverOptions) -> Result<WitnessResult> {
    options.validate()?;
    Error::check_dim(matrix.rows(), p.len())?;
    Error::check_dim(matrix.outcomes(), p.outcomes())?;
    let target = p.values();
    let sol = mnp::min_norm_point(
        matrix,
        target,
        options.tol * options.tol,
        options.tol,
        options.max_iterations,
    )?;

    let mut w = vec![0.0; matrix.cols()];
    for &(i, l) in &sol.active {
        w[i] = l;
    }
    let residual: Vec<f64> = target.iter().zip(&sol.nearest).map(|(a, b)| a - b).collect();
    let distance = norm(&residual);
    let classical = distance <= options.tol;
    let witness = if classical {
        uniform_witness(target.len())
    } else {
        residual.iter().map(|r| r / distance).collect()
    };
    let statistic = dot(&witness, target);
    let classical_bound = s_cl(&witness, matrix)?;
    let gap = statistic - classical_bound;
    Ok(WitnessResult {
        witness,
        classical_bound,
        statistic,
        gap,
        distance,
        classical,
        weights: ClassicalWeights::new(w)?,
        nearest: sol.nearest,
        iterations: sol.iterations,
        duality_gap: sol.duality_gap,
        certificate_residual: (gap - distance).abs(),
    })
}

/// Whether `p` lies in the classical polytope up to distance `tol`.
pub fn classical_membership(p: &StatVector, matrix: &ForwardMatrix, tol: f64) -> Result<bool> {
    Ok(optimal_witness(p, matrix, &SolverOptions::with_tol(tol))?.classical)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> ForwardMatrix {
        ForwardMatrix::from_dense(2, 2, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn classical_bound_examples() {
        let a = toy();
        assert_eq!(s_cl(&[0.5, -0.5, -0.5, 0.5], &a).unwrap(), 0.0);
        assert_eq!(saturating_column(&[0.5, -0.5, -0.5, 0.5], &a).unwrap(), (0, 0.0));
        let id = ForwardMatrix::from_dense(1, 2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(s_cl(&[1.0, 0.0], &id).unwrap(), 1.0);
        assert!(s_cl(&[1.0], &id).is_err());
        // uniform witness: every column has block sums J
        let u = uniform_witness(4);
        assert!((s_cl(&u, &a).unwrap() - (2.0f64 / 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn toy_witness() {
        let p = StatVector::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let r = optimal_witness(&p, &toy(), &SolverOptions::default()).unwrap();
        assert!((r.distance - 1.0).abs() < 1e-12);
        assert!((r.gap - 1.0).abs() < 1e-12);
        for (c, e) in r.witness.iter().zip([0.5, -0.5, -0.5, 0.5]) {
            assert!((c - e).abs() < 1e-12);
        }
        assert!((r.weights.as_slice()[0] - 0.5).abs() < 1e-12);
        assert!(r.certificate_residual < 1e-12);
        assert!(!r.classical);
        assert!((witness_gap(&[0.5, -0.5, -0.5, 0.5], &p, &toy()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn vertex_is_classical() {
        let p = StatVector::new(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let r = optimal_witness(&p, &toy(), &SolverOptions::default()).unwrap();
        assert!(r.classical);
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.weights.as_slice(), &[1.0, 0.0]);
        assert!(r.gap.abs() <= 1e-8);
        assert!((norm(&r.witness) - 1.0).abs() < 1e-12);
        assert!(classical_membership(&p, &toy(), 1e-8).unwrap());
        let q = StatVector::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(!classical_membership(&q, &toy(), 1e-8).unwrap());
    }

    #[test]
    fn rejects_bad_options_and_dims() {
        let p = StatVector::new(1, 2, vec![1.0, 0.0]).unwrap();
        assert!(optimal_witness(&p, &toy(), &SolverOptions::default()).is_err());
        let q = StatVector::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(optimal_witness(&q, &toy(), &SolverOptions::with_tol(0.0)).is_err());
    }

    #[test]
    fn weights_serialize_sparsely() {
        let w = ClassicalWeights::new(vec![0.0, 0.25, 0.0, 0.75]).unwrap();
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(json, r#"{"len":4,"indices":[1,3],"weights":["0.25","0.75"]}"#);
        let back: ClassicalWeights = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
    }
}
