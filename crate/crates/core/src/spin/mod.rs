//! Spin-j systems read out by coarse-grained directional thresholds.
//!
//! A readout context is a direction `n` and a threshold `m_th`; the outcome
//! is high when the spin projection on `n` exceeds the threshold. The
//! quantum activation statistics are compared with a classical model in
//! which a latent direction `Omega` on the sphere responds high iff
//! `j (n . Omega) > m_th`.

mod rotation;

pub use rotation::{rotation_matrix, small_d, spin_operators, wigner_d};

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::phase_space::{ForwardMatrix, StatVector};
use crate::witness::{optimal_witness, SolverOptions, WitnessResult};
use crate::{Error, Result};

/// Largest supported `2j`.
pub const MAX_TWO_J: usize = 200;
pub const DEFAULT_SPHERE_POINTS: usize = 10_000;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const UNIT_TOL: f64 = 1e-12;

fn check_two_j(two_j: usize) -> Result<()> {
    if two_j == 0 || two_j > MAX_TWO_J {
        return Err(Error::InvalidSpin(format!(
            "2j must lie in 1..={MAX_TWO_J}, got {two_j}"
        )));
    }
    Ok(())
}

/// Density matrix of a spin `j = two_j / 2` in the basis `m = j, ..., -j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    two_j: usize,
    rho: DMatrix<Complex64>,
}

impl SpinState {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(two_j: usize, rho: DMatrix<Complex64>) -> Result<Self> {
        check_two_j(two_j)?;
        let dim = two_j + 1;
        if rho.shape() != (dim, dim) {
            return Err(Error::InvalidSpin(format!(
                "density matrix is {}x{}, expected {dim}x{dim}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let herm = (&rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidSpin(format!(
                "density matrix is not Hermitian ({herm:.2e})"
            )));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidSpin(format!("trace is {tr}")));
        }
        let herm_part = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        let min_eig = herm_part.symmetric_eigenvalues().min();
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidSpin(format!("smallest eigenvalue is {min_eig:.3e}")));
        }
        Ok(Self { two_j, rho })
    }

    /// `|psi><psi|` for the normalized amplitudes `psi` (basis `m = j..-j`).
    pub fn pure(two_j: usize, psi: &[Complex64]) -> Result<Self> {
        check_two_j(two_j)?;
        if psi.len() != two_j + 1 {
            return Err(Error::InvalidSpin(format!(
                "state has {} amplitudes, expected {}",
                psi.len(),
                two_j + 1
            )));
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidSpin("zero state vector".into()));
        }
        let v = DVector::from_iterator(psi.len(), psi.iter().map(|z| z / norm));
        Self::new(two_j, &v * v.adjoint())
    }

    /// `|j, m>` with `m = two_m / 2`.
    pub fn basis(two_j: usize, two_m: i64) -> Result<Self> {
        check_two_j(two_j)?;
        let r = two_j as i64 - two_m;
        if two_m.abs() > two_j as i64 || r % 2 != 0 {
            return Err(Error::InvalidSpin(format!(
                "m = {}/2 is not a projection of j = {two_j}/2",
                two_m
            )));
        }
        let mut psi = vec![Complex64::new(0.0, 0.0); two_j + 1];
        psi[(r / 2) as usize] = Complex64::new(1.0, 0.0);
        Self::pure(two_j, &psi)
    }

    /// Spin coherent state `|j, j>` along the direction `(theta, phi)`.
    pub fn coherent(two_j: usize, theta: f64, phi: f64) -> Result<Self> {
        check_two_j(two_j)?;
        let d = wigner_d(two_j, phi, theta, 0.0);
        let psi: Vec<Complex64> = d.column(0).iter().copied().collect();
        Self::pure(two_j, &psi)
    }

    pub fn maximally_mixed(two_j: usize) -> Result<Self> {
        check_two_j(two_j)?;
        let dim = two_j + 1;
        Self::new(
            two_j,
            DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0),
        )
    }

    pub fn two_j(&self) -> usize {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn density(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    /// `U rho U^dagger` for a unitary `U` of matching dimension.
    pub fn transformed(&self, u: &DMatrix<Complex64>) -> Result<Self> {
        let rho = u * &self.rho * u.adjoint();
        // restore exact Hermiticity lost to round-off
        let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        Self::new(self.two_j, rho)
    }
}

/// Declarative description of a spin state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpinStateSpec {
    /// `|j, m>` with `m = two_m / 2`.
    Basis {
        two_m: i64,
    },
    Coherent {
        theta: f64,
        phi: f64,
    },
    MaximallyMixed,
}

impl SpinStateSpec {
    pub fn build(&self, two_j: usize) -> Result<SpinState> {
        match *self {
            Self::Basis { two_m } => SpinState::basis(two_j, two_m),
            Self::Coherent { theta, phi } => SpinState::coherent(two_j, theta, phi),
            Self::MaximallyMixed => SpinState::maximally_mixed(two_j),
        }
    }
}

/// A readout context: unit direction and activation threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    pub direction: [f64; 3],
    pub threshold: f64,
}

impl Readout {
    pub fn new(direction: [f64; 3], threshold: f64) -> Result<Self> {
        let n = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !((n - 1.0).abs() <= UNIT_TOL) {
            return Err(Error::InvalidSpin(format!("direction has norm {n}")));
        }
        if !threshold.is_finite() {
            return Err(Error::InvalidSpin("threshold must be finite".into()));
        }
        Ok(Self { direction, threshold })
    }

    /// Direction at polar angle `theta` and azimuth `phi`.
    pub fn from_angles(theta: f64, phi: f64, threshold: f64) -> Result<Self> {
        Self::new(
            [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()],
            threshold,
        )
    }

    /// `(theta, phi)` with `theta` in `[0, pi]` and `phi` in `(-pi, pi]`.
    pub fn angles(&self) -> (f64, f64) {
        let [x, y, z] = self.direction;
        (z.clamp(-1.0, 1.0).acos(), y.atan2(x))
    }

    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> Result<Self> {
        let d = self.direction;
        let v = [0, 1, 2].map(|i| (0..3).map(|k| r[i][k] * d[k]).sum::<f64>());
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        Self::new(v.map(|x| x / n), self.threshold)
    }
}

fn check_threshold(two_j: usize, m_th: f64) -> Result<()> {
    let j = two_j as f64 / 2.0;
    if !(m_th >= -j && m_th < j) {
        return Err(Error::InvalidSpin(format!("threshold {m_th} outside [-{j}, {j})")));
    }
    Ok(())
}

/// Eigenvectors of `n . J` as columns, column `r` with eigenvalue `j - r`.
pub fn direction_eigenbasis(two_j: usize, direction: [f64; 3]) -> Result<DMatrix<Complex64>> {
    check_two_j(two_j)?;
    let r = Readout::new(direction, 0.0)?;
    let (theta, phi) = r.angles();
    Ok(wigner_d(two_j, phi, theta, 0.0))
}

/// Activation POVM `(E_H, E_L)`: `E_H` projects onto the eigenvectors of
/// `n . J` with eigenvalue `m > m_th`.
pub fn activation_povm(two_j: usize, readout: &Readout) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    check_threshold(two_j, readout.threshold)?;
    let basis = direction_eigenbasis(two_j, readout.direction)?;
    let dim = two_j + 1;
    let j = two_j as f64 / 2.0;
    let mut e_h = DMatrix::<Complex64>::zeros(dim, dim);
    for r in (0..dim).filter(|&r| j - r as f64 > readout.threshold) {
        let v = basis.column(r);
        e_h += v * v.adjoint();
    }
    let e_l = DMatrix::identity(dim, dim) - &e_h;
    Ok((e_h, e_l))
}

/// `Tr(rho E_H)`.
pub fn activation_prob(state: &SpinState, readout: &Readout) -> Result<f64> {
    let two_j = state.two_j;
    check_threshold(two_j, readout.threshold)?;
    let basis = direction_eigenbasis(two_j, readout.direction)?;
    let j = state.j();
    let p: f64 = (0..=two_j)
        .filter(|&r| j - r as f64 > readout.threshold)
        .map(|r| {
            let v = basis.column(r);
            (v.adjoint() * &state.rho * v)[(0, 0)].re
        })
        .sum();
    Ok(p.clamp(0.0, 1.0))
}

/// Latent directions on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    points: Vec<[f64; 3]>,
}

impl SphereGrid {
    /// Fibonacci lattice of `n` near-uniform points.
    pub fn fibonacci(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("sphere grid needs at least one point"));
        }
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let points = (0..n)
            .map(|i| {
                let z = 1.0 - (2 * i + 1) as f64 / n as f64;
                let rho = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                [rho * phi.cos(), rho * phi.sin(), z]
            })
            .collect();
        Ok(Self { points })
    }

    pub fn from_points(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::config("sphere grid needs at least one point"));
        }
        for p in &points {
            Readout::new(*p, 0.0)?;
        }
        Ok(Self { points })
    }

    /// The grid followed by the antipodes of all its points.
    pub fn with_antipodes(&self) -> Self {
        let mut points = self.points.clone();
        points.extend(self.points.iter().map(|p| p.map(|x| -x)));
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }
}

/// Deterministic classical responses: latent direction `i` gives outcome
/// high (row `2 t`) under readout `t` iff `j (n_t . Omega_i) > m_th`, low
/// (row `2 t + 1`) otherwise.
pub fn classical_sphere_matrix(sphere: &SphereGrid, readouts: &[Readout], two_j: usize) -> Result<ForwardMatrix> {
    check_two_j(two_j)?;
    if readouts.is_empty() {
        return Err(Error::config("need at least one readout"));
    }
    let j = two_j as f64 / 2.0;
    let columns = sphere
        .points
        .par_iter()
        .map(|omega| {
            readouts
                .iter()
                .enumerate()
                .map(|(t, r)| {
                    let proj: f64 = (0..3).map(|k| r.direction[k] * omega[k]).sum();
                    let low = u32::from(!(j * proj > r.threshold));
                    (2 * t as u32 + low, 1.0)
                })
                .collect()
        })
        .collect();
    ForwardMatrix::from_columns(readouts.len(), 2, columns)
}

/// High/low activation statistics of `state` under every readout.
pub fn activation_statistics(state: &SpinState, readouts: &[Readout]) -> Result<StatVector> {
    if readouts.is_empty() {
        return Err(Error::config("need at least one readout"));
    }
    let probs = readouts
        .par_iter()
        .map(|r| activation_prob(state, r))
        .collect::<Result<Vec<_>>>()?;
    let values = probs.iter().flat_map(|&p| [p, 1.0 - p]).collect();
    StatVector::new(readouts.len(), 2, values)
}

/// Activation statistics of `state` and their optimal witness against the
/// classical sphere model.
pub fn run_spin_test(
    state: &SpinState,
    readouts: &[Readout],
    sphere: &SphereGrid,
    options: &SolverOptions,
) -> Result<(StatVector, WitnessResult)> {
    let p = activation_statistics(state, readouts)?;
    let a = classical_sphere_matrix(sphere, readouts, state.two_j)?;
    let w = optimal_witness(&p, &a, options)?;
    Ok((p, w))
}

/// Reads readouts from CSV rows `theta,phi,m_th` (angles in radians); a
/// header row is skipped.
pub fn read_readouts_csv<R: BufRead>(r: R) -> Result<Vec<Readout>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.starts_with(|c: char| c.is_ascii_alphabetic())) {
            continue;
        }
        let err = || Error::Format(format!("line {}: expected theta,phi,m_th", n + 1));
        let f: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| err()))
            .collect::<Result<_>>()?;
        if f.len() != 3 {
            return Err(err());
        }
        out.push(Readout::from_angles(f[0], f[1], f[2])?);
    }
    if out.is_empty() {
        return Err(Error::Format("no readouts".into()));
    }
    Ok(out)
}

pub fn write_readouts_csv<W: Write>(w: &mut W, readouts: &[Readout]) -> Result<()> {
    writeln!(w, "theta,phi,m_th")?;
    for r in readouts {
        let (t, p) = r.angles();
        writeln!(w, "{t},{p},{}", r.threshold)?;
    }
    Ok(())
}
