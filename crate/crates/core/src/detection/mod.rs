//! Noisy detection experiments.
//!
//! The observed mean statistics interpolate between the ideal statistics and
//! a classical point saturating the witness bound,
//! `p_alpha = (1 - alpha) p_q + alpha p_cl`. Observations add isotropic
//! Gaussian noise and are projected back onto valid conditional
//! distributions. Nonclassicality is declared when
//! `S_obs > S_cl + kappa sigma_S`.

mod normal;
mod projection;

pub use normal::{normal_cdf, normal_sf};
pub use projection::{project_blocks, project_simplex};

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::phase_space::{dot, norm, ForwardMatrix, StatVector};
use crate::rng::{self, Rng};
use crate::witness::{saturating_column, WitnessResult};
use crate::{Error, Result};

pub const DEFAULT_KAPPA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    /// Classical admixture.
    pub alpha: f64,
    /// Thermal weight of the latent state.
    pub beta: f64,
    /// Noise standard deviation per statistics entry.
    pub sigma: f64,
    pub kappa: f64,
    pub n_mc: usize,
    pub seed: u64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            sigma: 0.01,
            kappa: DEFAULT_KAPPA,
            n_mc: 10_000,
            seed: 0,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        check_unit("alpha", self.alpha)?;
        check_unit("beta", self.beta)?;
        check_sigma(self.sigma)?;
        check_kappa(self.kappa)?;
        if self.n_mc == 0 {
            return Err(Error::config("need at least one Monte Carlo repetition"));
        }
        Ok(())
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must lie in [0, 1], got {v}")))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("sigma must be non-negative, got {sigma}")))
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("kappa must be positive, got {kappa}")))
    }
}

/// Isotropic Gaussian noise vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub xi: Vec<f64>,
}

impl NoiseRealization {
    pub fn draw(len: usize, sigma: f64, rng: &mut Rng) -> Self {
        let xi = (0..len).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
        Self { xi }
    }
}

/// The column `a_i*` maximizing `c . a_i` (lowest index on ties).
pub fn classical_saturator(matrix: &ForwardMatrix, c: &[f64]) -> Result<StatVector> {
    let (i, _) = saturating_column(c, matrix)?;
    StatVector::new(matrix.contexts(), matrix.outcomes(), matrix.column_dense(i))
}

/// `(1 - alpha) p_q + alpha p_cl`
pub fn mix_alpha(p_q: &StatVector, p_cl: &StatVector, alpha: f64) -> Result<StatVector> {
    check_unit("alpha", alpha)?;
    Error::check_dim(p_q.len(), p_cl.len())?;
    Error::check_dim(p_q.outcomes(), p_cl.outcomes())?;
    let values = p_q
        .values()
        .iter()
        .zip(p_cl.values())
        .map(|(q, c)| (1.0 - alpha) * q + alpha * c)
        .collect();
    StatVector::new(p_q.contexts(), p_q.outcomes(), values)
}

/// `p_obs`: Gaussian noise of standard deviation `sigma` on every entry,
/// then per-context Euclidean projection onto the simplex.
pub fn observe(p_alpha: &StatVector, sigma: f64, rng: &mut Rng) -> Result<StatVector> {
    check_sigma(sigma)?;
    if sigma == 0.0 {
        return Ok(p_alpha.clone());
    }
    let noise = NoiseRealization::draw(p_alpha.len(), sigma, rng);
    let noisy: Vec<f64> = p_alpha.values().iter().zip(&noise.xi).map(|(p, x)| p + x).collect();
    StatVector::new(
        p_alpha.contexts(),
        p_alpha.outcomes(),
        project_blocks(&noisy, p_alpha.outcomes()),
    )
}

/// Decision rule `S_obs > S_cl + kappa sigma_S` (strict).
pub fn detect(s_obs: f64, s_cl: f64, kappa: f64, sigma_s: f64) -> bool {
    s_obs > s_cl + kappa * sigma_s
}

/// Closed-form detection probability
/// `1 - Phi((S_cl + kappa sigma_S - mu_alpha) / sigma_S)` with
/// `mu_alpha = (1 - alpha) c . p_q + alpha S_cl` and `sigma_S = sigma ||c||`.
/// At `sigma = 0` this is the step `[mu_alpha > S_cl]`.
pub fn p_det_closed(alpha: f64, kappa: f64, sigma: f64, c: &[f64], p_q: &StatVector, s_cl: f64) -> Result<f64> {
    check_unit("alpha", alpha)?;
    check_kappa(kappa)?;
    check_sigma(sigma)?;
    // mu_alpha - S_cl, formed so that it is exactly linear in alpha
    let margin = (1.0 - alpha) * (p_q.dot(c)? - s_cl);
    let sigma_s = sigma * norm(c);
    if sigma_s == 0.0 {
        return Ok(if margin > 0.0 { 1.0 } else { 0.0 });
    }
    Ok(normal_sf((kappa * sigma_s - margin) / sigma_s))
}

/// Monte Carlo estimate of the detection probability including the
/// projection step. Returns the detection frequency and its binomial
/// standard error. Repetition `r` draws from stream `r` of `config.seed`.
pub fn p_det_mc(
    config: &DetectionConfig,
    witness: &WitnessResult,
    p_q: &StatVector,
    p_cl: &StatVector,
) -> Result<(f64, f64)> {
    config.validate()?;
    let c = &witness.witness;
    Error::check_dim(p_q.len(), c.len())?;
    let p_alpha = mix_alpha(p_q, p_cl, config.alpha)?;
    let sigma_s = config.sigma * norm(c);
    let s_cl = witness.classical_bound;
    let hits: usize = (0..config.n_mc as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(config.seed, r);
            let p_obs = observe(&p_alpha, config.sigma, &mut rng)?;
            Ok(usize::from(detect(dot(p_obs.values(), c), s_cl, config.kappa, sigma_s)))
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum();
    let n = config.n_mc as f64;
    let freq = hits as f64 / n;
    Ok((freq, (freq * (1.0 - freq) / n).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha: f64,
    pub p_closed: f64,
    pub p_mc: f64,
    pub mc_stderr: f64,
}

/// Closed-form and Monte Carlo detection probability over `alphas`. Each
/// alpha uses its own derived seed.
#[allow(clippy::too_many_arguments)]
pub fn detection_curve(
    alphas: &[f64],
    sigma: f64,
    kappa: f64,
    n_mc: usize,
    seed: u64,
    witness: &WitnessResult,
    p_q: &StatVector,
    p_cl: &StatVector,
) -> Result<Vec<CurvePoint>> {
    alphas
        .iter()
        .enumerate()
        .map(|(n, &alpha)| {
            let config = DetectionConfig {
                alpha,
                beta: 0.0,
                sigma,
                kappa,
                n_mc,
                seed: rng::derive_seed(seed, n as u64),
            };
            let p_closed = p_det_closed(alpha, kappa, sigma, &witness.witness, p_q, witness.classical_bound)?;
            let (p_mc, mc_stderr) = p_det_mc(&config, witness, p_q, p_cl)?;
            Ok(CurvePoint {
                alpha,
                p_closed,
                p_mc,
                mc_stderr,
            })
        })
        .collect()
}

/// How the heatmap chooses the witness for each beta row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessMode {
    /// Re-optimize the witness for every beta.
    Reoptimize,
    /// Keep the witness optimized for the first beta of the grid.
    Frozen,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatmapRow {
    pub beta: f64,
    /// Optimal gap for this beta's statistics.
    pub delta_star: f64,
    /// Gap `c . p_q - S_cl` of the witness actually used.
    pub witness_gap: f64,
    pub classical: bool,
    pub iterations: usize,
    pub p_det: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Heatmap {
    pub alphas: Vec<f64>,
    pub sigma: f64,
    pub kappa: f64,
    pub mode: WitnessMode,
    pub rows: Vec<HeatmapRow>,
}

/// Closed-form detection probability over an `(alpha, beta)` grid. Rows are
/// betas, columns alphas.
pub fn heatmap(
    alphas: &[f64],
    betas: &[f64],
    sigma: f64,
    kappa: f64,
    pipeline: &crate::pipeline::Pipeline,
    mode: WitnessMode,
) -> Result<Heatmap> {
    if alphas.is_empty() || betas.is_empty() {
        return Err(Error::config("heatmap grids must be non-empty"));
    }
    alphas.iter().try_for_each(|&a| check_unit("alpha", a))?;
    betas.iter().try_for_each(|&b| check_unit("beta", b))?;
    check_sigma(sigma)?;
    check_kappa(kappa)?;

    let solve = |beta: f64| -> Result<(StatVector, WitnessResult)> {
        pipeline.witness_for(&crate::QuantumLatentModel::mix(beta)?)
    };
    let frozen = match mode {
        WitnessMode::Frozen => Some(solve(betas[0])?.1),
        WitnessMode::Reoptimize => None,
    };
    let rows = betas
        .par_iter()
        .map(|&beta| {
            let (p_q, own) = solve(beta)?;
            let used = frozen.as_ref().unwrap_or(&own);
            let p_det = alphas
                .iter()
                .map(|&a| p_det_closed(a, kappa, sigma, &used.witness, &p_q, used.classical_bound))
                .collect::<Result<Vec<_>>>()?;
            Ok(HeatmapRow {
                beta,
                delta_star: own.distance,
                witness_gap: p_q.dot(&used.witness)? - used.classical_bound,
                classical: own.classical,
                iterations: own.iterations,
                p_det,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Heatmap {
        alphas: alphas.to_vec(),
        sigma,
        kappa,
        mode,
        rows,
    })
}
