//! Latent phase space, readout contexts and the forward model.

mod forward;
mod grid;
mod stats;
mod wigner;

pub use forward::{build_forward_matrix, Column, ForwardMatrix};
pub use grid::{ContextSet, LatentGrid, OutcomeBinning, DEFAULT_Y_MAX_FACTOR};
pub use stats::{StatVector, BLOCK_SUM_TOL};
pub use wigner::{wigner_fock1, wigner_mix, wigner_thermal1, QuantumLatentModel};

pub(crate) use stats::{dot, norm};

use crate::{Error, Result};

/// Default tolerance below which a binned marginal is treated as an error
/// instead of being clipped to zero.
pub const DEFAULT_NEGATIVE_TOLERANCE: f64 = 1e-2;

/// Discretized latent weights `W(z_i) * cell_area`.
pub fn latent_weights(model: &QuantumLatentModel, grid: &LatentGrid) -> Vec<f64> {
    let area = grid.cell_area();
    grid.points().map(|(z, e)| model.density(z, e) * area).collect()
}

/// `A w` for the discretized latent weights, before clipping and
/// normalization.
pub fn binned_marginals(model: &QuantumLatentModel, grid: &LatentGrid, matrix: &ForwardMatrix) -> Result<Vec<f64>> {
    matrix.apply(&latent_weights(model, grid))
}

/// Ideal statistics together with discretization diagnostics.
#[derive(Debug, Clone)]
pub struct IdealStatistics {
    pub stats: StatVector,
    /// Per-context mass of the binned marginals before normalization.
    pub block_mass: Vec<f64>,
    /// Smallest binned value before clipping.
    pub min_binned: f64,
    /// Number of negative binned values clipped to zero.
    pub clipped: usize,
    /// Total mass removed by clipping.
    pub clipped_mass: f64,
}

/// `p_q`: binned marginals with small negatives clipped and every context
/// block renormalized. Negatives below `-negative_tolerance` fail with
/// [`Error::NegativeMarginal`].
pub fn ideal_statistics_from_matrix(
    model: &QuantumLatentModel,
    grid: &LatentGrid,
    matrix: &ForwardMatrix,
    negative_tolerance: f64,
) -> Result<IdealStatistics> {
    Error::check_dim(grid.len(), matrix.cols())?;
    let k = matrix.outcomes();
    let mut binned = binned_marginals(model, grid, matrix)?;
    let block_mass = binned.chunks(k).map(|b| b.iter().sum()).collect();
    let min_binned = binned.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut clipped, mut clipped_mass) = (0, 0.0);
    for (r, v) in binned.iter_mut().enumerate() {
        if *v < -negative_tolerance {
            return Err(Error::NegativeMarginal {
                context: r / k,
                outcome: r % k,
                value: *v,
                tolerance: negative_tolerance,
            });
        }
        if *v < 0.0 {
            clipped += 1;
            clipped_mass -= *v;
            *v = 0.0;
        }
    }
    let stats = StatVector::normalized(matrix.contexts(), k, binned)?;
    Ok(IdealStatistics {
        stats,
        block_mass,
        min_binned,
        clipped,
        clipped_mass,
    })
}

/// Ideal statistics `p_q` for `model`, building the forward matrix on the way.
pub fn ideal_statistics(
    model: &QuantumLatentModel,
    grid: &LatentGrid,
    contexts: &ContextSet,
    binning: &OutcomeBinning,
) -> Result<StatVector> {
    let matrix = build_forward_matrix(grid, contexts, binning)?;
    Ok(ideal_statistics_from_matrix(model, grid, &matrix, DEFAULT_NEGATIVE_TOLERANCE)?.stats)
}
