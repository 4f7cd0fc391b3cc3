//! The phase-space pipeline: grid, contexts, binning and forward matrix
//! bundled with the options needed to go from a latent model to a witness.

use crate::phase_space::{
    build_forward_matrix, ideal_statistics_from_matrix, ContextSet, ForwardMatrix, IdealStatistics, LatentGrid,
    OutcomeBinning, QuantumLatentModel, StatVector, DEFAULT_NEGATIVE_TOLERANCE, DEFAULT_Y_MAX_FACTOR,
};
use crate::witness::{optimal_witness, SolverOptions, WitnessResult};
use crate::Result;

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub grid: LatentGrid,
    pub contexts: ContextSet,
    pub binning: OutcomeBinning,
    pub matrix: ForwardMatrix,
    pub negative_tolerance: f64,
    pub solver: SolverOptions,
}

impl Pipeline {
    pub fn new(grid: LatentGrid, contexts: ContextSet, binning: OutcomeBinning) -> Result<Self> {
        let matrix = build_forward_matrix(&grid, &contexts, &binning)?;
        Ok(Self {
            grid,
            contexts,
            binning,
            matrix,
            negative_tolerance: DEFAULT_NEGATIVE_TOLERANCE,
            solver: SolverOptions::default(),
        })
    }

    /// `n x n` grid over `[-L, L]^2`, `J` uniform angles, `K` bins with the
    /// default `y_max`.
    pub fn uniform(half_width: f64, points_per_axis: usize, contexts: usize, outcomes: usize) -> Result<Self> {
        let grid = LatentGrid::new(half_width, points_per_axis)?;
        let binning = OutcomeBinning::for_grid(outcomes, &grid, DEFAULT_Y_MAX_FACTOR)?;
        Self::new(grid, ContextSet::uniform(contexts)?, binning)
    }

    /// 100 x 100 grid over `[-4, 4]^2`, 25 contexts, 100 outcome bins.
    pub fn standard() -> Result<Self> {
        Self::uniform(4.0, 100, 25, 100)
    }

    pub fn with_solver(mut self, solver: SolverOptions) -> Self {
        self.solver = solver;
        self
    }

    pub fn ideal(&self, model: &QuantumLatentModel) -> Result<IdealStatistics> {
        ideal_statistics_from_matrix(model, &self.grid, &self.matrix, self.negative_tolerance)
    }

    /// Ideal statistics of `model` and their optimal witness.
    pub fn witness_for(&self, model: &QuantumLatentModel) -> Result<(StatVector, WitnessResult)> {
        let p = self.ideal(model)?.stats;
        let w = optimal_witness(&p, &self.matrix, &self.solver)?;
        Ok((p, w))
    }
}
