//! Bell-type nonclassicality tests for latent representations.
//!
//! A latent distribution over a discretized phase space is pushed through a
//! forward matrix to obtain readout statistics under several contexts. The
//! crate decides whether given statistics are reproducible by a single
//! non-negative latent distribution, computes the optimal linear witness
//! when they are not, and simulates noisy detection experiments.
//!
//! Modules:
//! - [`phase_space`]: latent grids, contexts, binnings, Wigner models and the forward matrix.
//! - [`witness`]: classical membership and optimal witnesses (min-norm point over the column hull).
//! - [`detection`]: noise model, decision rule, closed-form and Monte Carlo detection probabilities.
//! - [`empirical`]: finite-trial sampling, estimation, bootstrap and the end-to-end protocol.
//! - [`spin`]: spin-j activation readouts and a classical model on the sphere.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod empirical;
mod error;
pub mod io;
pub mod phase_space;
pub mod pipeline;
pub mod rng;
pub mod spin;
pub mod witness;

pub use error::{Error, Result};
pub use phase_space::{ContextSet, ForwardMatrix, LatentGrid, OutcomeBinning, QuantumLatentModel, StatVector};

pub use witness::{ClassicalWeights, SolverOptions, WitnessResult};
