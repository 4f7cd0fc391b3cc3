//! The operational protocol with finitely many trials.
//!
//! Outcomes are sampled context by context, the statistics are estimated by
//! relative frequencies, the forward matrix by region-labelled held-out
//! trials, and the spread of the witness statistic by resampling trials
//! within each context.

mod log;

pub use log::{read_trial_log, write_trial_log, TrialLogMeta};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::Binomial;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detection::detect;
use crate::phase_space::{dot, ForwardMatrix, StatVector, BLOCK_SUM_TOL};
use crate::rng::{self, Rng};
use crate::witness::WitnessResult;
use crate::{Error, Result};

pub const DEFAULT_BOOTSTRAP: usize = 1000;
pub const DEFAULT_SPLIT: f64 = 0.5;

/// One readout: the context it was taken under, the binned outcome and,
/// for calibration trials, the latent region that was prepared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub context: usize,
    pub outcome: usize,
    pub region: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialBudget {
    /// Trials per context.
    pub trials_per_context: usize,
    /// Bootstrap resamples.
    pub bootstrap: usize,
    /// Fraction of region-labelled trials held out for the forward matrix.
    pub split: f64,
}

impl TrialBudget {
    pub fn new(trials_per_context: usize) -> Self {
        Self {
            trials_per_context,
            bootstrap: DEFAULT_BOOTSTRAP,
            split: DEFAULT_SPLIT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_context == 0 {
            return Err(Error::config("need at least one trial per context"));
        }
        if self.bootstrap < 2 {
            return Err(Error::config("need at least two bootstrap resamples"));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::config(format!("split must lie in (0, 1), got {}", self.split)));
        }
        Ok(())
    }
}

fn check_block(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidStatistics("empty outcome distribution".into()));
    }
    if let Some(v) = p.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidStatistics(format!("negative outcome probability {v}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > BLOCK_SUM_TOL {
        return Err(Error::InvalidStatistics(format!("outcome distribution sums to {s}")));
    }
    Ok(())
}

/// Multinomial outcome counts of `m` trials drawn from `p_block`.
pub fn sample_context(p_block: &[f64], m: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    check_block(p_block)?;
    // sequential conditional binomials
    let mut counts = vec![0; p_block.len()];
    let mut left = m as u64;
    let mut mass = 1.0;
    for (k, &p) in p_block.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == p_block.len() {
            counts[k] = left as usize;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let n = Binomial::new(left, q)
            .map_err(|e| Error::InvalidStatistics(e.to_string()))?
            .sample(rng);
        counts[k] = n as usize;
        left -= n;
        mass -= p;
    }
    Ok(counts)
}

/// `m` trials per context drawn from `p`. Context `j` uses stream `j` of
/// `seed`; trial ids run context-major from zero.
pub fn simulate_trials(p: &StatVector, m: usize, seed: u64) -> Result<Vec<TrialRecord>> {
    let per_context = (0..p.contexts())
        .into_par_iter()
        .map(|j| {
            let mut rng = rng::stream(seed, j as u64);
            let dist =
                WeightedIndex::new(p.block(j)).map_err(|e| Error::InvalidStatistics(format!("context {j}: {e}")))?;
            Ok((0..m)
                .map(|t| TrialRecord {
                    trial_id: (j * m + t) as u64,
                    context: j,
                    outcome: dist.sample(&mut rng),
                    region: None,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_context.concat())
}

/// Calibration trials: `per_cell` trials for every region and context,
/// outcomes drawn from the corresponding block of the region's column.
/// Cell `(i, j)` uses stream `i * J + j` of `seed`.
pub fn simulate_calibration(matrix: &ForwardMatrix, per_cell: usize, seed: u64) -> Result<Vec<TrialRecord>> {
    let (contexts, outcomes) = (matrix.contexts(), matrix.outcomes());
    let per_region = (0..matrix.cols())
        .into_par_iter()
        .map(|i| {
            let col = matrix.column_dense(i);
            let mut out = Vec::with_capacity(contexts * per_cell);
            for j in 0..contexts {
                let mut rng = rng::stream(seed, (i * contexts + j) as u64);
                let dist = WeightedIndex::new(&col[j * outcomes..(j + 1) * outcomes])
                    .map_err(|e| Error::InvalidStatistics(format!("region {i}, context {j}: {e}")))?;
                for t in 0..per_cell {
                    out.push(TrialRecord {
                        trial_id: ((i * contexts + j) * per_cell + t) as u64,
                        context: j,
                        outcome: dist.sample(&mut rng),
                        region: Some(i),
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_region.concat())
}

fn check_record(r: &TrialRecord, contexts: usize, outcomes: usize) -> Result<()> {
    if r.context >= contexts || r.outcome >= outcomes {
        return Err(Error::InvalidStatistics(format!(
            "trial {} has context {} / outcome {} outside {contexts} x {outcomes}",
            r.trial_id, r.context, r.outcome
        )));
    }
    Ok(())
}

/// Outcome counts per context, context-major.
pub fn count_outcomes(records: &[TrialRecord], contexts: usize, outcomes: usize) -> Result<Vec<usize>> {
    let mut counts = vec![0; contexts * outcomes];
    for r in records {
        check_record(r, contexts, outcomes)?;
        counts[r.context * outcomes + r.outcome] += 1;
    }
    Ok(counts)
}

/// Relative frequencies from context-major counts.
pub fn statistics_from_counts(counts: &[usize], contexts: usize, outcomes: usize) -> Result<StatVector> {
    Error::check_dim(contexts * outcomes, counts.len())?;
    let mut values = Vec::with_capacity(counts.len());
    for (j, block) in counts.chunks(outcomes).enumerate() {
        let total: usize = block.iter().sum();
        if total == 0 {
            return Err(Error::EmptyContext(j));
        }
        values.extend(block.iter().map(|&n| n as f64 / total as f64));
    }
    StatVector::new(contexts, outcomes, values)
}

/// Per-context relative frequencies of the recorded outcomes.
pub fn estimate_statistics(records: &[TrialRecord], contexts: usize, outcomes: usize) -> Result<StatVector> {
    statistics_from_counts(&count_outcomes(records, contexts, outcomes)?, contexts, outcomes)
}

/// `A_hat[(j, k), i] = count(i, j, k) / count(i, j)` from region-labelled
/// trials. Every region must have been probed under every context.
pub fn estimate_forward_matrix(
    records: &[TrialRecord],
    contexts: usize,
    outcomes: usize,
    regions: usize,
) -> Result<ForwardMatrix> {
    let mut keys = Vec::with_capacity(records.len());
    for r in records {
        check_record(r, contexts, outcomes)?;
        let i = r
            .region
            .ok_or_else(|| Error::InvalidStatistics(format!("trial {} has no region", r.trial_id)))?;
        if i >= regions {
            return Err(Error::InvalidStatistics(format!(
                "trial {} has region {i} outside {regions}",
                r.trial_id
            )));
        }
        keys.push((i, r.context, r.outcome));
    }
    keys.sort_unstable();

    let mut columns = vec![Vec::new(); regions];
    let mut cell_total = vec![0usize; regions * contexts];
    for &(i, j, _) in &keys {
        cell_total[i * contexts + j] += 1;
    }
    if let Some(c) = cell_total.iter().position(|&n| n == 0) {
        return Err(Error::EmptyCell {
            region: c / contexts,
            context: c % contexts,
        });
    }
    for run in keys.chunk_by(|a, b| a == b) {
        let (i, j, k) = run[0];
        let v = run.len() as f64 / cell_total[i * contexts + j] as f64;
        columns[i].push(((j * outcomes + k) as u32, v));
    }
    ForwardMatrix::from_columns(contexts, outcomes, columns)
}

/// Partition records into a held-out part of roughly `split` of the trials
/// and the remainder, by a seeded shuffle of trial ids. The parts are
/// disjoint; ids must be unique.
pub fn split_records(records: &[TrialRecord], split: f64, seed: u64) -> Result<(Vec<TrialRecord>, Vec<TrialRecord>)> {
    if !(split > 0.0 && split < 1.0) {
        return Err(Error::config(format!("split must lie in (0, 1), got {split}")));
    }
    let mut ids: Vec<u64> = records.iter().map(|r| r.trial_id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidStatistics("duplicate trial ids".into()));
    }
    ids.shuffle(&mut rng::stream(seed, 0));
    let n_held = ((ids.len() as f64) * split).round() as usize;
    let mut held: Vec<u64> = ids[..n_held].to_vec();
    held.sort_unstable();
    let (a, b) = records.iter().partition(|r| held.binary_search(&r.trial_id).is_ok());
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub resamples: usize,
    pub mean: f64,
    /// Sample standard deviation of the resampled statistic.
    pub std_dev: f64,
    pub q025: f64,
    pub q975: f64,
}

/// Bootstrap replicates `S^(b) = c . p_hat^(b)`, resampling trials with
/// replacement within each context. Resample `b` uses stream `b` of `seed`.
pub fn bootstrap_replicates(
    records: &[TrialRecord],
    contexts: usize,
    outcomes: usize,
    c: &[f64],
    resamples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    Error::check_dim(contexts * outcomes, c.len())?;
    if resamples < 2 {
        return Err(Error::config("need at least two bootstrap resamples"));
    }
    let mut by_context = vec![Vec::new(); contexts];
    for r in records {
        check_record(r, contexts, outcomes)?;
        by_context[r.context].push(r.outcome);
    }
    if let Some(j) = by_context.iter().position(Vec::is_empty) {
        return Err(Error::EmptyContext(j));
    }
    Ok((0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(seed, b);
            let mut counts = vec![0usize; outcomes];
            by_context
                .iter()
                .enumerate()
                .map(|(j, trials)| {
                    counts.iter_mut().for_each(|n| *n = 0);
                    let m = trials.len();
                    for _ in 0..m {
                        counts[trials[rng.random_range(0..m)]] += 1;
                    }
                    let cj = &c[j * outcomes..(j + 1) * outcomes];
                    counts
                        .iter()
                        .zip(cj)
                        .map(|(&n, c)| c * (n as f64 / m as f64))
                        .sum::<f64>()
                })
                .sum()
        })
        .collect())
}

/// Summary of at least two replicates.
pub fn summarize(replicates: &[f64]) -> BootstrapSummary {
    let n = replicates.len() as f64;
    // shifted by the first replicate, so identical replicates give exactly 0
    let s0 = replicates[0];
    let d_sum: f64 = replicates.iter().map(|s| s - s0).sum();
    let d_sq: f64 = replicates.iter().map(|s| (s - s0).powi(2)).sum();
    let mean = s0 + d_sum / n;
    let var = ((d_sq - d_sum * d_sum / n) / (n - 1.0)).max(0.0);
    let mut sorted = replicates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantile = |q: f64| sorted[((q * (n - 1.0)).round() as usize).min(sorted.len() - 1)];
    BootstrapSummary {
        resamples: replicates.len(),
        mean,
        std_dev: var.sqrt(),
        q025: quantile(0.025),
        q975: quantile(0.975),
    }
}

/// Bootstrap estimate of the standard deviation of `c . p_hat`.
pub fn bootstrap_sigma(
    records: &[TrialRecord],
    contexts: usize,
    outcomes: usize,
    c: &[f64],
    resamples: usize,
    seed: u64,
) -> Result<f64> {
    let reps = bootstrap_replicates(records, contexts, outcomes, c, resamples, seed)?;
    Ok(summarize(&reps).std_dev)
}

/// Standard deviation of `c . p_hat` for `m` multinomial trials per context
/// drawn from `p`.
pub fn analytic_sigma(p: &StatVector, c: &[f64], m: usize) -> Result<f64> {
    Error::check_dim(p.len(), c.len())?;
    let k = p.outcomes();
    let var: f64 = p
        .blocks()
        .zip(c.chunks(k))
        .map(|(pj, cj)| {
            let mean = dot(pj, cj);
            let second: f64 = pj.iter().zip(cj).map(|(p, c)| p * c * c).sum();
            (second - mean * mean).max(0.0)
        })
        .sum();
    Ok((var / m as f64).sqrt())
}

/// Seed of the trials drawn by [`run_protocol`] under `seed`.
pub fn protocol_trial_seed(seed: u64) -> u64 {
    rng::derive_seed(seed, 0)
}

/// Outcome of one simulated run of the protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub contexts: usize,
    pub outcomes: usize,
    pub trials_per_context: usize,
    pub seed: u64,
    /// `c . p` of the ground truth.
    pub s_true: f64,
    pub s_obs: f64,
    pub s_cl: f64,
    pub sigma_s: f64,
    pub kappa: f64,
    pub detected: bool,
    pub bootstrap: BootstrapSummary,
}

/// Simulate trials from `truth`, estimate `p_hat` and the bootstrap
/// `sigma_S`, and apply the decision rule with a precomputed witness.
///
/// The trials are `simulate_trials(truth, M, protocol_trial_seed(seed))`.
pub fn run_protocol(
    truth: &StatVector,
    witness: &WitnessResult,
    budget: &TrialBudget,
    kappa: f64,
    seed: u64,
) -> Result<ProtocolReport> {
    budget.validate()?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::config(format!("kappa must be positive, got {kappa}")));
    }
    let c = &witness.witness;
    Error::check_dim(truth.len(), c.len())?;
    let (contexts, outcomes) = (truth.contexts(), truth.outcomes());
    let m = budget.trials_per_context;

    let records = simulate_trials(truth, m, protocol_trial_seed(seed))?;
    let p_hat = estimate_statistics(&records, contexts, outcomes)?;
    let reps = bootstrap_replicates(
        &records,
        contexts,
        outcomes,
        c,
        budget.bootstrap,
        rng::derive_seed(seed, 1),
    )?;
    let bootstrap = summarize(&reps);

    let s_obs = p_hat.dot(c)?;
    let s_cl = witness.classical_bound;
    Ok(ProtocolReport {
        contexts,
        outcomes,
        trials_per_context: m,
        seed,
        s_true: truth.dot(c)?,
        s_obs,
        s_cl,
        sigma_s: bootstrap.std_dev,
        kappa,
        detected: detect(s_obs, s_cl, kappa, bootstrap.std_dev),
        bootstrap,
    })
}
