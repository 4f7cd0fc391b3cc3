//! Line-delimited trial logs: `trial_id,context,outcome[,region]`, one
//! trial per line after a header, with a JSON sidecar describing the run.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::TrialRecord;
use crate::{Error, Result};

/// Sidecar describing a trial log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLogMeta {
    pub contexts: usize,
    pub outcomes: usize,
    /// Number of latent regions, for calibration logs.
    pub regions: Option<usize>,
    pub seed: u64,
    pub model: Option<String>,
}

/// Writes all records; the region column is present iff the first record
/// carries a region, and then every record must.
pub fn write_trial_log<W: Write>(w: &mut W, records: &[TrialRecord]) -> Result<()> {
    let with_region = records.first().is_some_and(|r| r.region.is_some());
    if with_region {
        writeln!(w, "trial_id,context,outcome,region")?;
    } else {
        writeln!(w, "trial_id,context,outcome")?;
    }
    for r in records {
        match (with_region, r.region) {
            (true, Some(i)) => writeln!(w, "{},{},{},{i}", r.trial_id, r.context, r.outcome)?,
            (false, None) => writeln!(w, "{},{},{}", r.trial_id, r.context, r.outcome)?,
            _ => {
                return Err(Error::Format(format!(
                    "trial {} disagrees with the log's region column",
                    r.trial_id
                )))
            }
        }
    }
    Ok(())
}

pub fn read_trial_log<R: BufRead>(r: R) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.starts_with("trial_id")) {
            continue;
        }
        let err = || Error::Format(format!("line {}: expected trial_id,context,outcome[,region]", n + 1));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 3 && f.len() != 4 {
            return Err(err());
        }
        out.push(TrialRecord {
            trial_id: f[0].parse().map_err(|_| err())?,
            context: f[1].parse().map_err(|_| err())?,
            outcome: f[2].parse().map_err(|_| err())?,
            region: f.get(3).map(|s| s.parse()).transpose().map_err(|_| err())?,
        });
    }
    Ok(out)
}
