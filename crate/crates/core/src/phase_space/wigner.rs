use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Wigner function of the single-photon Fock state.
pub fn wigner_fock1(zeta: f64, eta: f64) -> f64 {
    let r2 = zeta * zeta + eta * eta;
    2.0 / PI * (4.0 * r2 - 1.0) * (-2.0 * r2).exp()
}

/// Wigner function of the thermal state with mean photon number one.
pub fn wigner_thermal1(zeta: f64, eta: f64) -> f64 {
    let r2 = zeta * zeta + eta * eta;
    2.0 / (3.0 * PI) * (-2.0 * r2 / 3.0).exp()
}

/// `(1 - beta) W_fock1 + beta W_thermal1`.
pub fn wigner_mix(beta: f64, zeta: f64, eta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(mix_unchecked(beta, zeta, eta))
}

fn mix_unchecked(beta: f64, zeta: f64, eta: f64) -> f64 {
    (1.0 - beta) * wigner_fock1(zeta, eta) + beta * wigner_thermal1(zeta, eta)
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::config(format!(
            "mixing parameter beta must lie in [0, 1], got {beta}"
        )))
    }
}

/// Latent quasi-probability model used to generate ideal statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum QuantumLatentModel {
    Fock1,
    Thermal1,
    Mix { beta: f64 },
}

impl QuantumLatentModel {
    pub fn mix(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self::Mix { beta })
    }

    pub fn density(&self, zeta: f64, eta: f64) -> f64 {
        match *self {
            Self::Fock1 => wigner_fock1(zeta, eta),
            Self::Thermal1 => wigner_thermal1(zeta, eta),
            Self::Mix { beta } => mix_unchecked(beta, zeta, eta),
        }
    }

    /// Thermal weight of the model (0 for the Fock state, 1 for thermal).
    pub fn beta(&self) -> f64 {
        match *self {
            Self::Fock1 => 0.0,
            Self::Thermal1 => 1.0,
            Self::Mix { beta } => beta,
        }
    }
}

impl fmt::Display for QuantumLatentModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fock1 => write!(f, "fock1"),
            Self::Thermal1 => write!(f, "thermal1"),
            Self::Mix { beta } => write!(f, "mix:{beta}"),
        }
    }
}

/// Parses `fock1`, `thermal1` or `mix:<beta>`.
impl FromStr for QuantumLatentModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fock1" | "fock" => Ok(Self::Fock1),
            "thermal1" | "thermal" => Ok(Self::Thermal1),
            other => {
                let beta = other
                    .strip_prefix("mix:")
                    .and_then(|b| b.parse::<f64>().ok())
                    .ok_or_else(|| Error::config(format!("unknown latent model '{s}'")))?;
                Self::mix(beta)
            }
        }
    }
}
