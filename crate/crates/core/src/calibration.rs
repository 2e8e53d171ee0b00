//! Frozen constants for claims that only fix a constant up to existence.
//!
//! Each constant was fitted once on a calibration run, widened, and frozen
//! in `calibration.json`; the verification suites read it from here.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const FROZEN: &str = include_str!("../calibration.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constant {
    pub name: String,
    /// Value used by the checks.
    pub value: f64,
    /// Raw value observed on the calibration run.
    pub fitted: f64,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub version: u32,
    pub constants: Vec<Constant>,
}

impl Calibration {
    /// Parse and validate a calibration file.
    pub fn parse(text: &str) -> Result<Self> {
        let cal: Calibration = serde_json::from_str(text)?;
        for (i, c) in cal.constants.iter().enumerate() {
            if c.name.is_empty() {
                return Err(Error::InvalidParameter(format!("calibration constant {i} has no name")));
            }
            if !(c.value.is_finite() && c.fitted.is_finite()) {
                return Err(Error::InvalidParameter(format!("calibration constant {} is not finite", c.name)));
            }
            if cal.constants[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::InvalidParameter(format!("duplicate calibration constant {}", c.name)));
            }
        }
        Ok(cal)
    }

    /// The constants shipped with the crate.
    pub fn frozen() -> Self {
        Self::parse(FROZEN).expect("shipped calibration file is valid")
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|c| c.name == name).map(|c| c.value)
    }
}

/// `κ₁` in the overlap floor `1 - κ₁ (Cd/L)^{2-η}`.
pub fn kappa1() -> f64 {
    Calibration::frozen().get("kappa1").expect("kappa1 is frozen")
}

/// Factor `f` in the state-prep target `overlap ≥ 1 - f δ`.
pub fn state_prep_factor() -> f64 {
    Calibration::frozen().get("state_prep_factor").expect("state_prep_factor is frozen")
}
