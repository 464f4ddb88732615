//! Distortion feedback control.
//!
//! After delivery the observed distortion is compared with the prediction used at decision
//! time. A gap beyond the relevance-aware tolerance first raises the flow's fidelity; at
//! the top level it requests a reroute instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semantics::{FidelityLevel, SemanticVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub delta0: f64,
    pub delta_min: f64,
    pub lambda: f64,
    /// When off, every out-of-tolerance gap requests a reroute directly.
    pub fidelity_stage: bool,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self { delta0: 0.05, delta_min: 0.01, lambda: 0.1, fidelity_stage: true }
    }
}

impl ControlConfig {
    /// `delta_min = 0` is accepted: it reproduces the plain `delta0 * (1 - R)` tolerance.
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.delta_min && self.delta_min < self.delta0) {
            return Err(Error::config(format!(
                "tolerances must satisfy 0 <= delta_min < delta0, got {} and {}",
                self.delta_min, self.delta0
            )));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::config(format!("lambda = {} outside (0, 1)", self.lambda)));
        }
        Ok(())
    }
}

/// `1 - cos(s, s')`, in `[0, 2]`.
pub fn observed_distortion(s: &SemanticVector, delivered: &SemanticVector) -> Result<f64> {
    Ok(1.0 - s.cosine(delivered)?)
}

pub fn distortion_gap(d_obs: f64, d_hat: f64) -> f64 {
    (d_obs - d_hat).abs()
}

/// `delta_min + (delta0 - delta_min) * (1 - R)`.
pub fn tolerance(r: f64, cfg: &ControlConfig) -> f64 {
    cfg.delta_min + (cfg.delta0 - cfg.delta_min) * (1.0 - r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    None,
    FidelityUp,
    Reroute,
}

impl Action {
    pub fn as_str(&self) -> &'static str {
        match self {
            Action::None => "none",
            Action::FidelityUp => "fidelity_up",
            Action::Reroute => "reroute",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub gap: f64,
    pub tolerance: f64,
    /// Unprojected `index(f) + lambda * gap`, kept for diagnostics.
    pub f_temp: f64,
    pub action: Action,
    pub before: FidelityLevel,
    pub after: FidelityLevel,
}

impl Correction {
    pub fn corrected(&self) -> bool {
        self.action != Action::None
    }
}

pub fn corrective_action(r: f64, f: FidelityLevel, d_hat: f64, d_obs: f64, cfg: &ControlConfig) -> Correction {
    let gap = distortion_gap(d_obs, d_hat);
    let tol = tolerance(r, cfg);
    let f_temp = f.index() as f64 + cfg.lambda * gap;
    let (action, after) = if gap <= tol {
        (Action::None, f)
    } else {
        match f.up() {
            // Any out-of-tolerance gap moves up exactly one level.
            Some(next) if cfg.fidelity_stage => (Action::FidelityUp, next),
            _ => (Action::Reroute, f),
        }
    };
    Correction { gap, tolerance: tol, f_temp, action, before: f, after }
}

/// One row of the distortion log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionRecord {
    pub message: u64,
    pub time: f64,
    pub relevance: f64,
    pub d_hat: f64,
    pub d_obs: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub action: Action,
    pub before: FidelityLevel,
    pub after: FidelityLevel,
}
