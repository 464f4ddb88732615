use semnet_core::distortion::DistortionRecord;
use semnet_core::kplane::{ControlDecision, Controller, ControllerConfig};
use semnet_core::netsim::{build_world, simulate, SimOutput};
use semnet_core::routing::Scheme;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::metrics::{compute_metrics, RunMetrics};

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub label: String,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub sim: SimOutput,
    pub decisions: Vec<ControlDecision>,
    pub distortion: Vec<DistortionRecord>,
}

pub fn run_scenario(cfg: &ExperimentConfig, scheme: Scheme, seed: u64) -> Result<RunOutput> {
    run_with(cfg, cfg.controller(scheme), scheme.as_str(), seed)
}

/// One run with an explicit controller configuration, reported under `label`.
pub fn run_with(cfg: &ExperimentConfig, controller: ControllerConfig, label: &str, seed: u64) -> Result<RunOutput> {
    let context = || format!("scenario {:?}, {label}, seed {seed}", cfg.netsim.name);
    let wrap = |source| HarnessError::Run { context: context(), source };
    let world = build_world(&cfg.netsim, seed).map_err(wrap)?;
    let mut ctl = Controller::new(controller, world.clone(), seed).map_err(wrap)?;
    let sim = simulate(&cfg.netsim, seed, &world, &mut ctl).map_err(wrap)?;
    let (decisions, distortion) = ctl.into_logs();
    let metrics = compute_metrics(&cfg.netsim, &cfg.harness.metric_tolerance, &sim, &decisions, &distortion);
    Ok(RunOutput { label: label.to_string(), seed, metrics, sim, decisions, distortion })
}
