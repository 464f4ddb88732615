use std::path::Path;

use serde::{Deserialize, Serialize};

use semnet_core::distortion::ControlConfig;
use semnet_core::kplane::ControllerConfig;
use semnet_core::netsim::{Phase, ScenarioConfig};
use semnet_core::routing::{RoutingConfig, Scheme};
use semnet_core::semantics::{FidelityLevel, ReasoningConfig};

use crate::error::{HarnessError, Result};

/// Controller settings that are not part of the three reasoning stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KplaneSettings {
    pub outage_intervals: f64,
    pub hysteresis: f64,
    pub fixed_fidelity: FidelityLevel,
    pub background_probe: f64,
}

impl Default for KplaneSettings {
    fn default() -> Self {
        let c = ControllerConfig::default();
        Self {
            outage_intervals: c.outage_intervals,
            hysteresis: c.hysteresis,
            fixed_fidelity: c.fixed_fidelity,
            background_probe: c.background_probe,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessSettings {
    pub seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
    pub sweep_seeds: Vec<u64>,
    /// Add the reroute-only variant of the proposed controller to batches.
    pub reroute_variant: bool,
    /// Tolerance used when scoring SDSR, identical for every scheme and grid point.
    pub metric_tolerance: ControlConfig,
}

impl Default for HarnessSettings {
    fn default() -> Self {
        Self {
            seeds: (1..=10).collect(),
            schemes: Scheme::ALL.to_vec(),
            sweep_seeds: vec![1, 2, 3],
            reroute_variant: true,
            metric_tolerance: ControlConfig::default(),
        }
    }
}

/// A scenario file: one section per module, every key optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub netsim: ScenarioConfig,
    pub semantics: ReasoningConfig,
    pub routing: RoutingConfig,
    pub distortion: ControlConfig,
    pub kplane: KplaneSettings,
    pub harness: HarnessSettings,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.netsim.validate()?;
        self.controller(Scheme::Proposed).validate()?;
        self.harness.metric_tolerance.validate()?;
        if self.harness.seeds.is_empty() || self.harness.schemes.is_empty() {
            return Err(HarnessError::Config("seed and scheme lists must be nonempty".into()));
        }
        Ok(())
    }

    /// Controller configuration of `scheme` under this experiment.
    pub fn controller(&self, scheme: Scheme) -> ControllerConfig {
        let p = &self.netsim.perturbation;
        ControllerConfig {
            scheme,
            reasoning: self.semantics.clone(),
            routing: self.routing.clone(),
            control: self.distortion,
            interval: self.netsim.interval,
            outage_intervals: self.kplane.outage_intervals,
            hysteresis: self.kplane.hysteresis,
            fixed_fidelity: self.kplane.fixed_fidelity,
            background_probe: self.kplane.background_probe,
            drift_fraction: p.drift_fraction,
            drift_sigma: p.drift_sigma,
        }
    }

    /// The proposed controller with `delta_min = 0` and no fidelity stage, so every
    /// out-of-tolerance delivery triggers a reroute.
    pub fn reroute_only_controller(&self) -> ControllerConfig {
        let mut c = self.controller(Scheme::Proposed);
        c.control.delta_min = 0.0;
        c.control.fidelity_stage = false;
        c
    }

    /// Replaces the phase schedule; used by command line overrides.
    pub fn with_phases(mut self, phases: Vec<Phase>) -> Result<Self> {
        self.netsim.phases = phases;
        self.validate()?;
        Ok(self)
    }
}

/// Parses `start:load:mobility[:arrivals]`.
pub fn parse_phase(s: &str) -> Result<Phase> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| HarnessError::Config(format!("phase {s:?}: {e}")))?;
    match parts[..] {
        [start, load, mobility] => Ok(Phase::new(start, load, mobility)),
        [start, load, mobility, arrivals] => Ok(Phase { start, load, mobility, arrivals }),
        _ => Err(HarnessError::Config(format!("phase {s:?} must be start:load:mobility[:arrivals]"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_takes_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.netsim.traffic.rate, 15.0);
        assert_eq!(cfg.semantics.tau_map, 0.7);
        assert_eq!(cfg.routing.k, 4);
        assert_eq!(cfg.distortion.delta0, 0.05);
        assert_eq!(cfg.harness.seeds.len(), 10);
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_sections_override_single_keys() {
        let cfg = ExperimentConfig::from_toml(
            "[netsim]\nduration = 150.0\nwarmup = 5.0\n[netsim.traffic]\nrate = 5.0\n[routing]\nk = 2\n[harness]\nschemes = [\"SP\", \"proposed\"]\n",
        )
        .unwrap();
        assert_eq!(cfg.netsim.duration, 150.0);
        assert_eq!(cfg.netsim.traffic.rate, 5.0);
        assert_eq!(cfg.netsim.traffic.flows, (20, 40));
        assert_eq!(cfg.routing.k, 2);
        assert_eq!(cfg.harness.schemes, vec![Scheme::Sp, Scheme::Proposed]);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let err = ExperimentConfig::from_toml("[netsim]\nwarmup = 500.0\n").unwrap_err();
        assert_eq!(err.category(), semnet_core::ErrorCategory::Config);
        assert!(ExperimentConfig::from_toml("[nonsense]\nx = 1\n").is_err());
    }

    #[test]
    fn phase_overrides() {
        assert_eq!(parse_phase("60:1.5:1.5").unwrap(), Phase::new(60.0, 1.5, 1.5));
        assert_eq!(parse_phase("0:1:1:2").unwrap().arrivals, 2.0);
        assert!(parse_phase("0:1").is_err());
        assert!(parse_phase("a:b:c").is_err());
    }
}
