use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::routing::DistortionModel;
use crate::semantics::{FidelityTable, WorldConfig};

/// One segment of the phase schedule, starting at `start` seconds and lasting until the
/// next phase or the end of the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub start: f64,
    pub load: f64,
    pub mobility: f64,
    pub arrivals: f64,
}

impl Phase {
    pub fn new(start: f64, load: f64, mobility: f64) -> Self {
        Self { start, load, mobility, arrivals: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub nodes: usize,
    /// Side of the square deployment area in metres.
    pub area: f64,
    /// Share of macro, small cell, relay and access point nodes.
    pub type_mix: [f64; 4],
    /// Radio range per node type in metres.
    pub ranges: [f64; 4],
    /// Transmit power per node type in dBm.
    pub tx_power: [f64; 4],
    pub max_retries: usize,
    /// Propagation delay range per link in seconds.
    pub propagation: (f64, f64),
    /// Transmit buffer per directed link in bytes.
    pub buffer: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            nodes: 50,
            area: 1000.0,
            type_mix: [0.1, 0.3, 0.3, 0.3],
            ranges: [400.0, 250.0, 200.0, 150.0],
            tx_power: [20.0, 15.0, 12.0, 10.0],
            max_retries: 100,
            propagation: (1e-3, 3e-3),
            buffer: 1.0e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityConfig {
    /// Speed range in m/s before the phase multiplier.
    pub speed: (f64, f64),
    /// Mobility update step in seconds.
    pub step: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self { speed: (1.0, 15.0), step: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Path loss `a + b * log10(d)` in dB.
    pub pl_a: f64,
    pub pl_b: f64,
    pub shadowing_db: f64,
    /// Bandwidth in Hz.
    pub bandwidth: f64,
    pub noise_dbm: f64,
    /// Attenuation applied to interfering transmissions in dB.
    pub interference_db: f64,
    /// Capacity clamp in bits per second.
    pub capacity: (f64, f64),
    pub loss_midpoint_db: f64,
    pub loss_slope: f64,
    pub loss_ceiling: f64,
    /// SINR range in dB mapped linearly onto link quality `[0, 1]`.
    pub sinr_range_db: (f64, f64),
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            pl_a: 28.0,
            pl_b: 22.0,
            shadowing_db: 4.0,
            bandwidth: 100e6,
            noise_dbm: -87.0,
            interference_db: -20.0,
            capacity: (80e6, 900e6),
            loss_midpoint_db: 3.0,
            loss_slope: 1.0,
            loss_ceiling: 0.05,
            sinr_range_db: (0.0, 30.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    /// Aggregate semantic message rate per second.
    pub rate: f64,
    pub flows: (usize, usize),
    /// Flow lifetime range in seconds.
    pub lifetime: (f64, f64),
    /// Message size range in bytes.
    pub size: (f64, f64),
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self { rate: 15.0, flows: (20, 40), lifetime: (20.0, 60.0), size: (512.0, 1024.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundConfig {
    pub flows: usize,
    /// ON and OFF period range in seconds.
    pub period: (f64, f64),
    /// Target utilization range of the reference capacity while ON.
    pub load: (f64, f64),
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        Self { flows: 20, period: (0.02, 0.06), load: (0.3, 0.7) }
    }
}

/// How delivered vectors are degraded in transit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitModel {
    /// Noise scaled so the expected cosine distance equals the realized distortion budget.
    Matched,
    /// Per-component deviation `gain * sqrt(d_enc + sum d_link)`.
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransitConfig {
    pub model: TransitModel,
    pub gain: f64,
    /// Sample per-hop loss and shadowing; off gives deterministic impairments.
    pub stochastic: bool,
    /// Per-link distortion of the generator, evaluated on realized link conditions.
    pub distortion: DistortionModel,
    /// Encoder distortion of the generator per fidelity level.
    pub d_enc: [f64; 3],
}

impl Default for TransitConfig {
    fn default() -> Self {
        Self {
            model: TransitModel::Matched,
            gain: 0.5,
            stochastic: true,
            distortion: DistortionModel::default(),
            d_enc: FidelityTable::default().d_enc,
        }
    }
}

/// Normalization of per-node telemetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TelemetryConfig {
    /// Mean outgoing hop delay mapped to 1, in seconds.
    pub delay_scale: f64,
    /// Packet size assumed when exporting hop delays, in bytes.
    pub probe_size: f64,
}

impl Default for TelemetryConfig {
    fn default() -> Self {
        Self { delay_scale: 0.02, probe_size: 1024.0 }
    }
}

/// Perturbations of the semantic layer used by the robustness experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationConfig {
    /// RMS norm of the additive embedding noise vector.
    pub embedding_noise: f64,
    /// Embedding dimension after random projection; equal to the world dimension disables it.
    pub dimension: usize,
    /// Extra encoder distortion at full reduction, scaled by `1 - dimension / world dimension`.
    pub resolution_loss: f64,
    pub drift_time: f64,
    pub drift_fraction: f64,
    /// Per-component deviation applied to drifted concept embeddings.
    pub drift_sigma: f64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            embedding_noise: 0.0,
            dimension: 128,
            resolution_loss: 0.01,
            drift_time: 90.0,
            drift_fraction: 0.0,
            drift_sigma: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub duration: f64,
    pub warmup: f64,
    /// Telemetry and control interval in seconds.
    pub interval: f64,
    pub phases: Vec<Phase>,
    /// Windows `[start, end)` during which telemetry does not reach the controller.
    pub outages: Vec<(f64, f64)>,
    pub topology: TopologyConfig,
    pub mobility: MobilityConfig,
    pub channel: ChannelConfig,
    pub traffic: TrafficConfig,
    pub background: BackgroundConfig,
    pub transit: TransitConfig,
    pub telemetry: TelemetryConfig,
    pub world: WorldConfig,
    pub perturbation: PerturbationConfig,
    /// Record background toggles and mobility in the event log.
    pub verbose_events: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            duration: 180.0,
            warmup: 20.0,
            interval: 0.2,
            phases: vec![Phase::new(0.0, 1.0, 0.5), Phase::new(60.0, 1.5, 1.5), Phase::new(120.0, 1.8, 2.0)],
            outages: Vec::new(),
            topology: TopologyConfig::default(),
            mobility: MobilityConfig::default(),
            channel: ChannelConfig::default(),
            traffic: TrafficConfig::default(),
            background: BackgroundConfig::default(),
            transit: TransitConfig::default(),
            telemetry: TelemetryConfig::default(),
            world: WorldConfig::default(),
            perturbation: PerturbationConfig::default(),
            verbose_events: false,
        }
    }
}

fn range_ok((lo, hi): (f64, f64)) -> bool {
    lo.is_finite() && hi.is_finite() && lo <= hi
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::config(msg));
        if !(self.duration > 0.0 && self.warmup >= 0.0 && self.warmup < self.duration) {
            return fail(format!("need 0 <= warmup < duration, got {} and {}", self.warmup, self.duration));
        }
        if !(self.interval > 0.0) || !(self.mobility.step > 0.0) {
            return fail("interval and mobility step must be positive".into());
        }
        if self.phases.is_empty() || self.phases[0].start != 0.0 {
            return fail("the phase schedule must start at 0".into());
        }
        for w in self.phases.windows(2) {
            if !(w[1].start > w[0].start) {
                return fail("phase starts must increase".into());
            }
        }
        if self.phases.iter().any(|p| p.start >= self.duration) {
            return fail("every phase must start before the end of the run".into());
        }
        if self.phases.iter().any(|p| !(p.load >= 0.0 && p.mobility >= 0.0 && p.arrivals >= 0.0)) {
            return fail("phase multipliers must be nonnegative".into());
        }
        let t = &self.topology;
        if t.nodes < 2 {
            return fail(format!("need at least 2 nodes, got {}", t.nodes));
        }
        if !(t.area > 0.0) || !(t.buffer > 0.0) || !range_ok(t.propagation) || t.propagation.0 < 0.0 {
            return fail("area, buffer and propagation range must be positive".into());
        }
        let mix: f64 = t.type_mix.iter().sum();
        if t.type_mix.iter().any(|m| *m < 0.0) || (mix - 1.0).abs() > 1e-9 {
            return fail(format!("node type mix {:?} must be a distribution", t.type_mix));
        }
        let c = &self.channel;
        if !range_ok(c.capacity) || c.capacity.0 <= 0.0 || !(c.bandwidth > 0.0) {
            return fail("capacity range and bandwidth must be positive".into());
        }
        if !range_ok(c.sinr_range_db) || c.sinr_range_db.0 == c.sinr_range_db.1 {
            return fail("link quality SINR range must be nonempty".into());
        }
        if !(0.0..=1.0).contains(&c.loss_ceiling) {
            return fail("loss ceiling must lie in [0, 1]".into());
        }
        let tr = &self.traffic;
        if !(tr.rate >= 0.0) || tr.flows.0 == 0 || tr.flows.0 > tr.flows.1 {
            return fail("traffic rate must be nonnegative and the flow range positive".into());
        }
        if !range_ok(tr.lifetime) || tr.lifetime.0 <= 0.0 || !range_ok(tr.size) || tr.size.0 <= 0.0 {
            return fail("flow lifetime and message size ranges must be positive".into());
        }
        let b = &self.background;
        if !range_ok(b.period) || b.period.0 <= 0.0 || !range_ok(b.load) || b.load.0 < 0.0 {
            return fail("background period and load ranges must be positive".into());
        }
        if !range_ok(self.mobility.speed) || self.mobility.speed.0 < 0.0 {
            return fail("speed range must be nonnegative".into());
        }
        for &(s, e) in &self.outages {
            if !(s < e) {
                return fail(format!("outage window [{s}, {e}) is empty"));
            }
        }
        let p = &self.perturbation;
        if p.dimension == 0 || p.dimension > self.world.dim {
            return fail(format!("embedding dimension {} must lie in 1..={}", p.dimension, self.world.dim));
        }
        if p.embedding_noise < 0.0 || p.drift_sigma < 0.0 || !(0.0..=1.0).contains(&p.drift_fraction) {
            return fail("perturbation magnitudes must be nonnegative and the drift fraction in [0, 1]".into());
        }
        if !(self.telemetry.delay_scale > 0.0) || !(self.telemetry.probe_size > 0.0) {
            return fail("telemetry scales must be positive".into());
        }
        self.transit.distortion.validate()?;
        self.world.validate()
    }

    /// Speed mapped to a mobility level of 1.
    pub fn mobility_scale(&self) -> f64 {
        let peak = self.phases.iter().map(|p| p.mobility).fold(0.0, f64::max);
        (self.mobility.speed.1 * peak).max(1e-9)
    }

    /// Extra encoder distortion caused by dimensionality reduction.
    pub fn resolution_loss(&self) -> f64 {
        let p = &self.perturbation;
        p.resolution_loss * (1.0 - p.dimension as f64 / self.world.dim as f64)
    }

    /// Phase active at time `t`.
    pub fn phase_at(&self, t: f64) -> usize {
        self.phases.iter().rposition(|p| p.start <= t).unwrap_or(0)
    }

    pub fn in_outage(&self, t: f64) -> bool {
        self.outages.iter().any(|&(s, e)| s <= t && t < e)
    }

    pub fn evaluation_time(&self) -> f64 {
        self.duration - self.warmup
    }

    /// Control ticks in a run.
    pub fn ticks(&self) -> usize {
        (self.duration / self.interval - 1e-9).ceil() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = ScenarioConfig::default();
        c.validate().unwrap();
        assert_eq!(c.ticks(), 900);
        assert_eq!(c.evaluation_time(), 160.0);
        assert_eq!(c.phase_at(0.0), 0);
        assert_eq!(c.phase_at(60.0), 1);
        assert_eq!(c.phase_at(179.9), 2);
    }

    #[test]
    fn rejects_bad_schedules() {
        let mut c = ScenarioConfig { warmup: 200.0, ..Default::default() };
        assert!(c.validate().is_err());
        c = ScenarioConfig::default();
        c.phases[1].start = 0.0;
        assert!(c.validate().is_err());
        c = ScenarioConfig::default();
        c.topology.type_mix = [0.5, 0.5, 0.5, 0.0];
        assert!(c.validate().is_err());
    }
}
