//! Per-run metrics over the post-warm-up window.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use semnet_core::distortion::{tolerance, Action, ControlConfig, DistortionRecord};
use semnet_core::kplane::{stabilization_time, ChangeReason, ControlDecision};
use semnet_core::netsim::{Outcome, ScenarioConfig, SimOutput};
use semnet_core::semantics::ImportanceClass;

use crate::stats::{mean, percentile};

/// One semantic message as seen by the SDSR criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdsrSample {
    pub relevance: Option<f64>,
    /// `None` when the message was not delivered.
    pub d_obs: Option<f64>,
}

impl SdsrSample {
    pub fn passes(&self, tol: &ControlConfig) -> bool {
        match (self.relevance, self.d_obs) {
            (Some(r), Some(d)) => d <= tolerance(r, tol),
            _ => false,
        }
    }
}

/// Share of generated messages delivered within their relevance-dependent tolerance;
/// `None` when nothing was generated.
pub fn compute_sdsr(samples: &[SdsrSample], tol: &ControlConfig) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    Some(samples.iter().filter(|s| s.passes(tol)).count() as f64 / samples.len() as f64)
}

/// Path changes per flow per minute. `decisions` must be in time order; the first
/// assignment of each flow is not a change. Flows are averaged with equal weight.
pub fn reroute_frequency<'a>(decisions: impl IntoIterator<Item = (u64, &'a [usize])>, eval_seconds: f64) -> f64 {
    let mut last: BTreeMap<u64, &[usize]> = BTreeMap::new();
    let mut changes: BTreeMap<u64, u64> = BTreeMap::new();
    for (flow, path) in decisions {
        let c = changes.entry(flow).or_insert(0);
        if let Some(prev) = last.insert(flow, path) {
            if prev != path {
                *c += 1;
            }
        }
    }
    if changes.is_empty() || eval_seconds <= 0.0 {
        return 0.0;
    }
    let minutes = eval_seconds / 60.0;
    changes.values().sum::<u64>() as f64 / minutes / changes.len() as f64
}

/// Path changes forced by a distortion-triggered exclusion, per flow per minute, averaged
/// over every flow that saw a decision.
pub fn triggered_reroute_frequency<'a>(decisions: impl IntoIterator<Item = &'a ControlDecision>, eval_seconds: f64) -> f64 {
    let mut per_flow: BTreeMap<u64, u64> = BTreeMap::new();
    for d in decisions {
        *per_flow.entry(d.flow).or_insert(0) += u64::from(d.reason == ChangeReason::Excluded);
    }
    if per_flow.is_empty() || eval_seconds <= 0.0 {
        return 0.0;
    }
    let minutes = eval_seconds / 60.0;
    per_flow.values().sum::<u64>() as f64 / minutes / per_flow.len() as f64
}

/// Throughput and goodput in bytes per second. `semantic` holds the size of every
/// delivered message and whether it met its tolerance.
pub fn compute_throughput_goodput(semantic: &[(f64, bool)], background_bytes: f64, eval_seconds: f64) -> (f64, f64) {
    if eval_seconds <= 0.0 {
        return (0.0, 0.0);
    }
    let all: f64 = semantic.iter().map(|(b, _)| b).sum::<f64>() + background_bytes;
    let good: f64 = semantic.iter().filter(|(_, ok)| *ok).map(|(b, _)| b).sum::<f64>() + background_bytes;
    (all / eval_seconds, good / eval_seconds)
}

/// `1 - min(reroutes per flow per minute / 10, 1)`.
pub fn stability_index(reroute_frequency: f64) -> f64 {
    1.0 - (reroute_frequency / 10.0).min(1.0)
}

/// `(p95 - p5) / (2 * median)`, `NaN` with fewer than two samples.
pub fn delay_variability(delays: &[f64]) -> f64 {
    if delays.len() < 2 {
        return f64::NAN;
    }
    let med = percentile(delays, 50.0);
    (percentile(delays, 95.0) - percentile(delays, 5.0)) / (2.0 * med)
}

/// Per-interval mean of `(time, value)` samples. Intervals without samples repeat the
/// previous value, starting from zero.
pub fn interval_series(samples: impl IntoIterator<Item = (f64, f64)>, interval: f64, intervals: usize) -> Vec<f64> {
    let mut sum = vec![0.0; intervals];
    let mut count = vec![0usize; intervals];
    for (t, v) in samples {
        let i = (t / interval).floor() as usize;
        if i < intervals {
            sum[i] += v;
            count[i] += 1;
        }
    }
    let mut out = Vec::with_capacity(intervals);
    let mut prev = 0.0;
    for i in 0..intervals {
        if count[i] > 0 {
            prev = sum[i] / count[i] as f64;
        }
        out.push(prev);
    }
    out
}

/// Mean distortion gap per interval, by delivery time.
pub fn gap_series(records: &[DistortionRecord], interval: f64, intervals: usize) -> Vec<f64> {
    interval_series(records.iter().map(|r| (r.time, r.gap)), interval, intervals)
}

/// Mean relevance per interval, by decision time.
pub fn relevance_series(decisions: &[ControlDecision], interval: f64, intervals: usize) -> Vec<f64> {
    interval_series(decisions.iter().map(|d| (d.time, d.relevance)), interval, intervals)
}

/// Share of evaluations per interval that triggered a corrective action.
pub fn correction_series(records: &[DistortionRecord], interval: f64, intervals: usize) -> Vec<f64> {
    let flag = |r: &DistortionRecord| if r.action == Action::None { 0.0 } else { 1.0 };
    interval_series(records.iter().map(|r| (r.time, flag(r))), interval, intervals)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub generated: usize,
    pub delivered: usize,
    pub lost: usize,
    pub path_break: usize,
    pub no_route: usize,
    pub sdsr: f64,
    pub distortion_mean: f64,
    pub distortion_p95: f64,
    pub delay_mean: f64,
    pub delay_p95: f64,
    /// Path changes per flow per minute.
    pub reroute_frequency: f64,
    /// The part of `reroute_frequency` caused by distortion feedback.
    pub triggered_reroute_frequency: f64,
    pub stability_index: f64,
    /// Bits per second.
    pub throughput: f64,
    pub goodput: f64,
    pub high_r_delay_variability: f64,
    pub correction_rate: f64,
    pub mean_gap: f64,
    /// Intervals to stabilization after each phase transition; `None` if it never settled.
    pub stabilization: Vec<Option<usize>>,
}

impl RunMetrics {
    /// Scalar metrics in a fixed order, for long-form output.
    pub fn named(&self) -> Vec<(String, f64)> {
        let mut v = vec![
            ("generated".to_string(), self.generated as f64),
            ("delivered".into(), self.delivered as f64),
            ("lost".into(), self.lost as f64),
            ("path_break".into(), self.path_break as f64),
            ("no_route".into(), self.no_route as f64),
            ("sdsr".into(), self.sdsr),
            ("distortion_mean".into(), self.distortion_mean),
            ("distortion_p95".into(), self.distortion_p95),
            ("delay_mean".into(), self.delay_mean),
            ("delay_p95".into(), self.delay_p95),
            ("reroute_frequency".into(), self.reroute_frequency),
            ("triggered_reroute_frequency".into(), self.triggered_reroute_frequency),
            ("stability_index".into(), self.stability_index),
            ("throughput".into(), self.throughput),
            ("goodput".into(), self.goodput),
            ("high_r_delay_variability".into(), self.high_r_delay_variability),
            ("correction_rate".into(), self.correction_rate),
            ("mean_gap".into(), self.mean_gap),
        ];
        for (i, s) in self.stabilization.iter().enumerate() {
            v.push((format!("stabilization_phase{}", i + 2), s.map_or(f64::NAN, |k| k as f64)));
        }
        v
    }
}

/// Metrics of one run. Only messages created, decisions taken and background intervals
/// starting after the warm-up contribute.
pub fn compute_metrics(
    cfg: &ScenarioConfig,
    tol: &ControlConfig,
    sim: &SimOutput,
    decisions: &[ControlDecision],
    distortion: &[DistortionRecord],
) -> RunMetrics {
    let t0 = cfg.warmup;
    let eval = cfg.evaluation_time();
    let window: Vec<_> = sim.messages.iter().filter(|m| m.created >= t0 && m.created < cfg.duration).collect();
    let count = |o: Outcome| window.iter().filter(|m| m.outcome == o).count();

    let samples: Vec<SdsrSample> = window
        .iter()
        .map(|m| SdsrSample { relevance: m.decision.as_ref().map(|d| d.relevance), d_obs: m.d_obs })
        .collect();
    let sdsr = compute_sdsr(&samples, tol).unwrap_or(f64::NAN);

    let delivered: Vec<_> = window.iter().filter(|m| m.outcome == Outcome::Delivered).collect();
    let d_obs: Vec<f64> = delivered.iter().filter_map(|m| m.d_obs).collect();
    let delays: Vec<f64> = delivered.iter().filter_map(|m| m.delay()).collect();
    let high_delays: Vec<f64> = delivered
        .iter()
        .filter(|m| m.decision.as_ref().is_some_and(|d| d.class == ImportanceClass::High))
        .filter_map(|m| m.delay())
        .collect();

    let rf = reroute_frequency(decisions.iter().filter(|d| d.time >= t0).map(|d| (d.flow, d.path.as_slice())), eval);

    let semantic: Vec<(f64, bool)> = window
        .iter()
        .zip(&samples)
        .filter(|(m, _)| m.outcome == Outcome::Delivered)
        .map(|(m, s)| (m.size, s.passes(tol)))
        .collect();
    let background: f64 =
        sim.intervals.iter().filter(|i| i.start >= t0 - 1e-9).map(|i| i.background_delivered).sum();
    let (throughput, goodput) = compute_throughput_goodput(&semantic, background, eval);

    let evaluated: Vec<&DistortionRecord> = distortion.iter().filter(|r| r.time >= t0).collect();
    let correction_rate = if evaluated.is_empty() {
        0.0
    } else {
        evaluated.iter().filter(|r| r.action != Action::None).count() as f64 / evaluated.len() as f64
    };
    let mean_gap = mean(&evaluated.iter().map(|r| r.gap).collect::<Vec<_>>());

    let intervals = cfg.ticks();
    let series = gap_series(distortion, cfg.interval, intervals);
    let stabilization = phase_stabilization(cfg, &series);

    RunMetrics {
        generated: window.len(),
        delivered: delivered.len(),
        lost: count(Outcome::Lost),
        path_break: count(Outcome::PathBreak),
        no_route: count(Outcome::NoRoute),
        sdsr,
        distortion_mean: mean(&d_obs),
        distortion_p95: percentile(&d_obs, 95.0),
        delay_mean: mean(&delays),
        delay_p95: percentile(&delays, 95.0),
        reroute_frequency: rf,
        triggered_reroute_frequency: triggered_reroute_frequency(decisions.iter().filter(|d| d.time >= t0), eval),
        stability_index: stability_index(rf),
        throughput: throughput * 8.0,
        goodput: goodput * 8.0,
        high_r_delay_variability: delay_variability(&high_delays),
        correction_rate,
        mean_gap,
        stabilization,
    }
}

/// Stabilization after each phase transition, measured within that phase.
pub fn phase_stabilization(cfg: &ScenarioConfig, series: &[f64]) -> Vec<Option<usize>> {
    let idx = |t: f64| ((t / cfg.interval).round() as usize).min(series.len());
    (1..cfg.phases.len())
        .map(|p| {
            let start = idx(cfg.phases[p].start);
            let end = cfg.phases.get(p + 1).map_or(series.len(), |q| idx(q.start));
            stabilization_time(&series[start..end], 0).ok().flatten()
        })
        .collect()
}
