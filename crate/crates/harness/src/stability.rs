//! Closed-loop stabilization of the proposed controller under escalating dynamics.

use std::path::Path;

use serde::{Deserialize, Serialize};

use semnet_core::routing::Scheme;

use crate::batch::{run_jobs, Batch, Job};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::stats::{ci95, mean, std_dev, Estimate};

/// Node speed, background utilization and semantic arrival rate of one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub speed: (f64, f64),
    pub load: (f64, f64),
    pub rate: f64,
}

impl Setting {
    /// The four settings from mildest to harshest.
    pub fn escalating() -> Vec<Setting> {
        vec![
            Setting { speed: (1.0, 5.0), load: (0.30, 0.40), rate: 10.0 },
            Setting { speed: (5.0, 10.0), load: (0.40, 0.55), rate: 15.0 },
            Setting { speed: (10.0, 15.0), load: (0.55, 0.70), rate: 20.0 },
            Setting { speed: (10.0, 15.0), load: (0.65, 0.75), rate: 25.0 },
        ]
    }

    pub fn apply(&self, cfg: &ExperimentConfig) -> ExperimentConfig {
        let mut c = cfg.clone();
        c.netsim.mobility.speed = self.speed;
        c.netsim.background.load = self.load;
        c.netsim.traffic.rate = self.rate;
        c
    }
}

/// Distinct runs of consecutive values above `limit`.
pub fn excursions(series: &[f64], limit: f64) -> usize {
    let mut count = 0;
    let mut above = false;
    for &v in series {
        if v > limit && !above {
            count += 1;
        }
        above = v > limit;
    }
    count
}

/// Trailing mean over `window` values; the first entries average what is available.
pub fn rolling_mean(series: &[f64], window: usize) -> Vec<f64> {
    (0..series.len()).map(|k| mean(&series[(k + 1).saturating_sub(window)..=k])).collect()
}

/// Excursions of the smoothed correction fraction above `mean + 2σ` of its own values
/// after stabilization.
pub fn oscillation_excursions(corrections: &[f64]) -> usize {
    let smooth = rolling_mean(corrections, 3);
    if smooth.len() < 2 {
        return 0;
    }
    excursions(&smooth, mean(&smooth) + 2.0 * std_dev(&smooth))
}

/// Batch and per-transition measurements of one setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingRun {
    pub setting: Setting,
    pub batch: Batch,
    /// Stabilization intervals of every (seed, transition) pair.
    pub stabilization: Vec<Option<usize>>,
    /// Oscillation excursions after each stabilized transition.
    pub excursions: Vec<usize>,
}

impl SettingRun {
    pub fn estimate(&self) -> Estimate {
        let v: Vec<f64> = self.stabilization.iter().flatten().map(|&k| k as f64).collect();
        ci95(&v)
    }

    pub fn unstabilized(&self) -> usize {
        self.stabilization.iter().filter(|s| s.is_none()).count()
    }

    pub fn max_excursions(&self) -> usize {
        self.excursions.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub setting: usize,
    pub speed_min: f64,
    pub speed_max: f64,
    pub load_min: f64,
    pub load_max: f64,
    pub rate: f64,
    pub stabilization: f64,
    pub ci95: f64,
    pub n: usize,
    pub unstabilized: usize,
    pub max_excursions: usize,
}

/// Runs the proposed scheme under each setting. The phase transitions of the configured
/// schedule act as the disturbances.
pub fn run_stability(cfg: &ExperimentConfig, settings: &[Setting], seeds: &[u64]) -> Result<Vec<SettingRun>> {
    settings
        .iter()
        .map(|s| {
            let c = s.apply(cfg);
            c.validate()?;
            let batch = run_jobs(&c, &[Job::scheme(&c, Scheme::Proposed)], seeds, None)?;
            let n = c.netsim.interval;
            let idx = |t: f64| (t / n).round() as usize;
            let phases = &c.netsim.phases;
            let mut stabilization = Vec::new();
            let mut excursion_counts = Vec::new();
            for r in &batch.runs {
                for (p, k) in r.metrics.stabilization.iter().enumerate() {
                    stabilization.push(*k);
                    let Some(k) = *k else { continue };
                    let start = idx(phases[p + 1].start) + k;
                    let end = phases.get(p + 2).map_or(r.correction_trace.len(), |q| idx(q.start));
                    excursion_counts.push(oscillation_excursions(&r.correction_trace[start.min(end)..end]));
                }
            }
            Ok(SettingRun { setting: s.clone(), batch, stabilization, excursions: excursion_counts })
        })
        .collect()
}

/// Mean stabilization never drops by more than the confidence intervals allow from one
/// setting to the next.
pub fn nondecreasing_within_ci(runs: &[SettingRun]) -> bool {
    runs.windows(2).all(|w| {
        let (a, b) = (w[0].estimate(), w[1].estimate());
        b.upper() >= a.lower()
    })
}

pub fn rows(runs: &[SettingRun]) -> Vec<StabilityRow> {
    runs.iter()
        .enumerate()
        .map(|(i, r)| {
            let e = r.estimate();
            StabilityRow {
                setting: i + 1,
                speed_min: r.setting.speed.0,
                speed_max: r.setting.speed.1,
                load_min: r.setting.load.0,
                load_max: r.setting.load.1,
                rate: r.setting.rate,
                stabilization: e.mean,
                ci95: e.half_width,
                n: e.n,
                unstabilized: r.unstabilized(),
                max_excursions: r.max_excursions(),
            }
        })
        .collect()
}

pub fn write_stability_csv(path: &Path, runs: &[SettingRun]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows(runs) {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn excursions_count_distinct_runs() {
        assert_eq!(excursions(&[0.0, 2.0, 2.0, 0.0, 3.0, 0.0], 1.0), 2);
        assert_eq!(excursions(&[0.0; 5], 1.0), 0);
        assert_eq!(excursions(&[2.0; 5], 1.0), 1);
    }

    #[test]
    fn rolling_mean_warms_up() {
        assert_eq!(rolling_mean(&[3.0, 6.0, 9.0, 0.0], 3), vec![3.0, 4.5, 6.0, 5.0]);
    }

    #[test]
    fn flat_corrections_never_oscillate() {
        assert_eq!(oscillation_excursions(&[0.1; 50]), 0);
    }

    #[test]
    fn settings_escalate() {
        let s = Setting::escalating();
        assert_eq!(s.len(), 4);
        assert!(s.windows(2).all(|w| w[1].rate > w[0].rate && w[1].load.1 > w[0].load.1));
        let c = s[3].apply(&ExperimentConfig::default());
        assert_eq!(c.netsim.traffic.rate, 25.0);
        assert_eq!(c.netsim.background.load, (0.65, 0.75));
        assert!(c.validate().is_ok());
    }
}
