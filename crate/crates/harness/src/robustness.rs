//! Embedding noise, dimensionality reduction and concept drift, each swept over every
//! scheme on the same seeds.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::batch::{run_jobs, scheme_jobs, Batch};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::stats::{mean, std_dev};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Noise,
    Dimension,
    Drift,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [Experiment::Noise, Experiment::Dimension, Experiment::Drift];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Noise => "noise",
            Experiment::Dimension => "dimension",
            Experiment::Drift => "drift",
        }
    }
}

/// Perturbation levels of the three experiments, mildest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Levels {
    pub noise: Vec<f64>,
    pub dimensions: Vec<usize>,
    pub drift: Vec<f64>,
}

impl Default for Levels {
    fn default() -> Self {
        Self { noise: vec![0.0, 0.05, 0.1, 0.2], dimensions: vec![128, 64, 32], drift: vec![0.0, 0.1, 0.2] }
    }
}

/// One perturbation level and the batch it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRun {
    pub experiment: Experiment,
    /// The configured value: noise RMS, dimension or drift fraction.
    pub level: f64,
    /// Monotone severity axis; dimension maps to `1 - dim / full dim`.
    pub severity: f64,
    pub batch: Batch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub experiment: String,
    pub level: f64,
    pub severity: f64,
    pub scheme: String,
    pub metric: String,
    pub value: f64,
    pub ci95: f64,
    pub n: usize,
}

/// Mean relevance per interval around the drift event for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub scheme: String,
    pub drift_fraction: f64,
    pub seed: u64,
    /// Intervals relative to the drift event.
    pub offset: i64,
    pub time: f64,
    pub relevance: f64,
    pub band_low: f64,
    pub band_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Robustness {
    pub runs: Vec<LevelRun>,
    pub interval: f64,
    pub drift_time: f64,
    /// Seconds before the drift used to fit the reference band.
    pub reference_window: f64,
}

pub const REFERENCE_WINDOW: f64 = 30.0;

/// Runs every level of every experiment for every configured scheme on `seeds`. The
/// unperturbed configuration is the first level of each experiment and is run once.
pub fn run_robustness(cfg: &ExperimentConfig, levels: &Levels, seeds: &[u64]) -> Result<Robustness> {
    let full = cfg.netsim.world.dim;
    let mut plan: Vec<(Experiment, f64, f64, ExperimentConfig)> = Vec::new();
    for &s in &levels.noise {
        let mut c = cfg.clone();
        c.netsim.perturbation.embedding_noise = s;
        plan.push((Experiment::Noise, s, s, c));
    }
    for &d in &levels.dimensions {
        let mut c = cfg.clone();
        c.netsim.perturbation.dimension = d;
        plan.push((Experiment::Dimension, d as f64, 1.0 - d as f64 / full as f64, c));
    }
    for &f in &levels.drift {
        let mut c = cfg.clone();
        c.netsim.perturbation.drift_fraction = f;
        plan.push((Experiment::Drift, f, f, c));
    }
    let mut done: Vec<(ExperimentConfig, Batch)> = Vec::new();
    let mut runs = Vec::new();
    for (experiment, level, severity, c) in plan {
        c.validate()?;
        let batch = match done.iter().find(|(d, _)| *d == c) {
            Some((_, b)) => b.clone(),
            None => {
                // Jobs are rebuilt per level since the controller reads the drift settings.
                let b = run_jobs(&c, &scheme_jobs(&c), seeds, None)?;
                done.push((c.clone(), b.clone()));
                b
            }
        };
        runs.push(LevelRun { experiment, level, severity, batch });
    }
    Ok(Robustness {
        runs,
        interval: cfg.netsim.interval,
        drift_time: cfg.netsim.perturbation.drift_time,
        reference_window: REFERENCE_WINDOW,
    })
}

/// First `k >= 0` with `trace[drift + k]` inside `[low, high]`.
pub fn reentry(trace: &[f64], drift: usize, band: (f64, f64)) -> Option<usize> {
    trace.get(drift..)?.iter().position(|&v| v >= band.0 && v <= band.1)
}

/// `mean ± 2σ` of `trace[start..end]`.
pub fn reference_band(trace: &[f64], start: usize, end: usize) -> Option<(f64, f64)> {
    let w = trace.get(start..end)?;
    if w.len() < 2 {
        return None;
    }
    let (m, s) = (mean(w), std_dev(w));
    Some((m - 2.0 * s, m + 2.0 * s))
}

/// Least-squares slope of `y` on `x`.
pub fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

impl Robustness {
    pub fn levels(&self, experiment: Experiment) -> impl Iterator<Item = &LevelRun> {
        self.runs.iter().filter(move |r| r.experiment == experiment)
    }

    /// `(severity, mean metric)` for one scheme, mildest first.
    pub fn curve(&self, experiment: Experiment, scheme: &str, metric: &str) -> Vec<(f64, f64)> {
        self.levels(experiment).map(|r| (r.severity, r.batch.estimate(scheme, metric).mean)).collect()
    }

    /// Mean distortion never falls as the perturbation grows.
    pub fn distortion_nondecreasing(&self, experiment: Experiment, scheme: &str) -> bool {
        self.curve(experiment, scheme, "distortion_mean").windows(2).all(|w| w[1].1 >= w[0].1)
    }

    /// Least-squares slope of mean SDSR against severity.
    pub fn sdsr_slope(&self, experiment: Experiment, scheme: &str) -> f64 {
        slope(&self.curve(experiment, scheme, "sdsr"))
    }

    fn drift_index(&self) -> usize {
        (self.drift_time / self.interval).round() as usize
    }

    fn band_of(&self, trace: &[f64]) -> Option<(f64, f64)> {
        let d = self.drift_index();
        let w = (self.reference_window / self.interval).round() as usize;
        reference_band(trace, d.saturating_sub(w), d)
    }

    /// Re-entry interval of every `(scheme, drift fraction, seed)` run with a nonzero drift.
    pub fn reentries(&self) -> Vec<(String, f64, u64, Option<usize>)> {
        let d = self.drift_index();
        let mut out = Vec::new();
        for lr in self.levels(Experiment::Drift).filter(|r| r.level > 0.0) {
            for r in &lr.batch.runs {
                let k = self.band_of(&r.relevance_trace).and_then(|b| reentry(&r.relevance_trace, d, b));
                out.push((r.label.clone(), lr.level, r.seed, k));
            }
        }
        out
    }

    pub fn rows(&self) -> Vec<RobustnessRow> {
        let mut rows = Vec::new();
        for lr in &self.runs {
            for scheme in lr.batch.labels() {
                for metric in ["distortion_mean", "sdsr", "delay_mean", "reroute_frequency"] {
                    let e = lr.batch.estimate(scheme, metric);
                    rows.push(RobustnessRow {
                        experiment: lr.experiment.as_str().into(),
                        level: lr.level,
                        severity: lr.severity,
                        scheme: scheme.into(),
                        metric: metric.into(),
                        value: e.mean,
                        ci95: e.half_width,
                        n: e.n,
                    });
                }
            }
        }
        rows
    }

    /// Relevance traces from the start of the reference window to as far after the drift.
    pub fn trace_rows(&self) -> Vec<TraceRow> {
        let d = self.drift_index() as i64;
        let w = (self.reference_window / self.interval).round() as i64;
        let mut rows = Vec::new();
        for lr in self.levels(Experiment::Drift) {
            for r in &lr.batch.runs {
                let Some((lo, hi)) = self.band_of(&r.relevance_trace) else { continue };
                for i in (d - w).max(0)..(d + w).min(r.relevance_trace.len() as i64) {
                    rows.push(TraceRow {
                        scheme: r.label.clone(),
                        drift_fraction: lr.level,
                        seed: r.seed,
                        offset: i - d,
                        time: i as f64 * self.interval,
                        relevance: r.relevance_trace[i as usize],
                        band_low: lo,
                        band_high: hi,
                    });
                }
            }
        }
        rows
    }

    /// Writes `robustness.csv` and `drift_traces.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_rows(&dir.join("robustness.csv"), self.rows())?;
        write_rows(&dir.join("drift_traces.csv"), self.trace_rows())
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: Vec<T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
