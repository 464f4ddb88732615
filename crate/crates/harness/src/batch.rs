//! Seeded batches of runs and their long-form CSV.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use semnet_core::kplane::ControllerConfig;
use semnet_core::routing::Scheme;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::metrics::{correction_series, relevance_series, RunMetrics};
use crate::output::write_run_logs;
use crate::report::REROUTE_VARIANT;
use crate::run::run_with;
use crate::stats::{ci95, Estimate};

/// One controller variant of a batch.
#[derive(Debug, Clone)]
pub struct Job {
    pub label: String,
    pub controller: ControllerConfig,
}

impl Job {
    pub fn scheme(cfg: &ExperimentConfig, scheme: Scheme) -> Self {
        Self { label: scheme.as_str().to_string(), controller: cfg.controller(scheme) }
    }
}

/// Jobs for every scheme listed in the configuration.
pub fn scheme_jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    cfg.harness.schemes.iter().map(|&s| Job::scheme(cfg, s)).collect()
}

/// Metrics of one run, without its logs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub topology_digest: u64,
    pub arrival_digest: u64,
    /// Mean relevance of the decisions in each control interval.
    pub relevance_trace: Vec<f64>,
    /// Share of feedback evaluations per interval that triggered a correction.
    pub correction_trace: Vec<f64>,
}

/// Long-form CSV row; `seed` is `mean` on aggregate rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub scenario: String,
    pub scheme: String,
    pub seed: String,
    pub metric: String,
    pub value: f64,
    pub ci95: f64,
    pub n: usize,
}

pub const AGGREGATE: &str = "mean";

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub scenario: String,
    pub runs: Vec<RunSummary>,
}

/// Runs every job on every seed. Runs are spread over the available cores; results keep
/// job-major, seed-minor order regardless. With `logs` set, each run writes its CSV logs
/// under that directory.
pub fn run_jobs(cfg: &ExperimentConfig, jobs: &[Job], seeds: &[u64], logs: Option<&Path>) -> Result<Batch> {
    let tasks: Vec<(&Job, u64)> = jobs.iter().flat_map(|j| seeds.iter().map(move |&s| (j, s))).collect();
    let results: Vec<Mutex<Option<Result<RunSummary>>>> = tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(tasks.len()).max(1);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(job, seed)) = tasks.get(i) else { break };
        let out = run_with(cfg, job.controller.clone(), &job.label, seed).and_then(|run| {
            if let Some(dir) = logs {
                write_run_logs(dir, &cfg.netsim.name, &run)?;
            }
            Ok(RunSummary {
                label: run.label,
                seed,
                metrics: run.metrics,
                topology_digest: run.sim.topology_digest,
                arrival_digest: run.sim.arrival_digest,
                relevance_trace: relevance_series(&run.decisions, cfg.netsim.interval, cfg.netsim.ticks()),
                correction_trace: correction_series(&run.distortion, cfg.netsim.interval, cfg.netsim.ticks()),
            })
        });
        *results[i].lock().expect("unpoisoned") = Some(out);
    };
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(work);
            }
        });
    }
    let runs = results
        .into_iter()
        .map(|m| m.into_inner().expect("unpoisoned").expect("every task ran"))
        .collect::<Result<Vec<_>>>()?;
    Ok(Batch { scenario: cfg.netsim.name.clone(), runs })
}

/// Scheme jobs plus, when enabled and the proposed scheme is listed, the reroute-only
/// variant that the reroute claim is measured against.
pub fn batch_jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let mut jobs = scheme_jobs(cfg);
    if cfg.harness.reroute_variant && cfg.harness.schemes.contains(&Scheme::Proposed) {
        jobs.push(Job { label: REROUTE_VARIANT.into(), controller: cfg.reroute_only_controller() });
    }
    jobs
}

/// Every batch job on every configured seed.
pub fn run_batch(cfg: &ExperimentConfig, logs: Option<&Path>) -> Result<Batch> {
    run_jobs(cfg, &batch_jobs(cfg), &cfg.harness.seeds, logs)
}

fn metric(m: &RunMetrics, name: &str) -> Option<f64> {
    m.named().into_iter().find(|(n, _)| n == name).map(|(_, v)| v)
}

impl Batch {
    /// Job labels in order of first appearance.
    pub fn labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.runs {
            if !out.contains(&r.label.as_str()) {
                out.push(&r.label);
            }
        }
        out
    }

    pub fn runs_of<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a RunSummary> + 'a {
        self.runs.iter().filter(move |r| r.label == label)
    }

    /// `(seed, value)` of one metric for one label, in run order. Derived metrics such as
    /// `normalized_throughput` are included.
    pub fn series(&self, label: &str, name: &str) -> Vec<(u64, f64)> {
        if name == "normalized_throughput" {
            let Some(base) = self.sp_throughput() else { return Vec::new() };
            return self.runs_of(label).map(|r| (r.seed, r.metrics.throughput / base)).collect();
        }
        self.runs_of(label).filter_map(|r| metric(&r.metrics, name).map(|v| (r.seed, v))).collect()
    }

    /// Finite values of one metric for one label.
    pub fn values(&self, label: &str, name: &str) -> Vec<f64> {
        self.series(label, name).into_iter().map(|(_, v)| v).filter(|v| v.is_finite()).collect()
    }

    pub fn estimate(&self, label: &str, name: &str) -> Estimate {
        ci95(&self.values(label, name))
    }

    /// Per-seed `f(a, b)` over seeds where both labels have a finite value.
    pub fn paired(&self, a: &str, b: &str, name: &str, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let bs = self.series(b, name);
        self.series(a, name)
            .into_iter()
            .filter_map(|(seed, x)| {
                let y = bs.iter().find(|(s, _)| *s == seed)?.1;
                let d = f(x, y);
                (x.is_finite() && y.is_finite() && d.is_finite()).then_some(d)
            })
            .collect()
    }

    /// Mean SP throughput, the normalization baseline.
    pub fn sp_throughput(&self) -> Option<f64> {
        let v = self.values(Scheme::Sp.as_str(), "throughput");
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    fn metric_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.runs.first().map_or_else(Vec::new, |r| {
            r.metrics.named().into_iter().map(|(n, _)| n).collect()
        });
        if self.sp_throughput().is_some() {
            names.push("normalized_throughput".into());
        }
        names
    }

    /// Per-seed rows followed by one aggregate row per label and metric.
    pub fn rows(&self) -> Vec<BatchRow> {
        let names = self.metric_names();
        let mut rows = Vec::new();
        for label in self.labels() {
            for name in &names {
                for (seed, value) in self.series(label, name) {
                    rows.push(BatchRow {
                        scenario: self.scenario.clone(),
                        scheme: label.to_string(),
                        seed: seed.to_string(),
                        metric: name.clone(),
                        value,
                        ci95: 0.0,
                        n: 1,
                    });
                }
            }
        }
        for label in self.labels() {
            for name in &names {
                let e = self.estimate(label, name);
                rows.push(BatchRow {
                    scenario: self.scenario.clone(),
                    scheme: label.to_string(),
                    seed: AGGREGATE.into(),
                    metric: name.clone(),
                    value: e.mean,
                    ci95: e.half_width,
                    n: e.n,
                });
            }
        }
        rows
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_batch_rows(path, &self.rows())
    }

    /// Every run of a scheme saw the same deployment and arrival sequence for its seed.
    pub fn schemes_share_inputs(&self) -> bool {
        self.runs.iter().all(|r| {
            self.runs
                .iter()
                .filter(|o| o.seed == r.seed)
                .all(|o| o.topology_digest == r.topology_digest && o.arrival_digest == r.arrival_digest)
        })
    }
}

pub fn write_batch_rows(path: &Path, rows: &[BatchRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_batch_rows(path: &Path) -> Result<Vec<BatchRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().collect::<std::result::Result<Vec<BatchRow>, _>>().map_err(HarnessError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(label: &str, seed: u64, sdsr: f64, throughput: f64) -> RunSummary {
        let metrics = RunMetrics { sdsr, throughput, ..RunMetrics::default() };
        RunSummary {
            label: label.into(),
            seed,
            metrics,
            topology_digest: seed,
            arrival_digest: seed,
            relevance_trace: Vec::new(),
            correction_trace: Vec::new(),
        }
    }

    fn batch() -> Batch {
        let mut runs = Vec::new();
        for seed in 1..=10 {
            runs.push(summary("proposed", seed, 0.5 + seed as f64 / 100.0, 110.0));
            runs.push(summary("SP", seed, 0.5, 100.0));
        }
        Batch { scenario: "t".into(), runs }
    }

    #[test]
    fn ten_seeds_give_ten_rows_and_one_aggregate_per_scheme() {
        let rows = batch().rows();
        for label in ["proposed", "SP"] {
            let sdsr: Vec<_> = rows.iter().filter(|r| r.scheme == label && r.metric == "sdsr").collect();
            assert_eq!(sdsr.len(), 11);
            assert_eq!(sdsr.iter().filter(|r| r.seed == AGGREGATE).count(), 1);
        }
    }

    #[test]
    fn aggregate_is_the_mean_of_seed_values() {
        let b = batch();
        let rows = b.rows();
        let seeds: Vec<f64> =
            rows.iter().filter(|r| r.scheme == "proposed" && r.metric == "sdsr" && r.seed != AGGREGATE).map(|r| r.value).collect();
        let agg = rows.iter().find(|r| r.scheme == "proposed" && r.metric == "sdsr" && r.seed == AGGREGATE).unwrap();
        assert_eq!(agg.value, seeds.iter().sum::<f64>() / seeds.len() as f64);
        assert_eq!(agg.n, 10);
    }

    #[test]
    fn throughput_is_normalized_by_the_sp_mean() {
        let b = batch();
        assert_eq!(b.sp_throughput(), Some(100.0));
        assert!(b.values("proposed", "normalized_throughput").iter().all(|v| (v - 1.1).abs() < 1e-12));
        let d = b.paired("proposed", "SP", "sdsr", |a, b| a - b);
        assert_eq!(d.len(), 10);
        assert!((d[0] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn rows_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("batch.csv");
        let b = batch();
        b.write_csv(&path).unwrap();
        assert_eq!(read_batch_rows(&path).unwrap(), b.rows());
    }
}
