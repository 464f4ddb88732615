//! Summary tables built from long-form batch rows.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use semnet_core::routing::Scheme;

use crate::batch::{BatchRow, AGGREGATE};
use crate::error::Result;
use crate::stats::{ci95, Estimate};

/// Label of the proposed controller with `delta_min = 0` and no fidelity stage.
pub const REROUTE_VARIANT: &str = "reroute_only";

/// Per-seed values of batch rows, keyed by scheme and metric.
#[derive(Debug, Clone, Default)]
pub struct Table {
    rows: Vec<BatchRow>,
}

impl Table {
    pub fn new(rows: Vec<BatchRow>) -> Self {
        Self { rows }
    }

    pub fn schemes(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.scheme.as_str()) {
                out.push(&r.scheme);
            }
        }
        out
    }

    /// `(seed, value)` of every per-seed row.
    pub fn series(&self, scheme: &str, metric: &str) -> Vec<(String, f64)> {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme && r.metric == metric && r.seed != AGGREGATE)
            .map(|r| (r.seed.clone(), r.value))
            .collect()
    }

    pub fn estimate(&self, scheme: &str, metric: &str) -> Estimate {
        let v: Vec<f64> = self.series(scheme, metric).into_iter().map(|(_, v)| v).filter(|v| v.is_finite()).collect();
        ci95(&v)
    }

    /// Per-seed `f(a, b)` over seeds where both values and the result are finite.
    pub fn paired(&self, a: &str, b: &str, metric: &str, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let bs = self.series(b, metric);
        self.series(a, metric)
            .into_iter()
            .filter_map(|(seed, x)| {
                let y = bs.iter().find(|(s, _)| *s == seed)?.1;
                let d = f(x, y);
                d.is_finite().then_some(d)
            })
            .collect()
    }
}

/// One directional claim of the proposed scheme against a reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub claim: String,
    /// Per-seed effect, oriented so larger is better for the proposed scheme.
    pub effect: f64,
    pub ci95: f64,
    pub n: usize,
    /// Minimum mean effect for the claim to hold.
    pub threshold: f64,
    pub passed: bool,
}

impl Claim {
    fn new(claim: &str, effects: &[f64], threshold: f64) -> Self {
        let e = ci95(effects);
        // The interval must lie above zero effect, and the mean must reach the threshold.
        let passed = e.n >= 2 && e.lower() > 0.0 && e.mean >= threshold;
        Self { claim: claim.into(), effect: e.mean, ci95: e.half_width, n: e.n, threshold, passed }
    }
}

/// The five comparative claims. A claim whose schemes are missing from the rows fails
/// with `n = 0`.
pub fn claims(table: &Table) -> Vec<Claim> {
    let p = Scheme::Proposed.as_str();
    let sp = Scheme::Sp.as_str();
    vec![
        Claim::new("sdsr_gain", &table.paired(p, sp, "sdsr", |a, b| a - b), 0.06),
        Claim::new("distortion_reduction", &table.paired(p, sp, "distortion_mean", |a, b| 1.0 - a / b), 0.10),
        // Distortion-triggered path changes against the reroute-only variant; the claim is
        // a ratio of at most 0.75, so the effect is one minus the ratio.
        Claim::new(
            "reroute_reduction",
            &table.paired(p, REROUTE_VARIANT, "triggered_reroute_frequency", |a, b| 1.0 - a / b),
            0.25,
        ),
        Claim::new("throughput_gain", &table.paired(p, sp, "throughput", |a, b| a / b - 1.0), 0.03),
        Claim::new("high_r_variability_reduction", &table.paired(p, sp, "high_r_delay_variability", |a, b| b - a), 0.0),
    ]
}

/// At most one claim failed.
pub fn claims_hold(claims: &[Claim]) -> bool {
    claims.iter().filter(|c| !c.passed).count() <= 1
}

pub const GAIN_METRICS: [&str; 8] = [
    "sdsr",
    "distortion_mean",
    "reroute_frequency",
    "triggered_reroute_frequency",
    "normalized_throughput",
    "goodput",
    "high_r_delay_variability",
    "delay_mean",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub metric: String,
    pub scheme: String,
    pub mean: f64,
    pub ci95: f64,
    /// Change relative to SP: a difference for SDSR, a ratio minus one otherwise.
    pub vs_sp: f64,
}

pub fn gain_table(table: &Table) -> Vec<GainRow> {
    let sp = Scheme::Sp.as_str();
    let mut out = Vec::new();
    for metric in GAIN_METRICS {
        let base = table.estimate(sp, metric).mean;
        for scheme in table.schemes() {
            let e = table.estimate(scheme, metric);
            if e.n == 0 {
                continue;
            }
            let vs_sp = if metric == "sdsr" { e.mean - base } else { e.mean / base - 1.0 };
            out.push(GainRow { metric: metric.into(), scheme: scheme.into(), mean: e.mean, ci95: e.half_width, vs_sp });
        }
    }
    out
}

/// Plain-text rendering of the gain table and the claims.
pub fn render(gains: &[GainRow], claims: &[Claim]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<30} {:<14} {:>12} {:>10} {:>9}", "metric", "scheme", "mean", "ci95", "vs SP");
    for g in gains {
        let _ = writeln!(s, "{:<30} {:<14} {:>12.4} {:>10.4} {:>+9.3}", g.metric, g.scheme, g.mean, g.ci95, g.vs_sp);
    }
    let _ = writeln!(s);
    for c in claims {
        let verdict = if c.passed { "pass" } else { "FAIL" };
        let _ = writeln!(
            s,
            "{verdict} {:<30} effect {:+.4} ± {:.4} (n = {}, needs ≥ {})",
            c.claim, c.effect, c.ci95, c.n, c.threshold
        );
    }
    s
}

/// Writes `gains.csv` and `claims.csv` into `dir`.
pub fn write_report(dir: &Path, gains: &[GainRow], claims: &[Claim]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("gains.csv"))?;
    for g in gains {
        w.serialize(g)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("claims.csv"))?;
    for c in claims {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scheme: &str, seed: u64, metric: &str, value: f64) -> BatchRow {
        BatchRow {
            scenario: "t".into(),
            scheme: scheme.into(),
            seed: seed.to_string(),
            metric: metric.into(),
            value,
            ci95: 0.0,
            n: 1,
        }
    }

    fn table(gain: f64) -> Table {
        let mut rows = Vec::new();
        for seed in 1..=10u64 {
            let jitter = seed as f64 * 1e-3;
            rows.push(row("proposed", seed, "sdsr", 0.6 + gain + jitter));
            rows.push(row("SP", seed, "sdsr", 0.6));
            rows.push(row("proposed", seed, "distortion_mean", 0.04 - jitter * 0.1));
            rows.push(row("SP", seed, "distortion_mean", 0.05));
            rows.push(row("proposed", seed, "triggered_reroute_frequency", 0.2 + jitter));
            rows.push(row(REROUTE_VARIANT, seed, "triggered_reroute_frequency", 0.3));
            rows.push(row("proposed", seed, "throughput", 105.0 + seed as f64));
            rows.push(row("SP", seed, "throughput", 100.0));
            rows.push(row("proposed", seed, "high_r_delay_variability", 0.3 - jitter));
            rows.push(row("SP", seed, "high_r_delay_variability", 0.4));
        }
        Table::new(rows)
    }

    #[test]
    fn clear_gains_pass_every_claim() {
        let c = claims(&table(0.1));
        assert!(c.iter().all(|c| c.passed), "{c:?}");
        assert!(claims_hold(&c));
        // distortion 0.04 - 0.0001 s against 0.05
        let expected = (1..=10).map(|s| 1.0 - (0.04 - s as f64 * 1e-4) / 0.05).sum::<f64>() / 10.0;
        assert!((c[1].effect - expected).abs() < 1e-12);
    }

    #[test]
    fn small_gain_fails_only_that_claim() {
        let c = claims(&table(0.02));
        assert!(!c[0].passed);
        assert_eq!(c.iter().filter(|c| !c.passed).count(), 1);
        assert!(claims_hold(&c));
    }

    #[test]
    fn missing_variant_fails_the_reroute_claim() {
        let mut t = table(0.1);
        t.rows.retain(|r| r.scheme != REROUTE_VARIANT);
        let c = claims(&t);
        assert!(!c[2].passed);
        assert_eq!(c[2].n, 0);
    }

    #[test]
    fn gain_table_reports_against_sp() {
        let g = gain_table(&table(0.1));
        let sdsr = g.iter().find(|g| g.metric == "sdsr" && g.scheme == "proposed").unwrap();
        assert!((sdsr.vs_sp - 0.1055).abs() < 1e-9);
        let sp = g.iter().find(|g| g.metric == "distortion_mean" && g.scheme == "SP").unwrap();
        assert_eq!(sp.vs_sp, 0.0);
        assert!(render(&g, &claims(&table(0.1))).contains("pass sdsr_gain"));
    }
}
