//! Per-run CSV logs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::run::RunOutput;

fn join(path: &[usize]) -> String {
    path.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("-")
}

/// Directory holding the logs of one run: `<root>/<scenario>_<label>_seed<seed>`.
pub fn run_dir(root: &Path, scenario: &str, label: &str, seed: u64) -> PathBuf {
    root.join(format!("{scenario}_{label}_seed{seed}"))
}

#[derive(Serialize)]
struct DecisionRow<'a> {
    message: u64,
    flow: u64,
    time: f64,
    scheme: &'a str,
    source: &'a str,
    alignment: f64,
    context: f64,
    urgency: f64,
    relevance: f64,
    z: f64,
    class: &'a str,
    fidelity: &'a str,
    path: String,
    cost: f64,
    j1: f64,
    j2: f64,
    d_hat: f64,
    violation: bool,
    reason: &'a str,
}

#[derive(Serialize)]
struct DistortionRow<'a> {
    message: u64,
    time: f64,
    relevance: f64,
    d_hat: f64,
    d_obs: f64,
    gap: f64,
    tolerance: f64,
    action: &'a str,
    fidelity_before: &'a str,
    fidelity_after: &'a str,
}

#[derive(Serialize)]
struct MessageRow<'a> {
    id: u64,
    flow: u64,
    task: usize,
    src: usize,
    dst: usize,
    created: f64,
    size: f64,
    outcome: &'a str,
    delivered_at: Option<f64>,
    delay: Option<f64>,
    d_obs: Option<f64>,
    relevance: Option<f64>,
    fidelity: Option<&'a str>,
    path: String,
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `events.csv`, `decisions.csv`, `distortion.csv`, `messages.csv` and
/// `intervals.csv` for one run and returns the directory.
pub fn write_run_logs(root: &Path, scenario: &str, run: &RunOutput) -> Result<PathBuf> {
    let dir = run_dir(root, scenario, &run.label, run.seed);
    fs::create_dir_all(&dir)?;
    write_rows(&dir.join("events.csv"), &run.sim.events)?;
    write_rows(&dir.join("intervals.csv"), &run.sim.intervals)?;
    write_rows(
        &dir.join("decisions.csv"),
        run.decisions.iter().map(|d| DecisionRow {
            message: d.message,
            flow: d.flow,
            time: d.time,
            scheme: &run.label,
            source: d.source.as_str(),
            alignment: d.alignment,
            context: d.context,
            urgency: d.urgency,
            relevance: d.relevance,
            z: d.z,
            class: d.class.as_str(),
            fidelity: d.fidelity.as_str(),
            path: join(&d.path),
            cost: d.cost,
            j1: d.j1,
            j2: d.j2,
            d_hat: d.d_hat,
            violation: d.violation,
            reason: d.reason.as_str(),
        }),
    )?;
    write_rows(
        &dir.join("distortion.csv"),
        run.distortion.iter().map(|r| DistortionRow {
            message: r.message,
            time: r.time,
            relevance: r.relevance,
            d_hat: r.d_hat,
            d_obs: r.d_obs,
            gap: r.gap,
            tolerance: r.tolerance,
            action: r.action.as_str(),
            fidelity_before: r.before.as_str(),
            fidelity_after: r.after.as_str(),
        }),
    )?;
    write_rows(
        &dir.join("messages.csv"),
        run.sim.messages.iter().map(|m| MessageRow {
            id: m.id,
            flow: m.flow,
            task: m.task,
            src: m.src,
            dst: m.dst,
            created: m.created,
            size: m.size,
            outcome: m.outcome.as_str(),
            delivered_at: m.delivered_at,
            delay: m.delay(),
            d_obs: m.d_obs,
            relevance: m.decision.as_ref().map(|d| d.relevance),
            fidelity: m.decision.as_ref().map(|d| d.fidelity.as_str()),
            path: m.decision.as_ref().map(|d| join(&d.path)).unwrap_or_default(),
        }),
    )?;
    Ok(dir)
}
