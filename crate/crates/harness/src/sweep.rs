//! Parameter sensitivity grids over the proposed controller.
//!
//! Only controller parameters move; the scenario and the SDSR scoring tolerance stay
//! fixed, so every grid point is scored against the same criterion.

use std::path::Path;

use serde::{Deserialize, Serialize};

use semnet_core::kplane::ControllerConfig;
use semnet_core::routing::{KappaMap, Scheme};
use semnet_core::semantics::RelevanceWeights;

use crate::batch::{run_jobs, Job};
use crate::config::ExperimentConfig;
use crate::error::Result;

/// Mean SDSR at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub grid: String,
    pub x_name: String,
    pub x: f64,
    pub y_name: String,
    pub y: f64,
    pub sdsr: f64,
    pub ci95: f64,
    pub n: usize,
}

/// Axes of one two-dimensional grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub name: &'static str,
    pub x_name: &'static str,
    pub y_name: &'static str,
    pub points: Vec<(f64, f64)>,
}

pub const KAPPAS: [f64; 5] = [0.3, 0.45, 0.6, 0.75, 0.9];
pub const DELTA0S: [f64; 5] = [0.02, 0.035, 0.05, 0.065, 0.08];
pub const GAMMAS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

impl Grid {
    /// The three standard surfaces.
    pub fn standard() -> Vec<Grid> {
        vec![Grid::kappa_delta0(&KAPPAS, &DELTA0S), Grid::relevance_simplex(0.1), Grid::kappa_gamma(&KAPPAS, &GAMMAS)]
    }

    pub fn kappa_delta0(kappas: &[f64], deltas: &[f64]) -> Self {
        let points = kappas.iter().flat_map(|&k| deltas.iter().map(move |&d| (k, d))).collect();
        Self { name: "kappa_delta0", x_name: "kappa", y_name: "delta0", points }
    }

    /// `(alpha, beta)` on the simplex at `step`; gamma is the remainder.
    pub fn relevance_simplex(step: f64) -> Self {
        Self { name: "relevance_simplex", x_name: "alpha", y_name: "beta", points: simplex_points(step) }
    }

    pub fn kappa_gamma(kappas: &[f64], gammas: &[f64]) -> Self {
        let points = kappas.iter().flat_map(|&k| gammas.iter().map(move |&g| (k, g))).collect();
        Self { name: "kappa_gamma", x_name: "kappa", y_name: "gamma", points }
    }

    /// Controller for one point, or `None` when the point is not a valid parameter set.
    fn controller(&self, base: &ControllerConfig, (x, y): (f64, f64)) -> Option<ControllerConfig> {
        let mut c = base.clone();
        match self.name {
            "kappa_delta0" => {
                c.routing.kappa = KappaMap::uniform(x);
                c.control.delta0 = y;
            }
            "relevance_simplex" => {
                c.reasoning.weights = RelevanceWeights::new(x, y, (1.0 - x - y).max(0.0)).ok()?;
            }
            "kappa_gamma" => {
                // The remaining weight keeps the default alpha:beta ratio.
                let d = RelevanceWeights::default();
                let rest = 1.0 - y;
                let share = d.alpha / (d.alpha + d.beta);
                c.routing.kappa = KappaMap::uniform(x);
                c.reasoning.weights = RelevanceWeights::new(rest * share, rest * (1.0 - share), y).ok()?;
            }
            _ => return None,
        }
        c.validate().ok()?;
        Some(c)
    }
}

/// Grid points `(i * step, j * step)` with `i + j <= 1 / step`.
pub fn simplex_points(step: f64) -> Vec<(f64, f64)> {
    let n = (1.0 / step).round() as usize;
    (0..=n).flat_map(|i| (0..=n - i).map(move |j| (i as f64 / n as f64, j as f64 / n as f64))).collect()
}

/// Runs the proposed scheme at every valid point of `grid` on `seeds`. Invalid points are
/// skipped with a warning on standard error.
pub fn run_grid(cfg: &ExperimentConfig, grid: &Grid, seeds: &[u64]) -> Result<Vec<SweepPoint>> {
    let base = cfg.controller(Scheme::Proposed);
    let mut jobs = Vec::new();
    let mut kept = Vec::new();
    for &p in &grid.points {
        match grid.controller(&base, p) {
            Some(controller) => {
                jobs.push(Job { label: format!("{}_{}_{}", grid.name, p.0, p.1), controller });
                kept.push(p);
            }
            None => eprintln!("warning: skipping invalid {} point ({}, {})", grid.name, p.0, p.1),
        }
    }
    let batch = run_jobs(cfg, &jobs, seeds, None)?;
    Ok(jobs
        .iter()
        .zip(kept)
        .map(|(job, (x, y))| {
            let e = batch.estimate(&job.label, "sdsr");
            SweepPoint {
                grid: grid.name.into(),
                x_name: grid.x_name.into(),
                x,
                y_name: grid.y_name.into(),
                y,
                sdsr: e.mean,
                ci95: e.half_width,
                n: e.n,
            }
        })
        .collect())
}

pub fn write_sweep_csv(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// Shape of a surface around its best cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Plateau {
    pub best: (f64, f64),
    pub best_sdsr: f64,
    pub min_sdsr: f64,
    /// For each edge-adjacent cell, the share of the best cell's margin over the grid
    /// minimum that it retains.
    pub retained: Vec<((f64, f64), f64)>,
}

impl Plateau {
    /// Every neighbor keeps more than `1 - max_drop` of the best margin.
    pub fn is_broad(&self, max_drop: f64) -> bool {
        self.retained.iter().all(|(_, r)| *r > 1.0 - max_drop)
    }
}

/// Locates the best cell of a rectangular surface and measures its neighbors.
pub fn plateau(points: &[SweepPoint]) -> Option<Plateau> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let mut ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    for v in [&mut xs, &mut ys] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let best = points.iter().filter(|p| p.sdsr.is_finite()).max_by(|a, b| a.sdsr.total_cmp(&b.sdsr))?;
    let min = points.iter().map(|p| p.sdsr).filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    let margin = best.sdsr - min;
    let pos = |v: &[f64], x: f64| v.iter().position(|&a| a == x);
    let (bi, bj) = (pos(&xs, best.x)?, pos(&ys, best.y)?);
    let retained = points
        .iter()
        .filter(|p| {
            let (i, j) = (pos(&xs, p.x).unwrap_or(usize::MAX), pos(&ys, p.y).unwrap_or(usize::MAX));
            i.abs_diff(bi) + j.abs_diff(bj) == 1
        })
        .map(|p| ((p.x, p.y), if margin > 0.0 { (p.sdsr - min) / margin } else { 1.0 }))
        .collect();
    Some(Plateau { best: (best.x, best.y), best_sdsr: best.sdsr, min_sdsr: min, retained })
}
