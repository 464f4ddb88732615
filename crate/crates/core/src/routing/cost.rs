use std::cmp::Ordering;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{LinkImpairment, PathMetrics};
use crate::error::{Error, Result};
use crate::semantics::ImportanceClass;

/// Coefficients of the per-link distortion term
/// `clamp(c_loss * loss + c_queue * queue + c_sinr * (1 - sinr), 0, cap)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistortionModel {
    pub c_loss: f64,
    pub c_queue: f64,
    pub c_sinr: f64,
    pub cap: f64,
}

impl Default for DistortionModel {
    fn default() -> Self {
        Self { c_loss: 0.5, c_queue: 0.3, c_sinr: 0.01, cap: 0.15 }
    }
}

impl DistortionModel {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.c_loss, self.c_queue, self.c_sinr].iter().all(|c| *c >= 0.0) && (0.0..=1.0).contains(&self.cap);
        if !ok {
            return Err(Error::config(format!("invalid link distortion model {self:?}")));
        }
        Ok(())
    }

    pub fn link(&self, imp: &LinkImpairment) -> f64 {
        link_distortion(imp.loss, imp.queue_util, imp.sinr_norm, self)
    }
}

pub fn link_distortion(loss: f64, queue_util: f64, sinr_norm: f64, model: &DistortionModel) -> f64 {
    (model.c_loss * loss + model.c_queue * queue_util + model.c_sinr * (1.0 - sinr_norm)).clamp(0.0, model.cap)
}

/// `1 - (1 - d_enc) * prod(1 - d_link)`.
pub fn predict_distortion(d_enc: f64, link_distortions: &[f64]) -> f64 {
    1.0 - (1.0 - d_enc) * link_distortions.iter().map(|d| 1.0 - d).product::<f64>()
}

pub fn semantic_cost_j1(r: f64, d_hat: f64) -> f64 {
    r * d_hat
}

pub fn perf_cost_j2(delay: f64, load: f64, eta1: f64, eta2: f64, d_norm: f64) -> f64 {
    eta1 * (delay / d_norm).min(1.0) + eta2 * load
}

pub fn total_cost(kappa: f64, j1: f64, j2: f64) -> f64 {
    kappa * j1 + (1.0 - kappa) * j2
}

/// Weight of the semantic term per importance class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KappaMap {
    pub high: f64,
    pub medium: f64,
    pub low: f64,
}

impl Default for KappaMap {
    fn default() -> Self {
        Self { high: 0.7, medium: 0.5, low: 0.3 }
    }
}

impl KappaMap {
    /// The same weight for every class.
    pub fn uniform(kappa: f64) -> Self {
        Self { high: kappa, medium: kappa, low: kappa }
    }

    pub fn get(&self, class: ImportanceClass) -> f64 {
        match class {
            ImportanceClass::High => self.high,
            ImportanceClass::Medium => self.medium,
            ImportanceClass::Low => self.low,
        }
    }

    /// Map centred on `mid` with the high and low classes `spread` above and below, clamped to `[0, 1]`.
    pub fn centred(mid: f64, spread: f64) -> Self {
        Self { high: (mid + spread).clamp(0.0, 1.0), medium: mid, low: (mid - spread).clamp(0.0, 1.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoutingConfig {
    pub k: usize,
    pub eta1: f64,
    pub eta2: f64,
    pub kappa: KappaMap,
    /// Delay bound in seconds.
    pub delay_bound: f64,
    pub load_bound: f64,
    /// Delay normalization in seconds.
    pub d_norm: f64,
    pub distortion: DistortionModel,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        Self {
            k: 4,
            eta1: 0.5,
            eta2: 0.5,
            kappa: KappaMap::default(),
            delay_bound: 0.15,
            load_bound: 0.9,
            d_norm: 0.2,
            distortion: DistortionModel::default(),
        }
    }
}

impl RoutingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("candidate count k must be at least 1"));
        }
        if (self.eta1 + self.eta2 - 1.0).abs() > 1e-9 || self.eta1 < 0.0 || self.eta2 < 0.0 {
            return Err(Error::config(format!("eta weights ({}, {}) must be nonnegative and sum to 1", self.eta1, self.eta2)));
        }
        let k = &self.kappa;
        if [k.high, k.medium, k.low].iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::config(format!("kappa values {k:?} must lie in [0, 1]")));
        }
        if !(self.d_norm > 0.0) || !(self.delay_bound > 0.0) || !(0.0..=1.0).contains(&self.load_bound) {
            return Err(Error::config("delay normalization, delay bound and load bound must be positive"));
        }
        self.distortion.validate()
    }

    pub fn j2(&self, delay: f64, load: f64) -> f64 {
        perf_cost_j2(delay, load, self.eta1, self.eta2, self.d_norm)
    }
}

/// A loop-free path with metrics taken from one telemetry snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePath {
    pub hops: Vec<usize>,
    pub delay: f64,
    pub load: f64,
    pub link_distortion: Vec<f64>,
    /// `prod(1 - d_link)` over the path.
    pub survival: f64,
    pub stale: bool,
}

impl CandidatePath {
    pub fn new(hops: Vec<usize>, metrics: PathMetrics, model: &DistortionModel) -> Self {
        let link_distortion: Vec<f64> = metrics.impairments.iter().map(|i| model.link(i)).collect();
        let survival = link_distortion.iter().map(|d| 1.0 - d).product();
        Self { hops, delay: metrics.delay, load: metrics.load, link_distortion, survival, stale: metrics.stale }
    }

    pub fn hop_count(&self) -> usize {
        self.hops.len().saturating_sub(1)
    }

    pub fn d_hat(&self, d_enc: f64) -> f64 {
        1.0 - (1.0 - d_enc) * self.survival
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathCost {
    pub d_hat: f64,
    pub j1: f64,
    pub j2: f64,
    pub cost: f64,
}

pub fn path_cost(p: &CandidatePath, r: f64, class: ImportanceClass, d_enc: f64, cfg: &RoutingConfig) -> PathCost {
    let d_hat = p.d_hat(d_enc);
    let j1 = semantic_cost_j1(r, d_hat);
    let j2 = cfg.j2(p.delay, p.load);
    PathCost { d_hat, j1, j2, cost: total_cost(cfg.kappa.get(class), j1, j2) }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub cost: PathCost,
    /// Every candidate broke the delay or load bound; the unconstrained optimum was used.
    pub violation: bool,
}

fn tie_break(a: &CandidatePath, b: &CandidatePath) -> Ordering {
    a.hops.len().cmp(&b.hops.len()).then_with(|| a.hops.cmp(&b.hops))
}

fn argmin_by<K: Fn(usize) -> f64>(candidates: &[CandidatePath], pool: impl Iterator<Item = usize>, key: K) -> Option<usize> {
    pool.min_by(|&i, &j| key(i).total_cmp(&key(j)).then_with(|| tie_break(&candidates[i], &candidates[j])))
}

/// Minimum-cost candidate among those within the delay and load bounds.
pub fn select_path(
    candidates: &[CandidatePath],
    r: f64,
    class: ImportanceClass,
    d_enc: f64,
    cfg: &RoutingConfig,
) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::Routing("no candidate paths".into()));
    }
    let costs: Vec<PathCost> = candidates.iter().map(|p| path_cost(p, r, class, d_enc, cfg)).collect();
    let feasible = |i: &usize| candidates[*i].delay <= cfg.delay_bound && candidates[*i].load <= cfg.load_bound;
    let key = |i: usize| costs[i].cost;
    let (index, violation) = match argmin_by(candidates, (0..candidates.len()).filter(feasible), key) {
        Some(i) => (i, false),
        None => (argmin_by(candidates, 0..candidates.len(), key).expect("nonempty"), true),
    };
    Ok(Selection { index, cost: costs[index], violation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "proposed")]
    Proposed,
    #[serde(rename = "SP")]
    Sp,
    #[serde(rename = "LBR")]
    Lbr,
    #[serde(rename = "DMR")]
    Dmr,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Proposed, Scheme::Sp, Scheme::Lbr, Scheme::Dmr];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Sp => "SP",
            Scheme::Lbr => "LBR",
            Scheme::Dmr => "DMR",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config(format!("unknown scheme {s:?}")))
    }
}

/// Baseline choice over the shared candidate set. `d_enc` is the baseline's fixed fidelity.
pub fn baseline_route(scheme: Scheme, candidates: &[CandidatePath], d_enc: f64) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::Routing("no candidate paths".into()));
    }
    let all = 0..candidates.len();
    let pick = match scheme {
        Scheme::Sp => argmin_by(candidates, all, |_| 0.0),
        Scheme::Lbr => argmin_by(candidates, all, |i| candidates[i].load),
        Scheme::Dmr => argmin_by(candidates, all, |i| candidates[i].d_hat(d_enc)),
        Scheme::Proposed => return Err(Error::config("the proposed scheme is not a baseline")),
    };
    Ok(pick.expect("nonempty"))
}
