use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::graph::KnowledgeGraph;
use super::task::{task_alignment, TaskConceptSet};
use super::vector::SemanticVector;
use crate::error::{Error, Result};

/// Normalized telemetry seen by the reasoning module. Every field lies in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkStateVector {
    pub delay: f64,
    pub queue: f64,
    pub load: f64,
    pub loss: f64,
    pub mobility: f64,
    pub link_quality: f64,
}

impl NetworkStateVector {
    /// Idle, lossless, static network with perfect links.
    pub const IDEAL: NetworkStateVector = NetworkStateVector {
        delay: 0.0,
        queue: 0.0,
        load: 0.0,
        loss: 0.0,
        mobility: 0.0,
        link_quality: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("delay", self.delay),
            ("queue", self.queue),
            ("load", self.load),
            ("loss", self.loss),
            ("mobility", self.mobility),
            ("link quality", self.link_quality),
        ];
        for (name, v) in fields {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(format!("network state {name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

impl Default for NetworkStateVector {
    fn default() -> Self {
        Self::IDEAL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UrgencyWeights {
    pub delay: f64,
    pub queue: f64,
    pub load: f64,
    pub mobility: f64,
    pub loss: f64,
    pub link_quality: f64,
}

impl Default for UrgencyWeights {
    fn default() -> Self {
        Self { delay: 0.25, queue: 0.20, load: 0.20, mobility: 0.15, loss: 0.10, link_quality: 0.10 }
    }
}

/// Urgency of the network state: a clamped weighted sum of the degradation components.
pub fn urgency(n: &NetworkStateVector, w: &UrgencyWeights) -> Result<f64> {
    n.validate()?;
    let u = w.delay * n.delay
        + w.queue * n.queue
        + w.load * n.load
        + w.mobility * n.mobility
        + w.loss * n.loss
        + w.link_quality * (1.0 - n.link_quality);
    Ok(u.clamp(0.0, 1.0))
}

/// Fusion weights `(alpha, beta, gamma)` for alignment, context and urgency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelevanceWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for RelevanceWeights {
    fn default() -> Self {
        Self { alpha: 0.4, beta: 0.3, gamma: 0.3 }
    }
}

impl RelevanceWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let w = Self { alpha, beta, gamma };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.alpha, self.beta, self.gamma].iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::config(format!("relevance weights {self:?} must lie in [0, 1]")));
        }
        let sum = self.alpha + self.beta + self.gamma;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("relevance weights sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

pub fn fuse_relevance(s: f64, c: f64, u: f64, w: &RelevanceWeights) -> Result<f64> {
    w.validate()?;
    for (name, v) in [("alignment", s), ("context", c), ("urgency", u)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::validation(format!("{name} score {v} outside [0, 1]")));
        }
    }
    Ok(w.alpha * s + w.beta * c + w.gamma * u)
}

/// Sliding window of recent relevance values used for z-normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceStats {
    window: VecDeque<f64>,
    capacity: usize,
}

impl RelevanceStats {
    pub const SIGMA_FLOOR: f64 = 1e-6;
    pub const COLD_START_MEAN: f64 = 0.5;
    pub const COLD_START_SIGMA: f64 = 0.25;

    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("relevance window must hold at least one sample"));
        }
        Ok(Self { window: VecDeque::with_capacity(capacity), capacity })
    }

    pub fn from_samples(capacity: usize, samples: &[f64]) -> Result<Self> {
        let mut stats = Self::new(capacity)?;
        for &r in samples {
            stats.push(r);
        }
        Ok(stats)
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.window.len() == self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, r: f64) {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(r);
    }

    /// Mean of the window; zero when empty.
    pub fn mean(&self) -> f64 {
        if self.window.is_empty() {
            return 0.0;
        }
        self.window.iter().sum::<f64>() / self.window.len() as f64
    }

    /// Population standard deviation of the window, floored at [`Self::SIGMA_FLOOR`].
    pub fn std_dev(&self) -> f64 {
        if self.window.is_empty() {
            return Self::SIGMA_FLOOR;
        }
        let mean = self.mean();
        let var = self.window.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / self.window.len() as f64;
        var.sqrt().max(Self::SIGMA_FLOOR)
    }

    /// Standard score against the current window, without recording `r`.
    pub fn z_score(&self, r: f64) -> f64 {
        if self.window.is_empty() {
            return 0.0;
        }
        (r - self.mean()) / self.std_dev()
    }

    /// Standard score of `r`, after which `r` joins the window.
    pub fn z_normalize(&mut self, r: f64) -> f64 {
        let z = self.z_score(r);
        self.push(r);
        z
    }

    /// As [`Self::z_normalize`], but while the window is still filling the score is taken
    /// against a fixed prior of mean 0.5 and deviation 0.25.
    pub fn z_normalize_cold(&mut self, r: f64) -> f64 {
        if self.is_full() {
            return self.z_normalize(r);
        }
        self.push(r);
        (r - Self::COLD_START_MEAN) / Self::COLD_START_SIGMA
    }

    /// The score [`Self::z_normalize_cold`] would return, without mutating the window.
    pub fn peek_cold(&self, r: f64) -> f64 {
        if self.is_full() {
            self.z_score(r)
        } else {
            (r - Self::COLD_START_MEAN) / Self::COLD_START_SIGMA
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportanceClass {
    Low,
    Medium,
    High,
}

impl ImportanceClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ImportanceClass::Low => "low",
            ImportanceClass::Medium => "medium",
            ImportanceClass::High => "high",
        }
    }
}

pub fn classify(z: f64) -> ImportanceClass {
    if z > 1.0 {
        ImportanceClass::High
    } else if z < -1.0 {
        ImportanceClass::Low
    } else {
        ImportanceClass::Medium
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FidelityLevel {
    Low,
    Mid,
    High,
}

impl FidelityLevel {
    pub const ALL: [FidelityLevel; 3] = [FidelityLevel::Low, FidelityLevel::Mid, FidelityLevel::High];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// The next level up, or `None` at the top.
    pub fn up(self) -> Option<Self> {
        Self::from_index(self.index() + 1)
    }

    pub fn is_top(self) -> bool {
        self == FidelityLevel::High
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FidelityLevel::Low => "low",
            FidelityLevel::Mid => "mid",
            FidelityLevel::High => "high",
        }
    }
}

/// Quality, cost and encoder distortion per fidelity level, indexed low, mid, high.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FidelityTable {
    pub quality: [f64; 3],
    pub cost: [f64; 3],
    pub d_enc: [f64; 3],
}

impl Default for FidelityTable {
    fn default() -> Self {
        Self { quality: [0.5, 0.8, 1.0], cost: [0.2, 0.5, 1.0], d_enc: [0.024, 0.012, 0.003] }
    }
}

impl FidelityTable {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |a: &[f64; 3]| a.iter().all(|v| (0.0..=1.0).contains(v));
        let inc = |a: &[f64; 3]| a[0] < a[1] && a[1] < a[2];
        if !(in_unit(&self.quality) && in_unit(&self.cost) && in_unit(&self.d_enc)) {
            return Err(Error::config("fidelity table entries must lie in [0, 1]"));
        }
        let dec = self.d_enc[0] > self.d_enc[1] && self.d_enc[1] > self.d_enc[2];
        if !(inc(&self.quality) && inc(&self.cost) && dec) {
            return Err(Error::config(
                "fidelity levels must be strictly ordered: quality and cost increasing, encoder distortion decreasing",
            ));
        }
        Ok(())
    }

    pub fn quality(&self, f: FidelityLevel) -> f64 {
        self.quality[f.index()]
    }

    pub fn cost(&self, f: FidelityLevel) -> f64 {
        self.cost[f.index()]
    }

    pub fn d_enc(&self, f: FidelityLevel) -> f64 {
        self.d_enc[f.index()]
    }

    /// `R * q(f) - omega * b(f)`.
    pub fn utility(&self, r: f64, f: FidelityLevel, omega: f64) -> f64 {
        r * self.quality(f) - omega * self.cost(f)
    }
}

/// Level maximizing the relevance-weighted utility; ties go to the cheaper level.
pub fn select_fidelity(r: f64, table: &FidelityTable, omega: f64) -> FidelityLevel {
    let mut best = FidelityLevel::Low;
    let mut best_u = table.utility(r, best, omega);
    for f in [FidelityLevel::Mid, FidelityLevel::High] {
        let u = table.utility(r, f, omega);
        if u > best_u {
            best = f;
            best_u = u;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReasoningConfig {
    pub tau_map: f64,
    pub weights: RelevanceWeights,
    pub urgency: UrgencyWeights,
    pub window: usize,
    pub omega: f64,
    pub fidelity: FidelityTable,
    /// Use the fixed prior for z-scores until the window first fills.
    pub cold_start: bool,
}

impl Default for ReasoningConfig {
    fn default() -> Self {
        Self {
            tau_map: 0.7,
            weights: RelevanceWeights::default(),
            urgency: UrgencyWeights::default(),
            window: 200,
            omega: 0.3,
            fidelity: FidelityTable::default(),
            cold_start: true,
        }
    }
}

impl ReasoningConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.fidelity.validate()?;
        if !(0.0..=1.0).contains(&self.tau_map) {
            return Err(Error::config(format!("tau_map = {} outside [0, 1]", self.tau_map)));
        }
        if self.window == 0 {
            return Err(Error::config("relevance window must be positive"));
        }
        if !(self.omega >= 0.0) {
            return Err(Error::config(format!("omega = {} must be nonnegative", self.omega)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelevanceAssessment {
    pub alignment: f64,
    pub context: f64,
    pub urgency: f64,
    pub relevance: f64,
    pub z: f64,
    pub class: ImportanceClass,
    pub fidelity: FidelityLevel,
}

/// Full reasoning pass for one message.
///
/// With `record` false the window is left untouched and the score is taken against its
/// current contents, which is how the controller runs while telemetry is stale.
pub fn assess(
    s: &SemanticVector,
    graph: &KnowledgeGraph,
    task: &TaskConceptSet,
    state: &NetworkStateVector,
    stats: &mut RelevanceStats,
    record: bool,
    cfg: &ReasoningConfig,
) -> Result<RelevanceAssessment> {
    let alignment = task_alignment(s, task)?;
    let mapped = graph.map_to_concepts(s, cfg.tau_map)?;
    let context = graph.context_score(s, &mapped)?;
    let u = urgency(state, &cfg.urgency)?;
    let relevance = fuse_relevance(alignment, context, u, &cfg.weights)?;
    let z = match (record, cfg.cold_start) {
        (true, true) => stats.z_normalize_cold(relevance),
        (true, false) => stats.z_normalize(relevance),
        (false, true) => stats.peek_cold(relevance),
        (false, false) => stats.z_score(relevance),
    };
    Ok(RelevanceAssessment {
        alignment,
        context,
        urgency: u,
        relevance,
        z,
        class: classify(z),
        fidelity: select_fidelity(relevance, &cfg.fidelity, cfg.omega),
    })
}
