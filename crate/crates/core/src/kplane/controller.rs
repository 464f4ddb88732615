use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distortion::{corrective_action, observed_distortion, Action, ControlConfig, DistortionRecord};
use crate::error::{Error, Result};
use crate::netsim::{BackgroundRequest, ControlPlane, Feedback, MessageContext, RouteDecision, Telemetry};
use crate::routing::{
    aggregate_path_metrics, baseline_route, k_shortest_paths, path_cost, select_path, CandidatePath, RoutingConfig,
    Scheme,
};
use crate::semantics::{
    assess, FidelityLevel, ImportanceClass, NetworkStateVector, ReasoningConfig, RelevanceStats, SyntheticWorld,
};

/// Which policy produced a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionSource {
    Proposed,
    Sp,
    Lbr,
    Dmr,
    Fallback,
}

impl DecisionSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            DecisionSource::Proposed => "proposed",
            DecisionSource::Sp => "SP",
            DecisionSource::Lbr => "LBR",
            DecisionSource::Dmr => "DMR",
            DecisionSource::Fallback => "fallback",
        }
    }

    fn of(scheme: Scheme) -> Self {
        match scheme {
            Scheme::Proposed => DecisionSource::Proposed,
            Scheme::Sp => DecisionSource::Sp,
            Scheme::Lbr => DecisionSource::Lbr,
            Scheme::Dmr => DecisionSource::Dmr,
        }
    }
}

/// `Fallback` once telemetry is more than `threshold` control intervals old, otherwise the
/// normal policy of `scheme`.
pub fn fallback_mode(staleness: f64, interval: f64, threshold: f64, scheme: Scheme) -> DecisionSource {
    if staleness > threshold * interval + 1e-9 {
        DecisionSource::Fallback
    } else {
        DecisionSource::of(scheme)
    }
}

/// Why a flow's path differs, or not, from its previous decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeReason {
    Initial,
    Same,
    /// A cheaper path beat the current one by more than the hysteresis margin.
    Cost,
    /// The previous path was excluded by a reroute request.
    Excluded,
    /// The previous path is no longer among the candidates.
    Invalid,
}

impl ChangeReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChangeReason::Initial => "initial",
            ChangeReason::Same => "same",
            ChangeReason::Cost => "cost",
            ChangeReason::Excluded => "excluded",
            ChangeReason::Invalid => "invalid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlDecision {
    pub message: u64,
    pub flow: u64,
    pub time: f64,
    pub alignment: f64,
    pub context: f64,
    pub urgency: f64,
    pub relevance: f64,
    pub z: f64,
    pub class: ImportanceClass,
    pub fidelity: FidelityLevel,
    pub path: Vec<usize>,
    pub d_hat: f64,
    pub j1: f64,
    pub j2: f64,
    pub cost: f64,
    /// The chosen path breaks the delay or load bound.
    pub violation: bool,
    pub source: DecisionSource,
    pub reason: ChangeReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub scheme: Scheme,
    pub reasoning: ReasoningConfig,
    pub routing: RoutingConfig,
    pub control: ControlConfig,
    /// Control interval in seconds; also the lifetime of a path exclusion.
    pub interval: f64,
    /// Telemetry older than this many intervals triggers the fallback policy.
    pub outage_intervals: f64,
    /// Relative cost improvement needed before the proposed scheme leaves a flow's path.
    pub hysteresis: f64,
    /// Fidelity used by the baselines and in fallback.
    pub fixed_fidelity: FidelityLevel,
    /// Packet size used to cost background paths, bytes.
    pub background_probe: f64,
    pub drift_fraction: f64,
    pub drift_sigma: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Proposed,
            reasoning: ReasoningConfig::default(),
            routing: RoutingConfig::default(),
            control: ControlConfig::default(),
            interval: 0.2,
            outage_intervals: 3.0,
            hysteresis: 0.1,
            fixed_fidelity: FidelityLevel::Mid,
            background_probe: 1024.0,
            drift_fraction: 0.0,
            drift_sigma: 0.1,
        }
    }
}

impl ControllerConfig {
    pub fn for_scheme(scheme: Scheme) -> Self {
        Self { scheme, ..Self::default() }
    }

    /// The proposed scheme with a plain `delta0 * (1 - R)` tolerance and every
    /// out-of-tolerance delivery answered by a reroute.
    pub fn reroute_only() -> Self {
        let mut c = Self::default();
        c.control.delta_min = 0.0;
        c.control.fidelity_stage = false;
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.reasoning.validate()?;
        self.routing.validate()?;
        self.control.validate()?;
        if !(self.interval > 0.0) || !(self.outage_intervals >= 0.0) {
            return Err(Error::config("control interval must be positive and the outage threshold nonnegative"));
        }
        if !(0.0..1.0).contains(&self.hysteresis) {
            return Err(Error::config(format!("hysteresis {} outside [0, 1)", self.hysteresis)));
        }
        Ok(())
    }
}

/// Correction state of one flow.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowCorrection {
    /// Escalated fidelity floor; never lowered while the flow lives.
    pub fidelity: Option<FidelityLevel>,
    /// Path excluded by a reroute request and the time the exclusion lapses.
    pub excluded: Option<(Vec<usize>, f64)>,
    pub path: Option<Vec<usize>>,
    /// Relevance and class of the flow's latest message, used when rerouting between messages.
    pub context: Option<(f64, ImportanceClass)>,
    /// Set when a reroute moved the flow and no message has used the new path yet.
    pub rerouted: bool,
}

impl FlowCorrection {
    fn exclusion_at(&self, now: f64) -> Option<&[usize]> {
        self.excluded.as_ref().filter(|(_, until)| now < *until).map(|(p, _)| p.as_slice())
    }
}

/// Closed-loop controller for one run.
#[derive(Debug)]
pub struct Controller {
    cfg: ControllerConfig,
    world: SyntheticWorld,
    seed: u64,
    stats: RelevanceStats,
    latest: Option<Arc<Telemetry>>,
    paths: HashMap<(usize, usize), Vec<Vec<usize>>>,
    paths_version: u64,
    flows: HashMap<u64, FlowCorrection>,
    pending: Vec<Feedback>,
    background: Vec<Option<Vec<usize>>>,
    decisions: Vec<ControlDecision>,
    distortion: Vec<DistortionRecord>,
}

impl Controller {
    /// `world` is the controller's own copy of the knowledge graph; `seed` drives drift.
    pub fn new(cfg: ControllerConfig, world: SyntheticWorld, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let stats = RelevanceStats::new(cfg.reasoning.window)?;
        Ok(Self {
            cfg,
            world,
            seed,
            stats,
            latest: None,
            paths: HashMap::new(),
            paths_version: u64::MAX,
            flows: HashMap::new(),
            pending: Vec::new(),
            background: Vec::new(),
            decisions: Vec::new(),
            distortion: Vec::new(),
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn decisions(&self) -> &[ControlDecision] {
        &self.decisions
    }

    pub fn distortion_log(&self) -> &[DistortionRecord] {
        &self.distortion
    }

    pub fn stats(&self) -> &RelevanceStats {
        &self.stats
    }

    pub fn flow(&self, id: u64) -> Option<&FlowCorrection> {
        self.flows.get(&id)
    }

    pub fn into_logs(self) -> (Vec<ControlDecision>, Vec<DistortionRecord>) {
        (self.decisions, self.distortion)
    }

    /// Seconds since the newest telemetry, infinite before the first.
    pub fn staleness(&self, now: f64) -> f64 {
        self.latest.as_ref().map_or(f64::INFINITY, |t| now - t.time)
    }

    fn source(&self, now: f64) -> DecisionSource {
        fallback_mode(self.staleness(now), self.cfg.interval, self.cfg.outage_intervals, self.cfg.scheme)
    }

    /// Candidates for `src -> dst` against the newest snapshot.
    fn candidates(&mut self, src: usize, dst: usize, size: f64, now: f64) -> Vec<CandidatePath> {
        let Some(t) = self.latest.clone() else { return Vec::new() };
        if t.version != self.paths_version {
            self.paths.clear();
            self.paths_version = t.version;
        }
        let k = self.cfg.routing.k;
        let paths = self.paths.entry((src, dst)).or_insert_with(|| k_shortest_paths(&t.topology, src, dst, k));
        paths
            .iter()
            .filter_map(|hops| {
                let m = aggregate_path_metrics(hops, &t.links, size, now, self.cfg.interval).ok()?;
                Some(CandidatePath::new(hops.clone(), m, &self.cfg.routing.distortion))
            })
            .collect()
    }

    fn node_state(&self, node: usize) -> NetworkStateVector {
        self.latest.as_ref().and_then(|t| t.nodes.get(node).copied()).unwrap_or_default()
    }

    fn apply_feedback(&mut self, fb: Feedback, now: f64) {
        let Ok(d_obs) = observed_distortion(&fb.original, &fb.delivered) else { return };
        let c = corrective_action(fb.relevance, fb.fidelity, fb.d_hat, d_obs, &self.cfg.control);
        self.distortion.push(DistortionRecord {
            message: fb.message,
            time: fb.time,
            relevance: fb.relevance,
            d_hat: fb.d_hat,
            d_obs,
            gap: c.gap,
            tolerance: c.tolerance,
            action: c.action,
            before: c.before,
            after: c.after,
        });
        if self.cfg.scheme != Scheme::Proposed {
            return;
        }
        let Some(flow) = self.flows.get_mut(&fb.flow) else { return };
        match c.action {
            Action::None => {}
            Action::FidelityUp => flow.fidelity = flow.fidelity.max(Some(c.after)),
            Action::Reroute => {
                flow.excluded = Some((fb.path.clone(), now + self.cfg.interval));
                if flow.path.as_ref() == Some(&fb.path) {
                    self.reroute(fb.flow, &fb.path, fb.fidelity, now);
                }
            }
        }
    }

    /// Moves `flow` off `path` at once, so the change does not wait for its next message.
    fn reroute(&mut self, flow: u64, path: &[usize], fidelity: FidelityLevel, now: f64) {
        let (Some(&src), Some(&dst)) = (path.first(), path.last()) else { return };
        let Some(state) = self.flows.get(&flow) else { return };
        let Some((relevance, class)) = state.context else { return };
        let d_enc = self.cfg.reasoning.fidelity.d_enc(fidelity);
        let candidates: Vec<CandidatePath> = self
            .candidates(src, dst, self.cfg.background_probe, now)
            .into_iter()
            .filter(|c| c.hops != path)
            .collect();
        let Ok(sel) = select_path(&candidates, relevance, class, d_enc, &self.cfg.routing) else { return };
        let flow = self.flows.get_mut(&flow).expect("checked above");
        flow.path = Some(candidates[sel.index].hops.clone());
        flow.rerouted = true;
    }

    fn decide_proposed(
        &mut self,
        msg: &MessageContext<'_>,
        candidates: &[CandidatePath],
        relevance: f64,
        class: ImportanceClass,
        f_star: FidelityLevel,
    ) -> Option<(usize, FidelityLevel, ChangeReason)> {
        let flow = self.flows.entry(msg.flow).or_default();
        let fidelity = flow.fidelity.map_or(f_star, |f| f.max(f_star));
        let d_enc = self.cfg.reasoning.fidelity.d_enc(fidelity);
        let excluded = flow.exclusion_at(msg.time);
        let mut pool: Vec<usize> =
            (0..candidates.len()).filter(|&i| Some(candidates[i].hops.as_slice()) != excluded).collect();
        if pool.is_empty() {
            pool = (0..candidates.len()).collect();
        }
        let sub: Vec<CandidatePath> = pool.iter().map(|&i| candidates[i].clone()).collect();
        let sel = select_path(&sub, relevance, class, d_enc, &self.cfg.routing).ok()?;
        let best = pool[sel.index];
        let current = flow.path.as_deref();
        let current_idx = current.and_then(|p| pool.iter().copied().find(|&i| candidates[i].hops == p));
        let (index, reason) = match (current, current_idx) {
            (None, _) => (best, ChangeReason::Initial),
            (Some(p), None) => {
                let r = if Some(p) == excluded { ChangeReason::Excluded } else { ChangeReason::Invalid };
                (best, r)
            }
            (Some(_), Some(c)) => {
                let keep = path_cost(&candidates[c], relevance, class, d_enc, &self.cfg.routing).cost;
                if c != best && sel.cost.cost < keep * (1.0 - self.cfg.hysteresis) {
                    (best, ChangeReason::Cost)
                } else if flow.rerouted {
                    (c, ChangeReason::Excluded)
                } else {
                    (c, ChangeReason::Same)
                }
            }
        };
        Some((index, fidelity, reason))
    }

    fn pick_background(&self, candidates: &[CandidatePath], current: Option<&[usize]>, source: DecisionSource) -> Option<usize> {
        if candidates.is_empty() {
            return None;
        }
        let d_enc = self.cfg.reasoning.fidelity.d_enc(self.cfg.fixed_fidelity);
        let scheme = match source {
            DecisionSource::Fallback | DecisionSource::Lbr => Scheme::Lbr,
            DecisionSource::Sp => Scheme::Sp,
            DecisionSource::Dmr => Scheme::Dmr,
            DecisionSource::Proposed => {
                // Background traffic carries no semantics; only the delay/load term applies.
                let r = &self.cfg.routing;
                let j2 = |c: &CandidatePath| r.j2(c.delay, c.load);
                let best = (0..candidates.len())
                    .min_by(|&a, &b| {
                        j2(&candidates[a])
                            .total_cmp(&j2(&candidates[b]))
                            .then_with(|| candidates[a].hops.len().cmp(&candidates[b].hops.len()))
                            .then_with(|| candidates[a].hops.cmp(&candidates[b].hops))
                    })
                    .expect("nonempty");
                if let Some(c) = current.and_then(|p| candidates.iter().position(|c| c.hops == p)) {
                    if j2(&candidates[best]) >= j2(&candidates[c]) * (1.0 - self.cfg.hysteresis) {
                        return Some(c);
                    }
                }
                return Some(best);
            }
        };
        baseline_route(scheme, candidates, d_enc).ok()
    }
}

impl ControlPlane for Controller {
    fn telemetry(&mut self, snapshot: Arc<Telemetry>) {
        if self.latest.as_ref().is_some_and(|t| snapshot.time < t.time) {
            return;
        }
        self.latest = Some(snapshot);
    }

    fn control_tick(&mut self, now: f64) {
        for fb in std::mem::take(&mut self.pending) {
            self.apply_feedback(fb, now);
        }
    }

    fn decide(&mut self, msg: &MessageContext<'_>) -> Option<RouteDecision> {
        let source = self.source(msg.time);
        let fallback = source == DecisionSource::Fallback;
        let state = self.node_state(msg.src);
        let task = self.world.tasks.get(msg.task)?;
        let a = assess(msg.embedding, &self.world.graph, task, &state, &mut self.stats, !fallback, &self.cfg.reasoning)
            .ok()?;
        let candidates = self.candidates(msg.src, msg.dst, msg.size, msg.time);
        if candidates.is_empty() {
            return None;
        }
        let fixed = self.cfg.fixed_fidelity;
        let (index, fidelity, reason) = match source {
            DecisionSource::Proposed => self.decide_proposed(msg, &candidates, a.relevance, a.class, a.fidelity)?,
            _ => {
                let scheme = if fallback { Scheme::Lbr } else { self.cfg.scheme };
                let d_enc = self.cfg.reasoning.fidelity.d_enc(fixed);
                let i = baseline_route(scheme, &candidates, d_enc).ok()?;
                let flow = self.flows.entry(msg.flow).or_default();
                let reason = match flow.path.as_deref() {
                    None => ChangeReason::Initial,
                    Some(p) if p == candidates[i].hops => ChangeReason::Same,
                    Some(p) if candidates.iter().any(|c| c.hops == p) => ChangeReason::Cost,
                    Some(_) => ChangeReason::Invalid,
                };
                (i, fixed, reason)
            }
        };
        let chosen = &candidates[index];
        let routing = &self.cfg.routing;
        let pc = path_cost(chosen, a.relevance, a.class, self.cfg.reasoning.fidelity.d_enc(fidelity), routing);
        let violation = chosen.delay > routing.delay_bound || chosen.load > routing.load_bound;
        let flow = self.flows.entry(msg.flow).or_default();
        flow.path = Some(chosen.hops.clone());
        flow.context = Some((a.relevance, a.class));
        flow.rerouted = false;
        self.decisions.push(ControlDecision {
            message: msg.id,
            flow: msg.flow,
            time: msg.time,
            alignment: a.alignment,
            context: a.context,
            urgency: a.urgency,
            relevance: a.relevance,
            z: a.z,
            class: a.class,
            fidelity,
            path: chosen.hops.clone(),
            d_hat: pc.d_hat,
            j1: pc.j1,
            j2: pc.j2,
            cost: pc.cost,
            violation,
            source,
            reason,
        });
        Some(RouteDecision { path: chosen.hops.clone(), fidelity, relevance: a.relevance, class: a.class, d_hat: pc.d_hat })
    }

    fn route_background(&mut self, now: f64, requests: &[BackgroundRequest]) -> Vec<Option<Vec<usize>>> {
        let source = self.source(now);
        self.background.resize(requests.len(), None);
        let probe = self.cfg.background_probe;
        for (i, r) in requests.iter().enumerate() {
            let candidates = self.candidates(r.src, r.dst, probe, now);
            let current = self.background[i].as_deref();
            let pick = self.pick_background(&candidates, current, source);
            self.background[i] = pick.map(|p| candidates[p].hops.clone());
        }
        self.background.clone()
    }

    fn feedback(&mut self, fb: Feedback) {
        self.pending.push(fb);
    }

    fn flow_ended(&mut self, flow: u64) {
        self.flows.remove(&flow);
    }

    fn concept_drift(&mut self, _now: f64) {
        if self.cfg.drift_fraction <= 0.0 {
            return;
        }
        if let Ok(w) = self.world.drift(self.cfg.drift_fraction, self.cfg.drift_sigma, self.seed) {
            self.world = w;
        }
    }
}
