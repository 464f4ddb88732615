use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::channel::{interference_mw, radio_from, received_dbm, LinkRadio, Shadowing};
use super::config::ScenarioConfig;
use super::control::{BackgroundRequest, ControlPlane, Feedback, MessageContext, RouteDecision, Telemetry};
use super::deploy::{build_topology, generate_topology, Mobility};
use super::event::{EventKind, EventQueue};
use super::streams::{keyed_rng, stream_rng, Stream};
use super::transit::perturb_in_transit;
use crate::distortion::observed_distortion;
use crate::error::{Error, Result};
use crate::routing::{predict_distortion, LinkMetrics, LinkSnapshot, NetNode, Topology};
use crate::semantics::{perturb_embedding, NetworkStateVector, SemanticVector, SyntheticWorld};

/// Terminal state of a semantic message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Delivered,
    /// Dropped by channel loss or a full transmit buffer.
    Lost,
    PathBreak,
    NoRoute,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Delivered => "delivered",
            Outcome::Lost => "lost",
            Outcome::PathBreak => "path_break",
            Outcome::NoRoute => "no_route",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessageRecord {
    pub id: u64,
    pub flow: u64,
    pub task: usize,
    pub src: usize,
    pub dst: usize,
    pub created: f64,
    pub size: f64,
    pub decision: Option<RouteDecision>,
    pub outcome: Outcome,
    pub delivered_at: Option<f64>,
    pub d_obs: Option<f64>,
}

impl MessageRecord {
    pub fn delay(&self) -> Option<f64> {
        self.delivered_at.map(|t| t - self.created)
    }
}

/// Background traffic accounting for one control interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub index: u64,
    pub start: f64,
    pub end: f64,
    /// Bytes.
    pub background_offered: f64,
    pub background_delivered: f64,
    /// Mean capacity over live links at the end of the interval, bits per second.
    pub mean_capacity: f64,
    pub links: usize,
}

/// One row of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: String,
    pub id: u64,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityStats {
    pub samples: u64,
    pub min: f64,
    pub max: f64,
}

impl Default for CapacityStats {
    fn default() -> Self {
        Self { samples: 0, min: f64::INFINITY, max: f64::NEG_INFINITY }
    }
}

impl CapacityStats {
    fn record(&mut self, c: f64) {
        self.samples += 1;
        self.min = self.min.min(c);
        self.max = self.max.max(c);
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub messages: Vec<MessageRecord>,
    pub intervals: Vec<IntervalRecord>,
    pub events: Vec<EventRecord>,
    pub capacity: CapacityStats,
    /// Hash of the initial deployment; equal across schemes sharing a seed.
    pub topology_digest: u64,
    /// Hash of every arrival's time, flow, endpoints and size.
    pub arrival_digest: u64,
    pub topology_changes: u64,
    pub ticks: u64,
}

/// Fluid FIFO state of one directed link. Bytes and seconds.
#[derive(Debug, Clone, Copy, Default)]
struct Fluid {
    backlog: f64,
    in_rate: f64,
    last: f64,
    arrived: f64,
    dropped: f64,
}

#[derive(Debug, Clone)]
struct FlowSlot {
    id: u64,
    src: usize,
    dst: usize,
    task: usize,
}

#[derive(Debug)]
struct Background {
    src: usize,
    dst: usize,
    share: f64,
    on: bool,
    path: Option<Vec<usize>>,
    /// Bytes per second currently pushed onto every link of `path`.
    rate: f64,
    last_settle: f64,
    rng: ChaCha8Rng,
}

#[derive(Debug)]
struct InFlight {
    path: Vec<usize>,
    truth: SemanticVector,
    encoded: SemanticVector,
    d_enc: f64,
    links: Vec<f64>,
    rng: ChaCha8Rng,
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    seed: u64,
    world: &'a SyntheticWorld,
    n: usize,
    queue: EventQueue,
    nodes: Vec<NetNode>,
    topo: Arc<Topology>,
    version: u64,
    mobility: Mobility,
    mobility_rng: ChaCha8Rng,
    channel_rng: ChaCha8Rng,
    traffic_rng: ChaCha8Rng,
    shadow: Shadowing,
    propagation: Vec<f64>,
    radio: Vec<Option<LinkRadio>>,
    fluid: Vec<Fluid>,
    phase: usize,
    arrival_generation: u64,
    reference_capacity: f64,
    flows: Vec<FlowSlot>,
    next_flow: u64,
    background: Vec<Background>,
    messages: Vec<MessageRecord>,
    inflight: Vec<Option<InFlight>>,
    intervals: Vec<IntervalRecord>,
    events: Vec<EventRecord>,
    capacity: CapacityStats,
    interval_offered: f64,
    interval_delivered: f64,
    arrival_hash: DefaultHasher,
    topology_changes: u64,
    ticks: u64,
    resolution_loss: f64,
    topology_digest_initial: u64,
}

/// Runs one scenario against `cp`. `world` is the ground-truth semantic world, already in
/// the configured embedding dimension.
pub fn simulate(cfg: &ScenarioConfig, seed: u64, world: &SyntheticWorld, cp: &mut dyn ControlPlane) -> Result<SimOutput> {
    cfg.validate()?;
    if world.dim() != cfg.perturbation.dimension {
        return Err(Error::config(format!(
            "world dimension {} differs from the configured embedding dimension {}",
            world.dim(),
            cfg.perturbation.dimension
        )));
    }
    let mut sim = Sim::new(cfg, seed, world)?;
    sim.run(cp)?;
    sim.finish()
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a ScenarioConfig, seed: u64, world: &'a SyntheticWorld) -> Result<Self> {
        let mut topo_rng = stream_rng(seed, Stream::Topology);
        let topo = generate_topology(&cfg.topology, &mut topo_rng)?;
        let n = topo.len();
        let (plo, phi) = cfg.topology.propagation;
        let mut propagation = vec![0.0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let p = if phi > plo { topo_rng.random_range(plo..phi) } else { plo };
                propagation[a * n + b] = p;
                propagation[b * n + a] = p;
            }
        }
        let nodes = topo.nodes().to_vec();
        let mut mobility_rng = stream_rng(seed, Stream::Mobility);
        let mobility = Mobility::new(&nodes, cfg.mobility.speed, cfg.topology.area, &mut mobility_rng);
        let mut traffic_rng = stream_rng(seed, Stream::Traffic);
        let slots = traffic_rng.random_range(cfg.traffic.flows.0..=cfg.traffic.flows.1);

        let mut background = Vec::with_capacity(cfg.background.flows);
        for i in 0..cfg.background.flows {
            let mut rng = keyed_rng(seed, Stream::Traffic, (1 << 32) | i as u64);
            let (src, dst) = distinct_pair(n, &mut rng);
            let (lo, hi) = cfg.background.load;
            let share = if hi > lo { rng.random_range(lo..hi) } else { lo };
            background.push(Background { src, dst, share, on: false, path: None, rate: 0.0, last_settle: 0.0, rng });
        }

        let mut sim = Sim {
            cfg,
            seed,
            world,
            n,
            queue: EventQueue::new(),
            nodes,
            topo: Arc::new(topo),
            version: 0,
            mobility,
            mobility_rng,
            channel_rng: stream_rng(seed, Stream::Channel),
            traffic_rng,
            shadow: Shadowing::new(n),
            propagation,
            radio: vec![None; n * n],
            fluid: vec![Fluid::default(); n * n],
            phase: 0,
            arrival_generation: 0,
            reference_capacity: 0.0,
            flows: Vec::with_capacity(slots),
            next_flow: 0,
            background,
            messages: Vec::new(),
            inflight: Vec::new(),
            intervals: Vec::new(),
            events: Vec::new(),
            capacity: CapacityStats::default(),
            interval_offered: 0.0,
            interval_delivered: 0.0,
            arrival_hash: DefaultHasher::new(),
            topology_changes: 0,
            ticks: 0,
            resolution_loss: cfg.resolution_loss(),
            topology_digest_initial: 0,
        };
        sim.topology_digest_initial = sim.topology_digest();
        for i in 0..slots {
            let (slot, life) = sim.new_flow();
            sim.flows.push(slot);
            sim.queue.schedule(life, EventKind::FlowEnd { slot: i });
        }
        Ok(sim)
    }

    fn topology_digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.topo.to_text().hash(&mut h);
        for p in &self.propagation {
            p.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// A fresh flow; its endpoints, task and lifetime come from a stream keyed by flow id.
    fn new_flow(&mut self) -> (FlowSlot, f64) {
        let id = self.next_flow;
        self.next_flow += 1;
        let mut rng = keyed_rng(self.seed, Stream::Traffic, id);
        let (src, dst) = distinct_pair(self.n, &mut rng);
        let task = rng.random_range(0..self.world.task_count());
        let (lo, hi) = self.cfg.traffic.lifetime;
        let life = if hi > lo { rng.random_range(lo..hi) } else { lo };
        (FlowSlot { id, src, dst, task }, life)
    }
}

fn distinct_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

const EPS: f64 = 1e-9;

impl Sim<'_> {
    fn idx(&self, a: usize, b: usize) -> usize {
        a * self.n + b
    }

    fn link_capacity_bytes(&self, l: usize) -> f64 {
        self.radio[l].map_or(0.0, |r| r.capacity / 8.0)
    }

    /// Brings link `l`'s fluid queue forward to `now` under its current rates.
    fn advance(&mut self, l: usize, now: f64) {
        let drain = self.link_capacity_bytes(l);
        let buffer = self.cfg.topology.buffer;
        let f = &mut self.fluid[l];
        let dt = now - f.last;
        if dt <= 0.0 {
            return;
        }
        f.last = now;
        f.arrived += f.in_rate * dt;
        let next = f.backlog + (f.in_rate - drain) * dt;
        if next > buffer {
            f.dropped += next - buffer;
            f.backlog = buffer;
        } else {
            f.backlog = next.max(0.0);
        }
    }

    fn advance_all(&mut self, now: f64) {
        for l in 0..self.fluid.len() {
            if self.fluid[l].in_rate > 0.0 || self.fluid[l].backlog > 0.0 {
                self.advance(l, now);
            } else {
                self.fluid[l].last = now;
            }
        }
    }

    fn recompute_radio(&mut self) {
        let (tc, cc) = (&self.cfg.topology, &self.cfg.channel);
        let mut active = vec![false; self.n];
        for b in self.background.iter().filter(|b| b.on) {
            active[b.src] = true;
        }
        // Total interference at each receiver; a link's own transmitter is taken back out.
        let total: Vec<f64> = (0..self.n)
            .map(|rx| {
                (0..self.n)
                    .filter(|&i| active[i] && i != rx)
                    .map(|i| interference_mw(&self.nodes[i], &self.nodes[rx], tc, cc))
                    .sum()
            })
            .collect();
        self.radio.iter_mut().for_each(|r| *r = None);
        let links: Vec<(usize, usize)> = self.topo.links().collect();
        for (a, b) in links {
            for (u, v) in [(a, b), (b, a)] {
                let own = if active[u] { interference_mw(&self.nodes[u], &self.nodes[v], tc, cc) } else { 0.0 };
                let signal = received_dbm(&self.nodes[u], &self.nodes[v], tc, cc) - self.shadow.get(u, v);
                let r = radio_from(signal, total[v] - own, cc);
                self.capacity.record(r.capacity);
                let l = self.idx(u, v);
                self.radio[l] = Some(r);
            }
        }
    }

    /// Mean capacity over live directed links, bits per second.
    fn mean_capacity(&self) -> (f64, usize) {
        let (sum, count) = self.radio.iter().flatten().fold((0.0, 0), |(s, c), r| (s + r.capacity, c + 1));
        if count == 0 {
            (0.0, 0)
        } else {
            (sum / count as f64, count)
        }
    }

    fn background_nominal(&self, i: usize) -> f64 {
        let phase = &self.cfg.phases[self.phase];
        self.background[i].share * self.reference_capacity / 8.0 * phase.load
    }

    /// Share of bytes entering `path` that leave it, from this interval's drop counters and
    /// the current loss rates.
    fn path_survival(&self, path: &[usize]) -> f64 {
        path.windows(2)
            .map(|w| {
                let l = self.idx(w[0], w[1]);
                let f = &self.fluid[l];
                let drop = if f.arrived > 0.0 { (f.dropped / f.arrived).min(1.0) } else { 0.0 };
                let loss = self.radio[l].map_or(1.0, |r| r.loss);
                (1.0 - drop) * (1.0 - loss)
            })
            .product()
    }

    /// Books the bytes source `i` offered since its last settlement.
    fn settle(&mut self, i: usize, now: f64) {
        let dt = now - self.background[i].last_settle;
        self.background[i].last_settle = now;
        if !self.background[i].on || dt <= 0.0 {
            return;
        }
        let offered = self.background_nominal(i) * dt;
        let survival = self.background[i].path.as_deref().map_or(0.0, |p| self.path_survival(p));
        self.interval_offered += offered;
        self.interval_delivered += offered * survival;
    }

    fn set_background(&mut self, i: usize, on: bool, path: Option<Vec<usize>>, now: f64) {
        self.settle(i, now);
        let old_rate = self.background[i].rate;
        if let Some(old) = self.background[i].path.take() {
            for w in old.windows(2) {
                let l = self.idx(w[0], w[1]);
                self.advance(l, now);
                let f = &mut self.fluid[l];
                f.in_rate -= old_rate;
                if f.in_rate < 1e-6 {
                    f.in_rate = 0.0;
                }
            }
        }
        self.background[i].on = on;
        let rate = if on && path.is_some() { self.background_nominal(i) } else { 0.0 };
        if let Some(p) = &path {
            for w in p.windows(2) {
                let l = self.idx(w[0], w[1]);
                self.advance(l, now);
                self.fluid[l].in_rate += rate;
            }
        }
        self.background[i].path = path;
        self.background[i].rate = rate;
    }

    fn refresh_background(&mut self, now: f64) {
        for i in 0..self.background.len() {
            let (on, path) = (self.background[i].on, self.background[i].path.clone());
            self.set_background(i, on, path, now);
        }
    }

    fn log(&mut self, time: f64, kind: &str, id: u64, detail: String) {
        self.events.push(EventRecord { time, kind: kind.to_string(), id, detail });
    }

    fn schedule_arrival(&mut self, now: f64) {
        let rate = self.cfg.traffic.rate * self.cfg.phases[self.phase].arrivals;
        if rate <= 0.0 {
            return;
        }
        let gap = Exp::new(rate).expect("positive rate").sample(&mut self.traffic_rng);
        if now + gap < self.cfg.duration {
            self.queue.schedule(now + gap, EventKind::MessageArrival { generation: self.arrival_generation });
        }
    }

    fn schedule_toggle(&mut self, i: usize, now: f64) {
        let (lo, hi) = self.cfg.background.period;
        let rng = &mut self.background[i].rng;
        let d = if hi > lo { rng.random_range(lo..hi) } else { lo };
        self.queue.schedule(now + d, EventKind::BackgroundToggle { source: i });
    }

    fn run(&mut self, cp: &mut dyn ControlPlane) -> Result<()> {
        let cfg = self.cfg;
        self.recompute_radio();
        self.reference_capacity = self.mean_capacity().0;
        self.queue.schedule(0.0, EventKind::Tick { index: 0 });
        self.queue.schedule(cfg.mobility.step, EventKind::MobilityUpdate);
        for (p, phase) in cfg.phases.iter().enumerate().skip(1) {
            self.queue.schedule(phase.start, EventKind::PhaseTransition { phase: p });
        }
        if cfg.perturbation.drift_fraction > 0.0 && cfg.perturbation.drift_time < cfg.duration {
            self.queue.schedule(cfg.perturbation.drift_time, EventKind::ConceptDrift);
        }
        for i in 0..self.background.len() {
            let hi = cfg.background.period.1;
            let first = self.background[i].rng.random_range(0.0..hi);
            self.queue.schedule(first, EventKind::BackgroundToggle { source: i });
        }
        self.schedule_arrival(0.0);

        let ticks = cfg.ticks() as u64;
        while let Some(e) = self.queue.pop() {
            let now = e.time;
            let live = now < cfg.duration - EPS;
            match e.kind {
                EventKind::Hop { message, hop } => self.forward(message, hop, now, cp)?,
                EventKind::Tick { index } if live => self.tick(index, now, cp)?,
                EventKind::Tick { index } if index == ticks => self.close_interval(index, now),
                _ if !live => {}
                EventKind::Tick { .. } => unreachable!(),
                EventKind::MessageArrival { generation } => {
                    if generation == self.arrival_generation {
                        self.schedule_arrival(now);
                        self.arrive(now, cp)?;
                    }
                }
                EventKind::MobilityUpdate => {
                    self.mobility_step(now);
                    if now + cfg.mobility.step < cfg.duration - EPS {
                        self.queue.schedule(now + cfg.mobility.step, EventKind::MobilityUpdate);
                    }
                }
                EventKind::BackgroundToggle { source } => {
                    let on = !self.background[source].on;
                    let path = self.background[source].path.clone();
                    self.set_background(source, on, path, now);
                    self.schedule_toggle(source, now);
                    if cfg.verbose_events {
                        let kind = if on { "background_on" } else { "background_off" };
                        self.log(now, kind, source as u64, String::new());
                    }
                }
                EventKind::FlowEnd { slot } => {
                    let old = self.flows[slot].id;
                    cp.flow_ended(old);
                    let (flow, life) = self.new_flow();
                    self.log(now, "flow_end", old, format!("slot={slot} next={}", flow.id));
                    self.flows[slot] = flow;
                    self.queue.schedule(now + life, EventKind::FlowEnd { slot });
                }
                EventKind::PhaseTransition { phase } => {
                    self.advance_all(now);
                    for i in 0..self.background.len() {
                        self.settle(i, now);
                    }
                    self.phase = phase;
                    self.reference_capacity = self.mean_capacity().0;
                    self.refresh_background(now);
                    self.arrival_generation += 1;
                    self.schedule_arrival(now);
                    let p = cfg.phases[phase];
                    self.log(now, "phase", phase as u64, format!("load={} mobility={} arrivals={}", p.load, p.mobility, p.arrivals));
                }
                EventKind::ConceptDrift => {
                    cp.concept_drift(now);
                    self.log(now, "drift", 0, format!("fraction={}", cfg.perturbation.drift_fraction));
                }
            }
        }
        Ok(())
    }

    fn mobility_step(&mut self, now: f64) {
        let cfg = self.cfg;
        self.advance_all(now);
        let mult = cfg.phases[self.phase].mobility;
        self.mobility.step(&mut self.nodes, cfg.mobility.step, mult, &mut self.mobility_rng);
        let topo = build_topology(&cfg.topology, self.nodes.clone()).expect("node count validated at start");
        if !topo.links().eq(self.topo.links()) {
            self.version += 1;
            self.topology_changes += 1;
            self.log(now, "topology", self.version, format!("links={}", topo.link_count()));
        } else if cfg.verbose_events {
            self.log(now, "mobility", self.version, String::new());
        }
        self.topo = Arc::new(topo);
        for i in 0..self.background.len() {
            let broken = self.background[i].path.as_deref().is_some_and(|p| !self.topo.path_exists(p));
            if broken {
                let on = self.background[i].on;
                self.set_background(i, on, None, now);
            }
        }
        self.recompute_radio();
    }

    fn close_interval(&mut self, index: u64, now: f64) {
        self.advance_all(now);
        for i in 0..self.background.len() {
            self.settle(i, now);
        }
        if index > 0 {
            let (mean_capacity, links) = self.mean_capacity();
            self.intervals.push(IntervalRecord {
                index: index - 1,
                start: (index - 1) as f64 * self.cfg.interval,
                end: now,
                background_offered: self.interval_offered,
                background_delivered: self.interval_delivered,
                mean_capacity,
                links,
            });
        }
        self.interval_offered = 0.0;
        self.interval_delivered = 0.0;
    }

    fn tick(&mut self, index: u64, now: f64, cp: &mut dyn ControlPlane) -> Result<()> {
        let cfg = self.cfg;
        self.ticks += 1;
        self.close_interval(index, now);
        let sigma = if cfg.transit.stochastic { cfg.channel.shadowing_db } else { 0.0 };
        self.shadow.resample(sigma, &mut self.channel_rng);
        self.recompute_radio();

        let telemetry = self.snapshot(now);
        for f in &mut self.fluid {
            f.arrived = 0.0;
            f.dropped = 0.0;
        }
        if !cfg.in_outage(now) {
            cp.telemetry(Arc::new(telemetry));
        }
        cp.control_tick(now);

        let requests: Vec<BackgroundRequest> = self
            .background
            .iter()
            .enumerate()
            .map(|(id, b)| BackgroundRequest { id, src: b.src, dst: b.dst })
            .collect();
        let paths = cp.route_background(now, &requests);
        for (i, path) in paths.into_iter().enumerate().take(self.background.len()) {
            let b = &self.background[i];
            let path = path.filter(|p| p.first() == Some(&b.src) && p.last() == Some(&b.dst) && self.topo.path_exists(p));
            if path != self.background[i].path {
                let on = self.background[i].on;
                self.set_background(i, on, path, now);
            }
        }
        let next = (index + 1) as f64 * cfg.interval;
        self.queue.schedule(next.min(cfg.duration), EventKind::Tick { index: index + 1 });
        Ok(())
    }

    fn snapshot(&self, now: f64) -> Telemetry {
        let cfg = self.cfg;
        let mut links = LinkSnapshot::new(now);
        for (l, r) in self.radio.iter().enumerate() {
            let Some(r) = r else { continue };
            let f = &self.fluid[l];
            let util = if r.capacity > 0.0 { f.arrived * 8.0 / (r.capacity * cfg.interval) } else { 1.0 };
            links.insert(
                l / self.n,
                l % self.n,
                LinkMetrics {
                    propagation: self.propagation[l],
                    capacity: r.capacity,
                    backlog: f.backlog,
                    queue_util: (f.backlog / cfg.topology.buffer).clamp(0.0, 1.0),
                    utilization: util.clamp(0.0, 1.0),
                    loss: r.loss,
                    sinr_norm: r.sinr_norm,
                },
            );
        }
        let mult = cfg.phases[self.phase].mobility;
        let scale = cfg.mobility_scale();
        let nodes = (0..self.n)
            .map(|i| {
                let mobility = (self.mobility.speed(i, mult) / scale).clamp(0.0, 1.0);
                let out: Vec<&LinkMetrics> = self.topo.neighbors(i).iter().filter_map(|&j| links.get(i, j)).collect();
                if out.is_empty() {
                    return NetworkStateVector { delay: 1.0, loss: 1.0, link_quality: 0.0, mobility, ..NetworkStateVector::IDEAL };
                }
                let k = out.len() as f64;
                let mean = |g: &dyn Fn(&LinkMetrics) -> f64| out.iter().map(|m| g(m)).sum::<f64>() / k;
                NetworkStateVector {
                    delay: (mean(&|m| m.hop_delay(cfg.telemetry.probe_size)) / cfg.telemetry.delay_scale).clamp(0.0, 1.0),
                    queue: out.iter().map(|m| m.queue_util).fold(0.0, f64::max),
                    load: mean(&|m| m.utilization),
                    loss: (mean(&|m| m.loss) / cfg.channel.loss_ceiling.max(EPS)).clamp(0.0, 1.0),
                    mobility,
                    link_quality: mean(&|m| m.sinr_norm).clamp(0.0, 1.0),
                }
            })
            .collect();
        Telemetry { time: now, version: self.version, topology: Arc::clone(&self.topo), links, nodes }
    }

    fn arrive(&mut self, now: f64, cp: &mut dyn ControlPlane) -> Result<()> {
        let cfg = self.cfg;
        let id = self.messages.len() as u64;
        let slot = &self.flows[id as usize % self.flows.len()];
        let (flow, src, dst, task) = (slot.id, slot.src, slot.dst, slot.task);
        let (lo, hi) = cfg.traffic.size;
        let size = if hi > lo { self.traffic_rng.random_range(lo..hi) } else { lo };
        now.to_bits().hash(&mut self.arrival_hash);
        (flow, src, dst, size.to_bits()).hash(&mut self.arrival_hash);

        let mut sem_rng = keyed_rng(self.seed, Stream::Semantics, id);
        let truth = self.world.sample_message(task, &mut sem_rng)?;
        let noise = cfg.perturbation.embedding_noise / (truth.dim() as f64).sqrt();
        let encoded = perturb_embedding(&truth, noise, &mut sem_rng)?;

        let ctx = MessageContext { id, flow, task, src, dst, size, time: now, embedding: &encoded };
        let decision = cp.decide(&ctx);
        self.log(now, "arrival", id, format!("flow={flow} src={src} dst={dst} size={size:.1}"));
        let mut record = MessageRecord {
            id,
            flow,
            task,
            src,
            dst,
            created: now,
            size,
            decision: None,
            outcome: Outcome::NoRoute,
            delivered_at: None,
            d_obs: None,
        };
        let Some(decision) = decision else {
            self.messages.push(record);
            self.inflight.push(None);
            self.log(now, "no_route", id, String::new());
            return Ok(());
        };
        let path = decision.path.clone();
        if path.len() < 2 || path[0] != src || path[path.len() - 1] != dst {
            return Err(Error::Routing(format!("controller returned path {path:?} for {src} -> {dst}")));
        }
        let d_enc = predict_distortion(cfg.transit.d_enc[decision.fidelity.index()], &[self.resolution_loss]);
        record.decision = Some(decision);
        self.messages.push(record);
        self.inflight.push(Some(InFlight {
            path,
            truth,
            encoded,
            d_enc,
            links: Vec::new(),
            rng: keyed_rng(self.seed, Stream::Perturbation, id),
        }));
        self.forward(id as usize, 0, now, cp)
    }

    fn terminate(&mut self, id: usize, outcome: Outcome, now: f64, hop: usize) {
        self.messages[id].outcome = outcome;
        self.inflight[id] = None;
        self.log(now, outcome.as_str(), id as u64, format!("hop={hop}"));
    }

    fn forward(&mut self, id: usize, hop: usize, now: f64, cp: &mut dyn ControlPlane) -> Result<()> {
        let cfg = self.cfg;
        let Some(m) = self.inflight[id].as_ref() else {
            return Err(Error::Measurement(format!("message {id} is not in flight")));
        };
        if hop + 1 == m.path.len() {
            return self.deliver(id, now, cp);
        }
        let (u, v) = (m.path[hop], m.path[hop + 1]);
        if !self.topo.has_link(u, v) {
            self.terminate(id, Outcome::PathBreak, now, hop);
            return Ok(());
        }
        let l = self.idx(u, v);
        self.advance(l, now);
        let radio = self.radio[l].expect("live link has radio state");
        let size = self.messages[id].size;
        let buffer = cfg.topology.buffer;
        let f = &mut self.fluid[l];
        f.arrived += size;
        if f.backlog + size > buffer {
            f.dropped += size;
            self.terminate(id, Outcome::Lost, now, hop);
            return Ok(());
        }
        let queue_util = f.backlog / buffer;
        let delay = (f.backlog + size) * 8.0 / radio.capacity + self.propagation[l];
        f.backlog += size;
        let m = self.inflight[id].as_mut().expect("checked above");
        if cfg.transit.stochastic && m.rng.random::<f64>() < radio.loss {
            self.terminate(id, Outcome::Lost, now, hop);
            return Ok(());
        }
        m.links.push(crate::routing::link_distortion(radio.loss, queue_util, radio.sinr_norm, &cfg.transit.distortion));
        self.queue.schedule(now + delay, EventKind::Hop { message: id, hop: hop + 1 });
        Ok(())
    }

    fn deliver(&mut self, id: usize, now: f64, cp: &mut dyn ControlPlane) -> Result<()> {
        let t = &self.cfg.transit;
        let mut m = self.inflight[id].take().expect("delivering a message in flight");
        let delivered = perturb_in_transit(&m.encoded, t.model, t.gain, m.d_enc, &m.links, &mut m.rng)?;
        let d_obs = observed_distortion(&m.truth, &delivered)?;
        let rec = &mut self.messages[id];
        rec.outcome = Outcome::Delivered;
        rec.delivered_at = Some(now);
        rec.d_obs = Some(d_obs);
        let d = rec.decision.as_ref().expect("delivered messages were routed");
        let fb = Feedback {
            message: rec.id,
            flow: rec.flow,
            time: now,
            relevance: d.relevance,
            fidelity: d.fidelity,
            d_hat: d.d_hat,
            path: m.path,
            original: m.truth,
            delivered,
        };
        self.log(now, "delivered", id as u64, format!("d_obs={d_obs:.6}"));
        cp.feedback(fb);
        Ok(())
    }

    fn finish(self) -> Result<SimOutput> {
        if let Some(id) = self.inflight.iter().position(Option::is_some) {
            return Err(Error::Measurement(format!("message {id} never reached a terminal state")));
        }
        let topology_digest = self.topology_digest_initial;
        Ok(SimOutput {
            messages: self.messages,
            intervals: self.intervals,
            events: self.events,
            capacity: self.capacity,
            topology_digest,
            arrival_digest: self.arrival_hash.finish(),
            topology_changes: self.topology_changes,
            ticks: self.ticks,
        })
    }
}
