use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semnet_core::kplane::{fallback_mode, ChangeReason, Controller, ControllerConfig, DecisionSource};
use semnet_core::netsim::{ControlPlane, Feedback, MessageContext, RouteDecision, Telemetry};
use semnet_core::routing::{LinkMetrics, LinkSnapshot, NetNode, NodeKind, Scheme, Topology};
use semnet_core::semantics::{FidelityLevel, NetworkStateVector, SemanticVector, SyntheticWorld, WorldConfig};

/// Diamond 0-{1,2}-3; the upper branch through 1 is busy.
fn telemetry(time: f64, busy: f64) -> Arc<Telemetry> {
    let nodes = (0..4).map(|i| NetNode { x: i as f64 * 50.0, y: 0.0, kind: NodeKind::Relay }).collect();
    let links = [(0, 1), (0, 2), (1, 3), (2, 3)];
    let topology = Arc::new(Topology::new(nodes, &links, 500.0).unwrap());
    let mut snap = LinkSnapshot::new(time);
    for (a, b) in links {
        let mut m = LinkMetrics::idle(100e6, 1e-4);
        if a == 1 || b == 1 {
            m.utilization = busy;
            m.queue_util = busy;
        }
        snap.insert(a, b, m);
        snap.insert(b, a, m);
    }
    Arc::new(Telemetry { time, version: 1, topology, links: snap, nodes: vec![NetworkStateVector::IDEAL; 4] })
}

struct Rig {
    ctl: Controller,
    world: SyntheticWorld,
    rng: ChaCha8Rng,
    next_id: u64,
}

impl Rig {
    fn new(cfg: ControllerConfig) -> Self {
        let world = SyntheticWorld::generate(&WorldConfig::default(), 1).unwrap();
        Self { ctl: Controller::new(cfg, world.clone(), 1).unwrap(), world, rng: ChaCha8Rng::seed_from_u64(3), next_id: 0 }
    }

    fn send(&mut self, flow: u64, time: f64) -> (SemanticVector, Option<RouteDecision>) {
        let s = self.world.sample_message(0, &mut self.rng).unwrap();
        let msg = MessageContext { id: self.next_id, flow, task: 0, src: 0, dst: 3, size: 1000.0, time, embedding: &s };
        self.next_id += 1;
        let d = self.ctl.decide(&msg);
        (s, d)
    }

    /// Reports a delivery with the given observed vector and applies it at `time`.
    fn report(&mut self, flow: u64, time: f64, d: &RouteDecision, original: SemanticVector, delivered: SemanticVector) {
        self.ctl.feedback(Feedback {
            message: self.next_id - 1,
            flow,
            time,
            relevance: d.relevance,
            fidelity: d.fidelity,
            d_hat: 0.0,
            path: d.path.clone(),
            original,
            delivered,
        });
        self.ctl.control_tick(time);
    }
}

fn garbled(s: &SemanticVector) -> SemanticVector {
    let mut v = s.values().to_vec();
    v.reverse();
    v[0] += 1.0;
    SemanticVector::new(v.iter().map(|x| -x).collect()).unwrap()
}

#[test]
fn no_telemetry_means_no_route() {
    let mut rig = Rig::new(ControllerConfig::default());
    assert!(rig.send(1, 0.0).1.is_none());
}

#[test]
fn stale_telemetry_switches_to_fallback() {
    assert_eq!(fallback_mode(0.6, 0.2, 3.0, Scheme::Proposed), DecisionSource::Proposed);
    assert_eq!(fallback_mode(0.61, 0.2, 3.0, Scheme::Proposed), DecisionSource::Fallback);
    assert_eq!(fallback_mode(0.1, 0.2, 3.0, Scheme::Dmr), DecisionSource::Dmr);

    let mut rig = Rig::new(ControllerConfig::default());
    rig.ctl.telemetry(telemetry(0.0, 0.8));
    rig.send(1, 0.1);
    rig.send(1, 5.0);
    let d = rig.ctl.decisions();
    assert_eq!(d[0].source, DecisionSource::Proposed);
    assert_eq!(d[1].source, DecisionSource::Fallback);
    // fallback routes by load at the fixed fidelity
    assert_eq!(d[1].path, vec![0, 2, 3]);
    assert_eq!(d[1].fidelity, FidelityLevel::Mid);
}

#[test]
fn baselines_follow_their_rule_and_ignore_feedback() {
    for (scheme, path) in [(Scheme::Sp, vec![0, 1, 3]), (Scheme::Lbr, vec![0, 2, 3]), (Scheme::Dmr, vec![0, 2, 3])] {
        let mut rig = Rig::new(ControllerConfig::for_scheme(scheme));
        rig.ctl.telemetry(telemetry(0.0, 0.8));
        for k in 0..5 {
            let t = 0.01 + k as f64 * 0.05;
            let (s, d) = rig.send(1, t);
            let d = d.unwrap();
            assert_eq!(d.path, path, "{scheme}");
            assert_eq!(d.fidelity, FidelityLevel::Mid);
            rig.report(1, t, &d, s.clone(), garbled(&s));
        }
        assert!(rig.ctl.flow(1).unwrap().fidelity.is_none());
    }
}

#[test]
fn violations_escalate_fidelity_then_reroute() {
    let mut rig = Rig::new(ControllerConfig::default());
    rig.ctl.telemetry(telemetry(0.0, 0.0));
    let mut levels = Vec::new();
    let mut paths = Vec::new();
    for k in 0..4 {
        let t = 0.01 + k as f64 * 0.01;
        let (s, d) = rig.send(7, t);
        let d = d.unwrap();
        levels.push(d.fidelity);
        paths.push(d.path.clone());
        rig.report(7, t, &d, s.clone(), garbled(&s));
    }
    assert!(levels.windows(2).all(|w| w[1] >= w[0]), "{levels:?}");
    assert_eq!(*levels.last().unwrap(), FidelityLevel::High);
    // at the top level the violation moved the flow off its path at once
    let flow = rig.ctl.flow(7).unwrap();
    let excluded = flow.excluded.as_ref().unwrap().0.clone();
    assert_ne!(flow.path.as_ref().unwrap(), &excluded);
    let (_, d) = rig.send(7, 0.05);
    assert_ne!(d.unwrap().path, excluded);
    assert_eq!(rig.ctl.decisions().last().unwrap().reason, ChangeReason::Excluded);
}

#[test]
fn clean_deliveries_leave_the_flow_alone() {
    let mut rig = Rig::new(ControllerConfig::default());
    rig.ctl.telemetry(telemetry(0.0, 0.0));
    for k in 0..10 {
        let t = 0.01 + k as f64 * 0.01;
        let (s, d) = rig.send(2, t);
        let d = d.unwrap();
        rig.report(2, t, &d, s.clone(), s);
    }
    let flow = rig.ctl.flow(2).unwrap();
    assert!(flow.fidelity.is_none() && flow.excluded.is_none());
    assert!(rig.ctl.distortion_log().iter().all(|r| r.gap < 1e-12));
    assert!(rig.ctl.decisions()[1..].iter().all(|d| d.reason == ChangeReason::Same));
}

#[test]
fn ended_flows_forget_their_escalation() {
    let mut rig = Rig::new(ControllerConfig::default());
    rig.ctl.telemetry(telemetry(0.0, 0.0));
    let (s, d) = rig.send(4, 0.01);
    rig.report(4, 0.01, &d.unwrap(), s.clone(), garbled(&s));
    assert!(rig.ctl.flow(4).unwrap().fidelity.is_some());
    rig.ctl.flow_ended(4);
    assert!(rig.ctl.flow(4).is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn a_flows_fidelity_floor_never_drops(pattern in prop::collection::vec(any::<bool>(), 1..30)) {
        let mut rig = Rig::new(ControllerConfig::default());
        rig.ctl.telemetry(telemetry(0.0, 0.3));
        let mut floor = None;
        for (k, bad) in pattern.into_iter().enumerate() {
            let t = 0.01 + k as f64 * 0.001;
            let (s, d) = rig.send(9, t);
            let d = d.unwrap();
            prop_assert!(floor.is_none_or(|f| d.fidelity >= f));
            let delivered = if bad { garbled(&s) } else { s.clone() };
            rig.report(9, t, &d, s, delivered);
            let now = rig.ctl.flow(9).unwrap().fidelity;
            prop_assert!(now >= floor);
            floor = now;
        }
    }
}
