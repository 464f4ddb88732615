use rand::seq::SliceRandom;
use rand::Rng;

use super::config::TopologyConfig;
use crate::error::{Error, Result};
use crate::routing::{NetNode, NodeKind, Topology};

/// Node kinds in proportion to the configured mix, largest remainders first.
pub fn node_kinds(cfg: &TopologyConfig) -> Vec<NodeKind> {
    let n = cfg.nodes;
    let raw: Vec<f64> = cfg.type_mix.iter().map(|m| m * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    let mut missing = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        counts[i] += 1;
        missing -= 1;
    }
    NodeKind::ALL.iter().zip(counts).flat_map(|(k, c)| std::iter::repeat_n(*k, c)).collect()
}

/// Two nodes are linked when within the larger of their radio ranges.
pub fn link_range(cfg: &TopologyConfig, a: &NetNode, b: &NetNode) -> f64 {
    cfg.ranges[a.kind.index()].max(cfg.ranges[b.kind.index()])
}

pub fn build_topology(cfg: &TopologyConfig, nodes: Vec<NetNode>) -> Result<Topology> {
    let ranges: Vec<f64> = nodes.iter().map(|n| cfg.ranges[n.kind.index()]).collect();
    Topology::from_ranges(nodes, cfg.area, |i, j| ranges[i].max(ranges[j]))
}

/// Uniform placement with the configured type mix, redrawn until connected.
pub fn generate_topology<R: Rng + ?Sized>(cfg: &TopologyConfig, rng: &mut R) -> Result<Topology> {
    if cfg.nodes < 2 {
        return Err(Error::config(format!("need at least 2 nodes, got {}", cfg.nodes)));
    }
    let mut kinds = node_kinds(cfg);
    kinds.shuffle(rng);
    for _ in 0..cfg.max_retries.max(1) {
        let nodes = kinds
            .iter()
            .map(|&kind| NetNode { x: rng.random_range(0.0..cfg.area), y: rng.random_range(0.0..cfg.area), kind })
            .collect();
        let topo = build_topology(cfg, nodes)?;
        if topo.is_connected() {
            return Ok(topo);
        }
    }
    Err(Error::config(format!(
        "no connected deployment of {} nodes found in {} attempts",
        cfg.nodes, cfg.max_retries
    )))
}

/// Random waypoint state of every node. Fixed infrastructure never moves.
#[derive(Debug, Clone)]
pub struct Mobility {
    waypoint: Vec<(f64, f64)>,
    speed: Vec<f64>,
    mobile: Vec<bool>,
    range: (f64, f64),
    area: f64,
}

impl Mobility {
    pub fn new<R: Rng + ?Sized>(nodes: &[NetNode], speed: (f64, f64), area: f64, rng: &mut R) -> Self {
        let mut m = Self {
            waypoint: nodes.iter().map(|n| (n.x, n.y)).collect(),
            speed: vec![0.0; nodes.len()],
            mobile: nodes.iter().map(|n| n.kind.is_mobile()).collect(),
            range: speed,
            area,
        };
        for i in 0..nodes.len() {
            if m.mobile[i] {
                m.redraw(i, rng);
            }
        }
        m
    }

    fn redraw<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) {
        self.waypoint[i] = (rng.random_range(0.0..self.area), rng.random_range(0.0..self.area));
        let (lo, hi) = self.range;
        self.speed[i] = if hi > lo { rng.random_range(lo..hi) } else { lo };
    }

    pub fn is_mobile(&self, i: usize) -> bool {
        self.mobile[i]
    }

    /// Current speed of node `i` under a phase multiplier.
    pub fn speed(&self, i: usize, multiplier: f64) -> f64 {
        if self.mobile[i] {
            self.speed[i] * multiplier
        } else {
            0.0
        }
    }

    pub fn waypoint(&self, i: usize) -> (f64, f64) {
        self.waypoint[i]
    }

    /// Moves every mobile node toward its waypoint for `dt` seconds. A node reaching its
    /// waypoint stops there and draws the next waypoint and speed.
    pub fn step<R: Rng + ?Sized>(&mut self, nodes: &mut [NetNode], dt: f64, multiplier: f64, rng: &mut R) {
        for i in 0..nodes.len() {
            if !self.mobile[i] {
                continue;
            }
            let travel = self.speed[i] * multiplier * dt;
            let (wx, wy) = self.waypoint[i];
            let (dx, dy) = (wx - nodes[i].x, wy - nodes[i].y);
            let dist = dx.hypot(dy);
            if dist <= travel {
                nodes[i].x = wx;
                nodes[i].y = wy;
                self.redraw(i, rng);
            } else if travel > 0.0 {
                nodes[i].x += dx / dist * travel;
                nodes[i].y += dy / dist * travel;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::streams::{stream_rng, Stream};

    #[test]
    fn type_mix_counts() {
        let cfg = TopologyConfig::default();
        let kinds = node_kinds(&cfg);
        let count = |k| kinds.iter().filter(|&&x| x == k).count();
        assert_eq!(kinds.len(), 50);
        assert_eq!(count(NodeKind::Macro), 5);
        assert_eq!(count(NodeKind::SmallCell), 15);
        assert_eq!(count(NodeKind::AccessPoint), 15);
        let odd = TopologyConfig { nodes: 7, ..Default::default() };
        assert_eq!(node_kinds(&odd).len(), 7);
    }

    #[test]
    fn two_close_nodes_get_one_link() {
        let cfg = TopologyConfig { nodes: 2, ..Default::default() };
        let a = NetNode { x: 10.0, y: 10.0, kind: NodeKind::AccessPoint };
        let b = NetNode { x: 100.0, y: 10.0, kind: NodeKind::AccessPoint };
        let t = build_topology(&cfg, vec![a, b]).unwrap();
        assert_eq!(t.link_count(), 2);
        assert!(t.has_link(0, 1) && t.has_link(1, 0));
    }

    #[test]
    fn generation_is_deterministic_and_connected() {
        let cfg = TopologyConfig::default();
        let a = generate_topology(&cfg, &mut stream_rng(3, Stream::Topology)).unwrap();
        let b = generate_topology(&cfg, &mut stream_rng(3, Stream::Topology)).unwrap();
        assert_eq!(a, b);
        assert!(a.is_connected());
    }

    #[test]
    fn impossible_connectivity_is_config_error() {
        let cfg = TopologyConfig { nodes: 10, area: 100_000.0, max_retries: 3, ..Default::default() };
        let r = generate_topology(&cfg, &mut stream_rng(1, Stream::Topology));
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn straight_segment_kinematics() {
        let mut nodes = vec![NetNode { x: 0.0, y: 0.0, kind: NodeKind::Relay }];
        let mut rng = stream_rng(1, Stream::Mobility);
        let mut m = Mobility::new(&nodes, (10.0, 10.0), 1000.0, &mut rng);
        m.waypoint[0] = (100.0, 0.0);
        m.step(&mut nodes, 0.1, 1.0, &mut rng);
        assert!((nodes[0].x - 1.0).abs() < 1e-12);
        assert_eq!(nodes[0].y, 0.0);
    }

    #[test]
    fn infrastructure_stays_and_nodes_stay_inside() {
        let cfg = TopologyConfig::default();
        let topo = generate_topology(&cfg, &mut stream_rng(9, Stream::Topology)).unwrap();
        let mut nodes = topo.nodes().to_vec();
        let fixed: Vec<_> = nodes.iter().filter(|n| !n.kind.is_mobile()).copied().collect();
        let mut rng = stream_rng(9, Stream::Mobility);
        let mut m = Mobility::new(&nodes, (1.0, 15.0), cfg.area, &mut rng);
        for _ in 0..2000 {
            m.step(&mut nodes, 0.1, 2.0, &mut rng);
            assert!(nodes.iter().all(|n| (0.0..=cfg.area).contains(&n.x) && (0.0..=cfg.area).contains(&n.y)));
        }
        let still: Vec<_> = nodes.iter().filter(|n| !n.kind.is_mobile()).copied().collect();
        assert_eq!(fixed, still);
    }
}
