use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{ChannelConfig, TopologyConfig};
use crate::routing::NetNode;

/// Radio state of one directed link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRadio {
    pub sinr_db: f64,
    /// Bits per second.
    pub capacity: f64,
    pub loss: f64,
    pub sinr_norm: f64,
}

pub fn path_loss_db(d: f64, cfg: &ChannelConfig) -> f64 {
    cfg.pl_a + cfg.pl_b * d.max(1.0).log10()
}

fn dbm_to_mw(p: f64) -> f64 {
    10f64.powf(p / 10.0)
}

/// Shannon capacity of `bandwidth` at the given SINR, clamped to the configured range.
pub fn capacity(sinr_db: f64, cfg: &ChannelConfig) -> f64 {
    let raw = cfg.bandwidth * (1.0 + 10f64.powf(sinr_db / 10.0)).log2();
    raw.clamp(cfg.capacity.0, cfg.capacity.1)
}

/// Logistic loss curve falling with SINR, bounded by the loss ceiling.
pub fn loss_rate(sinr_db: f64, cfg: &ChannelConfig) -> f64 {
    cfg.loss_ceiling / (1.0 + (cfg.loss_slope * (sinr_db - cfg.loss_midpoint_db)).exp())
}

pub fn sinr_norm(sinr_db: f64, cfg: &ChannelConfig) -> f64 {
    let (lo, hi) = cfg.sinr_range_db;
    ((sinr_db - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// Per-pair log-normal shadowing, redrawn once per telemetry interval.
#[derive(Debug, Clone)]
pub struct Shadowing {
    n: usize,
    db: Vec<f64>,
}

impl Shadowing {
    pub fn new(n: usize) -> Self {
        Self { n, db: vec![0.0; n * n] }
    }

    pub fn resample<R: Rng + ?Sized>(&mut self, sigma: f64, rng: &mut R) {
        for a in 0..self.n {
            for b in a + 1..self.n {
                let v = sigma * rng.sample::<f64, _>(StandardNormal);
                self.db[a * self.n + b] = v;
                self.db[b * self.n + a] = v;
            }
        }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.db[a * self.n + b]
    }
}

/// Power received at `rx` from `tx` before shadowing, dBm.
pub fn received_dbm(tx: &NetNode, rx: &NetNode, topo: &TopologyConfig, cfg: &ChannelConfig) -> f64 {
    topo.tx_power[tx.kind.index()] - path_loss_db(tx.distance(rx), cfg)
}

/// Interference power at `rx` from one concurrently active transmitter, milliwatts.
pub fn interference_mw(tx: &NetNode, rx: &NetNode, topo: &TopologyConfig, cfg: &ChannelConfig) -> f64 {
    dbm_to_mw(received_dbm(tx, rx, topo, cfg) + cfg.interference_db)
}

/// Radio state from the received signal and the total interference.
pub fn radio_from(signal_dbm: f64, interference: f64, cfg: &ChannelConfig) -> LinkRadio {
    let sinr_db = signal_dbm - 10.0 * (dbm_to_mw(cfg.noise_dbm) + interference.max(0.0)).log10();
    LinkRadio {
        sinr_db,
        capacity: capacity(sinr_db, cfg),
        loss: loss_rate(sinr_db, cfg),
        sinr_norm: sinr_norm(sinr_db, cfg),
    }
}

/// Radio state of link `a -> b`. `interferers` are the transmitters concurrently ON;
/// the link's own endpoints are skipped.
pub fn link_radio(
    a: usize,
    b: usize,
    nodes: &[NetNode],
    interferers: &[usize],
    shadow_db: f64,
    topo: &TopologyConfig,
    cfg: &ChannelConfig,
) -> LinkRadio {
    let rx = &nodes[b];
    let signal = received_dbm(&nodes[a], rx, topo, cfg) - shadow_db;
    let interference = interferers
        .iter()
        .filter(|&&i| i != a && i != b)
        .map(|&i| interference_mw(&nodes[i], rx, topo, cfg))
        .sum();
    radio_from(signal, interference, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::NodeKind;

    fn node(x: f64) -> NetNode {
        NetNode { x, y: 0.0, kind: NodeKind::SmallCell }
    }

    #[test]
    fn short_idle_link_saturates_capacity() {
        let (t, c) = (TopologyConfig::default(), ChannelConfig::default());
        let r = link_radio(0, 1, &[node(0.0), node(5.0)], &[], 0.0, &t, &c);
        assert_eq!(r.capacity, 900e6);
        assert!(r.loss < 1e-6);
        assert_eq!(r.sinr_norm, 1.0);
    }

    #[test]
    fn distance_and_interference_lower_sinr() {
        let (t, c) = (TopologyConfig::default(), ChannelConfig::default());
        let nodes = [node(0.0), node(100.0), node(200.0), node(150.0)];
        let near = link_radio(0, 1, &nodes, &[], 0.0, &t, &c);
        let far = link_radio(0, 2, &nodes, &[], 0.0, &t, &c);
        assert!(far.sinr_db < near.sinr_db);
        let jammed = link_radio(0, 1, &nodes, &[3], 0.0, &t, &c);
        assert!(jammed.sinr_db < near.sinr_db);
        let own = link_radio(0, 1, &nodes, &[0, 1], 0.0, &t, &c);
        assert_eq!(own, near);
    }

    #[test]
    fn clamps_and_loss_curve() {
        let c = ChannelConfig::default();
        assert_eq!(capacity(-30.0, &c), 80e6);
        assert_eq!(capacity(60.0, &c), 900e6);
        assert!((loss_rate(3.0, &c) - 0.025).abs() < 1e-12);
        assert!(loss_rate(-50.0, &c) <= 0.05);
        assert!(loss_rate(10.0, &c) < loss_rate(5.0, &c));
    }

    #[test]
    fn shadowing_is_symmetric() {
        let mut s = Shadowing::new(4);
        let mut rng = crate::netsim::streams::stream_rng(1, crate::netsim::streams::Stream::Channel);
        s.resample(4.0, &mut rng);
        assert_eq!(s.get(1, 3), s.get(3, 1));
        assert_eq!(s.get(2, 2), 0.0);
    }
}
