use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Telemetry of one directed link at a snapshot instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    /// Seconds.
    pub propagation: f64,
    /// Bits per second.
    pub capacity: f64,
    /// Bytes waiting in the transmit queue.
    pub backlog: f64,
    /// Backlog relative to the buffer size, in `[0, 1]`.
    pub queue_util: f64,
    /// Offered load relative to capacity, in `[0, 1]`.
    pub utilization: f64,
    /// Packet loss probability.
    pub loss: f64,
    /// SINR mapped onto `[0, 1]`.
    pub sinr_norm: f64,
}

impl LinkMetrics {
    /// Idle link of the given capacity and propagation delay.
    pub fn idle(capacity: f64, propagation: f64) -> Self {
        Self { propagation, capacity, backlog: 0.0, queue_util: 0.0, utilization: 0.0, loss: 0.0, sinr_norm: 1.0 }
    }

    /// Queueing plus transmission plus propagation for a packet of `size` bytes.
    pub fn hop_delay(&self, size: f64) -> f64 {
        (self.backlog + size) * 8.0 / self.capacity + self.propagation
    }
}

/// Frozen per-link view handed to the router.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkSnapshot {
    pub time: f64,
    links: HashMap<(usize, usize), LinkMetrics>,
}

impl LinkSnapshot {
    pub fn new(time: f64) -> Self {
        Self { time, links: HashMap::new() }
    }

    pub fn insert(&mut self, a: usize, b: usize, m: LinkMetrics) {
        self.links.insert((a, b), m);
    }

    pub fn get(&self, a: usize, b: usize) -> Option<&LinkMetrics> {
        self.links.get(&(a, b))
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }
}

/// Impairments retained per link for distortion prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkImpairment {
    pub loss: f64,
    pub queue_util: f64,
    pub sinr_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathMetrics {
    /// Predicted end-to-end delay in seconds.
    pub delay: f64,
    /// Bottleneck utilization.
    pub load: f64,
    pub impairments: Vec<LinkImpairment>,
    /// Snapshot older than two control intervals at evaluation time.
    pub stale: bool,
}

/// Sums per-hop delay and takes the bottleneck utilization along `hops`.
pub fn aggregate_path_metrics(
    hops: &[usize],
    snapshot: &LinkSnapshot,
    size: f64,
    now: f64,
    interval: f64,
) -> Result<PathMetrics> {
    if hops.len() < 2 {
        return Err(Error::Routing(format!("path {hops:?} has no links")));
    }
    let mut delay = 0.0;
    let mut load: f64 = 0.0;
    let mut impairments = Vec::with_capacity(hops.len() - 1);
    for w in hops.windows(2) {
        let m = snapshot
            .get(w[0], w[1])
            .ok_or_else(|| Error::Routing(format!("link {} -> {} missing from telemetry", w[0], w[1])))?;
        delay += m.hop_delay(size);
        load = load.max(m.utilization);
        impairments.push(LinkImpairment { loss: m.loss, queue_util: m.queue_util, sinr_norm: m.sinr_norm });
    }
    let stale = now - snapshot.time > 2.0 * interval + 1e-12;
    Ok(PathMetrics { delay, load, impairments, stale })
}
