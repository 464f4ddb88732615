use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Macro,
    SmallCell,
    Relay,
    AccessPoint,
}

impl NodeKind {
    pub const ALL: [NodeKind; 4] = [NodeKind::Macro, NodeKind::SmallCell, NodeKind::Relay, NodeKind::AccessPoint];

    pub fn as_str(&self) -> &'static str {
        match self {
            NodeKind::Macro => "macro",
            NodeKind::SmallCell => "small_cell",
            NodeKind::Relay => "relay",
            NodeKind::AccessPoint => "access_point",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Relays and access points move; macro and small cells are fixed infrastructure.
    pub fn is_mobile(self) -> bool {
        matches!(self, NodeKind::Relay | NodeKind::AccessPoint)
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown node kind {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetNode {
    pub x: f64,
    pub y: f64,
    pub kind: NodeKind,
}

impl NetNode {
    pub fn distance(&self, other: &NetNode) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Network graph at one instant. Node ids are indices; adjacency lists are sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<NetNode>,
    adjacency: Vec<Vec<usize>>,
    area: f64,
}

impl Topology {
    /// Builds a topology from undirected links. Each link yields both directions.
    pub fn new(nodes: Vec<NetNode>, links: &[(usize, usize)], area: f64) -> Result<Self> {
        if !(area > 0.0) {
            return Err(Error::config(format!("area side {area} must be positive")));
        }
        for (i, n) in nodes.iter().enumerate() {
            if !(0.0..=area).contains(&n.x) || !(0.0..=area).contains(&n.y) {
                return Err(Error::config(format!("node {i} at ({}, {}) lies outside the area", n.x, n.y)));
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for &(a, b) in links {
            if a >= nodes.len() || b >= nodes.len() || a == b {
                return Err(Error::config(format!("invalid link ({a}, {b})")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        Ok(Self { nodes, adjacency, area })
    }

    /// Links between every pair within `range(i, j)` metres of each other.
    pub fn from_ranges(nodes: Vec<NetNode>, area: f64, range: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut links = Vec::new();
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if nodes[i].distance(&nodes[j]) <= range(i, j) {
                    links.push((i, j));
                }
            }
        }
        Self::new(nodes, &links, area)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn nodes(&self) -> &[NetNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &NetNode {
        &self.nodes[i]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn has_link(&self, a: usize, b: usize) -> bool {
        self.adjacency.get(a).is_some_and(|adj| adj.binary_search(&b).is_ok())
    }

    /// Directed links `(a, b)` in ascending order.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, adj)| adj.iter().map(move |&b| (a, b)))
    }

    pub fn link_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn path_exists(&self, hops: &[usize]) -> bool {
        hops.windows(2).all(|w| self.has_link(w[0], w[1]))
    }

    /// Hop distance from every node to `dst`; `usize::MAX` when unreachable.
    pub fn hop_distances(&self, dst: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        let mut queue = VecDeque::new();
        dist[dst] = 0;
        queue.push_back(dst);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.is_empty() || self.hop_distances(0).iter().all(|&d| d != usize::MAX)
    }

    /// Parses a topology file with tab-separated records:
    ///
    /// ```text
    /// area    <side metres>
    /// node    <id>    <kind>    <x>    <y>
    /// link    <id>    <id>
    /// ```
    ///
    /// Node ids must be `0..n` in order. The topology must be connected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut area = None;
        let mut nodes = Vec::new();
        let mut links = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let f: Vec<&str> = line.split('\t').collect();
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("bad number {s:?}: {e}")));
            let idx = |s: &str| s.parse::<usize>().map_err(|e| err(format!("bad node id {s:?}: {e}")));
            match (f[0], f.len()) {
                ("area", 2) => area = Some(num(f[1])?),
                ("node", 5) => {
                    if idx(f[1])? != nodes.len() {
                        return Err(err(format!("node ids must be consecutive from 0, got {}", f[1])));
                    }
                    let kind = f[2].parse::<NodeKind>().map_err(err)?;
                    nodes.push(NetNode { x: num(f[3])?, y: num(f[4])?, kind });
                }
                ("link", 3) => links.push((idx(f[1])?, idx(f[2])?)),
                (kind, n) => return Err(err(format!("malformed {kind:?} record with {n} fields"))),
            }
        }
        let area = area.ok_or_else(|| Error::config("topology file lacks an area record"))?;
        let topo = Self::new(nodes, &links, area)?;
        if !topo.is_connected() {
            return Err(Error::config("topology is disconnected"));
        }
        Ok(topo)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("area\t{}\n", self.area);
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "node\t{i}\t{}\t{}\t{}", n.kind.as_str(), n.x, n.y);
        }
        for (a, b) in self.links().filter(|(a, b)| a < b) {
            let _ = writeln!(out, "link\t{a}\t{b}");
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
