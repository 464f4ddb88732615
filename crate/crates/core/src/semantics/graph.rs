use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::embedding::perturb_embedding;
use super::vector::SemanticVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Hierarchy,
    Dependency,
    Similarity,
    Association,
}

impl Relation {
    pub const ALL: [Relation; 4] = [
        Relation::Hierarchy,
        Relation::Dependency,
        Relation::Similarity,
        Relation::Association,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Relation::Hierarchy => "hierarchy",
            Relation::Dependency => "dependency",
            Relation::Similarity => "similarity",
            Relation::Association => "association",
        }
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown relation tag {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptNode {
    pub id: String,
    pub label: String,
    pub embedding: SemanticVector,
}

/// Task concept set declared in a knowledge file, by node index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskRecord {
    pub task_id: u32,
    pub nodes: Vec<usize>,
}

/// Concept graph with undirected typed relations. Static for the duration of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    nodes: Vec<ConceptNode>,
    edges: Vec<(usize, usize, Relation)>,
    adjacency: Vec<Vec<usize>>,
}

impl KnowledgeGraph {
    /// Edges are given by node index.
    pub fn new(nodes: Vec<ConceptNode>, edges: Vec<(usize, usize, Relation)>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::config("knowledge graph has no nodes"));
        }
        let dim = nodes[0].embedding.dim();
        if let Some(bad) = nodes.iter().find(|n| n.embedding.dim() != dim) {
            return Err(Error::DimensionMismatch(dim, bad.embedding.dim()));
        }
        let mut seen = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if seen.insert(n.id.as_str(), i).is_some() {
                return Err(Error::config(format!("duplicate concept id {:?}", n.id)));
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for &(a, b, _) in &edges {
            if a >= nodes.len() || b >= nodes.len() {
                return Err(Error::config(format!("edge ({a}, {b}) references a missing node")));
            }
            if a == b {
                return Err(Error::config(format!("self-loop on concept {a}")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        Ok(Self { nodes, edges, adjacency })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].embedding.dim()
    }

    pub fn node(&self, index: usize) -> Option<&ConceptNode> {
        self.nodes.get(index)
    }

    pub fn nodes(&self) -> &[ConceptNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize, Relation)] {
        &self.edges
    }

    pub fn neighbors(&self, index: usize) -> &[usize] {
        &self.adjacency[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn check_size(&self, min: usize, max: usize) -> Result<()> {
        if self.len() < min || self.len() > max {
            return Err(Error::config(format!(
                "knowledge graph has {} concepts, expected {min}..={max}",
                self.len()
            )));
        }
        Ok(())
    }

    /// Nodes whose affinity with `s` reaches `threshold`; falls back to the single
    /// highest-affinity node (lowest index on ties) when none qualify.
    pub fn map_to_concepts(&self, s: &SemanticVector, threshold: f64) -> Result<Vec<usize>> {
        let mut mapped = Vec::new();
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, n) in self.nodes.iter().enumerate() {
            let w = s.affinity(&n.embedding)?;
            if w >= threshold {
                mapped.push(i);
            }
            if w > best.1 {
                best = (i, w);
            }
        }
        if mapped.is_empty() {
            mapped.push(best.0);
        }
        Ok(mapped)
    }

    /// Mean affinity between `s` and the direct neighbours of the mapped nodes,
    /// excluding the mapped nodes themselves. Zero when that neighbourhood is empty.
    pub fn context_score(&self, s: &SemanticVector, mapped: &[usize]) -> Result<f64> {
        let mapped_set: BTreeSet<usize> = mapped.iter().copied().collect();
        let mut hood = BTreeSet::new();
        for &m in mapped {
            let adj = self
                .adjacency
                .get(m)
                .ok_or_else(|| Error::config(format!("mapped concept index {m} out of range")))?;
            hood.extend(adj.iter().copied().filter(|v| !mapped_set.contains(v)));
        }
        if hood.is_empty() {
            return Ok(0.0);
        }
        let mut sum = 0.0;
        for &v in &hood {
            sum += s.affinity(&self.nodes[v].embedding)?;
        }
        Ok(sum / hood.len() as f64)
    }

    /// Copy with `ceil(fraction * n)` randomly chosen embeddings perturbed by
    /// per-component Gaussian noise of standard deviation `sigma`. Edges are kept.
    pub fn drift_concepts(&self, fraction: f64, sigma: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::config(format!("drift fraction {fraction} outside [0, 1]")));
        }
        let mut out = self.clone();
        let count = drift_count(self.len(), fraction);
        if count == 0 {
            return Ok(out);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chosen = rand::seq::index::sample(&mut rng, self.len(), count).into_vec();
        chosen.sort_unstable();
        for i in chosen {
            let e = &out.nodes[i].embedding;
            out.nodes[i].embedding = perturb_embedding(e, sigma, &mut rng)?;
        }
        Ok(out)
    }

    /// Parses the line-oriented knowledge file. Records are tab separated:
    ///
    /// ```text
    /// node    <id>    <label>    <v1 v2 ... vd>
    /// edge    <id>    <id>       <relation>
    /// task    <task id>          <id id ...>
    /// ```
    ///
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<(Self, Vec<TaskRecord>)> {
        let mut nodes = Vec::new();
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut raw_edges = Vec::new();
        let mut raw_tasks = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "node" => {
                    if fields.len() != 4 {
                        return Err(err(format!("node record needs 4 fields, got {}", fields.len())));
                    }
                    let values = fields[3]
                        .split_whitespace()
                        .map(|x| x.parse::<f64>().map_err(|e| err(format!("bad component {x:?}: {e}"))))
                        .collect::<Result<Vec<_>>>()?;
                    let embedding = SemanticVector::new(values).map_err(|e| err(e.to_string()))?;
                    if ids.insert(fields[1].to_string(), nodes.len()).is_some() {
                        return Err(err(format!("duplicate node id {:?}", fields[1])));
                    }
                    nodes.push(ConceptNode {
                        id: fields[1].to_string(),
                        label: fields[2].to_string(),
                        embedding,
                    });
                }
                "edge" => {
                    if fields.len() != 4 {
                        return Err(err(format!("edge record needs 4 fields, got {}", fields.len())));
                    }
                    let rel = fields[3].parse::<Relation>().map_err(err)?;
                    raw_edges.push((line_no, fields[1].to_string(), fields[2].to_string(), rel));
                }
                "task" => {
                    if fields.len() != 3 {
                        return Err(err(format!("task record needs 3 fields, got {}", fields.len())));
                    }
                    let task_id = fields[1]
                        .parse::<u32>()
                        .map_err(|e| err(format!("bad task id {:?}: {e}", fields[1])))?;
                    let members: Vec<String> =
                        fields[2].split_whitespace().map(str::to_string).collect();
                    raw_tasks.push((line_no, task_id, members));
                }
                other => return Err(err(format!("unknown record type {other:?}"))),
            }
        }
        let lookup = |line: usize, id: &str| {
            ids.get(id).copied().ok_or_else(|| Error::Parse {
                line,
                msg: format!("unknown node id {id:?}"),
            })
        };
        let mut edges = Vec::with_capacity(raw_edges.len());
        for (line, a, b, rel) in raw_edges {
            edges.push((lookup(line, &a)?, lookup(line, &b)?, rel));
        }
        let mut tasks = Vec::with_capacity(raw_tasks.len());
        for (line, task_id, members) in raw_tasks {
            let nodes = members.iter().map(|m| lookup(line, m)).collect::<Result<Vec<_>>>()?;
            if nodes.is_empty() {
                return Err(Error::Parse { line, msg: format!("task {task_id} lists no concepts") });
            }
            tasks.push(TaskRecord { task_id, nodes });
        }
        Ok((Self::new(nodes, edges)?, tasks))
    }

    pub fn to_text(&self, tasks: &[TaskRecord]) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let comps: Vec<String> = n.embedding.values().iter().map(|v| format!("{v:.17e}")).collect();
            let _ = writeln!(out, "node\t{}\t{}\t{}", n.id, n.label, comps.join(" "));
        }
        for &(a, b, rel) in &self.edges {
            let _ = writeln!(out, "edge\t{}\t{}\t{}", self.nodes[a].id, self.nodes[b].id, rel.as_str());
        }
        for t in tasks {
            let members: Vec<&str> = t.nodes.iter().map(|&i| self.nodes[i].id.as_str()).collect();
            let _ = writeln!(out, "task\t{}\t{}", t.task_id, members.join(" "));
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Vec<TaskRecord>)> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, tasks: &[TaskRecord], path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text(tasks))?;
        Ok(())
    }
}

pub(crate) fn drift_count(n: usize, fraction: f64) -> usize {
    // Guard against 0.1 * 200 = 20.000000000000004 rounding up to 21.
    let raw = fraction * n as f64;
    let rounded = raw.round();
    let count = if (raw - rounded).abs() < 1e-9 { rounded } else { raw.ceil() };
    (count as usize).min(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, v: &[f64]) -> ConceptNode {
        ConceptNode {
            id: id.into(),
            label: format!("concept {id}"),
            embedding: SemanticVector::new(v.to_vec()).unwrap(),
        }
    }

    /// Three nodes with affinities {0.9, 0.75, 0.2} to s = e1.
    fn toy() -> (KnowledgeGraph, SemanticVector) {
        let a = |c: f64| [c, (1.0 - c * c).sqrt(), 0.0];
        let nodes = vec![node("a", &a(0.9)), node("b", &a(0.75)), node("c", &a(0.2))];
        let g = KnowledgeGraph::new(nodes, vec![(0, 1, Relation::Hierarchy)]).unwrap();
        (g, SemanticVector::new(vec![1.0, 0.0, 0.0]).unwrap())
    }

    #[test]
    fn mapping_threshold_filter() {
        let (g, s) = toy();
        assert_eq!(g.map_to_concepts(&s, 0.7).unwrap(), vec![0, 1]);
    }

    #[test]
    fn mapping_falls_back_to_argmax() {
        let (g, s) = toy();
        assert_eq!(g.map_to_concepts(&s, 0.95).unwrap(), vec![0]);
    }

    #[test]
    fn mapping_exact_match() {
        let (g, _) = toy();
        let s = g.node(2).unwrap().embedding.clone();
        // node 1 sits at affinity 0.8 from node 2
        assert_eq!(g.map_to_concepts(&s, 0.7).unwrap(), vec![1, 2]);
        assert_eq!(g.map_to_concepts(&s, 0.9).unwrap(), vec![2]);
    }

    #[test]
    fn context_isolated_is_zero() {
        let (g, s) = toy();
        assert_eq!(g.context_score(&s, &[2]).unwrap(), 0.0);
    }

    #[test]
    fn context_single_neighbor_equal_to_s() {
        let nodes = vec![node("m", &[0.0, 1.0]), node("n", &[1.0, 0.0])];
        let g = KnowledgeGraph::new(nodes, vec![(0, 1, Relation::Similarity)]).unwrap();
        let s = SemanticVector::new(vec![1.0, 0.0]).unwrap();
        assert!((g.context_score(&s, &[0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn context_mean_of_two_neighbors() {
        let a = |c: f64| [c, (1.0 - c * c).sqrt(), 0.0];
        let nodes = vec![node("m", &[0.0, 0.0, 1.0]), node("x", &a(0.4)), node("y", &a(0.8))];
        let edges = vec![(0, 1, Relation::Dependency), (0, 2, Relation::Association)];
        let g = KnowledgeGraph::new(nodes, edges).unwrap();
        let s = SemanticVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!((g.context_score(&s, &[0]).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn context_excludes_mapped_nodes() {
        let (g, s) = toy();
        // 0 and 1 are neighbours of each other, both mapped: neighbourhood empty.
        assert_eq!(g.context_score(&s, &[0, 1]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_self_loops_and_dangling_edges() {
        let nodes = vec![node("a", &[1.0, 0.0]), node("b", &[0.0, 1.0])];
        assert!(KnowledgeGraph::new(nodes.clone(), vec![(0, 0, Relation::Hierarchy)]).is_err());
        assert!(KnowledgeGraph::new(nodes, vec![(0, 5, Relation::Hierarchy)]).is_err());
    }

    #[test]
    fn drift_count_uses_ceiling() {
        assert_eq!(drift_count(200, 0.1), 20);
        assert_eq!(drift_count(200, 0.0), 0);
        assert_eq!(drift_count(7, 0.1), 1);
        assert_eq!(drift_count(10, 1.0), 10);
    }

    #[test]
    fn parse_round_trip_and_errors() {
        let (g, _) = toy();
        let tasks = vec![TaskRecord { task_id: 4, nodes: vec![0, 2] }];
        let text = g.to_text(&tasks);
        let (g2, t2) = KnowledgeGraph::parse(&text).unwrap();
        assert_eq!(g2.len(), 3);
        assert_eq!(g2.edges(), g.edges());
        assert_eq!(t2, tasks);
        for (a, b) in g.nodes().iter().zip(g2.nodes()) {
            assert_eq!(a.embedding.values(), b.embedding.values());
        }

        let bad = "node\ta\tA\t1 0\nedge\ta\tzz\tsimilarity\n";
        assert!(matches!(KnowledgeGraph::parse(bad), Err(Error::Parse { line: 2, .. })));
        let bad = "node\ta\tA\t1 0\nedge\ta\ta\tfriendship\n";
        assert!(matches!(KnowledgeGraph::parse(bad), Err(Error::Parse { line: 2, .. })));
    }
}
