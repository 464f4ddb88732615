use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::graph::{ConceptNode, KnowledgeGraph, Relation, TaskRecord};
use super::task::TaskConceptSet;
use super::vector::SemanticVector;
use crate::error::{Error, Result};

/// `normalize(s + eps)` with `eps` iid `N(0, sigma^2)` per component. `sigma = 0` returns `s`.
pub fn perturb_embedding<R: Rng + ?Sized>(
    s: &SemanticVector,
    sigma: f64,
    rng: &mut R,
) -> Result<SemanticVector> {
    if !(sigma >= 0.0) {
        return Err(Error::config(format!("noise deviation {sigma} must be nonnegative")));
    }
    if sigma == 0.0 {
        return Ok(s.clone());
    }
    let values = s
        .values()
        .iter()
        .map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    SemanticVector::new(values)
}

/// Seeded Gaussian random projection shared by every vector of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomProjection {
    from: usize,
    to: usize,
    /// Row-major `to x from`; empty in identity mode.
    matrix: Vec<f64>,
}

impl RandomProjection {
    pub fn new(from: usize, to: usize, seed: u64) -> Result<Self> {
        if to == 0 || to > from {
            return Err(Error::config(format!("cannot project dimension {from} onto {to}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (to as f64).sqrt();
        let matrix = (0..to * from).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        Ok(Self { from, to, matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self { from: dim, to: dim, matrix: Vec::new() }
    }

    pub fn is_identity(&self) -> bool {
        self.matrix.is_empty()
    }

    pub fn target_dim(&self) -> usize {
        self.to
    }

    pub fn project(&self, s: &SemanticVector) -> Result<SemanticVector> {
        if s.dim() != self.from {
            return Err(Error::DimensionMismatch(self.from, s.dim()));
        }
        if self.is_identity() {
            return Ok(s.clone());
        }
        let x = s.values();
        let values = self
            .matrix
            .chunks_exact(self.from)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect();
        SemanticVector::new(values)
    }
}

/// Parameters of the synthetic concept-centroid world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub dim: usize,
    pub concepts: usize,
    pub tasks: usize,
    /// Concepts closest to each task centroid forming the task concept set.
    pub task_concepts: usize,
    /// Per-component deviation range of concept embeddings around their centroid.
    pub concept_spread: (f64, f64),
    /// Within-cluster links drawn per concept.
    pub intra_degree: usize,
    /// Cross-cluster association links, as a fraction of the concept count.
    pub cross_links: f64,
    /// Per-component deviation range of message vectors around their task centroid.
    pub message_spread: (f64, f64),
    /// Share of messages whose meaning is unrelated to their flow's task.
    pub off_task: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            concepts: 300,
            tasks: 8,
            task_concepts: 4,
            concept_spread: (0.02, 0.12),
            intra_degree: 3,
            cross_links: 0.1,
            message_spread: (0.0, 0.15),
            off_task: 0.15,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.tasks == 0 || self.task_concepts == 0 {
            return Err(Error::config("world dimension, task count and task size must be positive"));
        }
        if self.concepts < self.tasks * self.task_concepts {
            return Err(Error::config(format!(
                "{} concepts cannot host {} tasks of {} concepts",
                self.concepts, self.tasks, self.task_concepts
            )));
        }
        let ordered = |(a, b): (f64, f64)| a >= 0.0 && a <= b;
        if !ordered(self.concept_spread) || !ordered(self.message_spread) {
            return Err(Error::config("spread ranges must satisfy 0 <= low <= high"));
        }
        if !(0.0..=1.0).contains(&self.off_task) || self.cross_links < 0.0 {
            return Err(Error::config("off-task share must lie in [0, 1] and cross links be nonnegative"));
        }
        Ok(())
    }
}

/// Knowledge graph, task concept sets and task centroids of one run.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub graph: KnowledgeGraph,
    pub tasks: Vec<TaskConceptSet>,
    pub task_records: Vec<TaskRecord>,
    centroids: Vec<SemanticVector>,
    config: WorldConfig,
}

fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn around<R: Rng + ?Sized>(c: &SemanticVector, sigma: f64, rng: &mut R) -> Result<SemanticVector> {
    let values = c.values().iter().map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal)).collect();
    SemanticVector::new(values)
}

impl SyntheticWorld {
    pub fn generate(config: &WorldConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centroids = (0..config.tasks)
            .map(|_| SemanticVector::new(gaussian_vector(config.dim, &mut rng)))
            .collect::<Result<Vec<_>>>()?;

        let mut nodes = Vec::with_capacity(config.concepts);
        let mut spreads = Vec::with_capacity(config.concepts);
        let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); config.tasks];
        for i in 0..config.concepts {
            let task = i % config.tasks;
            let (lo, hi) = config.concept_spread;
            let spread = if hi > lo { rng.random_range(lo..hi) } else { lo };
            nodes.push(ConceptNode {
                id: format!("c{i:04}"),
                label: format!("task{task}-concept{}", i / config.tasks),
                embedding: around(&centroids[task], spread, &mut rng)?,
            });
            spreads.push(spread);
            clusters[task].push(i);
        }

        let mut edges = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut add = |a: usize, b: usize, rel: Relation, edges: &mut Vec<_>| {
            if a != b && seen.insert((a.min(b), a.max(b))) {
                edges.push((a, b, rel));
            }
        };
        const INTRA: [Relation; 3] = [Relation::Hierarchy, Relation::Dependency, Relation::Similarity];
        for members in &clusters {
            for &a in members {
                for _ in 0..config.intra_degree {
                    let b = members[rng.random_range(0..members.len())];
                    add(a, b, INTRA[rng.random_range(0..INTRA.len())], &mut edges);
                }
            }
        }
        let cross = (config.cross_links * config.concepts as f64).round() as usize;
        for _ in 0..cross {
            let a = rng.random_range(0..config.concepts);
            let b = rng.random_range(0..config.concepts);
            if a % config.tasks != b % config.tasks {
                add(a, b, Relation::Association, &mut edges);
            }
        }
        let graph = KnowledgeGraph::new(nodes, edges)?;

        // The task concept set is the core of its cluster: the concepts nearest the centroid.
        let mut task_records = Vec::with_capacity(config.tasks);
        for (t, members) in clusters.iter().enumerate() {
            let mut core = members.clone();
            core.sort_by(|&a, &b| spreads[a].total_cmp(&spreads[b]).then(a.cmp(&b)));
            core.truncate(config.task_concepts);
            core.sort_unstable();
            task_records.push(TaskRecord { task_id: t as u32, nodes: core });
        }
        let tasks = Self::build_tasks(&graph, &task_records)?;
        Ok(Self { graph, tasks, task_records, centroids, config: config.clone() })
    }

    /// World built from a loaded knowledge file. Centroids are the normalized mean of each
    /// task's concepts.
    pub fn from_parts(graph: KnowledgeGraph, task_records: Vec<TaskRecord>, config: &WorldConfig) -> Result<Self> {
        if task_records.is_empty() {
            return Err(Error::config("knowledge file declares no tasks"));
        }
        let tasks = Self::build_tasks(&graph, &task_records)?;
        let centroids = tasks
            .iter()
            .map(|t| {
                let mut sum = vec![0.0; graph.dim()];
                for c in t.concepts() {
                    for (acc, v) in sum.iter_mut().zip(c.values()) {
                        *acc += v;
                    }
                }
                SemanticVector::new(sum)
            })
            .collect::<Result<Vec<_>>>()?;
        let config = WorldConfig { dim: graph.dim(), concepts: graph.len(), tasks: tasks.len(), ..config.clone() };
        Ok(Self { graph, tasks, task_records, centroids, config })
    }

    fn build_tasks(graph: &KnowledgeGraph, records: &[TaskRecord]) -> Result<Vec<TaskConceptSet>> {
        records.iter().map(|r| TaskConceptSet::from_graph(r.task_id, graph, &r.nodes)).collect()
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.graph.dim()
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn centroid(&self, task: usize) -> &SemanticVector {
        &self.centroids[task]
    }

    /// Draws the meaning of a message sent by a flow serving `task`.
    pub fn sample_message<R: Rng + ?Sized>(&self, task: usize, rng: &mut R) -> Result<SemanticVector> {
        let off = rng.random::<f64>() < self.config.off_task;
        let (lo, hi) = self.config.message_spread;
        let spread = if hi > lo { rng.random_range(lo..hi) } else { lo };
        if off {
            return SemanticVector::new(gaussian_vector(self.centroids[0].dim(), rng));
        }
        around(&self.centroids[task], spread, rng)
    }

    /// Same world with every vector passed through `p`.
    pub fn project(&self, p: &RandomProjection) -> Result<Self> {
        if p.is_identity() {
            return Ok(self.clone());
        }
        let nodes = self
            .graph
            .nodes()
            .iter()
            .map(|n| Ok(ConceptNode { embedding: p.project(&n.embedding)?, ..n.clone() }))
            .collect::<Result<Vec<_>>>()?;
        let graph = KnowledgeGraph::new(nodes, self.graph.edges().to_vec())?;
        let tasks = Self::build_tasks(&graph, &self.task_records)?;
        let centroids = self.centroids.iter().map(|c| p.project(c)).collect::<Result<Vec<_>>>()?;
        let config = WorldConfig { dim: p.target_dim(), ..self.config.clone() };
        Ok(Self { graph, tasks, task_records: self.task_records.clone(), centroids, config })
    }

    /// Same world with part of the concept graph drifted; task sets follow their nodes.
    pub fn drift(&self, fraction: f64, sigma: f64, seed: u64) -> Result<Self> {
        let graph = self.graph.drift_concepts(fraction, sigma, seed)?;
        let tasks = Self::build_tasks(&graph, &self.task_records)?;
        Ok(Self { graph, tasks, ..self.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::task::task_alignment;

    fn unit(dim: usize, seed: u64) -> SemanticVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SemanticVector::new(gaussian_vector(dim, &mut rng)).unwrap()
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = unit(16, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(perturb_embedding(&s, 0.0, &mut rng).unwrap(), s);
    }

    #[test]
    fn perturbation_is_seed_deterministic() {
        let s = unit(128, 2);
        let a = perturb_embedding(&s, 0.1, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = perturb_embedding(&s, 0.1, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mean_distance_grows_with_noise() {
        let s = unit(128, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut prev = -1.0;
        for sigma in [0.0, 0.01, 0.05, 0.1, 0.2] {
            let mean = (0..1000)
                .map(|_| 1.0 - s.cosine(&perturb_embedding(&s, sigma, &mut rng).unwrap()).unwrap())
                .sum::<f64>()
                / 1000.0;
            assert!(mean > prev, "sigma {sigma}: {mean} <= {prev}");
            prev = mean;
        }
    }

    #[test]
    fn projection_identity_and_bounds() {
        let s = unit(32, 4);
        assert_eq!(RandomProjection::identity(32).project(&s).unwrap(), s);
        assert!(RandomProjection::new(32, 64, 0).is_err());
        let p = RandomProjection::new(32, 8, 7).unwrap();
        assert_eq!(p.project(&s).unwrap(), p.project(&s).unwrap());
        assert_eq!(p.project(&s).unwrap().dim(), 8);
    }

    #[test]
    fn projection_preserves_similarity_structure() {
        let p = RandomProjection::new(128, 64, 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let base = unit(128, 23);
        let (mut before, mut after) = (Vec::new(), Vec::new());
        for i in 0..100 {
            // pairs at varied similarity
            let a = perturb_embedding(&base, 0.02 * (i % 10) as f64, &mut rng).unwrap();
            let b = perturb_embedding(&base, 0.02 * (i % 7) as f64, &mut rng).unwrap();
            before.push(a.cosine(&b).unwrap());
            after.push(p.project(&a).unwrap().cosine(&p.project(&b).unwrap()).unwrap());
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mb, ma) = (mean(&before), mean(&after));
        let cov: f64 = before.iter().zip(&after).map(|(x, y)| (x - mb) * (y - ma)).sum();
        assert!(cov > 0.0);
    }

    #[test]
    fn generated_world_is_consistent() {
        let cfg = WorldConfig::default();
        let w = SyntheticWorld::generate(&cfg, 42).unwrap();
        assert_eq!(w.graph.len(), 300);
        assert_eq!(w.tasks.len(), 8);
        for t in &w.tasks {
            assert_eq!(t.len(), 4);
        }
        // a clean message of task 2 aligns strongly with task 2, weakly with others
        let s = w.centroid(2).clone();
        assert!(task_alignment(&s, &w.tasks[2]).unwrap() > 0.9);
        assert!(task_alignment(&s, &w.tasks[3]).unwrap() < 0.4);

        let again = SyntheticWorld::generate(&cfg, 42).unwrap();
        assert_eq!(again.graph, w.graph);
    }

    #[test]
    fn world_round_trips_through_text() {
        let cfg = WorldConfig { concepts: 40, tasks: 4, ..WorldConfig::default() };
        let w = SyntheticWorld::generate(&cfg, 5).unwrap();
        let (g, recs) = KnowledgeGraph::parse(&w.graph.to_text(&w.task_records)).unwrap();
        let loaded = SyntheticWorld::from_parts(g, recs, &cfg).unwrap();
        assert_eq!(loaded.task_records, w.task_records);
        assert_eq!(loaded.graph.edges(), w.graph.edges());
    }

    #[test]
    fn drift_fraction_count() {
        let cfg = WorldConfig { concepts: 200, ..WorldConfig::default() };
        let w = SyntheticWorld::generate(&cfg, 8).unwrap();
        let d = w.graph.drift_concepts(0.1, 0.05, 3).unwrap();
        let changed = w.graph.nodes().iter().zip(d.nodes()).filter(|(a, b)| a.embedding != b.embedding).count();
        assert_eq!(changed, 20);
        assert_eq!(w.graph.drift_concepts(0.0, 0.05, 3).unwrap(), w.graph);
        assert_eq!(w.graph.drift_concepts(1.0, 0.0, 3).unwrap(), w.graph);
        assert_eq!(d.edges(), w.graph.edges());
    }
}
