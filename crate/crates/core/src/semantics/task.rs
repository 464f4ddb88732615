use super::graph::KnowledgeGraph;
use super::vector::SemanticVector;
use crate::error::{Error, Result};

/// Concepts a destination task needs, as unit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskConceptSet {
    pub task_id: u32,
    concepts: Vec<SemanticVector>,
}

impl TaskConceptSet {
    pub fn new(task_id: u32, concepts: Vec<SemanticVector>) -> Result<Self> {
        if concepts.is_empty() {
            return Err(Error::config(format!("task {task_id} has an empty concept set")));
        }
        if let Some(bad) = concepts.iter().find(|c| c.dim() != concepts[0].dim()) {
            return Err(Error::DimensionMismatch(concepts[0].dim(), bad.dim()));
        }
        Ok(Self { task_id, concepts })
    }

    /// Builds the set from knowledge-graph node embeddings, so a drifted graph
    /// yields a drifted task set.
    pub fn from_graph(task_id: u32, graph: &KnowledgeGraph, nodes: &[usize]) -> Result<Self> {
        let concepts = nodes
            .iter()
            .map(|&i| {
                graph
                    .node(i)
                    .map(|n| n.embedding.clone())
                    .ok_or_else(|| Error::config(format!("task {task_id}: unknown concept index {i}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(task_id, concepts)
    }

    pub fn concepts(&self) -> &[SemanticVector] {
        &self.concepts
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }
}

/// Best-fit alignment: the maximum cosine similarity against any task concept,
/// clamped to `[0, 1]`.
pub fn task_alignment(s: &SemanticVector, tasks: &TaskConceptSet) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for t in &tasks.concepts {
        best = best.max(s.cosine(t)?);
    }
    Ok(best.clamp(0.0, 1.0))
}
