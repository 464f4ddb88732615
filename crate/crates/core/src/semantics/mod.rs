//! Semantic representations and relevance reasoning.
//!
//! A message's meaning is a unit-norm [`SemanticVector`]. Relevance fuses three
//! scores: alignment with the destination task's concepts, consistency with the
//! message's neighbourhood in the [`KnowledgeGraph`], and an urgency derived from
//! the network state. The fused score is standardised against recent traffic to
//! produce an importance class, and mapped to an encoder fidelity level.

mod embedding;
mod graph;
mod relevance;
mod task;
mod vector;

pub use embedding::{perturb_embedding, RandomProjection, SyntheticWorld, WorldConfig};
pub use graph::{ConceptNode, KnowledgeGraph, Relation, TaskRecord};
pub use relevance::{
    assess, classify, fuse_relevance, select_fidelity, urgency, FidelityLevel, FidelityTable,
    ImportanceClass, NetworkStateVector, ReasoningConfig, RelevanceAssessment, RelevanceStats,
    RelevanceWeights, UrgencyWeights,
};
pub use task::{task_alignment, TaskConceptSet};
pub use vector::{cosine_similarity, SemanticVector};
