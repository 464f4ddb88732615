use crate::error::{Error, Result};

/// Unit-norm embedding of a message's meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticVector {
    values: Vec<f64>,
}

impl SemanticVector {
    /// Normalizes `values` to unit Euclidean norm.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::config("semantic vector must have positive dimension"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("semantic vector has non-finite components"));
        }
        let norm = l2_norm(&values);
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        let values = values.into_iter().map(|v| v / norm).collect();
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }

    pub fn cosine(&self, other: &SemanticVector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        // Both sides are unit-norm by construction.
        Ok(dot(&self.values, &other.values).clamp(-1.0, 1.0))
    }

    /// Cosine similarity clamped to `[0, 1]`.
    pub fn affinity(&self, other: &SemanticVector) -> Result<f64> {
        Ok(self.cosine(other)?.max(0.0))
    }
}

/// `a·b / (|a||b|)` on raw vectors.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    let na = l2_norm(a);
    let nb = l2_norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
