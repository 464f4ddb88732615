use rand::Rng;

use super::config::TransitModel;
use crate::error::Result;
use crate::routing::predict_distortion;
use crate::semantics::{perturb_embedding, SemanticVector};

/// Per-component noise deviation for a delivery with encoder distortion `d_enc` over links
/// with realized distortions `links`.
///
/// `Matched` picks the deviation whose expected cosine distance equals the combined
/// distortion `1 - (1 - d_enc) * prod(1 - d_link)`: orthogonal noise of squared norm
/// `(dim - 1) * sigma^2` leaves a cosine of `1 / sqrt(1 + (dim - 1) * sigma^2)`.
pub fn transit_sigma(model: TransitModel, gain: f64, dim: usize, d_enc: f64, links: &[f64]) -> f64 {
    match model {
        TransitModel::Matched => {
            let d = predict_distortion(d_enc, links).clamp(0.0, 0.999);
            if d == 0.0 || dim < 2 {
                return 0.0;
            }
            ((1.0 / (1.0 - d).powi(2) - 1.0) / (dim - 1) as f64).sqrt()
        }
        TransitModel::Budget => gain * (d_enc + links.iter().sum::<f64>()).max(0.0).sqrt(),
    }
}

/// Delivered vector `normalize(s + eps)`.
pub fn perturb_in_transit<R: Rng + ?Sized>(
    s: &SemanticVector,
    model: TransitModel,
    gain: f64,
    d_enc: f64,
    links: &[f64],
    rng: &mut R,
) -> Result<SemanticVector> {
    perturb_embedding(s, transit_sigma(model, gain, s.dim(), d_enc, links), rng)
}
