use std::sync::Arc;

use crate::routing::{LinkSnapshot, Topology};
use crate::semantics::{FidelityLevel, ImportanceClass, NetworkStateVector, SemanticVector};

/// Immutable telemetry export of one tick.
#[derive(Debug, Clone)]
pub struct Telemetry {
    pub time: f64,
    /// Increments whenever the link set changes.
    pub version: u64,
    pub topology: Arc<Topology>,
    pub links: LinkSnapshot,
    pub nodes: Vec<NetworkStateVector>,
}

#[derive(Debug, Clone, Copy)]
pub struct MessageContext<'a> {
    pub id: u64,
    pub flow: u64,
    pub task: usize,
    pub src: usize,
    pub dst: usize,
    /// Bytes.
    pub size: f64,
    pub time: f64,
    /// Embedding as produced by the encoder, possibly noisy.
    pub embedding: &'a SemanticVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteDecision {
    pub path: Vec<usize>,
    pub fidelity: FidelityLevel,
    pub relevance: f64,
    pub class: ImportanceClass,
    pub d_hat: f64,
}

/// Delivery report returned to the controller.
#[derive(Debug, Clone)]
pub struct Feedback {
    pub message: u64,
    pub flow: u64,
    pub time: f64,
    pub relevance: f64,
    pub fidelity: FidelityLevel,
    pub d_hat: f64,
    pub path: Vec<usize>,
    pub original: SemanticVector,
    pub delivered: SemanticVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackgroundRequest {
    pub id: usize,
    pub src: usize,
    pub dst: usize,
}

/// What the simulator needs from a controller.
pub trait ControlPlane {
    /// A fresh telemetry export. Not called while telemetry is withheld.
    fn telemetry(&mut self, snapshot: Arc<Telemetry>);

    /// Start of a control interval.
    fn control_tick(&mut self, now: f64);

    /// Route and encode one message; `None` drops it as unroutable.
    fn decide(&mut self, msg: &MessageContext<'_>) -> Option<RouteDecision>;

    /// Paths for background sources, recomputed every control interval.
    fn route_background(&mut self, now: f64, requests: &[BackgroundRequest]) -> Vec<Option<Vec<usize>>>;

    fn feedback(&mut self, fb: Feedback);

    fn flow_ended(&mut self, flow: u64);

    fn concept_drift(&mut self, _now: f64) {}
}
