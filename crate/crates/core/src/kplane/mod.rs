//! Knowledge-plane controller.
//!
//! The [`Controller`] owns the relevance statistics, the latest telemetry and a per-flow
//! correction table. Messages are assessed, routed and encoded against the newest
//! snapshot; delivery feedback is folded in at the next control tick. When telemetry goes
//! stale for longer than the outage threshold the controller falls back to load-based
//! routing at a fixed fidelity and stops learning until fresh telemetry arrives.

mod controller;
mod stabilization;

pub use controller::{
    fallback_mode, ChangeReason, ControlDecision, Controller, ControllerConfig, DecisionSource, FlowCorrection,
};
pub use stabilization::{stabilization_time, MIN_SERIES};
