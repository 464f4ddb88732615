//! Knowledge-plane semantic network management.
//!
//! The crate is split along the control loop:
//!
//! - [`semantics`]: semantic vectors, the concept knowledge graph and relevance reasoning.
//! - [`routing`]: candidate path generation, distortion prediction and path selection.
//! - [`distortion`]: observed distortion, relevance-aware tolerance and corrective actions.
//! - [`netsim`]: a deterministic discrete-event simulator of a multi-hop wireless network.
//! - [`kplane`]: the controller tying the three reasoning stages to the simulator.

pub mod distortion;
pub mod error;
pub mod kplane;
pub mod netsim;
pub mod routing;
pub mod semantics;

pub use error::{Error, ErrorCategory, Result};
