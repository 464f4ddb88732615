//! Seeded discrete-event network simulator.
//!
//! Nodes are deployed at random, move by random waypoint and talk over SINR-driven links
//! with fluid FIFO queues. Semantic messages arrive as a Poisson process and travel hop by
//! hop along the path chosen by a [`ControlPlane`]; ON/OFF background sources load the
//! links in between. Every random draw comes from one of a few independent seeded streams,
//! so a `(config, seed)` pair fixes the whole run.

mod channel;
mod config;
mod control;
mod deploy;
mod event;
mod sim;
mod streams;
mod transit;

pub use channel::{
    capacity, interference_mw, link_radio, loss_rate, path_loss_db, radio_from, received_dbm, sinr_norm, LinkRadio,
    Shadowing,
};
pub use config::{
    BackgroundConfig, ChannelConfig, MobilityConfig, PerturbationConfig, Phase, ScenarioConfig, TelemetryConfig,
    TopologyConfig, TrafficConfig, TransitConfig, TransitModel,
};
pub use control::{BackgroundRequest, ControlPlane, Feedback, MessageContext, RouteDecision, Telemetry};
pub use deploy::{build_topology, generate_topology, link_range, node_kinds, Mobility};
pub use event::{Event, EventKind, EventQueue};
pub use sim::{simulate, CapacityStats, EventRecord, IntervalRecord, MessageRecord, Outcome, SimOutput};
pub use streams::{keyed_rng, stream_rng, Stream};
pub use transit::{perturb_in_transit, transit_sigma};

use rand::Rng;

use crate::error::Result;
use crate::semantics::{RandomProjection, SyntheticWorld};

/// The semantic world of a run, already reduced to the configured embedding dimension.
pub fn build_world(cfg: &ScenarioConfig, seed: u64) -> Result<SyntheticWorld> {
    let mut rng = stream_rng(seed, Stream::Semantics);
    let world_seed: u64 = rng.random();
    let projection_seed: u64 = rng.random();
    let world = SyntheticWorld::generate(&cfg.world, world_seed)?;
    let dim = cfg.perturbation.dimension;
    if dim == world.dim() {
        return Ok(world);
    }
    world.project(&RandomProjection::new(world.dim(), dim, projection_seed)?)
}
