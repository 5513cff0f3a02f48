//! Multi-hop delivery of cached content in a cell served by a ground base
//! station, cache-enabled UAVs and device-to-device relays.
//!
//! A [`Scenario`] is one random drop. [`RouteSet`] enumerates candidate
//! routes per requesting UE, [`schedule`] turns an [`Assignment`] into
//! completion times under a [`PowerPolicy`], and [`algorithms`] selects
//! routes.

pub mod algorithms;
pub mod channel;
pub mod config;
pub mod content;
pub mod error;
pub mod experiment;
pub mod kmeans;
pub mod routing;
pub mod scenario;
pub mod schedule;
pub mod seed;

pub use algorithms::{Algorithm, Selection};
pub use channel::{link_rate, GainTable, NoiseModel};
pub use config::SimConfig;
pub use content::{CacheState, Catalog, ContentId, RequestSet};
pub use error::{Error, Result};
pub use routing::{Route, RouteSet};
pub use scenario::{NodeId, NodeKind, NodeSet, Point3, Scenario};
pub use schedule::{evaluate, Assignment, PowerPolicy, Timeline};
