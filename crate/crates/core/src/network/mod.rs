//! Multi-hop metering topology and the per-node computation/communication
//! latency and energy model.

pub mod cost;
pub mod radio;
pub mod topology;

pub use cost::{leaf_cost, relay_cost, system_latency, LatencyBreakdown, NodeCost};
pub use radio::{achievable_rate, dbm_to_watts};
pub use topology::{sample_channel_gains, ChannelEnv, NetworkSpec, NodeParams, Route, RouteTopology};
