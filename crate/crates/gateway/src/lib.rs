//! Connects devices and worker consoles to the session engine.
//!
//! [`hub::Hub`] is the transport-free routing core. [`server`] drives it from
//! WebSocket and line-delimited TCP connections in real time, and [`sim`]
//! drives it from a scripted device and a synthetic worker on a virtual clock.
//! The JSON message format lives in [`protocol`] and is described in
//! `protocol.md` at the crate root.

pub mod hub;
pub mod protocol;
pub mod server;
pub mod sim;

pub use hub::{ConnId, Hub, HubConfig, Output, Role, SuggestCall};
pub use protocol::{MessageType, WireMessage};
pub use server::{serve, system_clock, ServerConfig, ServerHandle};
pub use sim::{bundled_components, simulate, SimComponents, SimConfig, SimReport, WorkerModel};
