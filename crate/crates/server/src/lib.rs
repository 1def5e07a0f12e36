//! Session server for the rewriting engine: many concurrent sessions, one
//! shared answer memory, JSON events over NDJSON or WebSocket.

pub mod hub;
pub mod transport;
pub mod wire;

pub use hub::{Hub, HubError, RunState, Session};
pub use transport::{port_from_env, serve, spawn, DEFAULT_PORT, PORT_ENV};
pub use wire::{BreakpointSpec, ConfigPatch, Event, Op, Request, WireMessage, WireQuestion};
