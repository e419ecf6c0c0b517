//! The platform side of the telemetry link: a token-authenticated HTTP
//! ingest endpoint backed by the append-only store, plus the read API
//! (paginated query and CSV export).
//!
//! All request handling lives in [`ServiceCore`], which is transport
//! independent: the HTTP server wraps it with wall-clock receipt times,
//! and the in-process simulation harness calls it directly with
//! simulated time, so both paths share one semantics.

mod config;
mod core;
mod server;

pub use config::{ConfigError, ServiceConfig, DEFAULT_DISPLAY_OFFSET_S};
pub use core::{PostResponse, ServiceCore};
pub use server::{router, serve, ServeError};
