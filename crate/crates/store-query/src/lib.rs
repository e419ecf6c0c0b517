//! Append-only per-device telemetry persistence with range queries,
//! dashboard-style pagination and CSV export.
//!
//! Each device gets one newline-delimited JSON file under the store root;
//! an in-memory index is rebuilt from those files on startup. Appends are
//! serialized per device, queries are pure reads over the index.

mod query;
mod store;

pub use query::{QueryPage, QueryRequest, DEFAULT_PAGE_SIZE, DEFAULT_WINDOW_S};
pub use store::{AppendOutcome, StoreError, TelemetryStore};
