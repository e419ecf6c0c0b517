//! Shared domain model for the truck telemetry pipeline.
//!
//! Everything that crosses a boundary lives here: the telemetry record a
//! node reports, the JSON wire payload it is encoded into, the stored form
//! the service persists, and the CSV row the export produces. Node
//! simulator, ingest service and store all speak these types, so the wire
//! and file formats are defined exactly once.

mod csv;
mod error;
mod record;
mod wire;

pub use csv::{to_csv_row, CSV_HEADER};
pub use error::PayloadError;
pub use record::{
    quantize_coord, quantize_weight, AuthToken, GeoFix, StoredRecord, TelemetryRecord,
    WeightSample, MAX_WEIGHT_TONS,
};
pub use wire::{decode_payload, encode_payload};
