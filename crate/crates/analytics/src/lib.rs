//! Geodesic and anomaly analytics over stored telemetry tracks.
//!
//! Pure functions over record slices: great-circle distance, corridor
//! (cross-track) geometry, route-deviation, weight-change and link-gap
//! detection, and the aggregate track report consumed by the CLI.

mod events;
mod geo;
mod report;

pub use events::{
    link_gap_events, route_deviation_events, weight_change_events, AnomalyEvent, AnomalyKind,
    DepotZone, PlanError, RoutePlan,
};
pub use geo::{cross_track_distance_m, haversine_m, LatLon, EARTH_RADIUS_M};
pub use report::{report, track_distance_km, ReportConfig, TrackReport};

/// Default allowed lateral distance from the planned route polyline.
pub const DEFAULT_CORRIDOR_M: f64 = 250.0;
/// Default weight change treated as an anomaly.
pub const DEFAULT_WEIGHT_THRESHOLD_TONS: f64 = 0.5;
/// Default multiple of the reporting period that counts as a link gap.
pub const DEFAULT_GAP_FACTOR: f64 = 3.0;
