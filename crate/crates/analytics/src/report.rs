use serde::Serialize;
use telemetry_model::StoredRecord;

use crate::events::{
    link_gap_events, route_deviation_events, weight_change_events, AnomalyEvent, DepotZone,
    PlanError, RoutePlan,
};
use crate::geo::{haversine_m, LatLon};
use crate::{DEFAULT_GAP_FACTOR, DEFAULT_WEIGHT_THRESHOLD_TONS};

/// Thresholds and optional route plan for a track report.
#[derive(Debug, Clone)]
pub struct ReportConfig {
    /// Planned route; deviation detection is skipped when absent.
    pub plan: Option<RoutePlan>,
    pub weight_threshold_tons: f64,
    pub depot_zones: Vec<DepotZone>,
    /// Expected reporting period in seconds, for gap detection.
    pub expected_period_s: f64,
    pub gap_factor: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            plan: None,
            weight_threshold_tons: DEFAULT_WEIGHT_THRESHOLD_TONS,
            depot_zones: Vec::new(),
            expected_period_s: 300.0,
            gap_factor: DEFAULT_GAP_FACTOR,
        }
    }
}

/// Aggregate summary of one device's track over a query range.
#[derive(Debug, Clone, Serialize)]
pub struct TrackReport {
    pub device_id: String,
    pub record_count: usize,
    pub distance_km: f64,
    pub first_timestamp: Option<i64>,
    pub last_timestamp: Option<i64>,
    pub deviation_events: Vec<AnomalyEvent>,
    pub weight_events: Vec<AnomalyEvent>,
    pub link_gaps: Vec<AnomalyEvent>,
}

/// Sum of consecutive great-circle distances over valid-fix records, in
/// kilometers. Records must be sorted ascending by device timestamp.
pub fn track_distance_km(records: &[StoredRecord]) -> f64 {
    let positions: Vec<LatLon> = records
        .iter()
        .filter(|r| r.record.fix.fix_valid)
        .map(|r| LatLon::from(&r.record.fix))
        .collect();
    positions
        .windows(2)
        .map(|w| haversine_m(w[0], w[1]))
        .sum::<f64>()
        / 1000.0
}

/// Build the full report for one device's records.
///
/// Records are re-sorted ascending by device timestamp, so any query
/// order is accepted.
pub fn report(
    device_id: &str,
    records: &[StoredRecord],
    config: &ReportConfig,
) -> Result<TrackReport, PlanError> {
    let mut sorted: Vec<StoredRecord> = records.to_vec();
    sorted.sort_by_key(|r| r.record.device_timestamp);

    let deviation_events = match &config.plan {
        Some(plan) => route_deviation_events(&sorted, plan)?,
        None => Vec::new(),
    };
    let weight_events =
        weight_change_events(&sorted, config.weight_threshold_tons, &config.depot_zones);
    let link_gaps = link_gap_events(&sorted, config.expected_period_s, config.gap_factor);

    Ok(TrackReport {
        device_id: device_id.to_string(),
        record_count: sorted.len(),
        distance_km: track_distance_km(&sorted),
        first_timestamp: sorted.first().map(|r| r.record.device_timestamp),
        last_timestamp: sorted.last().map(|r| r.record.device_timestamp),
        deviation_events,
        weight_events,
        link_gaps,
    })
}
