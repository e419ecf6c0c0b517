//! Anomaly detection over time-ordered record slices.
//!
//! All detectors expect records sorted ascending by device timestamp and
//! return non-overlapping, time-ordered events.

use serde::Serialize;
use telemetry_model::StoredRecord;
use thiserror::Error;

use crate::geo::{cross_track_distance_m, haversine_m, LatLon};

/// The planned route polyline and the allowed lateral corridor.
#[derive(Debug, Clone, Serialize)]
pub struct RoutePlan {
    pub waypoints: Vec<LatLon>,
    pub corridor_m: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("route plan needs at least 2 waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("corridor width must be positive, got {0}")]
    NonPositiveCorridor(f64),
}

impl RoutePlan {
    pub fn new(waypoints: Vec<LatLon>, corridor_m: f64) -> Result<Self, PlanError> {
        if waypoints.len() < 2 {
            return Err(PlanError::TooFewWaypoints(waypoints.len()));
        }
        if corridor_m <= 0.0 {
            return Err(PlanError::NonPositiveCorridor(corridor_m));
        }
        Ok(RoutePlan { waypoints, corridor_m })
    }

    /// Minimum cross-track distance from `p` over all route segments.
    pub fn distance_from_route_m(&self, p: LatLon) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| cross_track_distance_m(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// A geographic circle where load changes are legitimate (loading docks),
/// excluded from weight-change detection.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DepotZone {
    pub center: LatLon,
    pub radius_m: f64,
}

impl DepotZone {
    fn contains(&self, p: LatLon) -> bool {
        haversine_m(self.center, p) <= self.radius_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AnomalyKind {
    RouteDeviation,
    WeightChange,
    LinkGap,
}

/// One detected anomaly spanning a run of records.
///
/// The magnitude is kind-specific: meters off corridor (peak), net tons
/// changed (signed), or the gap length in seconds.
#[derive(Debug, Clone, Serialize)]
pub struct AnomalyEvent {
    pub kind: AnomalyKind,
    pub start_ts: i64,
    pub end_ts: i64,
    pub magnitude: f64,
    pub record_seqs: Vec<u64>,
}

/// Maximal runs of consecutive valid-fix records farther than the
/// corridor from every route segment. Magnitude is the largest
/// off-corridor distance in the run.
pub fn route_deviation_events(
    records: &[StoredRecord],
    plan: &RoutePlan,
) -> Result<Vec<AnomalyEvent>, PlanError> {
    if plan.waypoints.len() < 2 {
        return Err(PlanError::TooFewWaypoints(plan.waypoints.len()));
    }
    let valid: Vec<&StoredRecord> = records
        .iter()
        .filter(|r| r.record.fix.fix_valid)
        .collect();

    let mut events = Vec::new();
    let mut run: Option<(usize, usize, f64)> = None; // start, end, peak distance
    for (i, stored) in valid.iter().enumerate() {
        let d = plan.distance_from_route_m(LatLon::from(&stored.record.fix));
        if d > plan.corridor_m {
            run = match run {
                Some((s, _, peak)) => Some((s, i, peak.max(d))),
                None => Some((i, i, d)),
            };
        } else if let Some((s, e, peak)) = run.take() {
            events.push(deviation_event(&valid[s..=e], peak));
        }
    }
    if let Some((s, e, peak)) = run {
        events.push(deviation_event(&valid[s..=e], peak));
    }
    Ok(events)
}

fn deviation_event(span: &[&StoredRecord], peak: f64) -> AnomalyEvent {
    AnomalyEvent {
        kind: AnomalyKind::RouteDeviation,
        start_ts: span[0].record.device_timestamp,
        end_ts: span[span.len() - 1].record.device_timestamp,
        magnitude: peak,
        record_seqs: span.iter().map(|r| r.seq).collect(),
    }
}

/// Weight-change detection.
///
/// A consecutive pair triggers when its weight delta exceeds the
/// threshold and both endpoints are outside every depot zone. The event
/// then extends over following pairs that keep moving the same direction
/// (triggers or smaller drifts) and closes when the weight stabilizes,
/// reverses, or enters a depot zone. Magnitude is the net change over
/// the merged span, so a trigger followed by a trailing drift reports
/// the full load difference.
pub fn weight_change_events(
    records: &[StoredRecord],
    threshold_tons: f64,
    depot_zones: &[DepotZone],
) -> Vec<AnomalyEvent> {
    let outside = |r: &StoredRecord| -> bool {
        let p = LatLon::from(&r.record.fix);
        depot_zones.iter().all(|z| !z.contains(p))
    };

    let mut events = Vec::new();
    let mut open: Option<(usize, usize, f64)> = None; // start, end, direction
    let close = |events: &mut Vec<AnomalyEvent>, records: &[StoredRecord], s: usize, e: usize| {
        let span = &records[s..=e];
        events.push(AnomalyEvent {
            kind: AnomalyKind::WeightChange,
            start_ts: span[0].record.device_timestamp,
            end_ts: span[span.len() - 1].record.device_timestamp,
            magnitude: span[span.len() - 1].record.weight_tons - span[0].record.weight_tons,
            record_seqs: span.iter().map(|r| r.seq).collect(),
        });
    };

    for i in 0..records.len().saturating_sub(1) {
        let delta = records[i + 1].record.weight_tons - records[i].record.weight_tons;
        let pair_outside = outside(&records[i]) && outside(&records[i + 1]);
        let triggers = pair_outside && delta.abs() > threshold_tons;
        match open {
            Some((s, e, dir)) => {
                let same_direction = delta != 0.0 && delta.signum() == dir;
                if pair_outside && same_direction {
                    open = Some((s, i + 1, dir));
                } else {
                    close(&mut events, records, s, e);
                    open = triggers.then(|| (i, i + 1, delta.signum()));
                }
            }
            None => {
                if triggers {
                    open = Some((i, i + 1, delta.signum()));
                }
            }
        }
    }
    if let Some((s, e, _)) = open {
        close(&mut events, records, s, e);
    }
    events
}

/// One event per consecutive pair whose timestamp difference exceeds
/// `factor` times the expected reporting period.
pub fn link_gap_events(
    records: &[StoredRecord],
    expected_t_s: f64,
    factor: f64,
) -> Vec<AnomalyEvent> {
    records
        .windows(2)
        .filter_map(|pair| {
            let gap = (pair[1].record.device_timestamp - pair[0].record.device_timestamp) as f64;
            (gap > factor * expected_t_s).then(|| AnomalyEvent {
                kind: AnomalyKind::LinkGap,
                start_ts: pair[0].record.device_timestamp,
                end_ts: pair[1].record.device_timestamp,
                magnitude: gap,
                record_seqs: vec![pair[0].seq, pair[1].seq],
            })
        })
        .collect()
}
