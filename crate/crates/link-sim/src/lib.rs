//! GSM/GPRS cellular path model between node and ingest service.
//!
//! Two concerns: where the radio works (coverage gaps indexed by distance
//! along the route) and what a POST costs (registration + transmission at
//! the GPRS line rate + round trip, with a per-POST loss probability).

use rand::Rng;
use serde::Deserialize;
use thiserror::Error;

/// Peak GPRS line rate in bits per second.
pub const DEFAULT_BANDWIDTH_BPS: u64 = 85_600;
/// Extra wait before a lost POST surfaces as a timeout, on top of the RTT.
pub const LOSS_TIMEOUT_EXTRA_S: f64 = 10.0;

/// Cellular link parameters.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkParams {
    /// GPRS uplink rate in bits per second.
    pub bandwidth_bps: u64,
    /// GSM network attach time in seconds.
    pub register_delay_s: f64,
    /// Request/response round trip excluding transmission, in seconds.
    pub rtt_s: f64,
    /// Per-POST loss probability while in coverage.
    pub loss_prob: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            bandwidth_bps: DEFAULT_BANDWIDTH_BPS,
            register_delay_s: 4.0,
            rtt_s: 1.5,
            loss_prob: 0.01,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("bandwidth_bps must be positive")]
    ZeroBandwidth,
    #[error("loss_prob must be in [0, 1], got {0}")]
    LossProbOutOfRange(f64),
    #[error("coverage gap [{start_m}, {end_m}) is not a valid interval")]
    BadGapInterval { start_m: f64, end_m: f64 },
    #[error("gap [{start_m}, {end_m}) extends past the route end at {route_len_m} m")]
    GapPastRouteEnd {
        start_m: f64,
        end_m: f64,
        route_len_m: f64,
    },
    #[error("position {0} m is outside the route [0, {1}] m")]
    PositionOffRoute(f64, f64),
}

impl LinkParams {
    pub fn validate(&self) -> Result<(), LinkError> {
        if self.bandwidth_bps == 0 {
            return Err(LinkError::ZeroBandwidth);
        }
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err(LinkError::LossProbOutOfRange(self.loss_prob));
        }
        Ok(())
    }

    /// Time on air for a payload of `payload_bytes` at the line rate.
    pub fn transmission_delay_s(&self, payload_bytes: usize) -> f64 {
        (payload_bytes as f64) * 8.0 / (self.bandwidth_bps as f64)
    }

    /// Full successful round trip: attach, transmit, response.
    pub fn round_trip_delay_s(&self, payload_bytes: usize) -> f64 {
        self.register_delay_s + self.transmission_delay_s(payload_bytes) + self.rtt_s
    }

    /// How long the node waits before declaring a lost POST timed out.
    pub fn loss_timeout_s(&self) -> f64 {
        self.rtt_s + LOSS_TIMEOUT_EXTRA_S
    }
}

/// Radio availability at one position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coverage {
    pub gsm: bool,
    pub gps: bool,
}

impl Coverage {
    pub const FULL: Coverage = Coverage { gsm: true, gps: true };
}

/// Dead zones along a route, as half-open `[start_m, end_m)` intervals of
/// distance from the route origin.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverageMap {
    pub gsm_gaps: Vec<(f64, f64)>,
    pub gps_gaps: Vec<(f64, f64)>,
}

impl CoverageMap {
    pub fn validate(&self, route_len_m: f64) -> Result<(), LinkError> {
        for &(start_m, end_m) in self.gsm_gaps.iter().chain(&self.gps_gaps) {
            if !(start_m < end_m) || start_m < 0.0 {
                return Err(LinkError::BadGapInterval { start_m, end_m });
            }
            if end_m > route_len_m {
                return Err(LinkError::GapPastRouteEnd { start_m, end_m, route_len_m });
            }
        }
        Ok(())
    }

    /// Radio availability at `route_position_m` along a route of length
    /// `route_len_m`.
    pub fn coverage_at(
        &self,
        route_position_m: f64,
        route_len_m: f64,
    ) -> Result<Coverage, LinkError> {
        if !(0.0..=route_len_m).contains(&route_position_m) {
            return Err(LinkError::PositionOffRoute(route_position_m, route_len_m));
        }
        let in_gap = |gaps: &[(f64, f64)]| {
            gaps.iter().any(|&(s, e)| route_position_m >= s && route_position_m < e)
        };
        Ok(Coverage {
            gsm: !in_gap(&self.gsm_gaps),
            gps: !in_gap(&self.gps_gaps),
        })
    }
}

/// Outcome of pushing one POST through the link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransmitOutcome {
    /// Request and response made it; the round trip took `delay_s`.
    Delivered { delay_s: f64 },
    /// The request never reached the platform; the node sees a timeout.
    Lost,
}

/// Send a payload of `payload_bytes` over the link. Requires GSM coverage
/// at the send position (the node checks before connecting).
pub fn transmit<R: Rng + ?Sized>(
    payload_bytes: usize,
    params: &LinkParams,
    rng: &mut R,
) -> TransmitOutcome {
    if params.loss_prob > 0.0 && rng.random_bool(params.loss_prob) {
        TransmitOutcome::Lost
    } else {
        TransmitOutcome::Delivered {
            delay_s: params.round_trip_delay_s(payload_bytes),
        }
    }
}
