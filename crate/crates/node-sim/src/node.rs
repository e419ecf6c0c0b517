//! The station firmware loop as an explicit state machine.
//!
//! One `step` executes exactly one phase's work at the current simulation
//! time. Reads happen on a fixed grid anchored at departure + period, so
//! device timestamps stay exactly one period apart regardless of how long
//! posting takes. A POST leaves the node in `PostAndAwait` until the
//! driver delivers the HTTP status through [`Node::handle_response`];
//! failures keep the record buffered and retry on the next grid slot.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use telemetry_model::{encode_payload, GeoFix, TelemetryRecord};

use crate::config::{ConfigError, NodeConfig};
use crate::env::TruckEnvironment;
use crate::sensors::{read_gps, read_weight};

/// Firmware loop phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Boot,
    ConfigGsm,
    ConfigGps,
    ReadSensors,
    FormatPacket,
    ConnectGsm,
    GprsOn,
    PostAndAwait,
    SleepUntilNext,
    RetryWait,
}

/// An HTTP POST the node wants on the wire.
#[derive(Debug, Clone, PartialEq)]
pub struct OutboundPost {
    pub device_id: String,
    pub auth_token: String,
    pub payload: Vec<u8>,
}

/// Counters the run summary is built from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeMetrics {
    /// Records produced by sensor reads.
    pub generated: u64,
    /// Records acknowledged with a 200.
    pub delivered: u64,
    /// Delivered records that survived at least one failed or deferred
    /// delivery attempt.
    pub buffered_then_delivered: u64,
    /// Records discarded because the buffer overflowed.
    pub dropped_overflow: u64,
    /// Report cycles skipped because no fix was ever obtained.
    pub skipped_no_fix: u64,
    /// Non-200 or timed-out responses observed.
    pub failed_posts: u64,
}

#[derive(Debug, Clone)]
struct BufferedRecord {
    record: TelemetryRecord,
    /// True once delivery of this record was deferred or failed at least once.
    retried: bool,
}

/// A simulated sensor station.
#[derive(Debug, Clone)]
pub struct Node {
    config: NodeConfig,
    phase: Phase,
    buffer: VecDeque<BufferedRecord>,
    last_fix: Option<GeoFix>,
    /// When the node next wants a step; meaningless while awaiting a response.
    next_action_time: f64,
    awaiting_response: bool,
    /// Next slot on the sensor-read grid.
    cycle_anchor: f64,
    /// Encoded packet for the oldest buffered record.
    formatted: Option<Vec<u8>>,
    metrics: NodeMetrics,
    rng_gps: ChaCha12Rng,
    rng_sensor: ChaCha12Rng,
}

// Distinct stream tags so the GPS and weight sensors draw from
// independent sequences even with equal seeds.
const GPS_STREAM: u64 = 0x6770_735f;
const SENSOR_STREAM: u64 = 0x7765_6967;

impl Node {
    /// Boot a station at simulation time `start_time` (its departure).
    /// The first sensor read happens one reporting period later.
    pub fn new(config: NodeConfig, start_time: f64) -> Result<Self, ConfigError> {
        config.validate()?;
        let period = config.period_s();
        let rng_gps = ChaCha12Rng::seed_from_u64(config.rng_seed ^ GPS_STREAM);
        let rng_sensor = ChaCha12Rng::seed_from_u64(config.rng_seed ^ SENSOR_STREAM);
        Ok(Node {
            config,
            phase: Phase::Boot,
            buffer: VecDeque::new(),
            last_fix: None,
            next_action_time: start_time,
            awaiting_response: false,
            cycle_anchor: start_time + period,
            formatted: None,
            metrics: NodeMetrics::default(),
            rng_gps,
            rng_sensor,
        })
    }

    pub fn device_id(&self) -> &str {
        &self.config.device_id
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    pub fn metrics(&self) -> NodeMetrics {
        self.metrics
    }

    /// When the node next wants to run, or `None` while it is blocked on
    /// an HTTP response.
    pub fn next_action_time(&self) -> Option<f64> {
        (!self.awaiting_response).then_some(self.next_action_time)
    }

    /// True when the node can do work at time `now`.
    pub fn ready(&self, now: f64) -> bool {
        !self.awaiting_response && now >= self.next_action_time
    }

    /// Execute the current phase's work at time `now`. Emits the outbound
    /// POST when the phase is `PostAndAwait`; every other phase returns
    /// `None` and only advances the machine.
    pub fn step(&mut self, env: &TruckEnvironment, now: f64) -> Option<OutboundPost> {
        debug_assert!(self.ready(now), "stepped early or while awaiting");
        match self.phase {
            Phase::Boot => self.advance(Phase::ConfigGsm, now),
            Phase::ConfigGsm => self.advance(Phase::ConfigGps, now),
            Phase::ConfigGps => self.advance(Phase::ReadSensors, self.cycle_anchor),
            Phase::SleepUntilNext | Phase::RetryWait => self.advance(Phase::ReadSensors, now),
            Phase::ReadSensors => self.read_sensors(env, now),
            Phase::FormatPacket => self.format_packet(now),
            Phase::ConnectGsm => self.connect_gsm(env, now),
            Phase::GprsOn => self.advance(Phase::PostAndAwait, now),
            Phase::PostAndAwait => {
                self.awaiting_response = true;
                return Some(OutboundPost {
                    device_id: self.config.device_id.clone(),
                    auth_token: self.config.auth_token.clone(),
                    payload: self.formatted.clone().expect("packet formatted before post"),
                });
            }
        }
        None
    }

    /// Deliver the HTTP status for the in-flight POST (0 for a timeout).
    ///
    /// A 200 removes the posted record; any backlog is drained
    /// immediately, otherwise the node sleeps until the next grid slot.
    /// Anything else keeps the record and retries one period later.
    pub fn handle_response(&mut self, status: u16, now: f64) {
        debug_assert!(
            self.awaiting_response && self.phase == Phase::PostAndAwait,
            "response without an in-flight POST"
        );
        self.awaiting_response = false;
        self.formatted = None;
        if status == 200 {
            if let Some(done) = self.buffer.pop_front() {
                self.metrics.delivered += 1;
                if done.retried {
                    self.metrics.buffered_then_delivered += 1;
                }
            }
            if self.buffer.is_empty() {
                self.advance(Phase::SleepUntilNext, self.cycle_anchor.max(now));
            } else {
                self.advance(Phase::FormatPacket, now);
            }
        } else {
            self.metrics.failed_posts += 1;
            self.mark_buffer_retried();
            self.advance(Phase::RetryWait, self.cycle_anchor.max(now));
        }
    }

    fn advance(&mut self, phase: Phase, at: f64) {
        self.phase = phase;
        self.next_action_time = at;
    }

    fn mark_buffer_retried(&mut self) {
        for buffered in &mut self.buffer {
            buffered.retried = true;
        }
    }

    fn read_sensors(&mut self, env: &TruckEnvironment, now: f64) {
        while self.cycle_anchor <= now {
            self.cycle_anchor += self.config.period_s();
        }
        let coverage = env.coverage_at(now);
        let fix = read_gps(
            env.position_at(now),
            coverage.gps,
            self.last_fix.as_ref(),
            env.unix_at(now),
            self.config.gps_cep_m,
            &mut self.rng_gps,
        );
        let Some(fix) = fix else {
            // never had a fix: skip this cycle, but still push any backlog
            self.metrics.skipped_no_fix += 1;
            if self.buffer.is_empty() {
                self.advance(Phase::SleepUntilNext, self.cycle_anchor);
            } else {
                self.advance(Phase::FormatPacket, now);
            }
            return;
        };
        if fix.fix_valid {
            self.last_fix = Some(fix.clone());
        }
        let weight = read_weight(env.true_load_at(now), &self.config, &mut self.rng_sensor);
        let record = TelemetryRecord::new(
            self.config.device_id.clone(),
            self.config.license_plate.clone(),
            self.config.axle_location,
            fix.latitude,
            fix.longitude,
            fix.fix_valid,
            weight.weight_tons,
            env.unix_at(now),
        );
        if self.buffer.len() >= self.config.buffer_capacity {
            // no POST is in flight during a read, so the head is droppable
            self.buffer.pop_front();
            self.metrics.dropped_overflow += 1;
        }
        self.buffer.push_back(BufferedRecord { record, retried: false });
        self.metrics.generated += 1;
        self.advance(Phase::FormatPacket, now);
    }

    fn format_packet(&mut self, now: f64) {
        match self.buffer.front() {
            Some(oldest) => {
                let payload =
                    encode_payload(&oldest.record).expect("node-built records are valid");
                self.formatted = Some(payload);
                self.advance(Phase::ConnectGsm, now);
            }
            None => self.advance(Phase::SleepUntilNext, self.cycle_anchor),
        }
    }

    fn connect_gsm(&mut self, env: &TruckEnvironment, now: f64) {
        if env.coverage_at(now).gsm {
            self.advance(Phase::GprsOn, now);
        } else {
            self.mark_buffer_retried();
            self.advance(Phase::RetryWait, self.cycle_anchor.max(now));
        }
    }
}
