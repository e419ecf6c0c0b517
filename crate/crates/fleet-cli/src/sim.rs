//! Discrete-event simulation harness: drives every truck's node through
//! its firmware loop, pushes posts through the link model and delivers
//! them to an ingest sink (in-process service or a live HTTP endpoint).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::sync::Arc;

use ingest_service::ServiceCore;
use link_sim::{transmit, TransmitOutcome};
use node_sim::{Node, OutboundPost};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use store_query::TelemetryStore;
use telemetry_model::AuthToken;
use thiserror::Error;

use crate::scenario::{link_seed, CompiledScenario};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("node: {0}")]
    Node(#[from] node_sim::ConfigError),
    #[error("service: {0}")]
    Service(#[from] ingest_service::ConfigError),
    #[error("store: {0}")]
    Store(#[from] store_query::StoreError),
    #[error("cannot reach {url}: {reason}")]
    Connection { url: String, reason: String },
}

/// Where delivered posts end up.
pub trait IngestSink {
    /// Deliver one POST arriving at `receipt_unix`; returns the HTTP
    /// status the node sees.
    fn post(&mut self, post: &OutboundPost, receipt_unix: i64) -> Result<u16, SimError>;
}

/// In-process ingest: the same service core the HTTP server uses, with
/// receipt stamps taken from the simulation clock.
pub struct InProcessSink {
    core: ServiceCore,
}

impl InProcessSink {
    /// Build a sink over a store, authorizing every truck in the scenario.
    pub fn new(store: Arc<TelemetryStore>, compiled: &CompiledScenario) -> Result<Self, SimError> {
        let tokens = compiled.trucks.iter().map(|t| AuthToken {
            token: t.token.clone(),
            device_id: t.config.device_id.clone(),
        });
        Ok(InProcessSink { core: ServiceCore::new(store, tokens)? })
    }
}

impl IngestSink for InProcessSink {
    fn post(&mut self, post: &OutboundPost, receipt_unix: i64) -> Result<u16, SimError> {
        let auth = format!("Bearer {}", post.auth_token);
        Ok(self.core.handle_post(Some(&auth), &post.payload, receipt_unix).status)
    }
}

/// Ingest against a live service over HTTP. Simulation time still governs
/// the event order; only the receipt stamps come from the server's clock.
pub struct HttpSink {
    client: reqwest::blocking::Client,
    endpoint: String,
}

impl HttpSink {
    pub fn new(base_url: &str) -> Self {
        HttpSink {
            client: reqwest::blocking::Client::new(),
            endpoint: format!("{}/v1/telemetry", base_url.trim_end_matches('/')),
        }
    }
}

impl IngestSink for HttpSink {
    fn post(&mut self, post: &OutboundPost, _receipt_unix: i64) -> Result<u16, SimError> {
        let resp = self
            .client
            .post(&self.endpoint)
            .header("Authorization", format!("Bearer {}", post.auth_token))
            .header("Content-Type", "application/json")
            .body(post.payload.clone())
            .send()
            .map_err(|e| SimError::Connection {
                url: self.endpoint.clone(),
                reason: e.to_string(),
            })?;
        Ok(resp.status().as_u16())
    }
}

/// Aggregate accounting over all trucks. `generated` always equals
/// `delivered + still_buffered + dropped`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub generated: u64,
    pub delivered: u64,
    /// Delivered records that waited out at least one failed or deferred
    /// attempt.
    pub buffered_then_delivered: u64,
    pub dropped: u64,
    pub still_buffered: u64,
    pub skipped_no_fix: u64,
    pub failed_posts: u64,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records generated:        {}", self.generated)?;
        writeln!(f, "records delivered:        {}", self.delivered)?;
        writeln!(f, "buffered then delivered:  {}", self.buffered_then_delivered)?;
        writeln!(f, "dropped (buffer full):    {}", self.dropped)?;
        writeln!(f, "still buffered at end:    {}", self.still_buffered)?;
        writeln!(f, "cycles skipped (no fix):  {}", self.skipped_no_fix)?;
        write!(f, "failed post attempts:     {}", self.failed_posts)
    }
}

enum EventKind {
    Wake(usize),
    Response {
        node: usize,
        post: Option<OutboundPost>,
    },
}

struct Event {
    time: f64,
    id: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.id == other.id
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // min-heap through Reverse: earlier time first, then insertion order
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .partial_cmp(&other.time)
            .expect("event times are finite")
            .then(self.id.cmp(&other.id))
    }
}

/// Run a compiled scenario against a sink.
pub fn run(compiled: &CompiledScenario, sink: &mut dyn IngestSink) -> Result<RunSummary, SimError> {
    let scenario = &compiled.scenario;
    let duration = scenario.duration_s;
    let params = &scenario.link;

    let mut nodes: Vec<Node> = Vec::new();
    let mut link_rngs: Vec<ChaCha12Rng> = Vec::new();
    for (i, truck) in compiled.trucks.iter().enumerate() {
        nodes.push(Node::new(truck.config.clone(), truck.env.departure_s)?);
        link_rngs.push(ChaCha12Rng::seed_from_u64(link_seed(scenario.seed, i as u64)));
    }

    let mut heap: BinaryHeap<std::cmp::Reverse<Event>> = BinaryHeap::new();
    let mut next_event_id = 0u64;
    let mut push = |heap: &mut BinaryHeap<std::cmp::Reverse<Event>>, time: f64, kind: EventKind| {
        heap.push(std::cmp::Reverse(Event { time, id: next_event_id, kind }));
        next_event_id += 1;
    };

    for (i, node) in nodes.iter().enumerate() {
        let at = node.next_action_time().expect("fresh node is not awaiting");
        push(&mut heap, at, EventKind::Wake(i));
    }

    while let Some(std::cmp::Reverse(event)) = heap.pop() {
        let now = event.time;
        let idx = match event.kind {
            EventKind::Wake(i) => {
                if !nodes[i].ready(now) {
                    continue; // superseded wake
                }
                i
            }
            EventKind::Response { node, post } => {
                let status = match post {
                    Some(post) => {
                        let receipt_unix = scenario.start_unix + now.round() as i64;
                        sink.post(&post, receipt_unix)?
                    }
                    None => 0, // timed out
                };
                nodes[node].handle_response(status, now);
                node
            }
        };

        // run the node through its zero-duration phase chain
        let truck = &compiled.trucks[idx];
        while nodes[idx].ready(now) {
            let Some(post) = nodes[idx].step(&truck.env, now) else {
                continue;
            };
            match transmit(post.payload.len(), params, &mut link_rngs[idx]) {
                TransmitOutcome::Delivered { delay_s } => push(
                    &mut heap,
                    now + delay_s,
                    EventKind::Response { node: idx, post: Some(post) },
                ),
                TransmitOutcome::Lost => push(
                    &mut heap,
                    now + params.loss_timeout_s(),
                    EventKind::Response { node: idx, post: None },
                ),
            }
        }
        if let Some(at) = nodes[idx].next_action_time() {
            if at <= duration {
                push(&mut heap, at, EventKind::Wake(idx));
            }
        }
    }

    let mut summary = RunSummary::default();
    for node in &nodes {
        let m = node.metrics();
        summary.generated += m.generated;
        summary.delivered += m.delivered;
        summary.buffered_then_delivered += m.buffered_then_delivered;
        summary.dropped += m.dropped_overflow;
        summary.still_buffered += node.buffer_len() as u64;
        summary.skipped_no_fix += m.skipped_no_fix;
        summary.failed_posts += m.failed_posts;
    }
    debug_assert_eq!(
        summary.generated,
        summary.delivered + summary.still_buffered + summary.dropped
    );
    Ok(summary)
}
