//! Subcommand implementations. Exit codes: 0 success, 1 validation
//! error, 2 runtime/IO error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use analytics::{AnomalyEvent, DepotZone, LatLon, ReportConfig, TrackReport};
use chrono::Utc;
use ingest_service::ServiceConfig;
use store_query::{QueryRequest, TelemetryStore, DEFAULT_WINDOW_S};
use thiserror::Error;

use crate::scenario::Scenario;
use crate::sim::{self, HttpSink, InProcessSink, RunSummary};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: scenario, config, flags. Exit code 1.
    #[error("{0}")]
    Validation(String),
    /// Runtime failure: IO, network, store. Exit code 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<crate::scenario::ScenarioError> for CliError {
    fn from(e: crate::scenario::ScenarioError) -> Self {
        match e {
            crate::scenario::ScenarioError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<sim::SimError> for CliError {
    fn from(e: sim::SimError) -> Self {
        match e {
            sim::SimError::Connection { .. } => CliError::Runtime(e.to_string()),
            sim::SimError::Store(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<store_query::StoreError> for CliError {
    fn from(e: store_query::StoreError) -> Self {
        match e {
            store_query::StoreError::BadQuery(_) | store_query::StoreError::InvalidRecord(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

/// Run a scenario simulation into a store directory or a live service.
pub fn simulate(
    scenario_path: &Path,
    store_path: Option<&Path>,
    url: Option<&str>,
    seed_override: Option<u64>,
    out: &mut impl Write,
) -> Result<RunSummary, CliError> {
    let mut scenario = Scenario::from_path(scenario_path)?;
    if let Some(seed) = seed_override {
        scenario.seed = seed;
    }
    let compiled = scenario.compile()?;
    let summary = match (store_path, url) {
        (Some(path), None) => {
            let store = Arc::new(TelemetryStore::open(path).map_err(CliError::from)?);
            let mut sink = InProcessSink::new(store, &compiled)?;
            sim::run(&compiled, &mut sink)?
        }
        (None, Some(url)) => {
            let mut sink = HttpSink::new(url);
            sim::run(&compiled, &mut sink)?
        }
        _ => {
            return Err(CliError::Validation(
                "exactly one of --store or --url is required".into(),
            ))
        }
    };
    writeln!(out, "{summary}").map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(summary)
}

/// Start the ingest + query service from a TOML config file.
pub fn serve(config_path: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", config_path.display())))?;
    let config: ServiceConfig =
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("service config: {e}")))?;
    config
        .validate()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let runtime = tokio::runtime::Runtime::new()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    runtime
        .block_on(ingest_service::serve(config))
        .map_err(|e| CliError::Runtime(e.to_string()))
}

/// Time range with the dashboard default: the last 7 days ending now.
pub fn resolve_range(from: Option<i64>, to: Option<i64>) -> (i64, i64) {
    let to = to.unwrap_or_else(|| Utc::now().timestamp());
    let from = from.unwrap_or(to - DEFAULT_WINDOW_S);
    (from, to)
}

/// Print one page of records, newest first, with the dashboard footer.
pub fn query(
    store_path: &Path,
    device_id: &str,
    from: Option<i64>,
    to: Option<i64>,
    page: usize,
    page_size: usize,
    display_offset_s: i32,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let store = TelemetryStore::open(store_path)?;
    let (from, to) = resolve_range(from, to);
    let req = QueryRequest::new(device_id, from, to).with_page(page, page_size);
    let result = store.query(&req)?;
    let mut write = |line: String| -> Result<(), CliError> {
        writeln!(out, "{line}").map_err(|e| CliError::Runtime(e.to_string()))
    };
    write(telemetry_model::CSV_HEADER.replace(',', "\t"))?;
    for row in &result.rows {
        write(telemetry_model::to_csv_row(row, display_offset_s).replace(',', "\t"))?;
    }
    write(format!(
        "Page: {}  {} - {} of {}",
        result.page,
        result.first_row_index(),
        result.last_row_index(),
        result.total
    ))?;
    Ok(())
}

/// Write the CSV export for a device and range.
pub fn export(
    store_path: &Path,
    device_id: &str,
    from: Option<i64>,
    to: Option<i64>,
    display_offset_s: i32,
    out_path: &Path,
) -> Result<usize, CliError> {
    let store = TelemetryStore::open(store_path)?;
    let (from, to) = resolve_range(from, to);
    let file = std::fs::File::create(out_path)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", out_path.display())))?;
    let rows = store.export_csv(device_id, from, to, display_offset_s, file)?;
    Ok(rows)
}

/// Everything `report` needs beyond the store and range.
pub struct ReportOptions {
    pub corridor_m: Option<f64>,
    pub weight_threshold_tons: f64,
    pub gap_factor: f64,
    pub expected_period_s: f64,
    /// Scenario file + route name supplying the planned route.
    pub scenario: Option<(PathBuf, String)>,
    pub depot_zones: Vec<(f64, f64, f64)>,
    pub json: bool,
    pub csv_out: Option<PathBuf>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            corridor_m: None,
            weight_threshold_tons: analytics::DEFAULT_WEIGHT_THRESHOLD_TONS,
            gap_factor: analytics::DEFAULT_GAP_FACTOR,
            expected_period_s: 300.0,
            scenario: None,
            depot_zones: Vec::new(),
            json: false,
            csv_out: None,
        }
    }
}

/// Build and print the analytics report for one device.
pub fn report(
    store_path: &Path,
    device_id: &str,
    from: Option<i64>,
    to: Option<i64>,
    options: &ReportOptions,
    display_offset_s: i32,
    out: &mut impl Write,
) -> Result<TrackReport, CliError> {
    let store = TelemetryStore::open(store_path)?;
    let (from, to) = resolve_range(from, to);
    let req = QueryRequest::new(device_id, from, to).with_page(1, usize::MAX / 2);
    let rows = store.query(&req)?.rows;

    let plan = match &options.scenario {
        Some((path, route_name)) => {
            let compiled = Scenario::from_path(path)?.compile()?;
            let mut plan = compiled.route_plan(route_name).ok_or_else(|| {
                CliError::Validation(format!("scenario has no route named {route_name:?}"))
            })?;
            if let Some(corridor_m) = options.corridor_m {
                plan.corridor_m = corridor_m;
            }
            Some(plan)
        }
        None => None,
    };
    let config = ReportConfig {
        plan,
        weight_threshold_tons: options.weight_threshold_tons,
        depot_zones: options
            .depot_zones
            .iter()
            .map(|&(lat, lon, radius_m)| DepotZone {
                center: LatLon::new(lat, lon),
                radius_m,
            })
            .collect(),
        expected_period_s: options.expected_period_s,
        gap_factor: options.gap_factor,
    };
    let summary = analytics::report(device_id, &rows, &config)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    if let Some(csv_path) = &options.csv_out {
        let file = std::fs::File::create(csv_path).map_err(|e| {
            CliError::Runtime(format!("cannot write {}: {e}", csv_path.display()))
        })?;
        store.export_csv(device_id, from, to, display_offset_s, file)?;
    }

    if options.json {
        let text = serde_json::to_string_pretty(&summary)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        writeln!(out, "{text}").map_err(|e| CliError::Runtime(e.to_string()))?;
    } else {
        render_report(&summary, out).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(summary)
}

fn render_report(report: &TrackReport, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "device {}", report.device_id)?;
    writeln!(out, "  records:   {}", report.record_count)?;
    match (report.first_timestamp, report.last_timestamp) {
        (Some(first), Some(last)) => writeln!(out, "  span:      {first} .. {last}")?,
        _ => writeln!(out, "  span:      (empty)")?,
    }
    writeln!(out, "  distance:  {:.3} km", report.distance_km)?;
    write_events(out, "route deviations", &report.deviation_events, |e| {
        format!("{:.0} m off corridor", e.magnitude)
    })?;
    write_events(out, "weight changes", &report.weight_events, |e| {
        format!("net {:+.2} t", e.magnitude)
    })?;
    write_events(out, "link gaps", &report.link_gaps, |e| {
        format!("{:.0} s without reports", e.magnitude)
    })?;
    Ok(())
}

fn write_events(
    out: &mut impl Write,
    label: &str,
    events: &[AnomalyEvent],
    describe: impl Fn(&AnomalyEvent) -> String,
) -> std::io::Result<()> {
    writeln!(out, "  {label}: {}", events.len())?;
    for e in events {
        writeln!(
            out,
            "    - {} .. {}  {} ({} records)",
            e.start_ts,
            e.end_ts,
            describe(e),
            e.record_seqs.len()
        )?;
    }
    Ok(())
}
