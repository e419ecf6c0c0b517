//! Scenario files: one TOML document describing routes, trucks, coverage
//! gaps and link parameters for a simulation run.
//!
//! ```toml
//! start_unix = 1652713200
//! duration_s = 7200
//! seed = 42
//!
//! [link]
//! loss_prob = 0.01
//!
//! [[routes]]
//! name = "acajutla-opico"
//! waypoints = [[13.592, -89.8275], [13.8167, -89.3772]]
//! speeds_kmh = [60.0]
//! gsm_gaps = [[24000.0, 36000.0]]
//!
//! [[trucks]]
//! device_id = "CI-205-DDE"
//! license_plate = "C65892"
//! token = "tok-205"
//! route = "acajutla-opico"
//! sensor = "DDE"
//! load_schedule = [[0.0, 2.24], [3600.0, 0.5]]
//! ```
//!
//! Parse errors carry TOML line/column positions; semantic errors name
//! the offending field.

use std::collections::HashSet;
use std::path::Path;

use analytics::{LatLon, RoutePlan};
use link_sim::{CoverageMap, LinkParams};
use node_sim::{
    LoadStep, NodeConfig, RouteGeometry, SensorKind, TruckEnvironment, WeightCalibration,
};
use serde::Deserialize;
use telemetry_model::MAX_WEIGHT_TONS;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { field: field.into(), reason: reason.into() }
}

fn default_start_unix() -> i64 {
    1_600_000_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Unix time of simulation second zero.
    #[serde(default = "default_start_unix")]
    pub start_unix: i64,
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub link: LinkParams,
    pub routes: Vec<RouteSpec>,
    pub trucks: Vec<TruckSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteSpec {
    pub name: String,
    /// `[lat, lon]` pairs.
    pub waypoints: Vec<(f64, f64)>,
    /// One speed per segment, or a single speed for the whole route.
    pub speeds_kmh: Vec<f64>,
    #[serde(default)]
    pub gsm_gaps: Vec<(f64, f64)>,
    #[serde(default)]
    pub gps_gaps: Vec<(f64, f64)>,
    /// Corridor half-width for deviation reports.
    #[serde(default = "default_corridor")]
    pub corridor_m: f64,
}

fn default_corridor() -> f64 {
    analytics::DEFAULT_CORRIDOR_M
}

fn default_period_min() -> f64 {
    5.0
}

fn default_buffer_capacity() -> usize {
    128
}

fn default_cep() -> f64 {
    2.5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruckSpec {
    pub device_id: String,
    pub license_plate: String,
    #[serde(default = "default_axle")]
    pub axle_location: u32,
    /// Platform credential for this device.
    pub token: String,
    /// Name of the route the truck drives.
    pub route: String,
    #[serde(default)]
    pub departure_s: f64,
    #[serde(default = "default_period_min")]
    pub report_period_min: f64,
    /// "DP" or "DDE".
    #[serde(default = "default_sensor")]
    pub sensor: String,
    #[serde(default = "default_buffer_capacity")]
    pub buffer_capacity: usize,
    #[serde(default = "default_cep")]
    pub gps_cep_m: f64,
    pub noise_sigma_volts: Option<f64>,
    #[serde(default = "default_v_tare")]
    pub v_tare: f64,
    #[serde(default = "default_v_full")]
    pub v_full: f64,
    #[serde(default = "default_full_scale")]
    pub full_scale_tons: f64,
    /// `[time_s, tons]` steps; the payload holds between steps.
    #[serde(default)]
    pub load_schedule: Vec<(f64, f64)>,
}

fn default_axle() -> u32 {
    2
}

fn default_sensor() -> String {
    "DDE".to_string()
}

fn default_v_tare() -> f64 {
    0.5
}

fn default_v_full() -> f64 {
    4.5
}

fn default_full_scale() -> f64 {
    10.0
}

/// A validated scenario with the derived per-truck worlds.
#[derive(Debug)]
pub struct CompiledScenario {
    pub scenario: Scenario,
    /// Parallel to `scenario.trucks`.
    pub trucks: Vec<CompiledTruck>,
}

#[derive(Debug)]
pub struct CompiledTruck {
    pub config: NodeConfig,
    pub env: TruckEnvironment,
    pub token: String,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Scenario::from_str(&text)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Scenario, ScenarioError> {
        Ok(toml::from_str(text)?)
    }

    /// Validate everything and build the per-truck environments.
    pub fn compile(self) -> Result<CompiledScenario, ScenarioError> {
        if !(self.duration_s > 0.0) {
            return Err(invalid("duration_s", "must be positive"));
        }
        self.link
            .validate()
            .map_err(|e| invalid("link", e.to_string()))?;
        if self.routes.is_empty() {
            return Err(invalid("routes", "at least one route is required"));
        }
        if self.trucks.is_empty() {
            return Err(invalid("trucks", "at least one truck is required"));
        }

        let mut geometries = Vec::new();
        let mut route_names = HashSet::new();
        for (i, route) in self.routes.iter().enumerate() {
            let field = format!("routes[{i}] ({})", route.name);
            if !route_names.insert(route.name.clone()) {
                return Err(invalid(field, "duplicate route name"));
            }
            let waypoints: Vec<LatLon> = route
                .waypoints
                .iter()
                .map(|&(lat, lon)| LatLon::new(lat, lon))
                .collect();
            for (j, p) in waypoints.iter().enumerate() {
                if !(-90.0..=90.0).contains(&p.lat) || !(-180.0..=180.0).contains(&p.lon) {
                    return Err(invalid(
                        format!("{field}.waypoints[{j}]"),
                        "coordinates out of range",
                    ));
                }
            }
            let geometry = RouteGeometry::new(waypoints, &route.speeds_kmh)
                .map_err(|e| invalid(format!("{field}.speeds_kmh"), e.to_string()))?;
            let coverage = CoverageMap {
                gsm_gaps: route.gsm_gaps.clone(),
                gps_gaps: route.gps_gaps.clone(),
            };
            coverage
                .validate(geometry.length_m())
                .map_err(|e| invalid(format!("{field}.gaps"), e.to_string()))?;
            if !(route.corridor_m > 0.0) {
                return Err(invalid(format!("{field}.corridor_m"), "must be positive"));
            }
            geometries.push((geometry, coverage));
        }

        let mut trucks = Vec::new();
        let mut device_ids = HashSet::new();
        let mut tokens = HashSet::new();
        for (i, truck) in self.trucks.iter().enumerate() {
            let field = format!("trucks[{i}] ({})", truck.device_id);
            if !device_ids.insert(truck.device_id.clone()) {
                return Err(invalid(field, "duplicate device_id"));
            }
            if truck.token.is_empty() {
                return Err(invalid(format!("{field}.token"), "must not be empty"));
            }
            if !tokens.insert(truck.token.clone()) {
                return Err(invalid(format!("{field}.token"), "duplicate token"));
            }
            let route_idx = self
                .routes
                .iter()
                .position(|r| r.name == truck.route)
                .ok_or_else(|| {
                    invalid(format!("{field}.route"), format!("unknown route {:?}", truck.route))
                })?;
            if truck.departure_s < 0.0 || truck.departure_s >= self.duration_s {
                return Err(invalid(
                    format!("{field}.departure_s"),
                    "must lie within the scenario duration",
                ));
            }
            if truck.full_scale_tons > MAX_WEIGHT_TONS {
                return Err(invalid(
                    format!("{field}.full_scale_tons"),
                    format!("sensor range tops out at {MAX_WEIGHT_TONS} t"),
                ));
            }
            for &(time_s, tons) in &truck.load_schedule {
                if time_s < 0.0 || time_s > self.duration_s {
                    return Err(invalid(
                        format!("{field}.load_schedule"),
                        format!("step at {time_s} s is outside the duration"),
                    ));
                }
                if !(0.0..=MAX_WEIGHT_TONS).contains(&tons) {
                    return Err(invalid(
                        format!("{field}.load_schedule"),
                        format!("{tons} t is outside the sensor range"),
                    ));
                }
            }
            let sensor_kind = match truck.sensor.to_ascii_uppercase().as_str() {
                "DP" => SensorKind::Dp,
                "DDE" => SensorKind::Dde,
                other => {
                    return Err(invalid(
                        format!("{field}.sensor"),
                        format!("expected DP or DDE, got {other:?}"),
                    ))
                }
            };

            let mut config = NodeConfig::new(&truck.device_id, &truck.license_plate);
            config.axle_location = truck.axle_location;
            config.auth_token = truck.token.clone();
            config.report_period_min = truck.report_period_min;
            config.sensor_kind = sensor_kind;
            config.noise_sigma_volts = truck.noise_sigma_volts;
            config.buffer_capacity = truck.buffer_capacity;
            config.gps_cep_m = truck.gps_cep_m;
            config.calibration = WeightCalibration {
                v_tare: truck.v_tare,
                v_full: truck.v_full,
                full_scale_tons: truck.full_scale_tons,
            };
            config.rng_seed = truck_seed(self.seed, i as u64);
            config
                .validate()
                .map_err(|e| invalid(field.clone(), e.to_string()))?;

            let (geometry, coverage) = &geometries[route_idx];
            let env = TruckEnvironment::new(
                self.start_unix,
                truck.departure_s,
                geometry.clone(),
                truck
                    .load_schedule
                    .iter()
                    .map(|&(time_s, tons)| LoadStep { time_s, tons })
                    .collect(),
                coverage.clone(),
            );
            trucks.push(CompiledTruck { config, env, token: truck.token.clone() });
        }

        Ok(CompiledScenario { scenario: self, trucks })
    }
}

impl CompiledScenario {
    /// Route plan for analytics reports, by route name.
    pub fn route_plan(&self, name: &str) -> Option<RoutePlan> {
        let route = self.scenario.routes.iter().find(|r| r.name == name)?;
        let waypoints = route
            .waypoints
            .iter()
            .map(|&(lat, lon)| LatLon::new(lat, lon))
            .collect();
        RoutePlan::new(waypoints, route.corridor_m).ok()
    }
}

/// Per-truck RNG stream derived from the scenario seed.
fn truck_seed(scenario_seed: u64, truck_idx: u64) -> u64 {
    scenario_seed ^ (truck_idx + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Seed for a truck's link-loss stream, distinct from its sensor streams.
pub fn link_seed(scenario_seed: u64, truck_idx: u64) -> u64 {
    truck_seed(scenario_seed, truck_idx) ^ 0x6c69_6e6b
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
duration_s = 7200
seed = 42

[[routes]]
name = "r1"
waypoints = [[13.70, -89.80], [13.70, -89.13]]
speeds_kmh = [36.0]

[[trucks]]
device_id = "CI-205-DDE"
license_plate = "C65892"
token = "tok-205"
route = "r1"
load_schedule = [[0.0, 2.24]]
"#;

    #[test]
    fn minimal_scenario_compiles() {
        let compiled = Scenario::from_str(MINIMAL).unwrap().compile().unwrap();
        assert_eq!(compiled.trucks.len(), 1);
        let truck = &compiled.trucks[0];
        assert_eq!(truck.config.device_id, "CI-205-DDE");
        assert_eq!(truck.config.report_period_min, 5.0);
        assert_eq!(truck.config.buffer_capacity, 128);
        assert_eq!(truck.env.true_load_at(10.0), 2.24);
    }

    #[test]
    fn unknown_keys_are_parse_errors_with_position() {
        let bad = MINIMAL.replace("seed = 42", "sede = 42");
        let err = Scenario::from_str(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("sede"), "{msg}");
        assert!(msg.contains("line"), "expected a line position: {msg}");
    }

    #[test]
    fn unknown_route_reference_names_the_field() {
        let bad = MINIMAL.replace("route = \"r1\"", "route = \"r9\"");
        let err = Scenario::from_str(&bad).unwrap().compile().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("trucks[0]"), "{msg}");
        assert!(msg.contains("r9"), "{msg}");
    }

    #[test]
    fn zero_speed_rejected() {
        let bad = MINIMAL.replace("speeds_kmh = [36.0]", "speeds_kmh = [0.0]");
        assert!(Scenario::from_str(&bad).unwrap().compile().is_err());
    }

    #[test]
    fn load_step_outside_duration_rejected() {
        let bad = MINIMAL.replace("[[0.0, 2.24]]", "[[99999.0, 2.24]]");
        let err = Scenario::from_str(&bad).unwrap().compile().unwrap_err();
        assert!(err.to_string().contains("load_schedule"));
    }

    #[test]
    fn duplicate_device_ids_rejected() {
        let dup = format!(
            "{MINIMAL}\n[[trucks]]\ndevice_id = \"CI-205-DDE\"\nlicense_plate = \"X\"\ntoken = \"tok-2\"\nroute = \"r1\"\n"
        );
        let err = Scenario::from_str(&dup).unwrap().compile().unwrap_err();
        assert!(err.to_string().contains("duplicate device_id"));
    }

    #[test]
    fn gap_past_route_end_rejected() {
        let bad = MINIMAL.replace(
            "speeds_kmh = [36.0]",
            "speeds_kmh = [36.0]\ngsm_gaps = [[0.0, 99999999.0]]",
        );
        let err = Scenario::from_str(&bad).unwrap().compile().unwrap_err();
        assert!(err.to_string().contains("gaps"), "{err}");
    }
}
