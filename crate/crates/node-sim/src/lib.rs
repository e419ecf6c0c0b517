//! Deterministic simulation of the truck-mounted sensor station.
//!
//! A [`Node`] runs the firmware loop of the real station: configure the
//! modem and GPS, then periodically read position and weight, format a
//! JSON packet and POST it over GSM/GPRS, retrying with local buffering
//! while the link is down. Everything is driven by an external
//! discrete-event clock and seeded RNG streams, so identical inputs
//! replay identical record streams.

mod config;
mod env;
mod node;
mod sensors;

pub use config::{ConfigError, NodeConfig, SensorKind, WeightCalibration};
pub use env::{LoadStep, RouteError, RouteGeometry, TruckEnvironment};
pub use node::{Node, NodeMetrics, OutboundPost, Phase};
pub use sensors::{calibrate, cep_to_sigma_m, read_gps, read_weight, CEP_TO_SIGMA};
