//! Sensor models: GPS fix with CEP-calibrated noise, and the analog
//! weight sensor with its linear calibration.

use analytics::{LatLon, EARTH_RADIUS_M};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use telemetry_model::{quantize_coord, quantize_weight, GeoFix, WeightSample, MAX_WEIGHT_TONS};

use crate::config::{NodeConfig, WeightCalibration};

/// Ratio between circular error probable and the per-axis Gaussian sigma:
/// the median of a Rayleigh(sigma) radius is sigma * sqrt(2 ln 2).
pub const CEP_TO_SIGMA: f64 = 1.177_410_022_515_474_7;

/// Per-axis position noise sigma, in meters, for a given CEP.
pub fn cep_to_sigma_m(cep_m: f64) -> f64 {
    cep_m / CEP_TO_SIGMA
}

/// Read the GPS receiver.
///
/// With coverage, returns the true position disturbed by isotropic
/// Gaussian noise whose median radial error equals the configured CEP.
/// Without coverage the last known fix is reused with `fix_valid =
/// false`; `None` means no fix was ever obtained and the report cycle is
/// skipped.
pub fn read_gps<R: Rng + ?Sized>(
    true_position: LatLon,
    gps_available: bool,
    last_fix: Option<&GeoFix>,
    unix_now: i64,
    cep_m: f64,
    rng: &mut R,
) -> Option<GeoFix> {
    if !gps_available {
        return last_fix.map(|fix| GeoFix {
            fix_valid: false,
            ..fix.clone()
        });
    }
    let (mut lat, mut lon) = (true_position.lat, true_position.lon);
    if cep_m > 0.0 {
        let noise = Normal::new(0.0, cep_to_sigma_m(cep_m)).expect("sigma is finite");
        let north_m = noise.sample(rng);
        let east_m = noise.sample(rng);
        let m_per_deg = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        lat += north_m / m_per_deg;
        lon += east_m / (m_per_deg * lat.to_radians().cos());
    }
    Some(GeoFix {
        latitude: quantize_coord(lat),
        longitude: quantize_coord(lon),
        timestamp: unix_now,
        fix_valid: true,
    })
}

/// Map sensor volts back to tons through the inverse linear model,
/// clamped to the sensor's full scale.
pub fn calibrate(volts: f64, cal: &WeightCalibration) -> f64 {
    let fraction = (volts - cal.v_tare) / (cal.v_full - cal.v_tare);
    (fraction * cal.full_scale_tons).clamp(0.0, cal.full_scale_tons)
}

/// Read the analog weight sensor for a given true load.
///
/// The sensor output is the linear image of the load plus optional
/// Gaussian noise in volts; the calibrated weight is clamped to the
/// 1-10 t sensor range and reported on the 2-decimal wire grid.
pub fn read_weight<R: Rng + ?Sized>(
    true_load_tons: f64,
    config: &NodeConfig,
    rng: &mut R,
) -> WeightSample {
    let cal = &config.calibration;
    let mut volts =
        cal.v_tare + (true_load_tons / cal.full_scale_tons) * (cal.v_full - cal.v_tare);
    let sigma = config.sensor_noise_sigma_volts();
    if sigma > 0.0 {
        let noise = Normal::new(0.0, sigma).expect("sigma is finite");
        volts += noise.sample(rng);
    }
    let weight_tons = calibrate(volts, cal).min(MAX_WEIGHT_TONS);
    WeightSample {
        raw_volts: volts,
        weight_tons: quantize_weight(weight_tons),
    }
}
