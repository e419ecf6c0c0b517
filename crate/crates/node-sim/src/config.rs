use thiserror::Error;

/// Which analog weight sensor the station carries.
///
/// Both are linear in load; the damper-hose pressure variant picks up
/// more noise through the hydraulic coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensorKind {
    /// Suspension-axle deflection sensor.
    Dp,
    /// Damper-hose pressure sensor.
    Dde,
}

impl SensorKind {
    /// Default sensor noise (volts, 1 sigma) when none is configured.
    pub fn default_noise_sigma_volts(self) -> f64 {
        match self {
            SensorKind::Dp => 0.0,
            SensorKind::Dde => 0.02,
        }
    }
}

/// Linear transfer function of the analog weight sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightCalibration {
    /// Sensor output at zero payload.
    pub v_tare: f64,
    /// Sensor output at full-scale payload.
    pub v_full: f64,
    /// Payload at `v_full`, in tons.
    pub full_scale_tons: f64,
}

impl Default for WeightCalibration {
    fn default() -> Self {
        WeightCalibration {
            v_tare: 0.5,
            v_full: 4.5,
            full_scale_tons: 10.0,
        }
    }
}

/// Station firmware configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeConfig {
    pub device_id: String,
    pub license_plate: String,
    pub axle_location: u32,
    /// Platform credential presented with every POST.
    pub auth_token: String,
    /// Reporting period in minutes.
    pub report_period_min: f64,
    pub calibration: WeightCalibration,
    pub sensor_kind: SensorKind,
    /// Sensor noise override (volts, 1 sigma); sensor-kind default when None.
    pub noise_sigma_volts: Option<f64>,
    /// Store-and-forward buffer capacity in records.
    pub buffer_capacity: usize,
    /// GPS circular error probable in meters.
    pub gps_cep_m: f64,
    pub rng_seed: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("report period must be positive minutes, got {0}")]
    NonPositivePeriod(f64),
    #[error("buffer capacity must be at least 1")]
    ZeroBufferCapacity,
    #[error("gps_cep_m must be non-negative, got {0}")]
    NegativeCep(f64),
    #[error("calibration needs v_full > v_tare (got {v_tare} .. {v_full})")]
    InvertedCalibration { v_tare: f64, v_full: f64 },
    #[error("full_scale_tons must be positive, got {0}")]
    NonPositiveFullScale(f64),
    #[error("device_id and license_plate must be non-empty")]
    EmptyIdentity,
}

impl NodeConfig {
    pub fn new(device_id: impl Into<String>, license_plate: impl Into<String>) -> Self {
        NodeConfig {
            device_id: device_id.into(),
            license_plate: license_plate.into(),
            axle_location: 2,
            auth_token: String::new(),
            report_period_min: 5.0,
            calibration: WeightCalibration::default(),
            sensor_kind: SensorKind::Dde,
            noise_sigma_volts: None,
            buffer_capacity: 128,
            gps_cep_m: 2.5,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.device_id.is_empty() || self.license_plate.is_empty() {
            return Err(ConfigError::EmptyIdentity);
        }
        if !(self.report_period_min > 0.0) {
            return Err(ConfigError::NonPositivePeriod(self.report_period_min));
        }
        if self.buffer_capacity == 0 {
            return Err(ConfigError::ZeroBufferCapacity);
        }
        if self.gps_cep_m < 0.0 {
            return Err(ConfigError::NegativeCep(self.gps_cep_m));
        }
        if !(self.calibration.v_full > self.calibration.v_tare) {
            return Err(ConfigError::InvertedCalibration {
                v_tare: self.calibration.v_tare,
                v_full: self.calibration.v_full,
            });
        }
        if !(self.calibration.full_scale_tons > 0.0) {
            return Err(ConfigError::NonPositiveFullScale(
                self.calibration.full_scale_tons,
            ));
        }
        Ok(())
    }

    /// Reporting period in simulation seconds.
    pub fn period_s(&self) -> f64 {
        self.report_period_min * 60.0
    }

    /// Effective sensor noise sigma in volts.
    pub fn sensor_noise_sigma_volts(&self) -> f64 {
        self.noise_sigma_volts
            .unwrap_or_else(|| self.sensor_kind.default_noise_sigma_volts())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        NodeConfig::new("CI-205-DDE", "C65892").validate().unwrap();
    }

    #[test]
    fn zero_period_rejected() {
        let mut cfg = NodeConfig::new("CI-205-DDE", "C65892");
        cfg.report_period_min = 0.0;
        assert_eq!(cfg.validate(), Err(ConfigError::NonPositivePeriod(0.0)));
    }

    #[test]
    fn inverted_calibration_rejected() {
        let mut cfg = NodeConfig::new("CI-205-DDE", "C65892");
        cfg.calibration.v_full = cfg.calibration.v_tare;
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::InvertedCalibration { .. })
        ));
    }

    #[test]
    fn noise_defaults_differ_by_sensor_kind() {
        let mut cfg = NodeConfig::new("N", "P");
        cfg.sensor_kind = SensorKind::Dp;
        assert_eq!(cfg.sensor_noise_sigma_volts(), 0.0);
        cfg.sensor_kind = SensorKind::Dde;
        assert!(cfg.sensor_noise_sigma_volts() > 0.0);
        cfg.noise_sigma_volts = Some(0.0);
        assert_eq!(cfg.sensor_noise_sigma_volts(), 0.0);
    }
}
