use crate::error::PayloadError;

/// Upper bound of the weight sensor range in metric tons.
pub const MAX_WEIGHT_TONS: f64 = 10.0;

/// One GPS fix: WGS84 decimal degrees plus the fix time in Unix seconds.
///
/// `fix_valid` is false when the coordinates are a stale last-known
/// position reused during a GPS outage.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoFix {
    pub latitude: f64,
    pub longitude: f64,
    pub timestamp: i64,
    pub fix_valid: bool,
}

/// One analog weight reading: raw sensor volts and the calibrated tons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSample {
    pub raw_volts: f64,
    pub weight_tons: f64,
}

/// A single node report: identity, position fix and payload weight.
///
/// This is exactly what goes on the wire. Coordinates are quantized to
/// 6 decimal places and the weight to 2, so encoding is lossless and
/// byte-stable for records built through [`TelemetryRecord::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRecord {
    pub device_id: String,
    pub license_plate: String,
    pub axle_location: u32,
    pub fix: GeoFix,
    pub weight_tons: f64,
    pub device_timestamp: i64,
}

/// Clamp a coordinate to the 6-decimal wire grid (~0.11 m).
pub fn quantize_coord(deg: f64) -> f64 {
    (deg * 1e6).round() / 1e6
}

/// Clamp a weight to the 2-decimal wire grid (10 kg).
pub fn quantize_weight(tons: f64) -> f64 {
    (tons * 100.0).round() / 100.0
}

impl TelemetryRecord {
    /// Build a record with wire-grid quantization applied.
    ///
    /// The record's fix timestamp is pinned to `device_timestamp`; a stale
    /// fix is conveyed by `fix_valid = false`, not by a divergent time.
    pub fn new(
        device_id: impl Into<String>,
        license_plate: impl Into<String>,
        axle_location: u32,
        latitude: f64,
        longitude: f64,
        fix_valid: bool,
        weight_tons: f64,
        device_timestamp: i64,
    ) -> Self {
        TelemetryRecord {
            device_id: device_id.into(),
            license_plate: license_plate.into(),
            axle_location,
            fix: GeoFix {
                latitude: quantize_coord(latitude),
                longitude: quantize_coord(longitude),
                timestamp: device_timestamp,
                fix_valid,
            },
            weight_tons: quantize_weight(weight_tons),
            device_timestamp,
        }
    }

    /// Check every record invariant, naming the first offending field.
    pub fn validate(&self) -> Result<(), PayloadError> {
        validate_identifier("device_id", &self.device_id)?;
        validate_identifier("license_plates", &self.license_plate)?;
        if !(-90.0..=90.0).contains(&self.fix.latitude) {
            return Err(PayloadError::validation(
                "latitude",
                format!("{} outside [-90, 90]", self.fix.latitude),
            ));
        }
        if !(-180.0..=180.0).contains(&self.fix.longitude) {
            return Err(PayloadError::validation(
                "longitude",
                format!("{} outside [-180, 180]", self.fix.longitude),
            ));
        }
        if self.fix.timestamp <= 0 {
            return Err(PayloadError::validation(
                "timestamp",
                format!("{} is not a positive Unix time", self.fix.timestamp),
            ));
        }
        if self.device_timestamp <= 0 {
            return Err(PayloadError::validation(
                "timestamp",
                format!("{} is not a positive Unix time", self.device_timestamp),
            ));
        }
        if self.fix.fix_valid && self.device_timestamp != self.fix.timestamp {
            return Err(PayloadError::validation(
                "timestamp",
                "device timestamp disagrees with a valid fix timestamp",
            ));
        }
        if !(0.0..=MAX_WEIGHT_TONS).contains(&self.weight_tons) {
            return Err(PayloadError::validation(
                "weight_tons",
                format!("{} outside [0, {}]", self.weight_tons, MAX_WEIGHT_TONS),
            ));
        }
        Ok(())
    }
}

fn validate_identifier(field: &'static str, value: &str) -> Result<(), PayloadError> {
    if value.is_empty() {
        return Err(PayloadError::validation(field, "must not be empty"));
    }
    if value.contains([',', '\n', '\r']) {
        return Err(PayloadError::validation(
            field,
            "must not contain commas or line breaks",
        ));
    }
    Ok(())
}

/// A telemetry record as persisted by the service: the report itself plus
/// the server receipt time and a per-device sequence number.
///
/// The receipt stamp and the device timestamp are distinct columns on
/// purpose: the first is the server wall clock at ingest, the second the
/// GPS time of the reading.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StoredRecord {
    pub seq: u64,
    pub receipt_unix: i64,
    pub record: TelemetryRecord,
}

impl StoredRecord {
    /// Render the NDJSON storage line. The embedded record reuses the wire
    /// encoding, so store files are byte-stable for identical content.
    pub fn to_json_line(&self) -> String {
        format!(
            "{{\"seq\":{},\"receipt_unix\":{},\"record\":{}}}",
            self.seq,
            self.receipt_unix,
            String::from_utf8(crate::wire::encode_unchecked(&self.record))
                .expect("wire payload is UTF-8"),
        )
    }

    /// Parse one NDJSON storage line, validating the embedded record.
    pub fn from_json_line(line: &str) -> Result<StoredRecord, PayloadError> {
        serde_json::from_str(line).map_err(crate::wire::classify)
    }
}

/// Maps one opaque token to the single device identity it authorizes.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AuthToken {
    pub token: String,
    pub device_id: String,
}

impl AuthToken {
    pub fn validate(&self) -> Result<(), PayloadError> {
        if self.token.is_empty() {
            return Err(PayloadError::validation("token", "must not be empty"));
        }
        validate_identifier("device_id", &self.device_id)
    }
}
