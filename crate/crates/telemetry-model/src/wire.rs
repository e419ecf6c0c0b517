//! JSON wire codec for node reports.
//!
//! The payload is a single flat object with a fixed key order so that
//! identical records produce identical bytes:
//!
//! ```json
//! {"device_id":"CI-205-DDE","license_plates":"C65892","axel_ubicacion":2,
//!  "timestamp":1652719541,"latitude":13.705933,"longitude":-89.170845,
//!  "weight_tons":0.62,"fix_valid":true}
//! ```
//!
//! Coordinates carry 6 decimal places, the weight 2. Decoding tolerates
//! any key order, extra whitespace and unknown keys; `fix_valid` defaults
//! to true when absent.

use serde::Deserialize;

use crate::error::PayloadError;
use crate::record::{GeoFix, TelemetryRecord};

/// Encode a record as the JSON wire payload.
///
/// Rejects records that violate an invariant instead of putting bad data
/// on the wire.
pub fn encode_payload(record: &TelemetryRecord) -> Result<Vec<u8>, PayloadError> {
    record.validate()?;
    Ok(encode_unchecked(record))
}

/// Encoding without the validation pass, for callers that already hold a
/// validated record (the store serializer).
pub(crate) fn encode_unchecked(record: &TelemetryRecord) -> Vec<u8> {
    format!(
        "{{\"device_id\":{},\"license_plates\":{},\"axel_ubicacion\":{},\"timestamp\":{},\"latitude\":{:.6},\"longitude\":{:.6},\"weight_tons\":{:.2},\"fix_valid\":{}}}",
        json_string(&record.device_id),
        json_string(&record.license_plate),
        record.axle_location,
        record.device_timestamp,
        record.fix.latitude,
        record.fix.longitude,
        record.weight_tons,
        record.fix.fix_valid,
    )
    .into_bytes()
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization is infallible")
}

#[derive(Deserialize)]
struct WirePayload {
    device_id: String,
    license_plates: String,
    axel_ubicacion: u32,
    timestamp: i64,
    latitude: f64,
    longitude: f64,
    weight_tons: f64,
    #[serde(default = "default_fix_valid")]
    fix_valid: bool,
}

fn default_fix_valid() -> bool {
    true
}

/// Decode and validate a wire payload.
pub fn decode_payload(bytes: &[u8]) -> Result<TelemetryRecord, PayloadError> {
    let wire: WirePayload = serde_json::from_slice(bytes).map_err(classify)?;
    build_record(wire)
}

pub(crate) fn classify(e: serde_json::Error) -> PayloadError {
    match e.classify() {
        serde_json::error::Category::Data => PayloadError::Schema(e.to_string()),
        _ => PayloadError::Parse(e.to_string()),
    }
}

// Serde support uses the same flat wire shape, for query responses and
// store lines. Plain float rendering; the byte-exact fixed-decimal form
// comes from `encode_payload`.

impl serde::Serialize for TelemetryRecord {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("TelemetryRecord", 8)?;
        st.serialize_field("device_id", &self.device_id)?;
        st.serialize_field("license_plates", &self.license_plate)?;
        st.serialize_field("axel_ubicacion", &self.axle_location)?;
        st.serialize_field("timestamp", &self.device_timestamp)?;
        st.serialize_field("latitude", &self.fix.latitude)?;
        st.serialize_field("longitude", &self.fix.longitude)?;
        st.serialize_field("weight_tons", &self.weight_tons)?;
        st.serialize_field("fix_valid", &self.fix.fix_valid)?;
        st.end()
    }
}

impl<'de> serde::Deserialize<'de> for TelemetryRecord {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = WirePayload::deserialize(deserializer)?;
        build_record(wire).map_err(serde::de::Error::custom)
    }
}

fn build_record(wire: WirePayload) -> Result<TelemetryRecord, PayloadError> {
    let record = TelemetryRecord {
        device_id: wire.device_id,
        license_plate: wire.license_plates,
        axle_location: wire.axel_ubicacion,
        fix: GeoFix {
            latitude: wire.latitude,
            longitude: wire.longitude,
            timestamp: wire.timestamp,
            fix_valid: wire.fix_valid,
        },
        weight_tons: wire.weight_tons,
        device_timestamp: wire.timestamp,
    };
    record.validate()?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> TelemetryRecord {
        TelemetryRecord::new(
            "CI-205-DDE",
            "C65892",
            2,
            13.705933,
            -89.170845,
            true,
            0.62,
            1652719541,
        )
    }

    #[test]
    fn encode_matches_expected_bytes() {
        let bytes = encode_payload(&sample()).unwrap();
        let text = std::str::from_utf8(&bytes).unwrap();
        assert_eq!(
            text,
            "{\"device_id\":\"CI-205-DDE\",\"license_plates\":\"C65892\",\
             \"axel_ubicacion\":2,\"timestamp\":1652719541,\"latitude\":13.705933,\
             \"longitude\":-89.170845,\"weight_tons\":0.62,\"fix_valid\":true}"
        );
        assert!(text.contains("\"device_id\":\"CI-205-DDE\""));
        assert!(text.contains("\"weight_tons\":0.62"));
    }

    #[test]
    fn fixed_decimal_rendering() {
        let r = TelemetryRecord::new("N1", "P1", 1, 13.7, -89.0, true, 0.5, 1652716114);
        let text = String::from_utf8(encode_payload(&r).unwrap()).unwrap();
        assert!(text.contains("\"latitude\":13.700000"));
        assert!(text.contains("\"longitude\":-89.000000"));
        assert!(text.contains("\"weight_tons\":0.50"));
    }

    #[test]
    fn decode_tolerates_key_order_and_whitespace() {
        let text = " { \"weight_tons\": 0.62, \"timestamp\": 1652719541,\n\
                    \"latitude\": 13.705933, \"longitude\": -89.170845,\n\
                    \"axel_ubicacion\": 2, \"license_plates\": \"C65892\",\n\
                    \"device_id\": \"CI-205-DDE\" } ";
        assert_eq!(decode_payload(text.as_bytes()).unwrap(), sample());
    }

    #[test]
    fn encode_rejects_out_of_range_latitude() {
        let mut r = sample();
        r.fix.latitude = 91.0;
        let err = encode_payload(&r).unwrap_err();
        assert_eq!(err.field(), Some("latitude"));
    }

    #[test]
    fn decode_empty_is_parse_error() {
        match decode_payload(b"") {
            Err(PayloadError::Parse(_)) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn decode_missing_field_is_schema_error() {
        let text = "{\"device_id\":\"A\",\"license_plates\":\"B\",\"axel_ubicacion\":1,\
                    \"timestamp\":1,\"latitude\":0.0,\"longitude\":0.0}";
        match decode_payload(text.as_bytes()) {
            Err(PayloadError::Schema(msg)) => assert!(msg.contains("weight_tons")),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn decode_negative_weight_is_validation_error() {
        let mut text = String::from_utf8(encode_payload(&sample()).unwrap()).unwrap();
        text = text.replace("\"weight_tons\":0.62", "\"weight_tons\":-1");
        let err = decode_payload(text.as_bytes()).unwrap_err();
        assert_eq!(err.field(), Some("weight_tons"));
    }

    #[test]
    fn typical_payload_fits_link_budget() {
        assert!(encode_payload(&sample()).unwrap().len() <= 512);
    }

    fn arb_record() -> impl Strategy<Value = TelemetryRecord> {
        (
            "[A-Za-z0-9-]{1,16}",
            "[A-Z0-9]{1,8}",
            0u32..8,
            -90.0f64..90.0,
            -180.0f64..180.0,
            any::<bool>(),
            0.0f64..10.0,
            1i64..2_000_000_000,
        )
            .prop_map(|(id, plate, axle, lat, lon, valid, w, ts)| {
                TelemetryRecord::new(id, plate, axle, lat, lon, valid, w, ts)
            })
    }

    proptest! {
        #[test]
        fn round_trip_identity(r in arb_record()) {
            let bytes = encode_payload(&r).unwrap();
            prop_assert_eq!(decode_payload(&bytes).unwrap(), r);
        }

        #[test]
        fn encoding_is_deterministic(r in arb_record()) {
            prop_assert_eq!(encode_payload(&r).unwrap(), encode_payload(&r.clone()).unwrap());
        }
    }
}
