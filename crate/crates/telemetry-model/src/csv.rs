//! CSV rendering of stored records, matching the dashboard table layout.

use chrono::DateTime;

use crate::record::StoredRecord;

/// Export header. Column order is fixed: receipt stamp first, then the
/// device-reported fields.
pub const CSV_HEADER: &str =
    "stamp,timestamp,axel_ubicacion,latitude,longitude,device_id,license_plates,weight_tons";

/// Render one stored record as a CSV line.
///
/// The stamp is the server receipt time shifted by `display_offset_s`
/// (seconds east of UTC, e.g. -21600 for UTC-6) and formatted
/// `MM-DD HH:MM:SS`. Coordinates carry 6 decimals, the weight 2. The
/// sequence number is not a column.
pub fn to_csv_row(stored: &StoredRecord, display_offset_s: i32) -> String {
    let shifted = stored.receipt_unix + i64::from(display_offset_s);
    let stamp = DateTime::from_timestamp(shifted, 0)
        .expect("receipt time in representable range")
        .format("%m-%d %H:%M:%S");
    let r = &stored.record;
    format!(
        "{},{},{},{:.6},{:.6},{},{},{:.2}",
        stamp,
        r.device_timestamp,
        r.axle_location,
        r.fix.latitude,
        r.fix.longitude,
        r.device_id,
        r.license_plate,
        r.weight_tons,
    )
}
