//! Great-circle and local-plane geometry.
//!
//! Distances between fixes use the haversine formula on a spherical
//! Earth. Point-to-segment (cross-track) distances use an equirectangular
//! projection about the segment, which is accurate to well under the
//! sensor's 2.5 m CEP for the sub-300 km segments these routes use.

use telemetry_model::GeoFix;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A WGS84 position in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        LatLon { lat, lon }
    }
}

impl From<&GeoFix> for LatLon {
    fn from(fix: &GeoFix) -> Self {
        LatLon::new(fix.latitude, fix.longitude)
    }
}

/// Great-circle distance between two positions in meters.
pub fn haversine_m(a: LatLon, b: LatLon) -> f64 {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Minimum distance in meters from `p` to the segment `a`-`b`.
///
/// Projects all three points onto a local plane about the segment
/// midpoint; when the perpendicular foot falls outside the segment the
/// distance to the nearest endpoint is returned. A degenerate segment
/// (`a == b`) collapses to the distance to `a`.
pub fn cross_track_distance_m(p: LatLon, a: LatLon, b: LatLon) -> f64 {
    let mid_lat = ((a.lat + b.lat) / 2.0).to_radians();
    let m_per_deg = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    let cos0 = mid_lat.cos();

    let project = |q: LatLon| -> (f64, f64) {
        (
            (q.lon - a.lon) * cos0 * m_per_deg,
            (q.lat - a.lat) * m_per_deg,
        )
    };
    let (px, py) = project(p);
    let (bx, by) = project(b);

    let seg_len_sq = bx * bx + by * by;
    if seg_len_sq == 0.0 {
        return (px * px + py * py).sqrt();
    }
    let t = ((px * bx + py * by) / seg_len_sq).clamp(0.0, 1.0);
    let (dx, dy) = (px - t * bx, py - t * by);
    (dx * dx + dy * dy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIX_NEW: LatLon = LatLon { lat: 13.705933, lon: -89.170845 };
    const FIX_OLD: LatLon = LatLon { lat: 13.701427, lon: -89.169922 };

    /// Independent oracle: great-circle distance via the 3D chord length.
    fn chord_distance_m(a: LatLon, b: LatLon) -> f64 {
        let to_vec = |p: LatLon| -> [f64; 3] {
            let (lat, lon) = (p.lat.to_radians(), p.lon.to_radians());
            [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
        };
        let (va, vb) = (to_vec(a), to_vec(b));
        let chord = ((va[0] - vb[0]).powi(2) + (va[1] - vb[1]).powi(2) + (va[2] - vb[2]).powi(2))
            .sqrt();
        2.0 * EARTH_RADIUS_M * (chord / 2.0).asin()
    }

    #[test]
    fn sample_trip_pair_distance() {
        let d = haversine_m(FIX_NEW, FIX_OLD);
        assert!((d - 511.0).abs() <= 1.0, "got {d}");
        assert!((d - chord_distance_m(FIX_NEW, FIX_OLD)).abs() < 1e-6);
    }

    #[test]
    fn identical_points_are_zero() {
        assert_eq!(haversine_m(FIX_NEW, FIX_NEW), 0.0);
    }

    #[test]
    fn one_degree_of_latitude() {
        let d = haversine_m(LatLon::new(0.0, 0.0), LatLon::new(1.0, 0.0));
        assert!((d - 111_194.9266).abs() < 0.01, "got {d}");
    }

    proptest! {
        #[test]
        fn haversine_matches_chord_oracle(
            lat1 in -89.0f64..89.0, lon1 in -180.0f64..180.0,
            lat2 in -89.0f64..89.0, lon2 in -180.0f64..180.0,
        ) {
            let a = LatLon::new(lat1, lon1);
            let b = LatLon::new(lat2, lon2);
            let h = haversine_m(a, b);
            let c = chord_distance_m(a, b);
            if c > 1.0 {
                prop_assert!((h - c).abs() / c < 1e-6);
            } else {
                prop_assert!((h - c).abs() < 1e-3);
            }
        }

        #[test]
        fn haversine_symmetric_nonnegative(
            lat1 in -89.0f64..89.0, lon1 in -180.0f64..180.0,
            lat2 in -89.0f64..89.0, lon2 in -180.0f64..180.0,
        ) {
            let a = LatLon::new(lat1, lon1);
            let b = LatLon::new(lat2, lon2);
            let ab = haversine_m(a, b);
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, haversine_m(b, a));
        }

        #[test]
        fn haversine_triangle_inequality(
            lat1 in -60.0f64..60.0, lon1 in -170.0f64..170.0,
            dlat2 in -1.0f64..1.0, dlon2 in -1.0f64..1.0,
            dlat3 in -1.0f64..1.0, dlon3 in -1.0f64..1.0,
        ) {
            let a = LatLon::new(lat1, lon1);
            let b = LatLon::new(lat1 + dlat2, lon1 + dlon2);
            let c = LatLon::new(lat1 + dlat3, lon1 + dlon3);
            let direct = haversine_m(a, c);
            let via = haversine_m(a, b) + haversine_m(b, c);
            prop_assert!(direct <= via * (1.0 + 1e-6) + 1e-9);
        }
    }

    #[test]
    fn point_on_segment_is_zero() {
        let a = LatLon::new(13.70, -89.20);
        let b = LatLon::new(13.70, -89.10);
        let p = LatLon::new(13.70, -89.15);
        assert!(cross_track_distance_m(p, a, b) < 1e-6);
        assert_eq!(cross_track_distance_m(a, a, b), 0.0);
    }

    #[test]
    fn lateral_offset_from_west_east_segment() {
        let a = LatLon::new(13.70, -89.20);
        let b = LatLon::new(13.70, -89.10);
        let p = LatLon::new(13.701, -89.15);
        let d = cross_track_distance_m(p, a, b);
        assert!((d - 111.1949).abs() < 0.01, "got {d}");
    }

    #[test]
    fn foot_outside_segment_uses_endpoint() {
        let a = LatLon::new(13.70, -89.20);
        let b = LatLon::new(13.70, -89.10);
        // due east of b: nearest point is b itself
        let p = LatLon::new(13.70, -89.05);
        let d = cross_track_distance_m(p, a, b);
        let expected = haversine_m(p, b);
        assert!((d - expected).abs() / expected < 1e-3, "got {d} vs {expected}");
    }

    #[test]
    fn degenerate_segment_is_point_distance() {
        let a = LatLon::new(13.70, -89.20);
        let p = LatLon::new(13.701, -89.20);
        let d = cross_track_distance_m(p, a, a);
        assert!((d - 111.1949).abs() < 0.01, "got {d}");
    }
}
