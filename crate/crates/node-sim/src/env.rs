//! The physical world a node measures: truck motion along a route,
//! payload changes, and radio coverage.

use analytics::{haversine_m, LatLon};
use link_sim::{Coverage, CoverageMap};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RouteError {
    #[error("route needs at least 2 waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("segment speeds must be positive, got {0} km/h")]
    NonPositiveSpeed(f64),
    #[error("expected 1 or {expected} segment speeds, got {got}")]
    SpeedCountMismatch { expected: usize, got: usize },
}

/// Route polyline with per-segment speeds and precomputed cumulative
/// distances and travel times.
#[derive(Debug, Clone)]
pub struct RouteGeometry {
    waypoints: Vec<LatLon>,
    /// Distance from the origin to each waypoint, meters.
    cum_dist_m: Vec<f64>,
    /// Travel time from the origin to each waypoint, seconds.
    cum_time_s: Vec<f64>,
}

impl RouteGeometry {
    /// Build from waypoints and per-segment speeds. A single speed is
    /// broadcast to every segment.
    pub fn new(waypoints: Vec<LatLon>, speeds_kmh: &[f64]) -> Result<Self, RouteError> {
        if waypoints.len() < 2 {
            return Err(RouteError::TooFewWaypoints(waypoints.len()));
        }
        let segments = waypoints.len() - 1;
        let speeds: Vec<f64> = match speeds_kmh.len() {
            1 => vec![speeds_kmh[0]; segments],
            n if n == segments => speeds_kmh.to_vec(),
            got => return Err(RouteError::SpeedCountMismatch { expected: segments, got }),
        };
        if let Some(&bad) = speeds.iter().find(|&&s| !(s > 0.0)) {
            return Err(RouteError::NonPositiveSpeed(bad));
        }

        let mut cum_dist_m = vec![0.0];
        let mut cum_time_s = vec![0.0];
        for (pair, speed_kmh) in waypoints.windows(2).zip(&speeds) {
            let len = haversine_m(pair[0], pair[1]);
            cum_dist_m.push(cum_dist_m.last().unwrap() + len);
            cum_time_s.push(cum_time_s.last().unwrap() + len / (speed_kmh / 3.6));
        }
        Ok(RouteGeometry { waypoints, cum_dist_m, cum_time_s })
    }

    pub fn length_m(&self) -> f64 {
        *self.cum_dist_m.last().unwrap()
    }

    pub fn travel_time_s(&self) -> f64 {
        *self.cum_time_s.last().unwrap()
    }

    pub fn waypoints(&self) -> &[LatLon] {
        &self.waypoints
    }

    /// Distance from the origin after driving for `elapsed_s`; the truck
    /// stops at the route end.
    pub fn distance_at(&self, elapsed_s: f64) -> f64 {
        if elapsed_s <= 0.0 {
            return 0.0;
        }
        if elapsed_s >= self.travel_time_s() {
            return self.length_m();
        }
        let seg = match self
            .cum_time_s
            .binary_search_by(|t| t.partial_cmp(&elapsed_s).unwrap())
        {
            Ok(i) => i.min(self.waypoints.len() - 2),
            Err(i) => i - 1,
        };
        let seg_time = self.cum_time_s[seg + 1] - self.cum_time_s[seg];
        let frac = (elapsed_s - self.cum_time_s[seg]) / seg_time;
        self.cum_dist_m[seg] + frac * (self.cum_dist_m[seg + 1] - self.cum_dist_m[seg])
    }

    /// Position at a distance from the origin, by linear interpolation
    /// between the bracketing waypoints.
    pub fn position_at_distance(&self, distance_m: f64) -> LatLon {
        let d = distance_m.clamp(0.0, self.length_m());
        let seg = match self
            .cum_dist_m
            .binary_search_by(|x| x.partial_cmp(&d).unwrap())
        {
            Ok(i) => i.min(self.waypoints.len() - 2),
            Err(i) => i - 1,
        };
        let seg_len = self.cum_dist_m[seg + 1] - self.cum_dist_m[seg];
        if seg_len == 0.0 {
            return self.waypoints[seg];
        }
        let frac = (d - self.cum_dist_m[seg]) / seg_len;
        let (a, b) = (self.waypoints[seg], self.waypoints[seg + 1]);
        LatLon::new(a.lat + frac * (b.lat - a.lat), a.lon + frac * (b.lon - a.lon))
    }
}

/// One step of the true-load schedule: from `time_s` on, the payload is
/// `tons` until the next step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadStep {
    pub time_s: f64,
    pub tons: f64,
}

/// Everything outside the station: where the truck is, what it carries,
/// and whether the radios have signal.
#[derive(Debug, Clone)]
pub struct TruckEnvironment {
    /// Unix time corresponding to simulation time zero.
    pub epoch_unix: i64,
    pub departure_s: f64,
    route: RouteGeometry,
    load_steps: Vec<LoadStep>,
    coverage: CoverageMap,
}

impl TruckEnvironment {
    pub fn new(
        epoch_unix: i64,
        departure_s: f64,
        route: RouteGeometry,
        mut load_steps: Vec<LoadStep>,
        coverage: CoverageMap,
    ) -> Self {
        load_steps.sort_by(|a, b| a.time_s.partial_cmp(&b.time_s).unwrap());
        TruckEnvironment { epoch_unix, departure_s, route, load_steps, coverage }
    }

    pub fn route(&self) -> &RouteGeometry {
        &self.route
    }

    /// Distance along the route at simulation time `now`.
    pub fn route_position_m(&self, now: f64) -> f64 {
        self.route.distance_at(now - self.departure_s)
    }

    /// True truck position at simulation time `now`.
    pub fn position_at(&self, now: f64) -> LatLon {
        self.route.position_at_distance(self.route_position_m(now))
    }

    /// True payload at simulation time `now`; zero before the first step.
    pub fn true_load_at(&self, now: f64) -> f64 {
        self.load_steps
            .iter()
            .take_while(|s| s.time_s <= now)
            .last()
            .map_or(0.0, |s| s.tons)
    }

    /// Radio availability at the truck's position at time `now`.
    pub fn coverage_at(&self, now: f64) -> Coverage {
        self.coverage
            .coverage_at(self.route_position_m(now), self.route.length_m())
            .expect("position is clamped to the route")
    }

    /// Unix time for simulation time `now`.
    pub fn unix_at(&self, now: f64) -> i64 {
        self.epoch_unix + now.round() as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight_route() -> RouteGeometry {
        // ~72 km west-east at constant 36 km/h (10 m/s)
        RouteGeometry::new(
            vec![LatLon::new(13.70, -89.80), LatLon::new(13.70, -89.13)],
            &[36.0],
        )
        .unwrap()
    }

    #[test]
    fn motion_is_piecewise_linear() {
        let route = straight_route();
        assert_eq!(route.distance_at(0.0), 0.0);
        let d = route.distance_at(1000.0);
        assert!((d - 10_000.0).abs() < 1.0, "got {d}");
        // stops at the end
        assert_eq!(route.distance_at(1e9), route.length_m());

        let mid = route.position_at_distance(route.length_m() / 2.0);
        assert!((mid.lat - 13.70).abs() < 1e-9);
        assert!((mid.lon - (-89.465)).abs() < 1e-3);
    }

    #[test]
    fn per_segment_speeds_apply() {
        let route = RouteGeometry::new(
            vec![
                LatLon::new(13.70, -89.80),
                LatLon::new(13.70, -89.70),
                LatLon::new(13.70, -89.60),
            ],
            &[36.0, 72.0],
        )
        .unwrap();
        let seg_len = route.length_m() / 2.0;
        let t1 = seg_len / 10.0;
        // after the first segment the truck doubles its speed
        let d = route.distance_at(t1 + 100.0);
        assert!((d - (seg_len + 2000.0)).abs() < 1.0, "got {d}");
    }

    #[test]
    fn speed_validation() {
        let wps = vec![LatLon::new(0.0, 0.0), LatLon::new(0.0, 1.0)];
        assert_eq!(
            RouteGeometry::new(wps.clone(), &[0.0]).unwrap_err(),
            RouteError::NonPositiveSpeed(0.0)
        );
        assert!(matches!(
            RouteGeometry::new(wps, &[10.0, 10.0]).unwrap_err(),
            RouteError::SpeedCountMismatch { expected: 1, got: 2 }
        ));
    }

    #[test]
    fn load_schedule_is_a_step_function() {
        let env = TruckEnvironment::new(
            1_650_000_000,
            0.0,
            straight_route(),
            vec![
                LoadStep { time_s: 0.0, tons: 2.24 },
                LoadStep { time_s: 3600.0, tons: 0.5 },
            ],
            CoverageMap::default(),
        );
        assert_eq!(env.true_load_at(0.0), 2.24);
        assert_eq!(env.true_load_at(3599.9), 2.24);
        assert_eq!(env.true_load_at(3600.0), 0.5);
        assert_eq!(env.true_load_at(1e9), 0.5);
    }

    #[test]
    fn departure_delays_motion() {
        let env = TruckEnvironment::new(
            1_650_000_000,
            600.0,
            straight_route(),
            vec![],
            CoverageMap::default(),
        );
        assert_eq!(env.route_position_m(300.0), 0.0);
        let d = env.route_position_m(700.0);
        assert!((d - 1000.0).abs() < 0.5, "got {d}");
    }

    #[test]
    fn coverage_follows_position() {
        let env = TruckEnvironment::new(
            1_650_000_000,
            0.0,
            straight_route(),
            vec![],
            CoverageMap {
                gsm_gaps: vec![(24_000.0, 36_000.0)],
                gps_gaps: vec![],
            },
        );
        assert!(env.coverage_at(2399.0).gsm);
        assert!(!env.coverage_at(2400.0).gsm); // half-open start
        assert!(!env.coverage_at(3599.0).gsm);
        assert!(env.coverage_at(3600.0).gsm); // half-open end
    }
}
