//! Route waypoints to (turn, distance) motion vectors.
//!
//! Angles use the mathematical convention: y axis up, counter-clockwise
//! positive. Image coordinates must be flipped by the caller.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::{distance, px_to_mm, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionVector {
    /// Heading change in degrees, normalized to (-180, 180].
    pub turn_deg: f64,
    pub dist_mm: f64,
}

/// Normalizes an angle in degrees to (-180, 180].
pub fn normalize_deg(a: f64) -> f64 {
    let mut r = libm::fmod(a, 360.0);
    if r <= -180.0 {
        r += 360.0;
    } else if r > 180.0 {
        r -= 360.0;
    }
    r
}

pub fn bearing_deg(from: Point, to: Point) -> f64 {
    libm::atan2(to.y - from.y, to.x - from.x).to_degrees()
}

pub fn route_to_motion(waypoints: &[Point], mm_per_px: f64, initial_heading_deg: f64) -> Result<Vec<MotionVector>, Error> {
    if waypoints.len() < 2 {
        return Err(Error::TooFewWaypoints);
    }
    if !mm_per_px.is_finite() || mm_per_px <= 0.0 {
        return Err(Error::OutOfRange(alloc::format!("mm_per_px {mm_per_px}")));
    }
    let mut heading = initial_heading_deg;
    let mut out = Vec::with_capacity(waypoints.len() - 1);
    for w in waypoints.windows(2) {
        let len = distance(w[0], w[1]);
        // A zero-length segment keeps the current heading.
        let bearing = if len > 0.0 { bearing_deg(w[0], w[1]) } else { heading };
        out.push(MotionVector { turn_deg: normalize_deg(bearing - heading), dist_mm: px_to_mm(len, mm_per_px) });
        heading = bearing;
    }
    Ok(out)
}

/// Dead-reckons a vector list from `start` with the given heading; returns
/// the visited positions in millimeters, start included.
pub fn replay(start_mm: Point, initial_heading_deg: f64, vectors: &[MotionVector]) -> Vec<Point> {
    let mut pos = start_mm;
    let mut heading = initial_heading_deg;
    let mut out = Vec::with_capacity(vectors.len() + 1);
    out.push(pos);
    for v in vectors {
        heading += v.turn_deg;
        let r = heading.to_radians();
        pos = Point::new(pos.x + v.dist_mm * libm::cos(r), pos.y + v.dist_mm * libm::sin(r));
        out.push(pos);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        libm::fabs(a - b) < 1e-9
    }

    #[test]
    fn straight_segment() {
        let v = route_to_motion(&[Point::new(0.0, 0.0), Point::new(100.0, 0.0)], 1.0, 0.0).unwrap();
        assert_eq!(v, [MotionVector { turn_deg: 0.0, dist_mm: 100.0 }]);
    }

    #[test]
    fn left_then_right() {
        let pts = [Point::new(0.0, 0.0), Point::new(0.0, 100.0), Point::new(100.0, 100.0)];
        let v = route_to_motion(&pts, 1.0, 0.0).unwrap();
        assert!(close(v[0].turn_deg, 90.0) && close(v[0].dist_mm, 100.0));
        assert!(close(v[1].turn_deg, -90.0) && close(v[1].dist_mm, 100.0));
        let end = *replay(Point::new(0.0, 0.0), 0.0, &v).last().unwrap();
        assert!(distance(end, Point::new(100.0, 100.0)) < 1e-9);
    }

    #[test]
    fn normalization_range() {
        assert_eq!(normalize_deg(180.0), 180.0);
        assert_eq!(normalize_deg(-180.0), 180.0);
        assert_eq!(normalize_deg(270.0), -90.0);
        assert_eq!(normalize_deg(-540.0), 180.0);
        assert_eq!(normalize_deg(0.0), 0.0);
    }

    #[test]
    fn u_turn_is_plus_180() {
        let pts = [Point::new(0.0, 0.0), Point::new(10.0, 0.0), Point::new(0.0, 0.0)];
        let v = route_to_motion(&pts, 1.0, 0.0).unwrap();
        assert_eq!(v[1].turn_deg, 180.0);
    }

    #[test]
    fn scale_applies_to_distance() {
        let v = route_to_motion(&[Point::new(0.0, 0.0), Point::new(3.0, 4.0)], 2.0, 0.0).unwrap();
        assert!(close(v[0].dist_mm, 10.0));
    }

    #[test]
    fn too_few_waypoints() {
        assert_eq!(route_to_motion(&[Point::new(0.0, 0.0)], 1.0, 0.0), Err(Error::TooFewWaypoints));
    }
}
