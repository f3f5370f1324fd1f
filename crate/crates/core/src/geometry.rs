//! Plane geometry in pixel units: distances, implicit lines, and the swept
//! corridor a platform covers when it translates between two poses.
//!
//! Coordinates are image pixels (x to the right, y down). Orientation words
//! such as "counter-clockwise" refer to the sign of the usual cross product
//! `(b - a) x (c - a)`, independent of how the image is displayed.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }
}

impl core::ops::Sub for Point {
    type Output = Point;

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl core::ops::Add for Point {
    type Output = Point;

    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Axis-aligned rectangle with inclusive float bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl From<[f64; 4]> for Rect {
    fn from(v: [f64; 4]) -> Self {
        Rect::new(v[0], v[1], v[2], v[3])
    }
}

impl From<Rect> for [f64; 4] {
    fn from(r: Rect) -> Self {
        [r.x_min, r.y_min, r.x_max, r.y_max]
    }
}

impl Rect {
    pub const fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self { x_min, y_min, x_max, y_max }
    }

    /// Rectangle with half extents `(hw, hh)` around `center`.
    pub fn centered(center: Point, hw: f64, hh: f64) -> Self {
        Rect::new(center.x - hw, center.y - hh, center.x + hw, center.y + hh)
    }

    pub fn center(&self) -> Point {
        Point::new((self.x_min + self.x_max) * 0.5, (self.y_min + self.y_max) * 0.5)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.x_max > self.x_min && self.y_max > self.y_min)
    }

    /// Corners in TL, TR, BR, BL order (image orientation).
    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x_min, self.y_min),
            Point::new(self.x_max, self.y_min),
            Point::new(self.x_max, self.y_max),
            Point::new(self.x_min, self.y_max),
        ]
    }

    pub fn inflate(&self, d: f64) -> Rect {
        Rect::new(self.x_min - d, self.y_min - d, self.x_max + d, self.y_max + d)
    }

    pub fn translate(&self, d: Point) -> Rect {
        Rect::new(self.x_min + d.x, self.y_min + d.y, self.x_max + d.x, self.y_max + d.y)
    }

    pub fn union(&self, o: &Rect) -> Rect {
        Rect::new(
            self.x_min.min(o.x_min),
            self.y_min.min(o.y_min),
            self.x_max.max(o.x_max),
            self.y_max.max(o.y_max),
        )
    }

    /// Inclusive containment.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Closed-set intersection; touching edges count.
    pub fn intersects(&self, o: &Rect) -> bool {
        self.x_min <= o.x_max && o.x_min <= self.x_max && self.y_min <= o.y_max && o.y_min <= self.y_max
    }
}

/// Euclidean distance between two points.
pub fn distance(p: Point, q: Point) -> f64 {
    let dx = q.x - p.x;
    let dy = q.y - p.y;
    libm::sqrt(dx * dx + dy * dy)
}

pub fn px_to_mm(v: f64, mm_per_px: f64) -> f64 {
    v * mm_per_px
}

pub fn mm_to_px(v: f64, mm_per_px: f64) -> f64 {
    v / mm_per_px
}

/// Implicit line `a*x + b*y + c = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineABC {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LineABC {
    /// Line through two distinct points. `(a, b)` is the left-hand normal of
    /// the direction `p2 - p1`, so `eval` is positive on the left side.
    pub fn through(p1: Point, p2: Point) -> Result<Self, Error> {
        if p1 == p2 {
            return Err(Error::DegenerateLine);
        }
        let a = -(p2.y - p1.y);
        let b = p2.x - p1.x;
        let c = -a * p1.x - b * p1.y;
        Ok(Self { a, b, c })
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.a * p.x + self.b * p.y + self.c
    }

    pub fn normal(&self) -> Point {
        Point::new(self.a, self.b)
    }

    /// Direction vector along the line.
    pub fn direction(&self) -> Point {
        Point::new(self.b, -self.a)
    }
}

/// Convex region swept by a rectangular footprint translating in a straight
/// line. Vertices are counter-clockwise starting from the lexicographically
/// smallest one, with collinear points removed.
#[derive(Debug, Clone, PartialEq)]
pub struct Corridor {
    vertices: Vec<Point>,
}

impl Corridor {
    pub(crate) fn from_hull(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn bounds(&self) -> Rect {
        let mut r = Rect::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            r.x_min = r.x_min.min(v.x);
            r.y_min = r.y_min.min(v.y);
            r.x_max = r.x_max.max(v.x);
            r.y_max = r.y_max.max(v.y);
        }
        r
    }

    /// Inclusive point containment.
    pub fn contains(&self, p: Point) -> bool {
        match self.vertices.len() {
            0 => false,
            1 => self.vertices[0] == p,
            n => (0..n).all(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                (b - a).cross(p - a) >= 0.0
            }),
        }
    }
}

/// Corridor covered by `start` (a footprint box) translated so that its
/// center lands on `goal`.
pub fn corridor(start: &Rect, goal: Point) -> Corridor {
    let shift = goal - start.center();
    let end = start.translate(shift);
    let mut pts: Vec<Point> = Vec::with_capacity(8);
    pts.extend_from_slice(&start.corners());
    pts.extend_from_slice(&end.corners());
    Corridor { vertices: convex_hull(pts) }
}

/// Andrew's monotone chain. Output is counter-clockwise, strictly convex,
/// starting at the lexicographically smallest point.
pub fn convex_hull(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(pts.len() * 2);
    for &p in pts.iter() {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn turn(o: Point, a: Point, b: Point) -> f64 {
    (a - o).cross(b - o)
}

fn project(points: &[Point], axis: Point) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in points {
        let d = p.dot(axis);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (lo, hi)
}

/// Whether `obstacle` intersects the corridor. Separating-axis test over the
/// rectangle axes and the corridor edge normals; touching counts as blocking.
pub fn blocks(corridor: &Corridor, obstacle: &Rect) -> bool {
    let hull = corridor.vertices();
    if hull.is_empty() {
        return false;
    }
    let rect = obstacle.corners();
    let separated = |axis: Point| {
        let (a0, a1) = project(hull, axis);
        let (b0, b1) = project(&rect, axis);
        a1 < b0 || b1 < a0
    };
    if separated(Point::new(1.0, 0.0)) || separated(Point::new(0.0, 1.0)) {
        return false;
    }
    let n = hull.len();
    if n < 2 {
        return true;
    }
    let edges = if n == 2 { 1 } else { n };
    for i in 0..edges {
        if let Ok(line) = LineABC::through(hull[i], hull[(i + 1) % n]) {
            if separated(line.normal()) {
                return false;
            }
        }
    }
    true
}
