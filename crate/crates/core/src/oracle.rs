//! Slow reference implementations used to cross-check the fast algorithms.
//!
//! Each function takes a different route to the same answer: exhaustive
//! enumeration, pairwise scans, point sampling or closed-form distances.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::geometry::{distance, Point, Rect};
use crate::graph::CostMatrix;
use crate::vision::BBox;

/// Cheapest simple path from `s` to `t` by enumeration. Ties go to fewer
/// hops, then to the lexicographically smallest index sequence. Costs are
/// summed in path order.
pub fn brute_shortest_path(cost: &CostMatrix, s: usize, t: usize) -> Option<(f64, Vec<usize>)> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for_each_simple_path(cost, s, t, &mut |path, c| {
        let better = match &best {
            None => true,
            Some((bc, bp)) => c
                .total_cmp(bc)
                .then(path.len().cmp(&bp.len()))
                .then_with(|| path.cmp(bp.as_slice()))
                == Ordering::Less,
        };
        if better {
            best = Some((c, path.to_vec()));
        }
    });
    best
}

/// Calls `f(path, cost)` for every simple path from `s` to `t`.
pub fn for_each_simple_path(cost: &CostMatrix, s: usize, t: usize, f: &mut dyn FnMut(&[usize], f64)) {
    let m = cost.len();
    let mut on = vec![false; m];
    let mut path = vec![s];
    on[s] = true;
    fn go(cost: &CostMatrix, t: usize, on: &mut [bool], path: &mut Vec<usize>, acc: f64, f: &mut dyn FnMut(&[usize], f64)) {
        let u = *path.last().expect("non-empty path");
        if u == t {
            f(path, acc);
            return;
        }
        for v in 0..cost.len() {
            if on[v] {
                continue;
            }
            if let Some(c) = cost[u][v] {
                on[v] = true;
                path.push(v);
                go(cost, t, on, path, acc + c, f);
                path.pop();
                on[v] = false;
            }
        }
    }
    go(cost, t, &mut on, &mut path, 0.0, f);
}

/// Whether the directed 0/1 edge set is exactly some simple `s` to `t` path
/// of the graph, checked against the full path enumeration.
pub fn is_simple_path_flow(cost: &CostMatrix, s: usize, t: usize, edges: &BTreeSet<(usize, usize)>) -> bool {
    let mut found = false;
    for_each_simple_path(cost, s, t, &mut |path, _| {
        if found || path.len() - 1 != edges.len() {
            return;
        }
        found = path.windows(2).all(|w| edges.contains(&(w[0], w[1])));
    });
    found
}

/// Groups pixels by comparing every pair: two pixels link when both axis
/// offsets are at most `gap`. Groups are sorted, each group sorted.
pub fn segment_pairwise(pixels: &[(u32, u32)], gap: u32) -> Vec<Vec<(u32, u32)>> {
    let n = pixels.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (pixels[i], pixels[j]);
            if a.0.abs_diff(b.0) <= gap && a.1.abs_diff(b.1) <= gap {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: alloc::collections::BTreeMap<usize, Vec<(u32, u32)>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(pixels[i]);
    }
    let mut out: Vec<Vec<(u32, u32)>> = groups.into_values().map(|mut g| {
        g.sort();
        g.dedup();
        g
    }).collect();
    out.sort();
    out
}

/// Merges boxes one pair at a time, restarting the scan after each merge,
/// until no two boxes are closer than `threshold` on their larger axis gap.
pub fn merge_fixpoint_naive(boxes: &[BBox], threshold: f64) -> Vec<BBox> {
    let mut v = boxes.to_vec();
    'outer: loop {
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                let (a, b) = (v[i], v[j]);
                let h = (b.x_min - a.x_max).max(a.x_min - b.x_max).max(0);
                let w = (b.y_min - a.y_max).max(a.y_min - b.y_max).max(0);
                if (h.max(w) as f64) < threshold {
                    v[i] = BBox::new(a.x_min.min(b.x_min), a.y_min.min(b.y_min), a.x_max.max(b.x_max), a.y_max.max(b.y_max));
                    v.remove(j);
                    continue 'outer;
                }
            }
        }
        break;
    }
    v.sort();
    v
}

/// Convex hull by gift wrapping; counter-clockwise, collinear points dropped,
/// starting at the lexicographically smallest point.
pub fn hull_gift_wrap(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let start = pts[0];
    let mut hull = vec![start];
    let mut cur = start;
    loop {
        // Pick the point with every other point on its left; among collinear
        // candidates the farthest one.
        let mut next = if pts[0] == cur { pts[1] } else { pts[0] };
        for &p in &pts {
            if p == cur {
                continue;
            }
            let c = (next - cur).cross(p - cur);
            if c < 0.0 || (c == 0.0 && distance(cur, p) > distance(cur, next)) {
                next = p;
            }
        }
        if next == start {
            break;
        }
        hull.push(next);
        cur = next;
        if hull.len() > pts.len() {
            break;
        }
    }
    hull
}

/// Point in convex CCW polygon, boundary included.
pub fn point_in_convex(poly: &[Point], p: Point) -> bool {
    let n = poly.len();
    (0..n).all(|i| (poly[(i + 1) % n] - poly[i]).cross(p - poly[i]) >= 0.0)
}

/// Samples the rectangle on a regular grid and its corners; true when any
/// sample lies in the polygon or any polygon vertex lies in the rectangle.
pub fn raster_intersects(poly: &[Point], rect: &Rect, step: f64) -> bool {
    if poly.iter().any(|&v| rect.contains(v)) {
        return true;
    }
    let nx = libm::ceil(rect.width() / step) as usize;
    let ny = libm::ceil(rect.height() / step) as usize;
    for i in 0..=nx {
        let x = (rect.x_min + i as f64 * step).min(rect.x_max);
        for j in 0..=ny {
            let y = (rect.y_min + j as f64 * step).min(rect.y_max);
            if point_in_convex(poly, Point::new(x, y)) {
                return true;
            }
        }
    }
    false
}

/// Euclidean distance from a point to a closed rectangle.
pub fn point_rect_distance(p: Point, r: &Rect) -> f64 {
    let dx = (r.x_min - p.x).max(0.0).max(p.x - r.x_max);
    let dy = (r.y_min - p.y).max(0.0).max(p.y - r.y_max);
    libm::hypot(dx, dy)
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return distance(p, a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    distance(p, Point::new(a.x + t * ab.x, a.y + t * ab.y))
}

/// Liang-Barsky clipping: whether the segment touches the closed rectangle.
pub fn segment_hits_rect(a: Point, b: Point, r: &Rect) -> bool {
    let d = b - a;
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for (p, q) in [(-d.x, a.x - r.x_min), (d.x, r.x_max - a.x), (-d.y, a.y - r.y_min), (d.y, r.y_max - a.y)] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    t0 <= t1
}

/// Exact Euclidean distance between a segment and a rectangle.
pub fn segment_rect_distance(a: Point, b: Point, r: &Rect) -> f64 {
    if segment_hits_rect(a, b, r) {
        return 0.0;
    }
    let mut d = point_rect_distance(a, r).min(point_rect_distance(b, r));
    for c in r.corners() {
        d = d.min(point_segment_distance(c, a, b));
    }
    d
}

/// Smallest distance from a polyline to a rectangle.
pub fn polyline_rect_distance(poly: &[Point], r: &Rect) -> f64 {
    match poly {
        [] => f64::INFINITY,
        [p] => point_rect_distance(*p, r),
        _ => poly.windows(2).map(|w| segment_rect_distance(w[0], w[1], r)).fold(f64::INFINITY, f64::min),
    }
}
