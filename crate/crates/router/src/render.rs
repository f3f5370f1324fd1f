//! Annotated frame rendering from a plan's overlay data.

use warehouse_router_core::geometry::Point;
use warehouse_router_core::plan::{BoxKind, ScenePlan};
use warehouse_router_core::Frame;

const BLUE: [u8; 3] = [0, 60, 255];
const GREEN: [u8; 3] = [0, 200, 0];
const ROUTE: [u8; 3] = [255, 0, 200];
const NODE: [u8; 3] = [255, 140, 0];

fn box_color(kind: BoxKind) -> [u8; 3] {
    match kind {
        BoxKind::Platform => [0, 160, 0],
        BoxKind::Goal => [200, 0, 0],
        BoxKind::Obstacle => [90, 90, 90],
        BoxKind::Auxiliary => [0, 0, 160],
        BoxKind::RealObstacle => BLUE,
    }
}

fn plot(f: &mut Frame, x: i64, y: i64, c: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < f.width() && (y as u32) < f.height() {
        f.set_pixel(x as u32, y as u32, c);
    }
}

/// Bresenham line between rounded endpoints, clipped to the frame.
pub fn draw_line(f: &mut Frame, a: Point, b: Point, c: [u8; 3]) {
    let (mut x0, mut y0) = (a.x.round() as i64, a.y.round() as i64);
    let (x1, y1) = (b.x.round() as i64, b.y.round() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    // Bound the walk for far off-frame endpoints.
    for _ in 0..=(dx - dy).min(1 << 16) {
        plot(f, x0, y0, c);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

pub fn draw_rect(f: &mut Frame, r: [f64; 4], c: [u8; 3]) {
    let [x0, y0, x1, y1] = r;
    let corners = [Point::new(x0, y0), Point::new(x1, y0), Point::new(x1, y1), Point::new(x0, y1)];
    for i in 0..4 {
        draw_line(f, corners[i], corners[(i + 1) % 4], c);
    }
}

/// Copy of `frame` with boxes, nodes, projections and routes drawn on top.
pub fn annotate(frame: &Frame, plan: &ScenePlan) -> Frame {
    let mut f = frame.clone();
    let ov = &plan.overlay;
    for b in &ov.boxes {
        draw_rect(&mut f, b.bbox, box_color(b.kind));
    }
    for [s, g] in &ov.projections {
        draw_line(&mut f, *s, *g, GREEN);
    }
    for n in &ov.nodes {
        f.fill_rect(n.x.round() as i64 - 1, n.y.round() as i64 - 1, n.x.round() as i64 + 1, n.y.round() as i64 + 1, NODE);
    }
    for r in &ov.routes {
        for w in r.polyline.windows(2) {
            draw_line(&mut f, w[0], w[1], ROUTE);
        }
    }
    f
}
