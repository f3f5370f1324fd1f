//! Synthetic top-down scenes with known ground truth.

use rand::Rng;
use warehouse_router_core::geometry::Point;
use warehouse_router_core::plan::PipelineConfig;
use warehouse_router_core::vision::{BBox, ColorClass, RgbRange, Role};
use warehouse_router_core::Frame;

pub const BACKGROUND: [u8; 3] = [235, 235, 230];
pub const OBSTACLE_RGB: [u8; 3] = [25, 25, 25];
pub const GOAL_RGB: [u8; 3] = [220, 30, 30];
pub const AUX_RGB: [u8; 3] = [30, 30, 220];

/// Paint color and detection range for platform ids 1 to 3.
pub const PLATFORM_STYLES: [([u8; 3], RgbRange); 3] = [
    ([20, 220, 20], RgbRange::new([0, 170, 0], [80, 255, 80])),
    ([20, 220, 220], RgbRange::new([0, 170, 170], [80, 255, 255])),
    ([220, 220, 20], RgbRange::new([170, 170, 0], [255, 255, 80])),
];

/// Platform body size used by the generators, matching the default config.
pub const PLATFORM_W: i32 = 17;
pub const PLATFORM_H: i32 = 34;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Planted {
    pub role: Role,
    pub platform_id: Option<u32>,
    pub bbox: BBox,
}

impl Planted {
    pub fn obstacle(bbox: BBox) -> Self {
        Self { role: Role::Obstacle, platform_id: None, bbox }
    }

    pub fn platform(id: u32, bbox: BBox) -> Self {
        Self { role: Role::Platform, platform_id: Some(id), bbox }
    }

    pub fn color(&self) -> [u8; 3] {
        match self.role {
            Role::Platform => PLATFORM_STYLES[(self.platform_id.unwrap_or(1) as usize - 1) % 3].0,
            Role::Goal => GOAL_RGB,
            Role::Obstacle => OBSTACLE_RGB,
            Role::Auxiliary => AUX_RGB,
        }
    }

    /// Exact centroid of the filled rectangle.
    pub fn centroid(&self) -> Point {
        Point::new(
            (self.bbox.x_min + self.bbox.x_max) as f64 / 2.0,
            (self.bbox.y_min + self.bbox.y_max) as f64 / 2.0,
        )
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub frame: Frame,
    pub planted: Vec<Planted>,
    pub config: PipelineConfig,
}

/// Default classes extended with platforms `1..=p`.
pub fn config_for_platforms(p: u32) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.classes.retain(|c| c.role != Role::Platform);
    for id in 1..=p.min(3) {
        cfg.classes.insert(id as usize - 1, ColorClass::platform(id, PLATFORM_STYLES[id as usize - 1].1));
    }
    cfg
}

pub fn paint(width: u32, height: u32, planted: &[Planted]) -> Frame {
    let mut f = Frame::filled(width, height, BACKGROUND).expect("non-empty frame");
    for p in planted {
        let b = p.bbox;
        f.fill_rect(b.x_min as i64, b.y_min as i64, b.x_max as i64, b.y_max as i64, p.color());
    }
    f
}

fn random_box(rng: &mut impl Rng, width: u32, height: u32, min: i32, max: i32) -> BBox {
    let w = rng.gen_range(min..=max);
    let h = rng.gen_range(min..=max);
    let x = rng.gen_range(0..=width as i32 - w);
    let y = rng.gen_range(0..=height as i32 - h);
    BBox::new(x, y, x + w - 1, y + h - 1)
}

/// Rectangles of random classes, pairwise farther apart than `gap_px` so each
/// one segments into its own object.
pub fn random_detection_scene(rng: &mut impl Rng, width: u32, height: u32, count: usize, gap_px: u32) -> Scene {
    let mut planted: Vec<Planted> = Vec::new();
    let mut tries = 0;
    while planted.len() < count && tries < count * 200 {
        tries += 1;
        let bbox = random_box(rng, width, height, 14, 60);
        if planted.iter().any(|p| p.bbox.axis_gap(bbox) <= gap_px as i64 + 1) {
            continue;
        }
        let (role, platform_id) = match rng.gen_range(0..6) {
            0 => (Role::Goal, None),
            1 => (Role::Auxiliary, None),
            2 => (Role::Platform, Some(rng.gen_range(1..=3))),
            _ => (Role::Obstacle, None),
        };
        planted.push(Planted { role, platform_id, bbox });
    }
    let frame = paint(width, height, &planted);
    Scene { frame, planted, config: config_for_platforms(3) }
}

/// Route planning scene with `p` platforms, each with a goal, and up to
/// `obstacles` obstacles kept clear of every platform's start and goal
/// footprint.
pub fn random_routing_scene(rng: &mut impl Rng, width: u32, height: u32, p: u32, obstacles: usize) -> Scene {
    let mut cfg = config_for_platforms(p);
    let cl = cfg.clearance.clearance();
    // Keep-out half extent around starts and goals.
    let keep = (cl.required() + cl.footprint_half + 2.0).ceil() as i32;
    let mut planted: Vec<Planted> = Vec::new();
    let mut keep_out: Vec<BBox> = Vec::new();
    let fits = |b: &BBox, keep_out: &[BBox]| keep_out.iter().all(|k| k.axis_gap(*b) > 0);
    for id in 1..=p {
        for _ in 0..500 {
            let x = rng.gen_range(keep..width as i32 - keep - PLATFORM_W);
            let y = rng.gen_range(keep..height as i32 - keep - PLATFORM_H);
            let body = BBox::new(x, y, x + PLATFORM_W - 1, y + PLATFORM_H - 1);
            let c = Planted::platform(id, body).centroid();
            let zone = around(c, keep);
            let gx = rng.gen_range(keep as f64..(width as i32 - keep) as f64).round();
            let gy = rng.gen_range(keep as f64..(height as i32 - keep) as f64).round();
            let gzone = around(Point::new(gx, gy), keep);
            if fits(&zone, &keep_out) && fits(&gzone, &keep_out) && zone.axis_gap(gzone) > 0 {
                planted.push(Planted::platform(id, body));
                keep_out.push(zone);
                keep_out.push(gzone);
                cfg.goals.insert(id, Point::new(gx, gy));
                break;
            }
        }
    }
    let mut placed = 0;
    for _ in 0..obstacles * 100 {
        if placed == obstacles {
            break;
        }
        let b = random_box(rng, width, height, 14, 70);
        if fits(&b, &keep_out) && planted.iter().all(|o| o.bbox.axis_gap(b) > 0) {
            planted.push(Planted::obstacle(b));
            placed += 1;
        }
    }
    let frame = paint(width, height, &planted);
    Scene { frame, planted, config: cfg }
}

fn around(c: Point, half: i32) -> BBox {
    let (x, y) = (c.x.round() as i32, c.y.round() as i32);
    BBox::new(x - half, y - half, x + half, y + half)
}

/// Deterministic 640x480 layouts in the style of the paper's test scenes:
/// a platform on the left, its goal on the right and `n` obstacles (3, 6 or
/// 18) in between.
pub fn grid_scene(n: usize) -> Scene {
    let (cols, rows): (usize, &[i32]) = match n {
        0..=3 => (n, &[210]),
        4..=6 => (n.div_ceil(2), &[130, 290]),
        _ => (n.div_ceil(3), &[70, 210, 350]),
    };
    let mut planted = vec![Planted::platform(1, BBox::new(20, 200, 20 + PLATFORM_W - 1, 200 + PLATFORM_H - 1))];
    let mut k = 0;
    'outer: for &y in rows {
        for c in 0..cols {
            if k == n {
                break 'outer;
            }
            let x = 110 + (c as i32) * (440 / cols.max(1) as i32);
            planted.push(Planted::obstacle(BBox::new(x, y, x + 19, y + 50)));
            k += 1;
        }
    }
    let mut cfg = config_for_platforms(1);
    cfg.goals.insert(1, Point::new(610.0, 240.0));
    Scene { frame: paint(640, 480, &planted), planted, config: cfg }
}
