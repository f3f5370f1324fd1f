//! Whole-frame pipeline: detection, obstacle merging, shared network
//! construction and per-platform routing.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::frame::Frame;
use crate::geometry::Point;
use crate::graph::{
    assemble_platform_matrix, build_base_matrix, candidate_nodes, filter_feasible, real_obstacle_closure,
    real_obstacles, Clearance, PlanObstacle, PlatformPair, RouteGraph, Terminal, TerminalKind,
};
use crate::motion::{route_to_motion, MotionVector};
use crate::path::{dijkstra, NodeId, Route};
use crate::vision::{
    detect_objects, merge_impassable, min_area_pixels, validate_classes, ColorClass, RgbRange, Role, SceneObject,
};
use crate::DEFAULT_MM_PER_PX;

/// Platform size and safety distances in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClearanceConfig {
    pub platform_w_px: f64,
    pub platform_h_px: f64,
    pub margin_px: f64,
    #[serde(default = "default_standoff")]
    pub node_standoff_px: f64,
}

fn default_standoff() -> f64 {
    1.0
}

impl Default for ClearanceConfig {
    fn default() -> Self {
        Self { platform_w_px: 17.0, platform_h_px: 34.0, margin_px: 5.0, node_standoff_px: default_standoff() }
    }
}

impl ClearanceConfig {
    pub fn clearance(&self) -> Clearance {
        Clearance::for_platform(self.platform_w_px, self.platform_h_px, self.margin_px, self.node_standoff_px)
    }
}

/// PLC data block that receives one platform's motion vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchTarget {
    /// `host:port` of the PLC endpoint.
    pub addr: String,
    pub db: u16,
    #[serde(default)]
    pub start: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub classes: Vec<ColorClass>,
    pub mm_per_px: f64,
    pub min_area_cm2: f64,
    pub gap_px: u32,
    pub clearance: ClearanceConfig,
    /// Goal position per platform id, in image pixels.
    pub goals: BTreeMap<u32, Point>,
    /// Initial heading per platform id in degrees, y-up, CCW from +x.
    pub headings: BTreeMap<u32, f64>,
    pub dispatch: BTreeMap<u32, DispatchTarget>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            classes: vec![
                ColorClass::platform(1, RgbRange::new([0, 170, 0], [80, 255, 80])),
                ColorClass::new(Role::Goal, RgbRange::new([170, 0, 0], [255, 80, 80])),
                ColorClass::new(Role::Obstacle, RgbRange::new([0, 0, 0], [60, 60, 60])),
                ColorClass::new(Role::Auxiliary, RgbRange::new([0, 0, 170], [80, 80, 255])),
            ],
            mm_per_px: DEFAULT_MM_PER_PX,
            min_area_cm2: 15.0,
            gap_px: 10,
            clearance: ClearanceConfig::default(),
            goals: BTreeMap::new(),
            headings: BTreeMap::new(),
            dispatch: BTreeMap::new(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), Error> {
        validate_classes(&self.classes)?;
        let positive = [
            ("mm_per_px", self.mm_per_px),
            ("min_area_cm2", self.min_area_cm2),
            ("platform_w_px", self.clearance.platform_w_px),
            ("platform_h_px", self.clearance.platform_h_px),
            ("margin_px", self.clearance.margin_px),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.clearance.node_standoff_px >= 0.0 && self.clearance.node_standoff_px.is_finite()) {
            return Err(Error::Config(format!("node_standoff_px must be >= 0, got {}", self.clearance.node_standoff_px)));
        }
        let ids = self.platform_ids();
        for (id, g) in &self.goals {
            if !ids.contains(id) {
                return Err(Error::Config(format!("goal for platform {id} has no color class")));
            }
            if !(g.x.is_finite() && g.y.is_finite()) {
                return Err(Error::Config(format!("goal for platform {id} is not finite")));
            }
        }
        for id in self.headings.keys().chain(self.dispatch.keys()) {
            if !ids.contains(id) {
                return Err(Error::Config(format!("platform {id} has no color class")));
            }
        }
        Ok(())
    }

    pub fn platform_ids(&self) -> BTreeSet<u32> {
        self.classes.iter().filter(|c| c.role == Role::Platform).filter_map(|c| c.platform_id).collect()
    }

    pub fn min_area_px(&self) -> u64 {
        min_area_pixels(self.min_area_cm2, self.mm_per_px)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatformStatus {
    Routed,
    NoRoute,
    PlatformLost,
    NoGoal,
}

/// Route with its node positions, as published.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteReport {
    pub path: Vec<NodeId>,
    pub cost_px: f64,
    pub hops: usize,
    pub waypoints_px: Vec<Point>,
}

impl RouteReport {
    pub fn new(route: &Route, graph: &RouteGraph) -> Self {
        Self {
            path: route.path.clone(),
            cost_px: route.total_cost,
            hops: route.hop_count,
            waypoints_px: route.path.iter().map(|id| graph.nodes[id.index()].pos).collect(),
        }
    }

    pub fn route(&self) -> Route {
        Route { path: self.path.clone(), hop_count: self.hops, total_cost: self.cost_px }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformOutcome {
    pub platform_id: u32,
    pub status: PlatformStatus,
    pub source: Option<Point>,
    pub goal: Option<Point>,
    /// Planning obstacles blocking the straight path.
    pub real_obstacles: Vec<usize>,
    pub graph: Option<RouteGraph>,
    pub route: Option<RouteReport>,
    pub motion: Vec<MotionVector>,
    pub warnings: Vec<String>,
}

impl PlatformOutcome {
    fn empty(platform_id: u32, status: PlatformStatus) -> Self {
        Self {
            platform_id,
            status,
            source: None,
            goal: None,
            real_obstacles: Vec::new(),
            graph: None,
            route: None,
            motion: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

/// Drawing primitives for an annotated view of the frame.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Overlay {
    pub boxes: Vec<OverlayBox>,
    pub nodes: Vec<Point>,
    /// Straight start to goal projections.
    pub projections: Vec<[Point; 2]>,
    pub routes: Vec<OverlayRoute>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxKind {
    Platform,
    Goal,
    Obstacle,
    Auxiliary,
    /// Planning obstacle that blocks some platform's straight path.
    RealObstacle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayBox {
    pub kind: BoxKind,
    pub bbox: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayRoute {
    pub platform_id: u32,
    pub polyline: Vec<Point>,
}

/// Everything derived from one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePlan {
    pub width: u32,
    pub height: u32,
    pub mm_per_px: f64,
    pub objects: Vec<SceneObject>,
    /// Merged fixed obstacles followed by platform bodies.
    pub obstacles: Vec<PlanObstacle>,
    pub clearance: Clearance,
    pub platforms: Vec<PlatformOutcome>,
    pub overlay: Overlay,
}

impl ScenePlan {
    pub fn platform(&self, id: u32) -> Option<&PlatformOutcome> {
        self.platforms.iter().find(|p| p.platform_id == id)
    }
}

/// Largest blob of each platform color. Remaining platform-colored blobs are
/// returned separately.
fn pick_platforms(objects: &[SceneObject]) -> (BTreeMap<u32, SceneObject>, Vec<SceneObject>) {
    let mut best: BTreeMap<u32, SceneObject> = BTreeMap::new();
    let mut rest = Vec::new();
    for o in objects.iter().filter(|o| o.role == Role::Platform) {
        let Some(id) = o.platform_id else { continue };
        match best.get(&id) {
            Some(b) if b.pixel_count >= o.pixel_count => rest.push(o.clone()),
            _ => {
                if let Some(prev) = best.insert(id, o.clone()) {
                    rest.push(prev);
                }
            }
        }
    }
    (best, rest)
}

fn to_y_up(p: Point) -> Point {
    Point::new(p.x, -p.y)
}

/// Pipeline checkpoints reported by [`plan_scene_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Classification, segmentation and obstacle merging are done.
    Vision,
    /// Shared nodes and the base matrix are built.
    Graph,
    /// Every platform has been routed.
    Route,
}

/// Runs the full planning pipeline on one frame.
pub fn plan_scene(frame: &Frame, config: &PipelineConfig) -> Result<ScenePlan, Error> {
    plan_scene_with(frame, config, &mut |_| {})
}

/// Like [`plan_scene`], calling `on_phase` as each phase completes.
pub fn plan_scene_with(frame: &Frame, config: &PipelineConfig, on_phase: &mut dyn FnMut(Phase)) -> Result<ScenePlan, Error> {
    config.validate()?;
    let mm_per_px = frame.mm_per_px();
    let objects = detect_objects(frame, &config.classes, config.gap_px, min_area_pixels(config.min_area_cm2, mm_per_px))?;
    let clearance = config.clearance.clearance();
    let bounds = (frame.width(), frame.height());

    let (bodies, stray) = pick_platforms(&objects);
    // Stray platform-colored blobs are kept as obstacles.
    let fixed: Vec<SceneObject> =
        objects.iter().filter(|o| o.role == Role::Obstacle).cloned().chain(stray).collect();
    let merged = merge_impassable(&fixed, clearance.min_corridor());
    let mut obstacles: Vec<PlanObstacle> = merged.iter().map(|o| PlanObstacle::fixed(o.bbox.to_rect())).collect();
    obstacles.extend(bodies.iter().map(|(&id, o)| PlanObstacle::platform(id, o.bbox.to_rect())));

    let fallback_goal = objects
        .iter()
        .filter(|o| o.role == Role::Goal)
        .max_by(|a, b| a.pixel_count.cmp(&b.pixel_count).then(b.bbox.cmp(&a.bbox)))
        .map(|o| o.centroid);
    on_phase(Phase::Vision);

    struct Job {
        id: u32,
        source: Terminal,
        sink: Terminal,
        warnings: Vec<String>,
    }
    let mut outcomes: BTreeMap<u32, PlatformOutcome> = BTreeMap::new();
    let mut jobs: Vec<Job> = Vec::new();
    for id in config.platform_ids() {
        let Some(body) = bodies.get(&id) else {
            outcomes.insert(id, PlatformOutcome::empty(id, PlatformStatus::PlatformLost));
            continue;
        };
        let Some(goal) = config.goals.get(&id).copied().or(fallback_goal) else {
            let mut o = PlatformOutcome::empty(id, PlatformStatus::NoGoal);
            o.source = Some(body.centroid);
            outcomes.insert(id, o);
            continue;
        };
        let source = Terminal::new(id, TerminalKind::Source, body.centroid, &obstacles, &clearance);
        let sink = Terminal::new(id, TerminalKind::Sink, goal, &obstacles, &clearance);
        let mut warnings = Vec::new();
        for k in source.conflicts(&obstacles) {
            warnings.push(format!("start footprint overlaps obstacle {k}; it is ignored when leaving the start"));
        }
        for k in sink.conflicts(&obstacles) {
            warnings.push(format!("goal footprint overlaps obstacle {k}; it is ignored when reaching the goal"));
        }
        if !frame.contains(goal.x, goal.y) {
            warnings.push(format!("goal ({}, {}) lies outside the frame", goal.x, goal.y));
        }
        jobs.push(Job { id, source, sink, warnings });
    }

    let mut real: BTreeSet<usize> = BTreeSet::new();
    for j in &jobs {
        real.extend(real_obstacle_closure(&j.source, &j.sink, &obstacles, bounds, &clearance));
    }
    let real: Vec<usize> = real.into_iter().collect();
    let terminals: Vec<Terminal> = jobs.iter().flat_map(|j| [j.source.clone(), j.sink.clone()]).collect();
    let candidates = candidate_nodes(&obstacles, &real, &clearance);
    let feasible = filter_feasible(&candidates, &obstacles, bounds, &clearance, &terminals);
    let base = build_base_matrix(&feasible, &obstacles, &clearance);
    on_phase(Phase::Graph);

    for j in jobs {
        let pair = PlatformPair::compute(&base, &j.source, &j.sink, &obstacles, &clearance);
        let graph = assemble_platform_matrix(&base, &pair)?;
        let m = graph.m() as u32;
        let route = dijkstra(&graph, NodeId(1), NodeId(m))?;
        let (direct, _) = real_obstacles(&j.source, &j.sink, &obstacles, &clearance);
        let mut out = PlatformOutcome::empty(j.id, PlatformStatus::NoRoute);
        out.source = Some(j.source.pos);
        out.goal = Some(j.sink.pos);
        out.real_obstacles = direct;
        out.warnings = j.warnings;
        if let Some(r) = route {
            let report = RouteReport::new(&r, &graph);
            let heading = config.headings.get(&j.id).copied().unwrap_or(0.0);
            let pts: Vec<Point> = report.waypoints_px.iter().copied().map(to_y_up).collect();
            out.motion = route_to_motion(&pts, mm_per_px, heading)?;
            out.route = Some(report);
            out.status = PlatformStatus::Routed;
        }
        out.graph = Some(graph);
        outcomes.insert(j.id, out);
    }

    on_phase(Phase::Route);
    let platforms: Vec<PlatformOutcome> = outcomes.into_values().collect();
    let overlay = build_overlay(&objects, &obstacles, &platforms, &feasible.iter().map(|c| c.pos).collect::<Vec<_>>());
    Ok(ScenePlan {
        width: frame.width(),
        height: frame.height(),
        mm_per_px,
        objects,
        obstacles,
        clearance,
        platforms,
        overlay,
    })
}

fn build_overlay(objects: &[SceneObject], obstacles: &[PlanObstacle], platforms: &[PlatformOutcome], nodes: &[Point]) -> Overlay {
    let mut ov = Overlay { nodes: nodes.to_vec(), ..Overlay::default() };
    for o in objects {
        let kind = match o.role {
            Role::Platform => BoxKind::Platform,
            Role::Goal => BoxKind::Goal,
            Role::Obstacle => BoxKind::Obstacle,
            Role::Auxiliary => BoxKind::Auxiliary,
        };
        ov.boxes.push(OverlayBox { kind, bbox: o.bbox.to_rect().into() });
    }
    let real: BTreeSet<usize> = platforms.iter().flat_map(|p| p.real_obstacles.iter().copied()).collect();
    for k in real {
        ov.boxes.push(OverlayBox { kind: BoxKind::RealObstacle, bbox: obstacles[k].rect.into() });
    }
    for p in platforms {
        if let (Some(s), Some(g)) = (p.source, p.goal) {
            ov.projections.push([s, g]);
        }
        if let Some(r) = &p.route {
            ov.routes.push(OverlayRoute { platform_id: p.platform_id, polyline: r.waypoints_px.clone() });
        }
    }
    ov
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{objective, route_to_flow, validate_flow};

    const WHITE: [u8; 3] = [255, 255, 255];
    const GREEN: [u8; 3] = [0, 255, 0];
    const BLACK: [u8; 3] = [0, 0, 0];

    fn scene(goal: Point) -> (Frame, PipelineConfig) {
        let mut f = Frame::filled(200, 120, WHITE).unwrap();
        f.fill_rect(20, 50, 36, 83, GREEN);
        let mut cfg = PipelineConfig::default();
        cfg.goals.insert(1, goal);
        (f, cfg)
    }

    #[test]
    fn empty_scene_routes_straight() {
        let (f, cfg) = scene(Point::new(170.0, 66.5));
        let plan = plan_scene(&f, &cfg).unwrap();
        let p = plan.platform(1).unwrap();
        assert_eq!(p.status, PlatformStatus::Routed);
        let r = p.route.as_ref().unwrap();
        assert_eq!(r.path, [NodeId(1), NodeId(2)]);
        assert_eq!(r.cost_px, 142.0);
        assert_eq!(p.motion.len(), 1);
        assert!(libm::fabs(p.motion[0].dist_mm - 142.0 * DEFAULT_MM_PER_PX) < 1e-9);
        assert_eq!(p.motion[0].turn_deg, 0.0);
    }

    #[test]
    fn obstacle_forces_detour_and_flow_certifies() {
        let (mut f, cfg) = scene(Point::new(170.0, 66.5));
        f.fill_rect(90, 40, 110, 95, BLACK);
        let plan = plan_scene(&f, &cfg).unwrap();
        let p = plan.platform(1).unwrap();
        assert_eq!(p.status, PlatformStatus::Routed);
        assert_eq!(p.real_obstacles, [0]);
        let g = p.graph.as_ref().unwrap();
        let r = p.route.as_ref().unwrap().route();
        assert!(r.hop_count >= 2);
        let flow = route_to_flow(&r);
        assert!(validate_flow(&flow, g).is_valid());
        assert_eq!(objective(&flow, g).unwrap(), r.total_cost);
    }

    #[test]
    fn walled_goal_has_no_route() {
        let (mut f, cfg) = scene(Point::new(170.0, 60.0));
        // Full-height wall between platform and goal.
        f.fill_rect(100, 0, 115, 119, BLACK);
        let plan = plan_scene(&f, &cfg).unwrap();
        let p = plan.platform(1).unwrap();
        assert_eq!(p.status, PlatformStatus::NoRoute);
        assert!(p.route.is_none() && p.motion.is_empty());
    }

    #[test]
    fn missing_platform_and_goal() {
        let f = Frame::filled(50, 50, WHITE).unwrap();
        let mut cfg = PipelineConfig::default();
        cfg.goals.insert(1, Point::new(10.0, 10.0));
        assert_eq!(plan_scene(&f, &cfg).unwrap().platforms[0].status, PlatformStatus::PlatformLost);
        let (f, mut cfg) = scene(Point::new(0.0, 0.0));
        cfg.goals.clear();
        assert_eq!(plan_scene(&f, &cfg).unwrap().platforms[0].status, PlatformStatus::NoGoal);
    }

    #[test]
    fn goal_marker_is_fallback() {
        let (mut f, mut cfg) = scene(Point::new(0.0, 0.0));
        cfg.goals.clear();
        f.fill_rect(160, 60, 179, 79, [255, 0, 0]);
        let plan = plan_scene(&f, &cfg).unwrap();
        assert_eq!(plan.platforms[0].goal, Some(Point::new(169.5, 69.5)));
        assert_eq!(plan.platforms[0].status, PlatformStatus::Routed);
    }

    #[test]
    fn config_validation() {
        let mut cfg = PipelineConfig::default();
        cfg.goals.insert(9, Point::new(1.0, 1.0));
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.clearance.margin_px = 0.0;
        assert!(cfg.validate().is_err());
        assert!(PipelineConfig::default().validate().is_ok());
    }
}
