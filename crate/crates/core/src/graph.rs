//! Visibility network over obstacle corners.
//!
//! The platform is modelled as a square footprint whose half extent is half
//! the platform diagonal, so it covers the platform at any heading. An edge
//! between two positions exists when the footprint, translated in a straight
//! line between them, stays clear of every obstacle box grown by the safety
//! margin. Equivalently, the route centerline keeps a Chebyshev distance
//! greater than [`Clearance::required`] from every obstacle box.
//!
//! Node layout follows the flow formulation: node 1 is the source (platform
//! centroid), node `m` the sink (goal) and the corner nodes sit in between in
//! obstacle order, TL, TR, BR, BL within an obstacle.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::{blocks, convex_hull, corridor, distance, Corridor, Point, Rect};

/// Platform footprint and safety distances, all in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clearance {
    /// Half extent of the square footprint.
    pub footprint_half: f64,
    /// Extra distance kept between footprint and obstacle boxes.
    pub margin: f64,
    /// How far beyond the required clearance corner nodes are placed.
    pub node_standoff: f64,
}

impl Clearance {
    pub fn new(footprint_half: f64, margin: f64, node_standoff: f64) -> Self {
        Self { footprint_half, margin, node_standoff }
    }

    /// Footprint for a `width x height` platform: half of its diagonal.
    pub fn for_platform(width: f64, height: f64, margin: f64, node_standoff: f64) -> Self {
        Self::new(libm::hypot(width, height) * 0.5, margin, node_standoff)
    }

    /// Minimum distance between route centerline and any obstacle box.
    pub fn required(&self) -> f64 {
        self.footprint_half + self.margin
    }

    /// Diagonal offset of corner nodes from their obstacle corner.
    pub fn node_clearance(&self) -> f64 {
        core::f64::consts::SQRT_2 * (self.required() + self.node_standoff)
    }

    /// Narrowest gap the platform can drive through; closer obstacles are
    /// merged into one.
    pub fn min_corridor(&self) -> f64 {
        2.0 * self.required()
    }

    pub fn footprint(&self, at: Point) -> Rect {
        Rect::centered(at, self.footprint_half, self.footprint_half)
    }

    pub fn inflate(&self, obstacle: &Rect) -> Rect {
        obstacle.inflate(self.margin)
    }

    /// Region swept by the footprint moving from `p` to `q`. Symmetric in its
    /// arguments.
    pub fn sweep(&self, p: Point, q: Point) -> Corridor {
        let mut pts = Vec::with_capacity(8);
        pts.extend_from_slice(&self.footprint(p).corners());
        pts.extend_from_slice(&self.footprint(q).corners());
        Corridor::from_hull(convex_hull(pts))
    }

    pub fn edge_blocked_by(&self, p: Point, q: Point, obstacle: &Rect) -> bool {
        blocks(&self.sweep(p, q), &self.inflate(obstacle))
    }

    /// Whether the footprint parked at `p` touches the grown obstacle.
    pub fn occupied_by(&self, p: Point, obstacle: &Rect) -> bool {
        self.footprint(p).intersects(&self.inflate(obstacle))
    }
}

/// Obstacle as seen by the planner. `owner` marks the body of a platform,
/// which is an obstacle for every other platform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanObstacle {
    pub rect: Rect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<u32>,
}

impl PlanObstacle {
    pub fn fixed(rect: Rect) -> Self {
        Self { rect, owner: None }
    }

    pub fn platform(id: u32, rect: Rect) -> Self {
        Self { rect, owner: Some(id) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminalKind {
    Source,
    Sink,
}

/// Source or sink of one platform, with the obstacles its edges ignore:
/// the platform's own body and anything its parked footprint already
/// touches.
#[derive(Debug, Clone, PartialEq)]
pub struct Terminal {
    pub platform_id: u32,
    pub kind: TerminalKind,
    pub pos: Point,
    exempt: Vec<usize>,
}

impl Terminal {
    pub fn new(platform_id: u32, kind: TerminalKind, pos: Point, obstacles: &[PlanObstacle], clearance: &Clearance) -> Self {
        let exempt = obstacles
            .iter()
            .enumerate()
            .filter(|(_, o)| o.owner == Some(platform_id) || clearance.occupied_by(pos, &o.rect))
            .map(|(i, _)| i)
            .collect();
        Self { platform_id, kind, pos, exempt }
    }

    /// Obstacles other than the own body that the parked footprint touches.
    pub fn conflicts<'a>(&'a self, obstacles: &'a [PlanObstacle]) -> impl Iterator<Item = usize> + 'a {
        self.exempt.iter().copied().filter(move |&i| obstacles[i].owner != Some(self.platform_id))
    }

    pub fn exempts(&self, idx: usize) -> bool {
        self.exempt.binary_search(&idx).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Source(u32),
    Sink(u32),
    Corner { obstacle: usize, corner: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    pub kind: NodeKind,
    pub pos: Point,
}

/// Corner node candidate before ids are assigned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub obstacle: usize,
    pub corner: u8,
    pub pos: Point,
}

/// Dense symmetric cost matrix; `None` marks a missing edge.
pub type CostMatrix = Vec<Vec<Option<f64>>>;

/// Network handed to the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteGraph {
    pub nodes: Vec<Node>,
    pub cost: CostMatrix,
}

impl RouteGraph {
    /// Graph from a raw matrix, nodes numbered 1..=m with node 1 as source
    /// and node m as sink. Positions are zero.
    pub fn from_matrix(cost: CostMatrix) -> Result<Self, Error> {
        let m = cost.len();
        if m < 2 {
            return Err(Error::DimensionMismatch { expected: 2, actual: m });
        }
        for row in &cost {
            if row.len() != m {
                return Err(Error::DimensionMismatch { expected: m, actual: row.len() });
            }
        }
        let nodes = (0..m)
            .map(|i| Node {
                id: i as u32 + 1,
                kind: if i == 0 {
                    NodeKind::Source(0)
                } else if i + 1 == m {
                    NodeKind::Sink(0)
                } else {
                    NodeKind::Corner { obstacle: i - 1, corner: 0 }
                },
                pos: Point::default(),
            })
            .collect();
        Ok(Self { nodes, cost })
    }

    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    /// Cost between 0-based node indices.
    pub fn cost(&self, i: usize, j: usize) -> Option<f64> {
        self.cost[i][j]
    }

    /// Nodes directly reachable from the source (set H).
    pub fn source_neighbors(&self) -> Vec<usize> {
        (1..self.m()).filter(|&j| self.cost[0][j].is_some()).collect()
    }

    /// Nodes with a direct edge into the sink (set I).
    pub fn sink_neighbors(&self) -> Vec<usize> {
        let m = self.m() - 1;
        (0..m).filter(|&i| self.cost[i][m].is_some()).collect()
    }

    /// Structural checks: square, symmetric, zero diagonal, finite costs.
    pub fn check(&self) -> Result<(), Error> {
        let m = self.m();
        if self.cost.len() != m {
            return Err(Error::DimensionMismatch { expected: m, actual: self.cost.len() });
        }
        for (i, row) in self.cost.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch { expected: m, actual: row.len() });
            }
            if row[i] != Some(0.0) {
                return Err(Error::OutOfRange(alloc::format!("diagonal at node {}", i + 1)));
            }
            for (j, c) in row.iter().enumerate() {
                if *c != self.cost[j][i] {
                    return Err(Error::OutOfRange(alloc::format!("asymmetric entry ({}, {})", i + 1, j + 1)));
                }
                if let Some(c) = c {
                    if !(c.is_finite() && *c >= 0.0) {
                        return Err(Error::OutOfRange(alloc::format!("cost {c} at ({}, {})", i + 1, j + 1)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Upper bound on the matrix size with `n` obstacles and `p` platforms.
pub fn m_max(n: usize, p: usize) -> usize {
    n * 4 + 2 * p
}

fn clear_path(
    p: Point,
    q: Point,
    obstacles: &[PlanObstacle],
    clearance: &Clearance,
    skip: impl Fn(usize) -> bool,
) -> bool {
    let sweep = clearance.sweep(p, q);
    obstacles
        .iter()
        .enumerate()
        .all(|(i, o)| skip(i) || !blocks(&sweep, &clearance.inflate(&o.rect)))
}

fn blockers(
    p: Point,
    q: Point,
    obstacles: &[PlanObstacle],
    clearance: &Clearance,
    skip: impl Fn(usize) -> bool,
) -> Vec<usize> {
    let sweep = clearance.sweep(p, q);
    obstacles
        .iter()
        .enumerate()
        .filter(|(i, o)| !skip(*i) && blocks(&sweep, &clearance.inflate(&o.rect)))
        .map(|(i, _)| i)
        .collect()
}

/// Obstacles standing in the straight path of a platform, split into
/// (blocking, non-blocking) index lists. The corridor is the platform
/// footprint swept from `source` to the goal.
pub fn real_obstacles(
    source: &Terminal,
    sink: &Terminal,
    obstacles: &[PlanObstacle],
    clearance: &Clearance,
) -> (Vec<usize>, Vec<usize>) {
    let sweep = clearance.sweep(source.pos, sink.pos);
    let mut blocking = Vec::new();
    let mut free = Vec::new();
    for (i, o) in obstacles.iter().enumerate() {
        if !source.exempts(i) && !sink.exempts(i) && blocks(&sweep, &clearance.inflate(&o.rect)) {
            blocking.push(i);
        } else {
            free.push(i);
        }
    }
    (blocking, free)
}

/// The spec-level straight-line test from a detected platform box.
pub fn blocks_direct_path(platform_bbox: &Rect, goal: Point, obstacle: &Rect, clearance: &Clearance) -> bool {
    blocks(&corridor(platform_bbox, goal), &clearance.inflate(obstacle))
}

/// Starts from the obstacles blocking the direct path and keeps adding any
/// obstacle that blocks an edge between the nodes found so far, until no new
/// obstacle appears. Returns sorted obstacle indices.
pub fn real_obstacle_closure(
    source: &Terminal,
    sink: &Terminal,
    obstacles: &[PlanObstacle],
    bounds: (u32, u32),
    clearance: &Clearance,
) -> Vec<usize> {
    let (direct, _) = real_obstacles(source, sink, obstacles, clearance);
    let mut real: BTreeSet<usize> = direct.into_iter().collect();
    let mut checked: BTreeSet<usize> = BTreeSet::new();
    loop {
        let fresh: Vec<usize> = real.difference(&checked).copied().collect();
        if fresh.is_empty() {
            break;
        }
        checked.extend(fresh.iter().copied());
        let points: Vec<(Point, Option<&Terminal>)> = [(source.pos, Some(source)), (sink.pos, Some(sink))]
            .into_iter()
            .chain(
                candidates_for(obstacles, real.iter().copied(), clearance)
                    .into_iter()
                    .filter(|c| in_bounds(c.pos, bounds) && !obstacles.iter().any(|o| clearance.occupied_by(c.pos, &o.rect)))
                    .map(|c| (c.pos, None)),
            )
            .collect();
        let mut found = Vec::new();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let (p, tp) = points[i];
                let (q, tq) = points[j];
                let skip = |k: usize| tp.is_some_and(|t| t.exempts(k)) || tq.is_some_and(|t| t.exempts(k));
                found.extend(blockers(p, q, obstacles, clearance, skip));
            }
        }
        real.extend(found);
    }
    real.into_iter().collect()
}

/// Four candidate nodes around an obstacle box, each pushed out from its
/// corner along the 45 degree diagonal by `clearance_px`. Order TL, TR, BR, BL.
pub fn gen_candidate_nodes(bbox: &Rect, clearance_px: f64) -> [Point; 4] {
    let d = clearance_px / core::f64::consts::SQRT_2;
    [
        Point::new(bbox.x_min - d, bbox.y_min - d),
        Point::new(bbox.x_max + d, bbox.y_min - d),
        Point::new(bbox.x_max + d, bbox.y_max + d),
        Point::new(bbox.x_min - d, bbox.y_max + d),
    ]
}

fn candidates_for(obstacles: &[PlanObstacle], idx: impl Iterator<Item = usize>, clearance: &Clearance) -> Vec<Candidate> {
    let mut out = Vec::new();
    for i in idx {
        for (corner, pos) in gen_candidate_nodes(&obstacles[i].rect, clearance.node_clearance()).into_iter().enumerate() {
            out.push(Candidate { obstacle: i, corner: corner as u8, pos });
        }
    }
    out
}

/// Candidate nodes for the given obstacles, in obstacle then corner order.
pub fn candidate_nodes(obstacles: &[PlanObstacle], idx: &[usize], clearance: &Clearance) -> Vec<Candidate> {
    candidates_for(obstacles, idx.iter().copied(), clearance)
}

fn in_bounds(p: Point, (w, h): (u32, u32)) -> bool {
    p.x >= 0.0 && p.y >= 0.0 && p.x <= (w.max(1) - 1) as f64 && p.y <= (h.max(1) - 1) as f64
}

/// Drops candidates outside the frame or whose parked footprint touches a
/// grown obstacle, then drops survivors with no clear edge to any other
/// survivor or terminal.
pub fn filter_feasible(
    candidates: &[Candidate],
    obstacles: &[PlanObstacle],
    bounds: (u32, u32),
    clearance: &Clearance,
    terminals: &[Terminal],
) -> Vec<Candidate> {
    let placed: Vec<Candidate> = candidates
        .iter()
        .copied()
        .filter(|c| in_bounds(c.pos, bounds))
        .filter(|c| !obstacles.iter().any(|o| clearance.occupied_by(c.pos, &o.rect)))
        .collect();
    placed
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            placed
                .iter()
                .enumerate()
                .any(|(j, d)| *i != j && clear_path(c.pos, d.pos, obstacles, clearance, |_| false))
                || terminals.iter().any(|t| clear_path(t.pos, c.pos, obstacles, clearance, |k| t.exempts(k)))
        })
        .map(|(_, c)| *c)
        .collect()
}

fn edge_cost(
    p: Point,
    q: Point,
    obstacles: &[PlanObstacle],
    clearance: &Clearance,
    skip: impl Fn(usize) -> bool,
) -> Option<f64> {
    clear_path(p, q, obstacles, clearance, skip).then(|| distance(p, q))
}

/// Builds the full `m x m` network for one platform from scratch.
pub fn build_adjacency(
    source: &Terminal,
    sink: &Terminal,
    nodes: &[Candidate],
    obstacles: &[PlanObstacle],
    clearance: &Clearance,
) -> RouteGraph {
    let m = nodes.len() + 2;
    let mut list = Vec::with_capacity(m);
    list.push(Node { id: 1, kind: NodeKind::Source(source.platform_id), pos: source.pos });
    for (k, c) in nodes.iter().enumerate() {
        list.push(Node { id: k as u32 + 2, kind: NodeKind::Corner { obstacle: c.obstacle, corner: c.corner }, pos: c.pos });
    }
    list.push(Node { id: m as u32, kind: NodeKind::Sink(sink.platform_id), pos: sink.pos });

    let terminal = |i: usize| -> Option<&Terminal> {
        if i == 0 {
            Some(source)
        } else if i + 1 == m {
            Some(sink)
        } else {
            None
        }
    };
    let mut cost = vec![vec![None; m]; m];
    for i in 0..m {
        cost[i][i] = Some(0.0);
        for j in i + 1..m {
            let (ti, tj) = (terminal(i), terminal(j));
            let skip = |k: usize| ti.is_some_and(|t| t.exempts(k)) || tj.is_some_and(|t| t.exempts(k));
            let c = edge_cost(list[i].pos, list[j].pos, obstacles, clearance, skip);
            cost[i][j] = c;
            cost[j][i] = c;
        }
    }
    RouteGraph { nodes: list, cost }
}

/// Corner-only cost matrix shared by every platform in a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseMatrix {
    pub nodes: Vec<Candidate>,
    pub k: CostMatrix,
}

impl BaseMatrix {
    pub fn q(&self) -> usize {
        self.nodes.len()
    }
}

pub fn build_base_matrix(nodes: &[Candidate], obstacles: &[PlanObstacle], clearance: &Clearance) -> BaseMatrix {
    let q = nodes.len();
    let mut k = vec![vec![None; q]; q];
    for i in 0..q {
        k[i][i] = Some(0.0);
        for j in i + 1..q {
            let c = edge_cost(nodes[i].pos, nodes[j].pos, obstacles, clearance, |_| false);
            k[i][j] = c;
            k[j][i] = c;
        }
    }
    BaseMatrix { nodes: nodes.to_vec(), k }
}

/// Border vectors of one platform's matrix: source to corners, corners to
/// sink, and the direct source to sink entry.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatformPair {
    pub platform_id: u32,
    pub source: Point,
    pub sink: Point,
    pub a: Vec<Option<f64>>,
    pub b: Vec<Option<f64>>,
    pub direct: Option<f64>,
}

impl PlatformPair {
    pub fn compute(
        base: &BaseMatrix,
        source: &Terminal,
        sink: &Terminal,
        obstacles: &[PlanObstacle],
        clearance: &Clearance,
    ) -> Self {
        let a = base
            .nodes
            .iter()
            .map(|c| edge_cost(source.pos, c.pos, obstacles, clearance, |k| source.exempts(k)))
            .collect();
        let b = base
            .nodes
            .iter()
            .map(|c| edge_cost(c.pos, sink.pos, obstacles, clearance, |k| sink.exempts(k)))
            .collect();
        let direct = edge_cost(source.pos, sink.pos, obstacles, clearance, |k| source.exempts(k) || sink.exempts(k));
        Self { platform_id: source.platform_id, source: source.pos, sink: sink.pos, a, b, direct }
    }
}

/// Places `base` in the interior of a `(q + 2) x (q + 2)` matrix bordered by
/// the platform's vectors.
pub fn assemble_platform_matrix(base: &BaseMatrix, pair: &PlatformPair) -> Result<RouteGraph, Error> {
    let q = base.q();
    for v in [&pair.a, &pair.b] {
        if v.len() != q {
            return Err(Error::DimensionMismatch { expected: q, actual: v.len() });
        }
    }
    if base.k.len() != q {
        return Err(Error::DimensionMismatch { expected: q, actual: base.k.len() });
    }
    let m = q + 2;
    let mut nodes = Vec::with_capacity(m);
    nodes.push(Node { id: 1, kind: NodeKind::Source(pair.platform_id), pos: pair.source });
    for (i, c) in base.nodes.iter().enumerate() {
        nodes.push(Node { id: i as u32 + 2, kind: NodeKind::Corner { obstacle: c.obstacle, corner: c.corner }, pos: c.pos });
    }
    nodes.push(Node { id: m as u32, kind: NodeKind::Sink(pair.platform_id), pos: pair.sink });

    let mut cost = vec![vec![None; m]; m];
    cost[0][0] = Some(0.0);
    cost[m - 1][m - 1] = Some(0.0);
    cost[0][m - 1] = pair.direct;
    cost[m - 1][0] = pair.direct;
    for i in 0..q {
        cost[0][i + 1] = pair.a[i];
        cost[i + 1][0] = pair.a[i];
        cost[i + 1][m - 1] = pair.b[i];
        cost[m - 1][i + 1] = pair.b[i];
        if base.k[i].len() != q {
            return Err(Error::DimensionMismatch { expected: q, actual: base.k[i].len() });
        }
        cost[i + 1][1..=q].copy_from_slice(&base.k[i]);
    }
    Ok(RouteGraph { nodes, cost })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clearance() -> Clearance {
        Clearance::new(10.0, 5.0, 1.0)
    }

    fn terminals(src: Point, dst: Point, obstacles: &[PlanObstacle], c: &Clearance) -> (Terminal, Terminal) {
        (
            Terminal::new(1, TerminalKind::Source, src, obstacles, c),
            Terminal::new(1, TerminalKind::Sink, dst, obstacles, c),
        )
    }

    #[test]
    fn candidate_nodes_unit_offset() {
        let n = gen_candidate_nodes(&Rect::new(0.0, 0.0, 10.0, 10.0), core::f64::consts::SQRT_2);
        let close = |p: Point, x: f64, y: f64| (p.x - x).abs() < 1e-12 && (p.y - y).abs() < 1e-12;
        assert!(close(n[0], -1.0, -1.0));
        assert!(close(n[1], 11.0, -1.0));
        assert!(close(n[2], 11.0, 11.0));
        assert!(close(n[3], -1.0, 11.0));
    }

    #[test]
    fn candidate_nodes_zero_clearance_limit() {
        let r = Rect::new(3.0, 4.0, 9.0, 12.0);
        assert_eq!(gen_candidate_nodes(&r, 0.0), r.corners());
    }

    #[test]
    fn candidate_nodes_distance_and_angle() {
        let r = Rect::new(-7.5, 2.0, 31.0, 4.25);
        let c = 13.7;
        for (node, corner) in gen_candidate_nodes(&r, c).iter().zip(r.corners()) {
            assert!((distance(*node, corner) - c).abs() < 1e-9);
            let d = *node - corner;
            assert!((d.x.abs() - d.y.abs()).abs() < 1e-9);
        }
    }

    #[test]
    fn m_max_values() {
        assert_eq!(m_max(3, 1), 14);
        assert_eq!(m_max(0, 1), 2);
        assert_eq!(m_max(3, 2), 16);
    }

    #[test]
    fn empty_scene_gives_direct_edge() {
        let c = clearance();
        let (s, t) = terminals(Point::new(10.0, 10.0), Point::new(40.0, 50.0), &[], &c);
        let g = build_adjacency(&s, &t, &[], &[], &c);
        assert_eq!(g.m(), 2);
        assert_eq!(g.cost(0, 1), Some(50.0));
        g.check().unwrap();
    }

    #[test]
    fn real_obstacle_split() {
        let c = clearance();
        let obstacles = [
            PlanObstacle::fixed(Rect::new(90.0, 90.0, 110.0, 110.0)),
            PlanObstacle::fixed(Rect::new(300.0, 0.0, 320.0, 20.0)),
        ];
        let (s, t) = terminals(Point::new(100.0, 200.0), Point::new(100.0, 10.0), &obstacles, &c);
        assert_eq!(real_obstacles(&s, &t, &obstacles, &c), (vec![0], vec![1]));
    }

    #[test]
    fn wall_side_nodes_are_dropped() {
        let c = clearance();
        let obstacles = [PlanObstacle::fixed(Rect::new(0.0, 100.0, 40.0, 140.0))];
        let cands = candidate_nodes(&obstacles, &[0], &c);
        let (s, t) = terminals(Point::new(150.0, 20.0), Point::new(150.0, 220.0), &obstacles, &c);
        let kept = filter_feasible(&cands, &obstacles, (300, 300), &c, &[s, t]);
        assert_eq!(kept.iter().map(|k| k.corner).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn node_inside_other_obstacle_is_dropped() {
        let c = clearance();
        let obstacles = [
            PlanObstacle::fixed(Rect::new(100.0, 100.0, 120.0, 120.0)),
            PlanObstacle::fixed(Rect::new(60.0, 60.0, 90.0, 90.0)),
        ];
        let cands = candidate_nodes(&obstacles, &[0], &c);
        let kept = filter_feasible(&cands, &obstacles, (300, 300), &c, &[]);
        assert!(kept.iter().all(|k| k.corner != 0));
        assert_eq!(kept.len(), 3);
    }

    #[test]
    fn isolated_node_is_dropped() {
        let c = Clearance::new(2.0, 1.0, 0.5);
        // Two small blockers cut the TL node off from TR and BL; the box
        // itself hides BR.
        let obstacles = [
            PlanObstacle::fixed(Rect::new(50.0, 50.0, 60.0, 60.0)),
            PlanObstacle::fixed(Rect::new(55.0, 46.0, 56.0, 47.0)),
            PlanObstacle::fixed(Rect::new(46.0, 55.0, 47.0, 56.0)),
        ];
        let cands = candidate_nodes(&obstacles, &[0], &c);
        let kept = filter_feasible(&cands, &obstacles, (200, 200), &c, &[]);
        assert_eq!(kept.iter().map(|k| k.corner).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn assemble_rejects_wrong_lengths() {
        let base = BaseMatrix { nodes: vec![Candidate { obstacle: 0, corner: 0, pos: Point::default() }], k: vec![vec![Some(0.0)]] };
        let pair = PlatformPair {
            platform_id: 1,
            source: Point::default(),
            sink: Point::default(),
            a: vec![],
            b: vec![None],
            direct: None,
        };
        assert!(matches!(assemble_platform_matrix(&base, &pair), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn assemble_q0_is_direct_only() {
        let base = BaseMatrix { nodes: vec![], k: vec![] };
        let pair = PlatformPair {
            platform_id: 1,
            source: Point::new(0.0, 0.0),
            sink: Point::new(3.0, 4.0),
            a: vec![],
            b: vec![],
            direct: Some(5.0),
        };
        let g = assemble_platform_matrix(&base, &pair).unwrap();
        assert_eq!(g.cost, vec![vec![Some(0.0), Some(5.0)], vec![Some(5.0), Some(0.0)]]);
    }

    #[test]
    fn own_body_does_not_block_own_terminal_edges() {
        let c = clearance();
        let obstacles = [PlanObstacle::platform(1, Rect::new(0.0, 0.0, 20.0, 20.0))];
        let (s, t) = terminals(Point::new(10.0, 10.0), Point::new(200.0, 10.0), &obstacles, &c);
        let g = build_adjacency(&s, &t, &[], &obstacles, &c);
        assert!(g.cost(0, 1).is_some());
        // another platform's terminals see it as an obstacle
        let s2 = Terminal::new(2, TerminalKind::Source, Point::new(-100.0, 10.0), &obstacles, &c);
        let t2 = Terminal::new(2, TerminalKind::Sink, Point::new(200.0, 10.0), &obstacles, &c);
        let g = build_adjacency(&s2, &t2, &[], &obstacles, &c);
        assert!(g.cost(0, 1).is_none());
    }

    #[test]
    fn sweep_is_symmetric() {
        let c = clearance();
        let p = Point::new(1.1, 7.3);
        let q = Point::new(-40.7, 19.9);
        assert_eq!(c.sweep(p, q), c.sweep(q, p));
    }
}
