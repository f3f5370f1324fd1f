//! Brute-force oracle suites run by the `oracle` subcommand.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use warehouse_router_core::graph::{CostMatrix, RouteGraph};
use warehouse_router_core::oracle;
use warehouse_router_core::path::{dijkstra, objective, route_to_flow, validate_flow, FlowVector, NodeId};
use warehouse_router_core::vision::{merge_impassable, segment_objects, BBox, Mask, Role, SceneObject};
use warehouse_router_core::Point;

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self { name, ..Self::default() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok && self.failures.len() < 20 {
            self.failures.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{tag} {} ({} cases, {} failures)", self.name, self.cases, self.failures.len())?;
        for e in &self.failures {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

/// Symmetric random cost matrix with zero diagonal.
pub fn random_cost_matrix(rng: &mut impl Rng, m: usize, density: f64, integer: bool) -> CostMatrix {
    let mut c = vec![vec![None; m]; m];
    for i in 0..m {
        c[i][i] = Some(0.0);
        for j in i + 1..m {
            if rng.gen_bool(density) {
                let w = if integer { rng.gen_range(1..20) as f64 } else { rng.gen_range(0.1..50.0) };
                c[i][j] = Some(w);
                c[j][i] = Some(w);
            }
        }
    }
    c
}

/// Dijkstra against exhaustive simple-path enumeration, `per_size` graphs for
/// each size 3..=9.
pub fn dijkstra_suite(seed: u64, per_size: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("dijkstra-vs-enumeration");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for m in 3..=9 {
        for k in 0..per_size {
            let c = random_cost_matrix(&mut rng, m, 0.5, k % 2 == 0);
            let g = match RouteGraph::from_matrix(c.clone()) {
                Ok(g) => g,
                Err(e) => {
                    rep.check(false, || format!("m={m}: {e}"));
                    continue;
                }
            };
            let got = dijkstra(&g, NodeId(1), NodeId(m as u32)).ok().flatten();
            let want = oracle::brute_shortest_path(&c, 0, m - 1);
            let ok = match (&got, &want) {
                (None, None) => true,
                (Some(r), Some((cost, path))) => {
                    (r.total_cost - cost).abs() <= 1e-9 * cost.max(1.0)
                        && r.path.iter().map(|n| n.index()).collect::<Vec<_>>() == *path
                }
                _ => false,
            };
            rep.check(ok, || format!("m={m}: got {got:?}, want {want:?}"));
        }
    }
    rep
}

/// Dijkstra routes certify as feasible flows with matching objective; random
/// 0/1 edge sets certify exactly when they form a simple path.
pub fn flow_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("flow-certification");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        let m = rng.gen_range(3..=7);
        let c = random_cost_matrix(&mut rng, m, 0.55, true);
        let Ok(g) = RouteGraph::from_matrix(c.clone()) else { continue };
        if let Ok(Some(r)) = dijkstra(&g, NodeId(1), NodeId(m as u32)) {
            let x = route_to_flow(&r);
            let rep_flow = validate_flow(&x, &g);
            let obj = objective(&x, &g).ok();
            rep.check(rep_flow.is_valid() && obj == Some(r.total_cost), || {
                format!("route {:?}: {:?}, objective {obj:?}", r.path, rep_flow.violations)
            });
        }
        let mut edges = BTreeSet::new();
        for i in 0..m {
            for j in 0..m {
                if i != j && rng.gen_bool(0.25) {
                    edges.insert((i, j));
                }
            }
        }
        let mut x = FlowVector::default();
        for &(i, j) in &edges {
            x.set(NodeId::from_index(i), NodeId::from_index(j), 1.0);
        }
        let want = oracle::is_simple_path_flow(&c, 0, m - 1, &edges);
        let got = validate_flow(&x, &g).is_valid();
        rep.check(got == want, || format!("edges {edges:?}: valid={got}, oracle={want}"));
    }
    rep
}

/// Gap segmentation against the pairwise-distance grouping.
pub fn segmentation_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("segmentation-vs-pairwise");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        let n = rng.gen_range(0..120);
        let gap = rng.gen_range(0..8);
        let pts: Vec<(u32, u32)> = (0..n).map(|_| (rng.gen_range(0..60), rng.gen_range(0..45))).collect();
        let mut got: Vec<(BBox, u64)> =
            segment_objects(&Mask::from_points(60, 45, &pts), gap, 1).iter().map(|b| (b.bbox, b.pixel_count)).collect();
        got.sort();
        let mut want: Vec<(BBox, u64)> = oracle::segment_pairwise(&pts, gap)
            .iter()
            .map(|g| {
                let xs = g.iter().map(|p| p.0 as i32);
                let ys = g.iter().map(|p| p.1 as i32);
                let b = BBox::new(xs.clone().min().unwrap_or(0), ys.clone().min().unwrap_or(0), xs.max().unwrap_or(0), ys.max().unwrap_or(0));
                (b, g.len() as u64)
            })
            .collect();
        want.sort();
        rep.check(got == want, || format!("gap {gap}, {n} points: {} blobs vs {} groups", got.len(), want.len()));
    }
    rep
}

/// Obstacle merging against one-pair-at-a-time merging to a fixpoint.
pub fn merge_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("merge-vs-naive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        let thr = rng.gen_range(1.0..60.0);
        let boxes: Vec<BBox> = (0..rng.gen_range(0..12))
            .map(|_| {
                let (x, y) = (rng.gen_range(0..300), rng.gen_range(0..300));
                BBox::new(x, y, x + rng.gen_range(1..40), y + rng.gen_range(1..40))
            })
            .collect();
        let objs: Vec<SceneObject> = boxes
            .iter()
            .map(|b| SceneObject {
                role: Role::Obstacle,
                platform_id: None,
                pixel_count: 1,
                centroid: Point::new(b.x_min as f64, b.y_min as f64),
                bbox: *b,
                area_mm2: 1.0,
            })
            .collect();
        let mut got: Vec<BBox> = merge_impassable(&objs, thr).iter().map(|o| o.bbox).collect();
        got.sort();
        let want = oracle::merge_fixpoint_naive(&boxes, thr);
        rep.check(got == want, || format!("threshold {thr:.2}: {got:?} vs {want:?}"));
    }
    rep
}

pub fn all_suites(seed: u64) -> Vec<SuiteReport> {
    vec![dijkstra_suite(seed, 200), flow_suite(seed ^ 1, 500), segmentation_suite(seed ^ 2, 300), merge_suite(seed ^ 3, 500)]
}
