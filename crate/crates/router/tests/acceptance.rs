//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line; the process exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use warehouse_router::bench::{run_pipeline_bench, BenchOptions};
use warehouse_router::plc::{MockPlcServer, PlcConnection, MOCK_BLOCK_SIZE};
use warehouse_router::synth::{config_for_platforms, grid_scene, paint, random_detection_scene, random_routing_scene, Planted};
use warehouse_router_core::graph::{build_adjacency, m_max, Candidate, NodeKind, RouteGraph, Terminal, TerminalKind};
use warehouse_router_core::oracle;
use warehouse_router_core::path::{dijkstra, objective, route_to_flow, validate_flow, NodeId, Route};
use warehouse_router_core::plan::{plan_scene, ScenePlan};
use warehouse_router_core::vision::detect_objects;
use warehouse_router_core::wire::{
    DataBlockWrite, FrameFormat, FrameHeader, FrameMessage, WireError, FRAME_HEADER_LEN, MAX_FRAME_PAYLOAD,
};
use warehouse_router_core::{BBox, PipelineConfig, PlatformStatus, Point};

#[derive(Default)]
struct Ledger {
    lines: Vec<(bool, String)>,
    certified: usize,
    cert_failures: Vec<String>,
}

impl Ledger {
    fn record(&mut self, name: &str, ok: bool, detail: String) {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.lines.push((ok, name.to_string()));
    }

    /// Flow certification of one route; every route in the suite passes here.
    fn certify(&mut self, route: &Route, graph: &RouteGraph, origin: &str) {
        self.certified += 1;
        let x = route_to_flow(route);
        let report = validate_flow(&x, graph);
        let obj = objective(&x, graph);
        let ok = report.is_valid()
            && obj.as_ref().is_ok_and(|v| (v - route.total_cost).abs() <= 1e-9 * route.total_cost.abs().max(1.0));
        if !ok && self.cert_failures.len() < 5 {
            self.cert_failures.push(format!("{origin}: {:?}, objective {obj:?}", report.violations));
        }
    }

    fn certify_plan(&mut self, plan: &ScenePlan, origin: &str) {
        for p in &plan.platforms {
            if let (Some(r), Some(g)) = (&p.route, &p.graph) {
                self.certify(&r.route(), g, origin);
            }
        }
    }
}

fn random_cost_matrix(rng: &mut ChaCha8Rng, m: usize) -> Vec<Vec<Option<f64>>> {
    let integer = rng.gen_bool(0.5);
    let density = rng.gen_range(0.25..0.8);
    let mut c = vec![vec![None; m]; m];
    for i in 0..m {
        c[i][i] = Some(0.0);
        for j in i + 1..m {
            if rng.gen_bool(density) {
                let w = if integer { rng.gen_range(1..12) as f64 } else { rng.gen_range(0.01..100.0) };
                c[i][j] = Some(w);
                c[j][i] = Some(w);
            }
        }
    }
    c
}

fn dijkstra_exactness(l: &mut Ledger) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut graphs, mut routed, mut bad) = (0, 0, Vec::new());
    for m in 3..=9 {
        for _ in 0..200 {
            let c = random_cost_matrix(&mut rng, m);
            let g = RouteGraph::from_matrix(c.clone()).expect("square matrix");
            let got = dijkstra(&g, NodeId(1), NodeId(m as u32)).expect("valid ids");
            let want = oracle::brute_shortest_path(&c, 0, m - 1);
            graphs += 1;
            match (&got, &want) {
                (None, None) => {}
                // Exact equality, no tolerance.
                (Some(r), Some((cost, _))) if r.total_cost == *cost => {
                    routed += 1;
                    l.certify(r, &g, "random graph");
                }
                _ => bad.push(format!("m={m}: got {:?}, want {:?}", got.map(|r| r.total_cost), want.map(|w| w.0))),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = bad.is_empty() && secs < 30.0;
    l.record(
        "dijkstra exactness",
        ok,
        format!("{graphs} graphs (sizes 3-9), {routed} routed, {} mismatches, {secs:.2}s {:?}", bad.len(), bad.first()),
    );
}

fn terminals(plan: &ScenePlan, id: u32) -> Option<(Terminal, Terminal)> {
    let p = plan.platform(id)?;
    let (s, g) = (p.source?, p.goal?);
    Some((
        Terminal::new(id, TerminalKind::Source, s, &plan.obstacles, &plan.clearance),
        Terminal::new(id, TerminalKind::Sink, g, &plan.obstacles, &plan.clearance),
    ))
}

fn routing_scenes() -> Vec<(u32, ScenePlan)> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    (0..50)
        .map(|i| {
            let p = (i % 3) as u32 + 1;
            let n = rng.gen_range(3..=12);
            let s = random_routing_scene(&mut rng, 640, 480, p, n);
            (p, plan_scene(&s.frame, &s.config).expect("scene plans"))
        })
        .collect()
}

fn block_decomposition(l: &mut Ledger, scenes: &[(u32, ScenePlan)]) {
    let (mut graphs, mut routes, mut bad) = (0, 0, Vec::new());
    for (k, (p, plan)) in scenes.iter().enumerate() {
        for out in &plan.platforms {
            let Some(g) = &out.graph else { continue };
            let (src, snk) = terminals(plan, out.platform_id).expect("routed platform has terminals");
            let nodes: Vec<Candidate> = g.nodes[1..g.m() - 1]
                .iter()
                .map(|n| match n.kind {
                    NodeKind::Corner { obstacle, corner } => Candidate { obstacle, corner, pos: n.pos },
                    other => panic!("interior node {other:?}"),
                })
                .collect();
            let scratch = build_adjacency(&src, &snk, &nodes, &plan.obstacles, &plan.clearance);
            graphs += 1;
            let same_entries = scratch.cost.len() == g.cost.len()
                && scratch.cost.iter().flatten().zip(g.cost.iter().flatten()).all(|(a, b)| a.map(f64::to_bits) == b.map(f64::to_bits));
            let m = g.m() as u32;
            let (ra, rb) = (dijkstra(g, NodeId(1), NodeId(m)).unwrap(), dijkstra(&scratch, NodeId(1), NodeId(m)).unwrap());
            routes += ra.is_some() as usize;
            let size_ok = g.m() <= m_max(plan.obstacles.len(), *p as usize);
            if !(same_entries && scratch.nodes == g.nodes && ra == rb && size_ok) {
                bad.push(format!("scene {k} platform {}", out.platform_id));
            }
        }
        l.certify_plan(plan, "routing scene");
    }
    l.record(
        "block-decomposition equivalence",
        bad.is_empty() && graphs >= 50,
        format!("{} scenes, {graphs} platform matrices, {routes} routes identical, mismatches {bad:?}", scenes.len()),
    );
}

/// Route clearance against every obstacle box, skipping the platform's own
/// body and obstacles a terminal footprint already overlaps on the segments
/// leaving or reaching that terminal.
fn plan_clearance(plan: &ScenePlan) -> (usize, f64) {
    let r = plan.clearance.required();
    let mut worst = f64::INFINITY;
    let mut segments = 0;
    for out in &plan.platforms {
        let Some(route) = &out.route else { continue };
        let (src, snk) = terminals(plan, out.platform_id).unwrap();
        let w = &route.waypoints_px;
        for (i, seg) in w.windows(2).enumerate() {
            segments += 1;
            for (k, o) in plan.obstacles.iter().enumerate() {
                let exempt = o.owner == Some(out.platform_id)
                    || (i == 0 && src.exempts(k))
                    || (i + 2 == w.len() && snk.exempts(k));
                if !exempt {
                    worst = worst.min(oracle::segment_rect_distance(seg[0], seg[1], &o.rect) - r);
                }
            }
        }
    }
    (segments, worst)
}

fn clearance_safety(l: &mut Ledger, scenes: &[(u32, ScenePlan)], extra: &[ScenePlan]) {
    let mut segments = 0;
    let mut worst = f64::INFINITY;
    for plan in scenes.iter().map(|(_, p)| p).chain(extra) {
        let (s, w) = plan_clearance(plan);
        segments += s;
        worst = worst.min(w);
    }
    l.record(
        "clearance safety",
        worst >= -1e-6 && segments > 0,
        format!("{segments} route segments, minimum distance minus clearance = {worst:.6} px"),
    );
}

fn matrix_size(l: &mut Ledger) -> ScenePlan {
    let s = grid_scene(3);
    let plan = plan_scene(&s.frame, &s.config).unwrap();
    let p = plan.platform(1).unwrap();
    let m = p.graph.as_ref().map_or(0, RouteGraph::m);
    let ok = m == 14 && p.real_obstacles.len() == 3 && plan.overlay.nodes.len() == 12 && m_max(3, 2) == 16 && m_max(3, 1) == 14;
    l.record(
        "matrix size",
        ok,
        format!("3 real obstacles, {} feasible nodes, m = {m}; m_max(3,2) = {}", plan.overlay.nodes.len(), m_max(3, 2)),
    );
    l.certify_plan(&plan, "matrix size scene");
    plan
}

fn segmentation(l: &mut Ledger) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut planted, mut found, mut worst, mut extra) = (0, 0, 0.0f64, 0);
    for _ in 0..50 {
        let n = rng.gen_range(3..=12);
        let cfg = config_for_platforms(3);
        let s = random_detection_scene(&mut rng, 640, 480, n, cfg.gap_px);
        let objs = detect_objects(&s.frame, &cfg.classes, cfg.gap_px, cfg.min_area_px()).unwrap();
        planted += s.planted.len();
        extra += objs.len().saturating_sub(s.planted.len());
        for t in &s.planted {
            if let Some(o) = objs.iter().find(|o| o.bbox == t.bbox && o.role == t.role && o.platform_id == t.platform_id) {
                found += 1;
                let c = t.centroid();
                worst = worst.max(((o.centroid.x - c.x).powi(2) + (o.centroid.y - c.y).powi(2)).sqrt());
            }
        }
    }
    l.record(
        "segmentation",
        found == planted && extra == 0 && worst <= 0.5,
        format!("{found}/{planted} planted rectangles found with exact bbox and class, {extra} spurious, max centroid error {worst:.3} px"),
    );
}

fn merge_rule(l: &mut Ledger) {
    let cfg = PipelineConfig::default();
    let thr = cfg.clearance.clearance().min_corridor();
    let count = |gap: i32| {
        let a = BBox::new(100, 100, 130, 160);
        let b = BBox::new(130 + gap, 100, 160 + gap, 160);
        let frame = paint(400, 300, &[Planted::obstacle(a), Planted::obstacle(b)]);
        let plan = plan_scene(&frame, &cfg).unwrap();
        plan.obstacles.iter().filter(|o| o.owner.is_none()).count()
    };
    let below = thr.ceil() as i32 - 1;
    let above = thr.ceil() as i32 + 1;
    let (n_below, n_above) = (count(below), count(above));
    l.record(
        "merge rule",
        n_below == 1 && n_above == 2 && count(12) == 1,
        format!("threshold {thr:.1} px: gap {below} -> {n_below} obstacle(s), gap {above} -> {n_above}"),
    );
}

fn throughput(l: &mut Ledger) {
    let opts = BenchOptions { row: Duration::from_millis(300), rows: 3, obstacles: 6, platforms: 1 };
    let tables = match run_pipeline_bench(&opts) {
        Ok(t) => t,
        Err(e) => return l.record("throughput", false, format!("bench failed: {e:#}")),
    };
    let shaped = tables.iter().all(|t| {
        let r = t.render();
        r.contains("| Time (ms) | Frames | FPS | Sampling (ms) |") && t.rows.len() == opts.rows
    });
    for t in &tables {
        println!("{}", t.render());
    }
    let total = tables.iter().find(|t| t.stage == "total").and_then(|t| t.mean_fps()).unwrap_or(0.0);
    l.record("throughput", shaped && total >= 15.0, format!("{} four-column tables, end-to-end {total:.1} fps on 640x480 (floor 15)", tables.len()));
}

fn protocol(l: &mut Ledger) {
    let mut bad = Vec::new();
    let mut cases = 0;
    for (fmt, len) in [(FrameFormat::P6, 0usize), (FrameFormat::Jpeg, 1), (FrameFormat::P6, 255), (FrameFormat::Jpeg, 65536), (FrameFormat::P6, 640 * 480 * 3 + 15)] {
        cases += 1;
        let payload: Vec<u8> = (0..len).map(|i| (i * 31 % 256) as u8).collect();
        let msg = FrameMessage::new(fmt, payload);
        let bytes = msg.encode().unwrap();
        let back = FrameMessage::decode(&bytes);
        if bytes.len() != FRAME_HEADER_LEN + len || back != Ok((msg.clone(), bytes.len())) || msg.encode().unwrap() != bytes {
            bad.push(format!("frame {fmt:?} len {len}"));
        }
    }
    let max = FrameHeader { format: FrameFormat::P6, length: MAX_FRAME_PAYLOAD };
    let over = { let mut h = max.encode(); h[4..8].copy_from_slice(&(MAX_FRAME_PAYLOAD + 1).to_be_bytes()); h };
    cases += 2;
    if FrameHeader::decode(&max.encode()) != Ok(max) {
        bad.push("max header".into());
    }
    if !matches!(FrameHeader::decode(&over), Err(WireError::TooLarge(_))) {
        bad.push("oversize header accepted".into());
    }
    for (db, start, len) in [(0u16, 0u16, 0usize), (65535, 65535, 1), (1, 1023, 1), (7, 0, MOCK_BLOCK_SIZE), (u16::MAX, 0, u16::MAX as usize)] {
        cases += 1;
        let w = DataBlockWrite { db, start, payload: vec![0xA5; len] };
        let bytes = w.encode().unwrap();
        if DataBlockWrite::decode(&bytes) != Ok((w.clone(), bytes.len())) || w.encode().unwrap() != bytes {
            bad.push(format!("block db {db} start {start} len {len}"));
        }
    }
    let plc = MockPlcServer::bind("127.0.0.1:0").unwrap();
    let mut c = PlcConnection::connect(plc.local_addr(), Duration::from_secs(2)).unwrap();
    let full: Vec<u8> = (0..MOCK_BLOCK_SIZE).map(|i| (i % 251) as u8).collect();
    for (db, start, payload) in [(1u16, 0u16, full.clone()), (2, 1023, vec![0xFF]), (65535, 0, vec![0, 1, 2]), (1, 512, vec![9; 8])] {
        cases += 1;
        let ok = c.write_block(db, start, &payload).is_ok()
            && c.read_block(db, start, payload.len() as u16).ok().as_deref() == Some(&payload[..]);
        if !ok {
            bad.push(format!("mock plc db {db} start {start}"));
        }
    }
    cases += 1;
    let mut expect = full;
    expect[512..520].copy_from_slice(&[9; 8]);
    if plc.block(1).as_deref() != Some(&expect[..]) {
        bad.push("mock plc block contents".into());
    }
    l.record("protocol round-trips", bad.is_empty(), format!("{cases} boundary cases, failures {bad:?}"));
}

fn paper_scenes(l: &mut Ledger) -> Vec<ScenePlan> {
    let mut plans = Vec::new();
    let mut detail = Vec::new();
    let mut ok = true;
    for n in [3, 6, 18] {
        let s = grid_scene(n);
        let plan = plan_scene(&s.frame, &s.config).unwrap();
        let p = plan.platform(1).unwrap();
        ok &= p.status == PlatformStatus::Routed;
        detail.push(format!("{n} obstacles: {:?}, {} hops", p.status, p.route.as_ref().map_or(0, |r| r.hops)));
        l.certify_plan(&plan, "grid scene");
        plans.push(plan);
    }
    // Frame-spanning wall between platform and goal.
    let mut cfg = config_for_platforms(1);
    cfg.goals.insert(1, Point::new(500.0, 240.0));
    let walled = paint(640, 480, &[Planted::platform(1, BBox::new(20, 200, 36, 233)), Planted::obstacle(BBox::new(300, 0, 315, 479))]);
    let plan = plan_scene(&walled, &cfg).unwrap();
    let status = plan.platforms[0].status;
    ok &= status == PlatformStatus::NoRoute && plan.platforms[0].motion.is_empty();
    detail.push(format!("walled goal: {status:?}"));
    l.record("paper scenes", ok, detail.join(", "));
    plans
}

fn determinism(l: &mut Ledger, scenes: &[(u32, ScenePlan)]) {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut same = 0;
    for (p, plan) in scenes.iter().take(10) {
        let n = rng.gen_range(3..=12);
        let s = random_routing_scene(&mut rng, 640, 480, *p, n);
        let again = plan_scene(&s.frame, &s.config).unwrap();
        same += (serde_json::to_string(&again).unwrap() == serde_json::to_string(plan).unwrap()) as usize;
    }
    l.record("determinism", same == 10, format!("{same}/10 scenes re-planned to byte-identical JSON"));
}

fn main() -> ExitCode {
    // Accept and ignore libtest arguments such as --nocapture.
    let mut l = Ledger::default();
    dijkstra_exactness(&mut l);
    let scenes = routing_scenes();
    block_decomposition(&mut l, &scenes);
    let size_plan = matrix_size(&mut l);
    segmentation(&mut l);
    let mut extra = paper_scenes(&mut l);
    extra.push(size_plan);
    clearance_safety(&mut l, &scenes, &extra);
    merge_rule(&mut l);
    throughput(&mut l);
    protocol(&mut l);
    determinism(&mut l, &scenes);
    let cert_ok = l.cert_failures.is_empty() && l.certified > 0;
    let detail = format!("{} routes certified, failures {:?}", l.certified, l.cert_failures);
    l.record("flow certification", cert_ok, detail);

    let failed: Vec<&str> = l.lines.iter().filter(|(ok, _)| !ok).map(|(_, n)| n.as_str()).collect();
    println!("\nacceptance: {} passed, {} failed", l.lines.len() - failed.len(), failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
