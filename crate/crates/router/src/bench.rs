//! Per-stage throughput measurement in the shape of the paper's tables:
//! elapsed time, items completed, frames per second, sampling period.

use std::fmt::Write as _;
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use warehouse_router_core::plan::plan_scene;
use warehouse_router_core::Frame;

use crate::ingest::{FrameClient, FrameServer, StandardDecoder};
use crate::pnm::encode_p6;
use crate::synth::{grid_scene, random_routing_scene, Scene};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRow {
    pub elapsed_ms: f64,
    pub count: u64,
    /// `None` when nothing completed.
    pub fps: Option<f64>,
    pub sampling_ms: Option<f64>,
}

impl StageRow {
    pub fn from_counts(elapsed_ms: f64, count: u64) -> Self {
        if count == 0 || elapsed_ms <= 0.0 {
            return Self { elapsed_ms, count, fps: None, sampling_ms: None };
        }
        Self { elapsed_ms, count, fps: Some(count as f64 * 1000.0 / elapsed_ms), sampling_ms: Some(elapsed_ms / count as f64) }
    }

    pub fn is_error(&self) -> bool {
        self.fps.is_none()
    }
}

/// Runs `stage` repeatedly for about `duration` and reports the rate. A
/// stage error ends the run; items completed before it still count.
pub fn measure_stage_fps<E>(mut stage: impl FnMut() -> Result<(), E>, duration: Duration) -> StageRow {
    let start = Instant::now();
    let mut count = 0u64;
    while start.elapsed() < duration {
        if stage().is_err() {
            break;
        }
        count += 1;
    }
    StageRow::from_counts(start.elapsed().as_secs_f64() * 1000.0, count)
}

/// Runs `stage` exactly `n` times.
pub fn measure_stage_count<E>(mut stage: impl FnMut() -> Result<(), E>, n: u64) -> StageRow {
    let start = Instant::now();
    let mut count = 0u64;
    for _ in 0..n {
        if stage().is_err() {
            break;
        }
        count += 1;
    }
    StageRow::from_counts(start.elapsed().as_secs_f64() * 1000.0, count)
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTable {
    pub stage: String,
    pub rows: Vec<StageRow>,
}

impl StageTable {
    pub fn mean_fps(&self) -> Option<f64> {
        let v: Vec<f64> = self.rows.iter().filter_map(|r| r.fps).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Markdown table with the four columns of the reference tables.
    pub fn render(&self) -> String {
        let mut s = format!("{}\n| Time (ms) | Frames | FPS | Sampling (ms) |\n|---:|---:|---:|---:|\n", self.stage);
        for r in &self.rows {
            let fps = r.fps.map_or("error".to_string(), |v| format!("{v:.2}"));
            let smp = r.sampling_ms.map_or("error".to_string(), |v| format!("{v:.2}"));
            let _ = writeln!(s, "| {:.0} | {} | {} | {} |", r.elapsed_ms, r.count, fps, smp);
        }
        if let Some(m) = self.mean_fps() {
            let _ = writeln!(s, "| mean | | {m:.2} | {:.2} |", 1000.0 / m);
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    /// Length of one table row.
    pub row: Duration,
    pub rows: usize,
    pub obstacles: usize,
    pub platforms: u32,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self { row: Duration::from_millis(1000), rows: 5, obstacles: 6, platforms: 1 }
    }
}

/// 640x480 benchmark scene: the grid layout for one platform, a seeded random
/// layout otherwise.
pub fn bench_scene(obstacles: usize, platforms: u32) -> Scene {
    if platforms <= 1 {
        grid_scene(obstacles)
    } else {
        random_routing_scene(&mut ChaCha8Rng::seed_from_u64(platforms as u64), 640, 480, platforms, obstacles)
    }
}

fn table(stage: &str, opts: &BenchOptions, mut f: impl FnMut() -> anyhow::Result<()>) -> StageTable {
    let rows = (0..opts.rows).map(|_| measure_stage_fps(&mut f, opts.row)).collect();
    StageTable { stage: stage.into(), rows }
}

/// Measures capture, save, transfer, solve and the chained total on the
/// synthetic scene, then solve rate for 1..=3 platforms.
pub fn run_pipeline_bench(opts: &BenchOptions) -> anyhow::Result<Vec<StageTable>> {
    let scene = bench_scene(opts.obstacles, opts.platforms);
    let cfg = scene.config.clone();
    let capture = || -> Frame { crate::synth::paint(640, 480, &scene.planted) };
    let dir = std::env::temp_dir().join(format!("warehouse-router-bench-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let file = dir.join("frame.ppm");

    let (tx, rx) = mpsc::channel::<Frame>();
    let mut server = FrameServer::bind("127.0.0.1:0", Arc::new(StandardDecoder::default()), Arc::new(tx))?;
    let mut client = FrameClient::connect(server.local_addr(), Duration::from_secs(5))?;
    let mut transfer = |f: &Frame| -> anyhow::Result<Frame> {
        let ack = client.send_frame(f)?;
        anyhow::ensure!(ack == warehouse_router_core::wire::ACK, "frame rejected");
        Ok(rx.recv_timeout(Duration::from_secs(5))?)
    };

    let mut out = Vec::new();
    out.push(table("capture", opts, || {
        std::hint::black_box(capture());
        Ok(())
    }));
    let frame = capture();
    out.push(table("save", opts, || Ok(std::fs::write(&file, encode_p6(&frame))?)));
    out.push(table("transfer", opts, || transfer(&frame).map(drop)));
    out.push(table("solve", opts, || plan_scene(&frame, &cfg).map(drop).map_err(Into::into)));
    out.push(table("total", opts, || {
        let f = capture();
        std::fs::write(&file, encode_p6(&f))?;
        let f = transfer(&f)?;
        plan_scene(&f, &cfg)?;
        Ok(())
    }));
    for p in 1..=3 {
        let s = bench_scene(opts.obstacles, p);
        out.push(table(&format!("solve, {p} platform(s)"), opts, || {
            plan_scene(&s.frame, &s.config).map(drop).map_err(Into::into)
        }));
    }
    server.shutdown();
    let _ = std::fs::remove_dir_all(&dir);
    Ok(out)
}
