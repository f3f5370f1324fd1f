//! Reference acquisition client: streams frames to the ingest server.

use std::path::PathBuf;
use std::process::ExitCode;
use std::thread::sleep;
use std::time::{Duration, Instant};

use anyhow::Context;
use clap::Parser;
use warehouse_router::ingest::{file_source, FrameClient};
use warehouse_router::synth::{grid_scene, paint};
use warehouse_router_core::wire::ACK;
use warehouse_router_core::Frame;

#[derive(Parser)]
#[command(version, about = "Send frames to a warehouse-router ingest server")]
struct Args {
    /// Ingest server as host:port.
    #[arg(long)]
    server: String,
    /// Directory or file of P6/JPEG images, or `camera` for the simulated camera.
    #[arg(long)]
    input: String,
    /// Frames per second; 0 sends as fast as possible.
    #[arg(long, default_value_t = 15.0)]
    fps: f64,
    /// Stop after this many frames (camera mode runs until interrupted otherwise).
    #[arg(long)]
    count: Option<u64>,
}

/// Synthetic camera: the 6-obstacle grid scene with its platform drifting
/// right one pixel per frame.
fn camera_frame(i: u64) -> Frame {
    let mut scene = grid_scene(6);
    let shift = (i % 60) as i32;
    if let Some(p) = scene.planted.iter_mut().find(|p| p.platform_id.is_some()) {
        p.bbox.x_min += shift;
        p.bbox.x_max += shift;
    }
    paint(640, 480, &scene.planted)
}

fn run(args: Args) -> anyhow::Result<()> {
    anyhow::ensure!(args.fps >= 0.0 && args.fps.is_finite(), "--fps must be non-negative");
    let period = (args.fps > 0.0).then(|| Duration::from_secs_f64(1.0 / args.fps));
    let mut client = FrameClient::connect(args.server.as_str(), Duration::from_secs(5))
        .with_context(|| format!("connecting to {}", args.server))?;
    let mut frames: Box<dyn Iterator<Item = anyhow::Result<Frame>>> = if args.input == "camera" {
        Box::new((0..).map(|i| Ok(camera_frame(i))))
    } else {
        let path = PathBuf::from(&args.input);
        let files = file_source(&path).with_context(|| format!("reading {}", path.display()))?;
        Box::new(files.map(|(p, r)| r.with_context(|| format!("decoding {}", p.display()))))
    };
    let limit = args.count.unwrap_or(u64::MAX);
    let (mut sent, mut rejected) = (0u64, 0u64);
    let start = Instant::now();
    while sent + rejected < limit {
        let Some(frame) = frames.next() else { break };
        let frame = frame?;
        let due = Instant::now() + period.unwrap_or_default();
        if client.send_frame(&frame)? == ACK {
            sent += 1;
        } else {
            rejected += 1;
        }
        if period.is_some() {
            sleep(due.saturating_duration_since(Instant::now()));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    eprintln!("{sent} frames acknowledged, {rejected} rejected, {:.2} fps", sent as f64 / secs.max(1e-9));
    anyhow::ensure!(rejected == 0, "{rejected} frames rejected by the server");
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
