use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, Subcommand};
use warehouse_router::bench::{run_pipeline_bench, BenchOptions};
use warehouse_router::config::{resolve, CONFIG_ENV};
use warehouse_router::ingest::{read_image, DEFAULT_INGEST_PORT};
use warehouse_router::pnm::write_p6;
use warehouse_router::render::annotate;
use warehouse_router::service::{serve, ServeOptions};
use warehouse_router::suites::all_suites;
use warehouse_router_core::plan::plan_scene;
use warehouse_router_core::PlatformStatus;

/// Camera-driven route planning for warehouse platforms.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan routes for one image and print the scene as JSON.
    Plan {
        /// P6 pixmap or JPEG.
        #[arg(long)]
        input: PathBuf,
        /// Write the scene JSON here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write the annotated frame as a P6 pixmap.
        #[arg(long)]
        annotated: Option<PathBuf>,
    },
    /// Run frame ingest, the pipeline and the HTTP/WS API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, default_value_t = DEFAULT_INGEST_PORT)]
        ingest_port: u16,
        /// Default PLC address for platforms without a dispatch entry.
        #[arg(long)]
        plc: Option<String>,
        /// Process image files from this file or directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Print per-stage throughput tables.
    Bench {
        /// Seconds per table row.
        #[arg(long, default_value_t = 1.0)]
        row_secs: f64,
        #[arg(long, default_value_t = 5)]
        rows: usize,
        #[arg(long, default_value_t = 6)]
        obstacles: usize,
        #[arg(long, default_value_t = 1)]
        platforms: u32,
        /// Emit JSON instead of markdown.
        #[arg(long)]
        json: bool,
    },
    /// Run the brute-force oracle suites.
    Oracle {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Plan { input, output, annotated } => {
            let cfg = resolve(cli.config.as_deref())?;
            let frame = read_image(&input)
                .with_context(|| format!("reading {}", input.display()))?
                .with_scale(cfg.mm_per_px)?;
            let plan = plan_scene(&frame, &cfg)?;
            let json = serde_json::to_string_pretty(&plan)?;
            match output {
                Some(p) => std::fs::write(&p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
                None => println!("{json}"),
            }
            if let Some(p) = annotated {
                write_p6(&p, &annotate(&frame, &plan)).with_context(|| format!("writing {}", p.display()))?;
            }
            for p in &plan.platforms {
                if p.status != PlatformStatus::Routed {
                    eprintln!("platform {}: {:?}", p.platform_id, p.status);
                }
            }
            let failed = plan
                .platforms
                .iter()
                .any(|p| matches!(p.status, PlatformStatus::NoRoute | PlatformStatus::PlatformLost));
            Ok(if failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
        }
        Command::Serve { listen, ingest_port, plc, input } => {
            let cfg = resolve(cli.config.as_deref())?;
            let ingest = SocketAddr::new(listen.ip(), ingest_port);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(cfg, ServeOptions { listen, ingest, plc, input }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench { row_secs, rows, obstacles, platforms, json } => {
            anyhow::ensure!(row_secs > 0.0 && rows > 0, "row length and row count must be positive");
            let opts = BenchOptions { row: Duration::from_secs_f64(row_secs), rows, obstacles, platforms };
            let tables = run_pipeline_bench(&opts)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&tables)?);
            } else {
                for t in &tables {
                    println!("{}", t.render());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { seed } => {
            let reports = all_suites(seed);
            for r in &reports {
                println!("{r}");
            }
            Ok(if reports.iter().all(|r| r.passed()) { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // Usage errors exit 1; code 2 is reserved for unroutable scenes.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
