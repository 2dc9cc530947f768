use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use teleop::service::{
    evaluate_mission, run_service, ClassifierKind, DetectorKind, Pipeline, ServiceConfig,
};
use teleop::sim::{Mission, RobotServer, RobotServerConfig, Scene, Simulator};

#[derive(Parser)]
#[command(
    name = "teleop",
    version,
    about = "Simulated robot, inference service and offline replay"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve a simulated robot's camera and control endpoints.
    RobotSim(RobotArgs),
    /// Run the detection and threat pipeline between a robot and consoles.
    InferenceService(ServiceArgs),
    /// Run a seeded mission through the pipeline offline.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct RobotArgs {
    /// Scene file; defaults to the standard three-person mission scene.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Background texture seed; overrides the scene file's.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 7701)]
    media_port: u16,
    #[arg(long, default_value_t = 7702)]
    control_port: u16,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum DetectorArg {
    Haar,
    Hog,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Reference,
    Stub,
}

#[derive(Args)]
struct PipelineArgs {
    /// `key = value` settings file; flags given here win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    detector: Option<DetectorArg>,
    #[arg(long, value_enum)]
    classifier: Option<ClassifierArg>,
    /// Score file for `--classifier stub`.
    #[arg(long)]
    stub_scores: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Metrics CSV written at shutdown and on SIGUSR1.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Write every SBS frame as a PPM into this directory.
    #[arg(long)]
    dump_ppm: Option<PathBuf>,
}

#[derive(Args)]
struct ServiceArgs {
    /// Robot host, or `host:port` with control on port + 1.
    #[arg(long)]
    robot: Option<String>,
    /// Console endpoint address.
    #[arg(long)]
    listen: Option<String>,
    /// Serve a static console bundle from this directory.
    #[arg(long)]
    serve_console: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    frames: usize,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

fn service_config(p: &PipelineArgs) -> Result<ServiceConfig, String> {
    let mut c = ServiceConfig::default();
    if let Some(path) = &p.config {
        c.apply_file(path).map_err(|e| e.to_string())?;
    }
    if let Some(d) = p.detector {
        c.pipeline.detector = match d {
            DetectorArg::Haar => DetectorKind::Haar,
            DetectorArg::Hog => DetectorKind::HogSvm,
        };
    }
    match (p.classifier, &p.stub_scores) {
        (Some(ClassifierArg::Reference), _) => c.pipeline.classifier = ClassifierKind::Reference,
        (Some(ClassifierArg::Stub), Some(path)) => {
            c.pipeline.classifier = ClassifierKind::Stub(path.clone())
        }
        (Some(ClassifierArg::Stub), None) => {
            return Err("--classifier stub needs --stub-scores <file>".into())
        }
        (None, Some(path)) => c.pipeline.classifier = ClassifierKind::Stub(path.clone()),
        (None, None) => {}
    }
    if let Some(t) = p.threshold {
        c.pipeline.threshold = t;
    }
    if p.metrics.is_some() {
        c.metrics_path = p.metrics.clone();
    }
    if p.dump_ppm.is_some() {
        c.dump_ppm = p.dump_ppm.clone();
    }
    Ok(c)
}

fn stop_flag() -> Result<Arc<AtomicBool>, String> {
    let stop = Arc::new(AtomicBool::new(false));
    for sig in [signal_hook::consts::SIGINT, signal_hook::consts::SIGTERM] {
        signal_hook::flag::register(sig, stop.clone()).map_err(|e| e.to_string())?;
    }
    Ok(stop)
}

fn robot_sim(a: RobotArgs) -> Result<(), String> {
    let mut scene = match &a.scene {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            Scene::parse(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => Mission::standard(a.seed.unwrap_or(1), 0).scene,
    };
    if let Some(seed) = a.seed {
        scene.background_seed = seed;
    }
    let cfg = RobotServerConfig {
        media_addr: format!("{}:{}", a.host, a.media_port),
        control_addr: format!("{}:{}", a.host, a.control_port),
        fps: a.fps,
    };
    let stop = stop_flag()?;
    let srv =
        RobotServer::start(Simulator::new(scene), &cfg, stop.clone()).map_err(|e| e.to_string())?;
    log::info!(
        "robot media on {}, control on {}",
        srv.media_addr(),
        srv.control_addr()
    );
    let stats = srv.join();
    log::info!(
        "robot stopped after {} frames, {} commands",
        stats.frames,
        stats.commands
    );
    Ok(())
}

fn inference_service(a: ServiceArgs) -> Result<(), String> {
    let mut c = service_config(&a.pipeline)?;
    if let Some(r) = a.robot {
        c.robot = r;
    }
    if let Some(l) = a.listen {
        c.listen = l;
    }
    if a.serve_console.is_some() {
        c.serve_console = a.serve_console;
    }
    let stop = stop_flag()?;
    let dump = Arc::new(AtomicBool::new(false));
    signal_hook::flag::register(signal_hook::consts::SIGUSR1, dump.clone())
        .map_err(|e| e.to_string())?;
    let snap = run_service(c, stop, Some(&dump)).map_err(|e| e.to_string())?;
    log::info!(
        "service stopped: {} frames in, {} out, {} dropped",
        snap.counters.frames_in,
        snap.counters.frames_out,
        snap.counters.dropped
    );
    Ok(())
}

fn replay(a: ReplayArgs) -> Result<(), String> {
    let c = service_config(&a.pipeline)?;
    let pipeline = Pipeline::new(c.pipeline.clone()).map_err(|e| e.to_string())?;
    let mission = Mission::standard(a.seed, a.frames);
    if let Some(dir) = &c.dump_ppm {
        std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
        for f in mission.frames() {
            let seq = f.index as u32;
            let out = pipeline
                .process_frame(&f.image, seq, f.timestamp_us, None)
                .map_err(|e| e.to_string())?;
            let path = dir.join(format!("sbs_{seq:08}.ppm"));
            let file =
                std::fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            teleop::overlay::write_ppm(out.sbs.image(), std::io::BufWriter::new(file))
                .map_err(|e| e.to_string())?;
        }
    }
    let r = evaluate_mission(&pipeline, &mission).map_err(|e| e.to_string())?;
    println!("frames {}", r.frames);
    println!("appearances {}", r.appearances);
    println!("containment {:.4}", r.containment_rate());
    println!("color {:.4}", r.color_rate());
    println!("false_positives {}", r.false_positives);
    if let Some(path) = &c.metrics_path {
        std::fs::write(path, r.metrics.to_csv()).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::RobotSim(a) => robot_sim(a),
        Command::InferenceService(a) => inference_service(a),
        Command::Replay(a) => replay(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
