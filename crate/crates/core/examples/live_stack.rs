//! Runs the simulated robot and the inference service in one process and
//! watches the stream through a headless WebSocket console.
//!
//! ```text
//! cargo run --release --example live_stack -- [seconds]
//! ```

use std::net::TcpStream;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use teleop::service::{start_service, ServiceConfig, Stage};
use teleop::sim::{Mission, RobotServer, RobotServerConfig, Simulator};
use teleop::transport::{decode_message, encode_message, ControlCommand, Message, VehicleMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let secs: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(5);
    let stop = Arc::new(AtomicBool::new(false));

    let robot = RobotServer::start(
        Simulator::new(Mission::standard(1, 0).scene),
        &RobotServerConfig {
            media_addr: "127.0.0.1:0".into(),
            control_addr: "127.0.0.1:0".into(),
            fps: 30.0,
        },
        stop.clone(),
    )?;
    let service = start_service(
        ServiceConfig {
            robot: robot.media_addr().to_string(),
            control_port: robot.control_addr().port(),
            listen: "127.0.0.1:0".into(),
            ..ServiceConfig::default()
        },
        stop.clone(),
    )?;
    let addr = service.console_addr();
    println!("console endpoint ws://{addr}/");

    let tcp = TcpStream::connect(addr)?;
    tcp.set_read_timeout(Some(Duration::from_millis(200)))?;
    let (mut ws, _) = tungstenite::client(format!("ws://{addr}/"), tcp)?;

    let end = Instant::now() + Duration::from_secs(secs);
    let (mut frames, mut reds, mut switched) = (0u64, 0u64, false);
    while Instant::now() < end {
        let bytes = match ws.read() {
            Ok(tungstenite::Message::Binary(b)) => b,
            Ok(_) => continue,
            Err(tungstenite::Error::Io(e)) if e.kind() == std::io::ErrorKind::WouldBlock => {
                continue
            }
            Err(tungstenite::Error::Io(e)) if e.kind() == std::io::ErrorKind::TimedOut => continue,
            Err(e) => return Err(e.into()),
        };
        match decode_message(&bytes)?.1 {
            Message::VideoFrame(_) => frames += 1,
            Message::Detections(d) => {
                reds += d.items.iter().filter(|i| i.percent >= 50).count() as u64;
            }
            Message::Heartbeat(Some(s)) => println!("robot status {s:?}"),
            _ => {}
        }
        if frames == 30 && !switched {
            let cmd = Message::Control(ControlCommand::ModeSwitch(VehicleMode::Uav));
            ws.send(tungstenite::Message::Binary(encode_message(&cmd, 1, 0)?))?;
            switched = true;
        }
    }
    println!("{frames} video frames, {reds} red detections seen by the console");

    stop.store(true, Ordering::SeqCst);
    let snap = service.wait(None)?;
    robot.join();
    println!(
        "service: {} in, {} out, {} dropped, end-to-end p50 {:.1} ms",
        snap.counters.frames_in,
        snap.counters.frames_out,
        snap.counters.dropped,
        snap.stage(Stage::EndToEnd).p50_ms
    );
    Ok(())
}
