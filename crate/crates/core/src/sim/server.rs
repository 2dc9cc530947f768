//! Network endpoints of the simulated robot.
//!
//! A single stepper thread owns the [`Simulator`]. Connection threads only
//! exchange messages with it: commands flow in over a channel, encoded frames
//! and status heartbeats flow out through per-client queues.

use std::io::{self, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::dynamics::{SimCommand, Simulator};
use crate::telemetry::pose_to_pan_tilt;
use crate::transport::{
    encode_message, read_envelope, Fanout, Message, PlaneQueue, RobotStatus, SequenceCounter,
    TransportError, VideoFrame,
};

/// Status heartbeat period.
pub const HEARTBEAT_PERIOD: Duration = Duration::from_secs(1);
/// Outbound frames buffered per media client before the oldest is dropped.
const MEDIA_CLIENT_CAPACITY: usize = 2;
const CONTROL_WATERMARK: usize = 256;
const POLL: Duration = Duration::from_millis(20);

#[derive(Debug, Clone, PartialEq)]
pub struct RobotServerConfig {
    pub media_addr: String,
    pub control_addr: String,
    pub fps: f64,
}

impl Default for RobotServerConfig {
    fn default() -> Self {
        Self {
            media_addr: format!("127.0.0.1:{}", crate::transport::DEFAULT_MEDIA_PORT),
            control_addr: format!("127.0.0.1:{}", crate::transport::DEFAULT_CONTROL_PORT),
            fps: 30.0,
        }
    }
}

/// Counters reported when the server stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RobotServerStats {
    pub frames: u64,
    pub commands: u64,
    pub media_dropped: u64,
}

/// A running robot endpoint. Dropping it does not stop it; set the shutdown
/// flag and call [`RobotServer::join`].
#[derive(Debug)]
pub struct RobotServer {
    media_addr: SocketAddr,
    control_addr: SocketAddr,
    threads: Vec<JoinHandle<()>>,
    stepper: JoinHandle<RobotServerStats>,
}

type Streams = Arc<Mutex<Vec<TcpStream>>>;

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

impl RobotServer {
    /// Binds both endpoints and starts stepping at `config.fps`.
    pub fn start(
        sim: Simulator,
        config: &RobotServerConfig,
        shutdown: Arc<AtomicBool>,
    ) -> io::Result<Self> {
        if !(config.fps > 0.0 && config.fps.is_finite()) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                "fps must be positive",
            ));
        }
        let media = TcpListener::bind(&config.media_addr)?;
        let control = TcpListener::bind(&config.control_addr)?;
        let (media_addr, control_addr) = (media.local_addr()?, control.local_addr()?);
        media.set_nonblocking(true)?;
        control.set_nonblocking(true)?;

        let media_out: Arc<Fanout<Arc<Vec<u8>>>> =
            Arc::new(Fanout::new(MEDIA_CLIENT_CAPACITY, CONTROL_WATERMARK));
        let control_out: Arc<Fanout<Arc<Vec<u8>>>> = Arc::new(Fanout::new(1, CONTROL_WATERMARK));
        let streams: Streams = Arc::default();
        let (cmd_tx, cmd_rx) = mpsc::channel();

        let mut threads = Vec::new();
        {
            let (out, streams, stop) = (media_out.clone(), streams.clone(), shutdown.clone());
            threads.push(thread::spawn(move || {
                accept_loop(media, &stop, |s| {
                    lock(&streams).push(s.try_clone()?);
                    let q = out.subscribe();
                    thread::spawn(move || writer(s, q));
                    Ok(())
                })
            }));
        }
        {
            let (out, streams, stop) = (control_out.clone(), streams.clone(), shutdown.clone());
            threads.push(thread::spawn(move || {
                accept_loop(control, &stop, |s| {
                    lock(&streams).push(s.try_clone()?);
                    let q = out.subscribe();
                    let w = s.try_clone()?;
                    thread::spawn(move || writer(w, q));
                    let tx = cmd_tx.clone();
                    thread::spawn(move || control_reader(s, tx));
                    Ok(())
                })
            }));
        }
        let fps = config.fps;
        let stepper = thread::spawn(move || {
            let stats = run_stepper(sim, fps, cmd_rx, &media_out, &control_out, &shutdown);
            media_out.close_all();
            control_out.close_all();
            for s in lock(&streams).drain(..) {
                let _ = s.shutdown(std::net::Shutdown::Both);
            }
            stats
        });
        Ok(Self {
            media_addr,
            control_addr,
            threads,
            stepper,
        })
    }

    pub fn media_addr(&self) -> SocketAddr {
        self.media_addr
    }

    pub fn control_addr(&self) -> SocketAddr {
        self.control_addr
    }

    /// Waits for the threads to finish after shutdown was requested.
    pub fn join(self) -> RobotServerStats {
        let stats = self.stepper.join().unwrap_or_default();
        for t in self.threads {
            let _ = t.join();
        }
        stats
    }
}

fn accept_loop(
    listener: TcpListener,
    stop: &AtomicBool,
    mut on_conn: impl FnMut(TcpStream) -> io::Result<()>,
) {
    while !stop.load(Ordering::Relaxed) {
        match listener.accept() {
            Ok((s, peer)) => {
                log::info!("robot: connection from {peer}");
                let setup = s
                    .set_nonblocking(false)
                    .and_then(|_| s.set_nodelay(true))
                    .and_then(|_| on_conn(s));
                if let Err(e) = setup {
                    log::warn!("robot: dropping {peer}: {e}");
                }
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(e) => {
                log::warn!("robot: accept failed: {e}");
                thread::sleep(POLL);
            }
        }
    }
}

/// Drains `q` into the socket until either side closes.
fn writer(mut s: TcpStream, q: Arc<PlaneQueue<Arc<Vec<u8>>>>) {
    loop {
        match q.pop_timeout(Duration::from_millis(200)) {
            Some(item) => {
                if s.write_all(&item.into_inner()).is_err() {
                    break;
                }
            }
            None if q.is_closed() => break,
            None => {}
        }
    }
    q.close();
}

/// Decodes commands from one control client. CONTROL and HEAD_POSE become
/// simulator commands; anything else is ignored.
fn control_reader(mut s: TcpStream, tx: Sender<SimCommand>) {
    loop {
        let env = match read_envelope(&mut s) {
            Ok(Some(env)) => env,
            Ok(None) => break,
            Err(TransportError::Protocol(e))
                if matches!(
                    e.kind,
                    crate::transport::ProtocolErrorKind::CrcMismatch { .. }
                ) =>
            {
                log::warn!("robot: dropped corrupt envelope: {e}");
                continue;
            }
            Err(e) => {
                log::warn!("robot: control stream closed: {e}");
                break;
            }
        };
        let cmd = match env.message() {
            Ok(Message::Control(c)) => SimCommand::Control(c),
            Ok(m @ Message::HeadPose(_)) => match m.head_pose() {
                Some((pose, seq)) => SimCommand::PanTilt(pose_to_pan_tilt(&pose, seq)),
                None => {
                    log::warn!("robot: HEAD_POSE without a valid telemetry frame");
                    continue;
                }
            },
            Ok(Message::Heartbeat(_)) => continue,
            Ok(m) => {
                log::debug!("robot: ignoring {:?} on control", m.kind());
                continue;
            }
            Err(e) => {
                log::warn!("robot: bad payload: {e}");
                continue;
            }
        };
        if tx.send(cmd).is_err() {
            break;
        }
    }
}

fn heartbeat(status: RobotStatus, seq: &mut SequenceCounter, ts: u64) -> Arc<Vec<u8>> {
    Arc::new(
        encode_message(&Message::Heartbeat(Some(status)), seq.next_seq(), ts)
            .expect("heartbeat fits"),
    )
}

fn run_stepper(
    mut sim: Simulator,
    fps: f64,
    commands: Receiver<SimCommand>,
    media: &Fanout<Arc<Vec<u8>>>,
    control: &Fanout<Arc<Vec<u8>>>,
    stop: &AtomicBool,
) -> RobotServerStats {
    let dt = 1.0 / fps;
    let period = Duration::from_secs_f64(dt);
    let mut video_seq = SequenceCounter::starting_at(1);
    let mut hb_seq = SequenceCounter::starting_at(1);
    let mut stats = RobotServerStats::default();
    let mut last_hb = Instant::now();
    let mut deadline = Instant::now();

    while !stop.load(Ordering::Relaxed) {
        let pending: Vec<SimCommand> = commands.try_iter().collect();
        stats.commands += pending.len() as u64;
        sim.step(dt, &pending);

        let img = sim.render();
        let (w, h) = (img.width() as u16, img.height() as u16);
        let msg = Message::VideoFrame(VideoFrame::gray(w, h, img.into_raw()));
        match encode_message(&msg, video_seq.next_seq(), sim.time_us()) {
            Ok(bytes) => stats.media_dropped += media.publish_media(Arc::new(bytes)).dropped as u64,
            Err(e) => log::error!("robot: frame encode failed: {e}"),
        }
        stats.frames += 1;

        // Echo the state right after commands land so operators see mode
        // and E-stop changes within a frame.
        if !pending.is_empty() || last_hb.elapsed() >= HEARTBEAT_PERIOD {
            control.publish_control(heartbeat(sim.status(), &mut hb_seq, sim.time_us()));
            last_hb = Instant::now();
        }

        deadline += period;
        let now = Instant::now();
        if deadline > now {
            thread::sleep(deadline - now);
        } else if now - deadline > period {
            deadline = now;
        }
    }
    stats
}
