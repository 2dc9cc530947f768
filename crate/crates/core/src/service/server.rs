//! The serve loop: robot link, two pipeline stages, console endpoint.
//!
//! ```text
//! robot media ──▶ ingress slot (latest wins) ──▶ analyze ──▶ render+encode ──▶ consoles
//! consoles ──CONTROL/HEAD_POSE──▶ relay queue ──▶ robot control
//! robot control ──HEARTBEAT(status)──▶ consoles
//! ```

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, SyncSender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tungstenite::protocol::Role;
use tungstenite::WebSocket;

use super::config::{ConfigError, ServiceConfig};
use super::metrics::{MetricsSnapshot, Stage, StageMetrics};
use super::pipeline::{encode_outputs, Pipeline, PipelineError};
use crate::classifier::ThreatVerdict;
use crate::transport::{
    decode_envelope, encode_message, read_envelope, Fanout, Message, MessageKind, PixelFormat,
    PlaneQueue, SequenceCounter, VideoFrame,
};
use crate::vision::{Detection, GrayImage, RgbImage};

pub const RECONNECT_INITIAL: Duration = Duration::from_secs(1);
pub const RECONNECT_MAX: Duration = Duration::from_secs(30);
/// Three missed 1 Hz heartbeats.
pub const HEARTBEAT_TIMEOUT: Duration = Duration::from_secs(3);
const HEARTBEAT_PERIOD: Duration = Duration::from_secs(1);
/// SBS frames buffered per console before the oldest is dropped.
const CONSOLE_MEDIA_CAPACITY: usize = 2;
const CONTROL_WATERMARK: usize = 256;
const POLL: Duration = Duration::from_millis(10);
const MAX_REQUEST_HEAD: usize = 16 * 1024;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> ServiceError {
    let context = context.into();
    move |source| ServiceError::Io { context, source }
}

/// Exponential reconnect delays: 1, 2, 4, … seconds, capped.
#[derive(Debug, Clone)]
pub struct Backoff {
    initial: Duration,
    max: Duration,
    next: Duration,
}

impl Backoff {
    pub fn new(initial: Duration, max: Duration) -> Self {
        Self {
            initial,
            max,
            next: initial,
        }
    }

    pub fn next_delay(&mut self) -> Duration {
        let d = self.next;
        self.next = (self.next * 2).min(self.max);
        d
    }

    pub fn reset(&mut self) {
        self.next = self.initial;
    }
}

impl Default for Backoff {
    fn default() -> Self {
        Self::new(RECONNECT_INITIAL, RECONNECT_MAX)
    }
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

struct InFrame {
    image: GrayImage,
    seq: u32,
    timestamp_us: u64,
    received: Instant,
}

/// Capacity-one hand-off where a new frame replaces an unconsumed one.
#[derive(Default)]
struct Ingress {
    slot: Mutex<Option<InFrame>>,
    ready: Condvar,
}

impl Ingress {
    /// Returns true when an unconsumed frame was replaced.
    fn put(&self, f: InFrame) -> bool {
        let replaced = lock(&self.slot).replace(f).is_some();
        self.ready.notify_one();
        replaced
    }

    fn take_timeout(&self, t: Duration) -> Option<InFrame> {
        let g = lock(&self.slot);
        let (mut g, _) = self
            .ready
            .wait_timeout_while(g, t, |s| s.is_none())
            .unwrap_or_else(|p| p.into_inner());
        g.take()
    }
}

struct Analyzed {
    frame: InFrame,
    judged: Vec<(Detection, ThreatVerdict)>,
}

type Bytes = Arc<Vec<u8>>;

struct Shared {
    config: ServiceConfig,
    pipeline: Pipeline,
    metrics: StageMetrics,
    consoles: Fanout<Bytes>,
    /// Console commands waiting for the robot; never dropped.
    relay: PlaneQueue<Bytes>,
    ingress: Ingress,
    /// Latest robot status heartbeat, replayed to new consoles.
    robot_status: Mutex<Option<Bytes>>,
    robot_connected: AtomicBool,
    stop: Arc<AtomicBool>,
}

impl Shared {
    fn stopping(&self) -> bool {
        self.stop.load(Ordering::Relaxed)
    }

    /// Sleeps up to `d`, waking early on shutdown.
    fn sleep(&self, d: Duration) {
        let end = Instant::now() + d;
        while !self.stopping() && Instant::now() < end {
            thread::sleep(POLL.min(end - Instant::now()));
        }
    }
}

/// A running service.
pub struct ServiceHandle {
    console_addr: SocketAddr,
    shared: Arc<Shared>,
    threads: Vec<JoinHandle<()>>,
}

impl std::fmt::Debug for ServiceHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServiceHandle")
            .field("console_addr", &self.console_addr)
            .finish_non_exhaustive()
    }
}

/// Loads models, binds the console endpoint and starts every thread.
/// Model or config problems fail here, before any frame is accepted.
pub fn start_service(
    config: ServiceConfig,
    stop: Arc<AtomicBool>,
) -> Result<ServiceHandle, ServiceError> {
    let pipeline = Pipeline::new(config.pipeline.clone())?;
    if let Some(dir) = &config.dump_ppm {
        std::fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
    }
    let listener =
        TcpListener::bind(&config.listen).map_err(io_err(format!("binding {}", config.listen)))?;
    let console_addr = listener.local_addr().map_err(io_err("console address"))?;
    listener
        .set_nonblocking(true)
        .map_err(io_err("console listener"))?;

    let shared = Arc::new(Shared {
        config,
        pipeline,
        metrics: StageMetrics::new(),
        consoles: Fanout::new(CONSOLE_MEDIA_CAPACITY, CONTROL_WATERMARK),
        relay: PlaneQueue::new(1, CONTROL_WATERMARK),
        ingress: Ingress::default(),
        robot_status: Mutex::new(None),
        robot_connected: AtomicBool::new(false),
        stop,
    });
    let (tx, rx) = mpsc::sync_channel(1);
    let mut threads = Vec::new();
    let s = shared.clone();
    threads.push(thread::spawn(move || analyze_stage(&s, tx)));
    let s = shared.clone();
    threads.push(thread::spawn(move || render_stage(&s, rx)));
    let s = shared.clone();
    threads.push(thread::spawn(move || robot_link(&s)));
    let s = shared.clone();
    threads.push(thread::spawn(move || console_acceptor(&s, listener)));
    log::info!("console endpoint on {console_addr}");
    Ok(ServiceHandle {
        console_addr,
        shared,
        threads,
    })
}

impl ServiceHandle {
    pub fn console_addr(&self) -> SocketAddr {
        self.console_addr
    }

    pub fn metrics(&self) -> MetricsSnapshot {
        self.shared.metrics.snapshot()
    }

    pub fn robot_connected(&self) -> bool {
        self.shared.robot_connected.load(Ordering::Relaxed)
    }

    /// Writes the metrics CSV if a path is configured.
    pub fn write_metrics(&self) -> io::Result<Option<PathBuf>> {
        write_metrics(&self.shared)
    }

    /// Blocks until the stop flag is set, honouring metrics dump requests,
    /// then joins the workers and flushes metrics.
    pub fn wait(self, dump_request: Option<&AtomicBool>) -> Result<MetricsSnapshot, ServiceError> {
        while !self.shared.stopping() {
            if dump_request.is_some_and(|f| f.swap(false, Ordering::Relaxed)) {
                match self.write_metrics() {
                    Ok(Some(p)) => log::info!("metrics written to {}", p.display()),
                    Ok(None) => log::info!("metrics requested but no metrics path configured"),
                    Err(e) => log::error!("metrics dump failed: {e}"),
                }
            }
            thread::sleep(Duration::from_millis(50));
        }
        self.shared.consoles.close_all();
        self.shared.relay.close();
        for t in self.threads {
            let _ = t.join();
        }
        write_metrics(&self.shared).map_err(io_err("writing metrics"))?;
        Ok(self.shared.metrics.snapshot())
    }
}

/// Starts the service and serves until `stop` is set.
pub fn run_service(
    config: ServiceConfig,
    stop: Arc<AtomicBool>,
    dump_request: Option<&AtomicBool>,
) -> Result<MetricsSnapshot, ServiceError> {
    start_service(config, stop)?.wait(dump_request)
}

fn write_metrics(shared: &Shared) -> io::Result<Option<PathBuf>> {
    let Some(path) = &shared.config.metrics_path else {
        return Ok(None);
    };
    std::fs::write(path, shared.metrics.snapshot().to_csv())?;
    Ok(Some(path.clone()))
}

fn analyze_stage(shared: &Shared, tx: SyncSender<Analyzed>) {
    while !shared.stopping() {
        let Some(frame) = shared.ingress.take_timeout(Duration::from_millis(100)) else {
            continue;
        };
        match shared.pipeline.analyze(&frame.image, Some(&shared.metrics)) {
            Ok(judged) => {
                if tx.send(Analyzed { frame, judged }).is_err() {
                    break;
                }
            }
            Err(e) => log::warn!("frame {} skipped: {e}", frame.seq),
        }
    }
}

fn render_stage(shared: &Shared, rx: Receiver<Analyzed>) {
    let mut out_seq = SequenceCounter::starting_at(1);
    loop {
        let a = match rx.recv_timeout(Duration::from_millis(100)) {
            Ok(a) => a,
            Err(RecvTimeoutError::Timeout) if !shared.stopping() => continue,
            Err(_) => break,
        };
        let m = Some(&shared.metrics);
        let f = &a.frame;
        let out = match shared
            .pipeline
            .render(&f.image, a.judged, f.seq, f.timestamp_us, m)
        {
            Ok(out) => out,
            Err(e) => {
                log::warn!("frame {} not rendered: {e}", f.seq);
                continue;
            }
        };
        let seq = out_seq.next_seq();
        let enc = match shared.metrics.time(Stage::Encode, || {
            encode_outputs(&out, seq, seq, f.timestamp_us)
        }) {
            Ok(e) => e,
            Err(e) => {
                log::error!("frame {} not encoded: {e}", f.seq);
                continue;
            }
        };
        let det = shared.consoles.publish_control(Arc::new(enc.detections));
        let vid = shared.consoles.publish_media(Arc::new(enc.video));
        shared.metrics.record(Stage::EndToEnd, f.received.elapsed());
        shared.metrics.update(|c| {
            c.frames_out += 1;
            c.dropped += vid.dropped as u64;
            c.backpressure_faults += det.backpressure as u64;
        });
        if let Some(dir) = &shared.config.dump_ppm {
            let path = dir.join(format!("sbs_{seq:08}.ppm"));
            let res = std::fs::File::create(&path).and_then(|file| {
                crate::overlay::write_ppm(out.sbs.image(), io::BufWriter::new(file))
            });
            if let Err(e) = res {
                log::warn!("cannot write {}: {e}", path.display());
            }
        }
    }
}

fn connect(addr: &str) -> io::Result<TcpStream> {
    let mut last = io::Error::new(io::ErrorKind::NotFound, format!("{addr} did not resolve"));
    for a in addr.to_socket_addrs()? {
        match TcpStream::connect_timeout(&a, Duration::from_secs(2)) {
            Ok(s) => {
                s.set_nodelay(true)?;
                return Ok(s);
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Keeps one media and one control connection to the robot alive.
fn robot_link(shared: &Arc<Shared>) {
    let (media_addr, control_addr) = shared.config.robot_addrs();
    let mut backoff = Backoff::default();
    let mut attempts = 0u64;
    while !shared.stopping() {
        if attempts > 0 {
            shared.metrics.update(|c| c.robot_reconnects += 1);
        }
        attempts += 1;
        let conn = connect(&media_addr).and_then(|m| Ok((m, connect(&control_addr)?)));
        match conn {
            Ok((media, control)) => {
                log::info!("robot connected at {media_addr} / {control_addr}");
                backoff.reset();
                shared.robot_connected.store(true, Ordering::Relaxed);
                robot_session(shared, media, control);
                shared.robot_connected.store(false, Ordering::Relaxed);
            }
            Err(e) => {
                let d = backoff.next_delay();
                log::warn!("robot unreachable ({e}); retrying in {}s", d.as_secs());
                shared.sleep(d);
            }
        }
    }
}

fn robot_session(shared: &Arc<Shared>, media: TcpStream, control: TcpStream) {
    let alive = Arc::new(AtomicBool::new(true));
    let last_hb = Arc::new(Mutex::new(Instant::now()));
    let clones = (media.try_clone(), control.try_clone(), control.try_clone());
    let (Ok(media_close), Ok(control_close), Ok(control_w)) = clones else {
        log::error!("cannot clone robot sockets");
        return;
    };
    let mut workers = Vec::new();
    {
        let (s, alive) = (shared.clone(), alive.clone());
        workers.push(thread::spawn(move || {
            media_reader(&s, media);
            alive.store(false, Ordering::Relaxed);
        }));
    }
    {
        let (s, alive, hb) = (shared.clone(), alive.clone(), last_hb.clone());
        workers.push(thread::spawn(move || {
            control_reader(&s, control, &hb);
            alive.store(false, Ordering::Relaxed);
        }));
    }
    {
        let (s, alive2) = (shared.clone(), alive.clone());
        workers.push(thread::spawn(move || {
            control_writer(&s, control_w, &alive2);
            alive2.store(false, Ordering::Relaxed);
        }));
    }
    while alive.load(Ordering::Relaxed) && !shared.stopping() {
        if lock(&last_hb).elapsed() > HEARTBEAT_TIMEOUT {
            log::warn!("robot heartbeat timed out");
            shared.metrics.update(|c| c.heartbeat_timeouts += 1);
            break;
        }
        thread::sleep(Duration::from_millis(50));
    }
    alive.store(false, Ordering::Relaxed);
    let _ = media_close.shutdown(std::net::Shutdown::Both);
    let _ = control_close.shutdown(std::net::Shutdown::Both);
    for w in workers {
        let _ = w.join();
    }
}

fn to_gray(f: VideoFrame) -> Option<GrayImage> {
    let (w, h) = (f.width as u32, f.height as u32);
    match f.format {
        PixelFormat::Gray8 => GrayImage::from_raw(w, h, f.data).ok(),
        PixelFormat::Rgb8 => RgbImage::from_raw(w, h, f.data).ok().map(|i| i.to_luma()),
    }
}

fn media_reader(shared: &Shared, mut s: TcpStream) {
    loop {
        let env = match read_envelope(&mut s) {
            Ok(Some(e)) => e,
            Ok(None) => break,
            Err(e) => {
                if !shared.stopping() {
                    log::warn!("robot media stream: {e}");
                }
                break;
            }
        };
        match env.message() {
            Ok(Message::VideoFrame(f)) => {
                let Some(image) = to_gray(f) else { continue };
                let replaced = shared.ingress.put(InFrame {
                    image,
                    seq: env.sequence,
                    timestamp_us: env.timestamp_us,
                    received: Instant::now(),
                });
                shared.metrics.update(|c| {
                    c.frames_in += 1;
                    c.dropped += replaced as u64;
                });
            }
            Ok(m) => log::debug!("ignoring {:?} on media", m.kind()),
            Err(e) => log::warn!("bad media payload: {e}"),
        }
    }
}

/// Robot heartbeats refresh liveness and are forwarded to consoles as is.
fn control_reader(shared: &Shared, mut s: TcpStream, last_hb: &Mutex<Instant>) {
    loop {
        let env = match read_envelope(&mut s) {
            Ok(Some(e)) => e,
            Ok(None) => break,
            Err(e) => {
                if !shared.stopping() {
                    log::warn!("robot control stream: {e}");
                }
                break;
            }
        };
        if env.kind != MessageKind::Heartbeat {
            log::debug!("ignoring {:?} from robot control", env.kind);
            continue;
        }
        *lock(last_hb) = Instant::now();
        if let Ok(Message::Heartbeat(Some(_))) = env.message() {
            if let Ok(bytes) = env.encode() {
                let bytes = Arc::new(bytes);
                *lock(&shared.robot_status) = Some(bytes.clone());
                let o = shared.consoles.publish_control(bytes);
                shared
                    .metrics
                    .update(|c| c.backpressure_faults += o.backpressure as u64);
            }
        }
    }
}

/// Relays console commands and sends the service heartbeat.
fn control_writer(shared: &Shared, mut s: TcpStream, alive: &AtomicBool) {
    let mut hb_seq = SequenceCounter::starting_at(1);
    let mut last_hb: Option<Instant> = None;
    let started = Instant::now();
    while alive.load(Ordering::Relaxed) && !shared.stopping() {
        if last_hb.is_none_or(|t| t.elapsed() >= HEARTBEAT_PERIOD) {
            let ts = started.elapsed().as_micros() as u64;
            let hb = encode_message(&Message::Heartbeat(None), hb_seq.next_seq(), ts)
                .expect("empty heartbeat");
            if s.write_all(&hb).is_err() {
                break;
            }
            last_hb = Some(Instant::now());
        }
        if let Some(cmd) = shared.relay.pop_timeout(Duration::from_millis(50)) {
            if s.write_all(&cmd.into_inner()).is_err() {
                break;
            }
        }
    }
}

fn console_acceptor(shared: &Arc<Shared>, listener: TcpListener) {
    while !shared.stopping() {
        match listener.accept() {
            Ok((stream, peer)) => {
                let s = shared.clone();
                thread::spawn(move || {
                    if let Err(e) = console_connection(&s, stream) {
                        log::debug!("console {peer}: {e}");
                    }
                });
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                thread::sleep(Duration::from_millis(20))
            }
            Err(e) => {
                log::warn!("console accept failed: {e}");
                thread::sleep(Duration::from_millis(20));
            }
        }
    }
}

struct RequestHead {
    method: String,
    path: String,
    headers: Vec<(String, String)>,
}

impl RequestHead {
    fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    fn is_websocket(&self) -> bool {
        self.header("upgrade")
            .is_some_and(|v| v.eq_ignore_ascii_case("websocket"))
    }
}

/// Reads an HTTP request head. Returns it with any bytes read past it.
fn read_request_head(s: &mut TcpStream) -> io::Result<(RequestHead, Vec<u8>)> {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 1024];
    let end = loop {
        if let Some(i) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
            break i + 4;
        }
        if buf.len() > MAX_REQUEST_HEAD {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "request head too large",
            ));
        }
        let n = s.read(&mut chunk)?;
        if n == 0 {
            return Err(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "closed before request",
            ));
        }
        buf.extend_from_slice(&chunk[..n]);
    };
    let text = std::str::from_utf8(&buf[..end])
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidData, "non-UTF-8 head"))?;
    let mut lines = text.split("\r\n");
    let mut first = lines.next().unwrap_or("").split_whitespace();
    let (method, path) = match (first.next(), first.next()) {
        (Some(m), Some(p)) => (m.to_string(), p.to_string()),
        _ => {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "bad request line",
            ))
        }
    };
    let headers = lines
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    Ok((
        RequestHead {
            method,
            path,
            headers,
        },
        buf[end..].to_vec(),
    ))
}

fn console_connection(shared: &Shared, mut stream: TcpStream) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let (head, rest) = read_request_head(&mut stream)?;
    if head.is_websocket() {
        let Some(key) = head.header("sec-websocket-key") else {
            return respond(
                &mut stream,
                "400 Bad Request",
                "text/plain",
                b"missing Sec-WebSocket-Key",
            );
        };
        let accept = tungstenite::handshake::derive_accept_key(key.as_bytes());
        write!(
            stream,
            "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Accept: {accept}\r\n\r\n"
        )?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(POLL))?;
        let ws = WebSocket::from_partially_read(stream, rest, Role::Server, None);
        console_session(shared, ws);
        return Ok(());
    }
    if head.method != "GET" {
        return respond(
            &mut stream,
            "405 Method Not Allowed",
            "text/plain",
            b"GET only",
        );
    }
    match &shared.config.serve_console {
        Some(root) => serve_static(&mut stream, root, &head.path),
        None => respond(
            &mut stream,
            "404 Not Found",
            "text/plain",
            b"console bundle not served",
        ),
    }
}

fn respond(s: &mut TcpStream, status: &str, ctype: &str, body: &[u8]) -> io::Result<()> {
    write!(
        s,
        "HTTP/1.1 {status}\r\nContent-Type: {ctype}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    )?;
    s.write_all(body)
}

/// Maps a request path under `root`, refusing anything that escapes it.
pub fn static_path(root: &Path, request_path: &str) -> Option<PathBuf> {
    let p = request_path.split(['?', '#']).next().unwrap_or("/");
    let rel = Path::new(p.trim_start_matches('/'));
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return None;
    }
    let full = root.join(rel);
    Some(if full.is_dir() {
        full.join("index.html")
    } else {
        full
    })
}

fn content_type(p: &Path) -> &'static str {
    match p.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("wasm") => "application/wasm",
        _ => "application/octet-stream",
    }
}

fn serve_static(s: &mut TcpStream, root: &Path, path: &str) -> io::Result<()> {
    let Some(file) = static_path(root, path) else {
        return respond(s, "403 Forbidden", "text/plain", b"forbidden");
    };
    match std::fs::read(&file) {
        Ok(body) => respond(s, "200 OK", content_type(&file), &body),
        Err(_) => respond(s, "404 Not Found", "text/plain", b"not found"),
    }
}

fn would_block(e: &tungstenite::Error) -> bool {
    matches!(e, tungstenite::Error::Io(io) if matches!(io.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut))
}

fn console_session(shared: &Shared, mut ws: WebSocket<TcpStream>) {
    let q = shared.consoles.subscribe();
    shared.metrics.update(|c| c.console_connects += 1);
    if let Some(status) = lock(&shared.robot_status).clone() {
        let _ = q.push_control(status);
    }
    'session: while !shared.stopping() && !q.is_closed() {
        match ws.read() {
            Ok(tungstenite::Message::Binary(b)) => relay_inbound(shared, b),
            Ok(tungstenite::Message::Close(_)) => break,
            Ok(_) => {}
            Err(e) if would_block(&e) => {}
            Err(e) => {
                log::debug!("console read: {e}");
                break;
            }
        }
        while let Some(item) = q.try_pop() {
            if let Err(e) = ws.send(tungstenite::Message::Binary(item.into_inner().to_vec())) {
                log::debug!("console write: {e}");
                break 'session;
            }
        }
    }
    if shared.stopping() {
        let _ = ws.close(None);
        let _ = ws.flush();
    }
    q.close();
    shared.metrics.update(|c| c.console_disconnects += 1);
}

/// CONTROL and HEAD_POSE go to the robot byte for byte. Anything else from a
/// console is dropped with a log line.
fn relay_inbound(shared: &Shared, bytes: Vec<u8>) {
    let env = match decode_envelope(&bytes) {
        Ok(e) => e,
        Err(e) => {
            log::warn!("console sent an invalid envelope: {e}");
            return;
        }
    };
    match env.kind {
        MessageKind::Control | MessageKind::HeadPose => {
            if let Err(e) = env.message() {
                log::warn!("console sent a bad {:?} payload: {e}", env.kind);
                return;
            }
            let fault = shared.relay.push_control(Arc::new(bytes)).is_err();
            shared.metrics.update(|c| {
                c.relayed_commands += 1;
                c.backpressure_faults += fault as u64;
            });
        }
        MessageKind::Heartbeat => {}
        k => log::warn!("console sent {k:?}, which only flows outward"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_to_cap() {
        let mut b = Backoff::default();
        let secs: Vec<u64> = (0..8).map(|_| b.next_delay().as_secs()).collect();
        assert_eq!(secs, vec![1, 2, 4, 8, 16, 30, 30, 30]);
        b.reset();
        assert_eq!(b.next_delay(), RECONNECT_INITIAL);
    }

    #[test]
    fn static_paths_stay_under_root() {
        let root = Path::new("/srv/console");
        assert_eq!(static_path(root, "/app.js?v=1"), Some(root.join("app.js")));
        assert_eq!(static_path(root, "/../etc/passwd"), None);
        assert_eq!(static_path(root, "/a/./b"), Some(root.join("a/b")));
    }

    #[test]
    fn ingress_keeps_latest() {
        let ing = Ingress::default();
        let f = |seq| InFrame {
            image: GrayImage::filled(1, 1, 0).unwrap(),
            seq,
            timestamp_us: 0,
            received: Instant::now(),
        };
        assert!(!ing.put(f(1)));
        assert!(ing.put(f(2)));
        assert_eq!(ing.take_timeout(Duration::ZERO).map(|f| f.seq), Some(2));
        assert!(ing.take_timeout(Duration::from_millis(1)).is_none());
    }
}
