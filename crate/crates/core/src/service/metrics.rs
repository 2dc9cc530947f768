//! Per-stage latency and frame counters. All updates and snapshots take one
//! lock, so a snapshot is always internally consistent.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Latency samples kept per stage; older ones are discarded.
pub const LATENCY_WINDOW: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Blur,
    Detect,
    Classify,
    Annotate,
    Sbs,
    Encode,
    EndToEnd,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Blur,
        Stage::Detect,
        Stage::Classify,
        Stage::Annotate,
        Stage::Sbs,
        Stage::Encode,
        Stage::EndToEnd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Blur => "blur",
            Stage::Detect => "detect",
            Stage::Classify => "classify",
            Stage::Annotate => "annotate",
            Stage::Sbs => "sbs",
            Stage::Encode => "encode",
            Stage::EndToEnd => "end_to_end",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counters {
    pub frames_in: u64,
    pub frames_out: u64,
    /// Frames discarded by latest-wins hand-offs.
    pub dropped: u64,
    pub classifier_calls: u64,
    pub classifier_failures: u64,
    pub detections: u64,
    pub console_connects: u64,
    pub console_disconnects: u64,
    pub robot_reconnects: u64,
    pub heartbeat_timeouts: u64,
    pub relayed_commands: u64,
    pub backpressure_faults: u64,
}

impl Counters {
    /// `(name, value)` pairs in a fixed order.
    pub fn entries(&self) -> [(&'static str, u64); 12] {
        [
            ("frames_in", self.frames_in),
            ("frames_out", self.frames_out),
            ("dropped", self.dropped),
            ("classifier_calls", self.classifier_calls),
            ("classifier_failures", self.classifier_failures),
            ("detections", self.detections),
            ("console_connects", self.console_connects),
            ("console_disconnects", self.console_disconnects),
            ("robot_reconnects", self.robot_reconnects),
            ("heartbeat_timeouts", self.heartbeat_timeouts),
            ("relayed_commands", self.relayed_commands),
            ("backpressure_faults", self.backpressure_faults),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LatencySummary {
    pub count: u64,
    pub p50_ms: f64,
    pub p95_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSnapshot {
    pub counters: Counters,
    pub stages: Vec<(Stage, LatencySummary)>,
    pub elapsed: Duration,
    pub input_fps: f64,
    pub output_fps: f64,
}

impl MetricsSnapshot {
    pub fn stage(&self, s: Stage) -> LatencySummary {
        self.stages
            .iter()
            .find(|(k, _)| *k == s)
            .map(|(_, v)| *v)
            .unwrap_or_default()
    }

    /// `stage,count,p50_ms,p95_ms` rows, then one row per counter and the two
    /// fps rates, with empty latency columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,count,p50_ms,p95_ms\n");
        for (s, l) in &self.stages {
            let _ = writeln!(
                out,
                "{},{},{:.3},{:.3}",
                s.name(),
                l.count,
                l.p50_ms,
                l.p95_ms
            );
        }
        for (name, v) in self.counters.entries() {
            let _ = writeln!(out, "{name},{v},,");
        }
        let _ = writeln!(out, "input_fps,{:.3},,", self.input_fps);
        let _ = writeln!(out, "output_fps,{:.3},,", self.output_fps);
        out
    }
}

#[derive(Debug)]
struct Inner {
    counters: Counters,
    samples: Vec<VecDeque<f64>>,
    totals: Vec<u64>,
}

#[derive(Debug)]
pub struct StageMetrics {
    started: Instant,
    inner: Mutex<Inner>,
}

impl Default for StageMetrics {
    fn default() -> Self {
        Self::new()
    }
}

/// Nearest-rank percentile of sorted data.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

impl StageMetrics {
    pub fn new() -> Self {
        Self {
            started: Instant::now(),
            inner: Mutex::new(Inner {
                counters: Counters::default(),
                samples: vec![VecDeque::new(); Stage::ALL.len()],
                totals: vec![0; Stage::ALL.len()],
            }),
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn record(&self, stage: Stage, d: Duration) {
        let i = Stage::ALL
            .iter()
            .position(|s| *s == stage)
            .expect("stage listed");
        let mut g = self.lock();
        let q = &mut g.samples[i];
        if q.len() == LATENCY_WINDOW {
            q.pop_front();
        }
        q.push_back(d.as_secs_f64() * 1e3);
        g.totals[i] += 1;
    }

    /// Runs `f`, recording its wall time under `stage`.
    pub fn time<T>(&self, stage: Stage, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.record(stage, t.elapsed());
        out
    }

    pub fn update(&self, f: impl FnOnce(&mut Counters)) {
        f(&mut self.lock().counters);
    }

    pub fn snapshot(&self) -> MetricsSnapshot {
        let g = self.lock();
        let elapsed = self.started.elapsed();
        let stages = Stage::ALL
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut v: Vec<f64> = g.samples[i].iter().copied().collect();
                v.sort_by(f64::total_cmp);
                (
                    *s,
                    LatencySummary {
                        count: g.totals[i],
                        p50_ms: percentile(&v, 0.5),
                        p95_ms: percentile(&v, 0.95),
                    },
                )
            })
            .collect();
        let secs = elapsed.as_secs_f64().max(1e-9);
        MetricsSnapshot {
            counters: g.counters,
            stages,
            elapsed,
            input_fps: g.counters.frames_in as f64 / secs,
            output_fps: g.counters.frames_out as f64 / secs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_at_zero() {
        let s = StageMetrics::new().snapshot();
        assert_eq!(s.counters, Counters::default());
        assert!(s
            .stages
            .iter()
            .all(|(_, l)| l.count == 0 && l.p50_ms == 0.0));
    }

    #[test]
    fn percentiles_nearest_rank() {
        let m = StageMetrics::new();
        for ms in 1..=100 {
            m.record(Stage::Blur, Duration::from_millis(ms));
        }
        let l = m.snapshot().stage(Stage::Blur);
        assert_eq!(l.count, 100);
        assert!((l.p50_ms - 50.0).abs() < 1e-9);
        assert!((l.p95_ms - 95.0).abs() < 1e-9);
    }

    #[test]
    fn csv_layout() {
        let m = StageMetrics::new();
        m.update(|c| c.frames_in += 3);
        let csv = m.snapshot().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "stage,count,p50_ms,p95_ms");
        assert_eq!(lines[1], "blur,0,0.000,0.000");
        assert!(lines.contains(&"frames_in,3,,"));
        assert_eq!(lines.len(), 1 + 7 + 12 + 2);
    }
}
