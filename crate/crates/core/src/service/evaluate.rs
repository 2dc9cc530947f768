//! Scores a pipeline against a seeded mission's ground truth.

use super::metrics::{Counters, MetricsSnapshot, StageMetrics};
use super::pipeline::{Pipeline, PipelineError};
use crate::classifier::VerdictColor;
use crate::sim::Mission;

/// Per-person-frame tallies. Only people fully in view count.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionReport {
    pub frames: usize,
    /// Fully-in-view person appearances.
    pub appearances: usize,
    /// Appearances whose centroid lies in some detection box.
    pub contained: usize,
    /// Appearances whose containing detection has the right color and
    /// percent side of 50.
    pub correct_color: usize,
    /// Detections containing no person centroid.
    pub false_positives: usize,
    /// CRC-32 of each SBS frame, in order.
    pub sbs_crcs: Vec<u32>,
    pub counters: Counters,
    /// Stage latencies of this run.
    pub metrics: MetricsSnapshot,
}

impl MissionReport {
    pub fn color_rate(&self) -> f64 {
        self.correct_color as f64 / self.appearances.max(1) as f64
    }

    pub fn containment_rate(&self) -> f64 {
        self.contained as f64 / self.appearances.max(1) as f64
    }
}

/// Runs every mission frame through `pipeline`, wire encoding included.
/// When several boxes contain a centroid, the highest-scoring one is judged.
pub fn evaluate_mission(
    pipeline: &Pipeline,
    mission: &Mission,
) -> Result<MissionReport, PipelineError> {
    let metrics = StageMetrics::new();
    let mut r = MissionReport {
        frames: 0,
        appearances: 0,
        contained: 0,
        correct_color: 0,
        false_positives: 0,
        sbs_crcs: Vec::new(),
        counters: Counters::default(),
        metrics: metrics.snapshot(),
    };
    for f in mission.frames() {
        metrics.update(|c| c.frames_in += 1);
        let seq = f.index as u32;
        let (out, _) =
            pipeline.process_and_encode(&f.image, seq, seq, f.timestamp_us, Some(&metrics))?;
        metrics.update(|c| c.frames_out += 1);
        r.frames += 1;
        r.sbs_crcs.push(crc32fast::hash(out.sbs.image().data()));

        let dets = &out.annotated.detections;
        let inside = |d: &crate::vision::Detection, c: (f64, f64)| d.bbox.contains_point(c.0, c.1);
        r.false_positives += dets
            .iter()
            .filter(|(d, _)| !f.truth.iter().any(|t| inside(d, t.centroid)))
            .count();
        for t in f.truth.iter().filter(|t| t.fully_in_view) {
            r.appearances += 1;
            let best = dets
                .iter()
                .filter(|(d, _)| inside(d, t.centroid))
                .max_by(|a, b| a.0.person_score.total_cmp(&b.0.person_score));
            let Some((_, v)) = best else { continue };
            r.contained += 1;
            let ok = if t.kind.is_armed() {
                v.color == VerdictColor::Red && v.percent >= 50
            } else {
                v.color == VerdictColor::Green && v.percent < 50
            };
            r.correct_color += ok as usize;
        }
    }
    r.metrics = metrics.snapshot();
    r.counters = r.metrics.counters;
    Ok(r)
}
