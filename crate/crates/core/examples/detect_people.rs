//! Runs the HAAR cascade and the HOG+SVM detector on the same mission frame
//! and lists what each finds, in full-frame pixels.
//!
//! ```text
//! cargo run --release --example detect_people -- [seed]
//! ```

use std::time::Instant;

use teleop::service::{DetectorKind, Pipeline, PipelineConfig};
use teleop::sim::Mission;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(1);
    let frame = Mission::standard(seed, 1)
        .frames()
        .next()
        .expect("one frame");
    for t in &frame.truth {
        println!(
            "truth: person {} centroid ({:.0}, {:.0}){}",
            t.entity_id,
            t.centroid.0,
            t.centroid.1,
            if t.fully_in_view { "" } else { " (clipped)" }
        );
    }
    for kind in [DetectorKind::Haar, DetectorKind::HogSvm] {
        let p = Pipeline::new(PipelineConfig {
            detector: kind,
            ..PipelineConfig::default()
        })?;
        let t = Instant::now();
        let dets = p.detect(&frame.image)?;
        println!(
            "{kind:?}: {} detections in {:.1} ms",
            dets.len(),
            t.elapsed().as_secs_f64() * 1e3
        );
        for d in dets {
            let b = d.bbox;
            println!(
                "  box x={} y={} w={} h={} score {:.2} level scale {:.2}",
                b.x, b.y, b.w, b.h, d.person_score, d.scale
            );
        }
    }
    Ok(())
}
