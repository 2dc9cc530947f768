//! Runs the seeded mission through the full pipeline and scores it against
//! the simulator's ground truth.
//!
//! ```text
//! cargo run --release --example mission -- [seed] [frames]
//! ```

use teleop::service::{evaluate_mission, Pipeline, PipelineConfig};
use teleop::sim::Mission;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let frames: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100);

    let pipeline = Pipeline::new(PipelineConfig::default())?;
    let mission = Mission::standard(seed, frames);
    for e in &mission.scene.entities {
        println!(
            "person {} at ({:.1}, {:.1}): {}",
            e.id,
            e.x,
            e.y,
            e.kind.label()
        );
    }
    let t = std::time::Instant::now();
    let r = evaluate_mission(&pipeline, &mission)?;
    let secs = t.elapsed().as_secs_f64();
    println!(
        "{} frames in {secs:.2} s ({:.1} fps)",
        r.frames,
        r.frames as f64 / secs
    );
    println!("people in full view: {}", r.appearances);
    println!(
        "centroid inside a box: {} ({:.1}%)",
        r.contained,
        100.0 * r.containment_rate()
    );
    println!(
        "correct color: {} ({:.1}%)",
        r.correct_color,
        100.0 * r.color_rate()
    );
    println!("false positives: {}", r.false_positives);
    println!("classifier calls: {}", r.counters.classifier_calls);
    Ok(())
}
