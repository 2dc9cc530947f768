//! Detection throughput of the HAAR cascade against HOG+SVM at identical
//! settings: same downscaled, blurred inputs and the same pyramid.
//!
//! ```text
//! cargo run --release --example detector_benchmark -- [frames]
//! ```

use std::time::Instant;

use teleop::service::{DetectorKind, Pipeline, PipelineConfig};
use teleop::sim::Mission;
use teleop::vision::GrayImage;

fn fps(p: &Pipeline, inputs: &[GrayImage]) -> Result<f64, Box<dyn std::error::Error>> {
    let t = Instant::now();
    for s in inputs {
        p.detect_small(s)?;
    }
    Ok(inputs.len() as f64 / t.elapsed().as_secs_f64())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(20);
    let haar = Pipeline::new(PipelineConfig::default())?;
    let hog = Pipeline::new(PipelineConfig {
        detector: DetectorKind::HogSvm,
        ..PipelineConfig::default()
    })?;
    let frames: Vec<GrayImage> = Mission::standard(7, n).frames().map(|f| f.image).collect();
    let inputs: Vec<GrayImage> = frames
        .iter()
        .map(|f| haar.detection_input(f))
        .collect::<Result<_, _>>()?;
    let (w, h) = haar.config().detection_resolution;
    println!("{n} frames at {w}x{h}, pyramid {:?}", haar.config().pyramid);

    let a = fps(&haar, &inputs)?;
    let b = fps(&hog, &inputs)?;
    println!("haar {a:.1} fps");
    println!("hog  {b:.1} fps");
    println!("ratio {:.2}x", a / b);

    let t = Instant::now();
    for (i, f) in frames.iter().enumerate() {
        haar.process_and_encode(f, i as u32, i as u32, 0, None)?;
    }
    println!(
        "full pipeline with haar: {:.1} fps on one thread",
        n as f64 / t.elapsed().as_secs_f64()
    );
    Ok(())
}
