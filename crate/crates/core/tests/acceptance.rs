//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use teleop::service::{evaluate_mission, DetectorKind, Pipeline, PipelineConfig};
use teleop::sim::Mission;
use teleop::vision::GrayImage;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn within(limit: Duration, t: Instant) -> Result<String, String> {
    let took = t.elapsed();
    let msg = format!("{:.1} s of {} s", took.as_secs_f64(), limit.as_secs());
    if took <= limit {
        Ok(msg)
    } else {
        Err(format!("too slow: {msg}"))
    }
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    common::integral_oracle().map_err(|e| format!("integral: {e}"))?;
    common::haar_oracle().map_err(|e| format!("haar: {e}"))?;
    common::cascade_oracle().map_err(|e| format!("cascade: {e}"))?;
    common::nms_oracle().map_err(|e| format!("nms: {e}"))?;
    common::hog_oracle().map_err(|e| format!("hog: {e}"))?;
    common::gaussian_oracle().map_err(|e| format!("gaussian: {e}"))?;
    within(Duration::from_secs(60), t)
}

fn protocol_suite() -> Outcome {
    let t = Instant::now();
    common::crc_vector()?;
    let env = common::envelope_fuzz(10_000).map_err(|e| format!("envelope: {e}"))?;
    let link = common::link_fuzz(10_000).map_err(|e| format!("link: {e}"))?;
    let timing = within(Duration::from_secs(30), t)?;
    Ok(format!(
        "{env} envelope and {link} link corruptions rejected, {timing}"
    ))
}

fn telemetry() -> Outcome {
    common::ema_nyquist().map_err(|e| format!("nyquist: {e}"))?;
    common::calibration_zero_motion().map_err(|e| format!("calibration: {e}"))?;
    common::yaw_wrap().map_err(|e| format!("yaw wrap: {e}"))?;
    Ok("nyquist gain, rest calibration and yaw seam".into())
}

fn sbs_exactness() -> Outcome {
    common::sbs_oracle(50)?;
    Ok("50 frames byte-identical, halves 950x1000".into())
}

const MISSION_SEEDS: [u64; 3] = [1, 2, 3];

fn mission() -> Outcome {
    let p = Pipeline::new(PipelineConfig::default()).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut failed = false;
    for seed in MISSION_SEEDS {
        let r = evaluate_mission(&p, &Mission::standard(seed, 100)).map_err(|e| e.to_string())?;
        let (color, contain) = (r.color_rate(), r.containment_rate());
        failed |= color < 0.90 || contain < 0.85;
        parts.push(format!(
            "seed {seed}: color {:.1}% contain {:.1}% of {}",
            100.0 * color,
            100.0 * contain,
            r.appearances
        ));
    }
    let acc = common::heldout_accuracy(999, 1000);
    failed |= acc < 0.90;
    parts.push(format!("held-out accuracy {:.1}%", 100.0 * acc));
    let msg = parts.join("; ");
    if failed {
        Err(msg)
    } else {
        Ok(msg)
    }
}

fn mission_inputs(n: usize) -> Vec<GrayImage> {
    Mission::standard(7, n).frames().map(|f| f.image).collect()
}

/// Frames per second of `f` over `inputs`, best of `rounds`.
fn throughput<T>(inputs: &[T], rounds: usize, mut f: impl FnMut(&T)) -> f64 {
    (0..rounds)
        .map(|_| {
            let t = Instant::now();
            inputs.iter().for_each(&mut f);
            inputs.len() as f64 / t.elapsed().as_secs_f64()
        })
        .fold(0.0, f64::max)
}

fn performance() -> Outcome {
    let frames = mission_inputs(20);
    let haar = Pipeline::new(PipelineConfig::default()).map_err(|e| e.to_string())?;
    let hog = Pipeline::new(PipelineConfig {
        detector: DetectorKind::HogSvm,
        ..PipelineConfig::default()
    })
    .map_err(|e| e.to_string())?;

    let e2e = throughput(&frames, 2, |f| {
        haar.process_and_encode(f, 0, 0, 0, None)
            .expect("frame processes");
    });
    let small: Vec<GrayImage> = frames
        .iter()
        .map(|f| haar.detection_input(f))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let haar_fps = throughput(&small, 2, |s| {
        haar.detect_small(s).expect("detects");
    });
    let hog_fps = throughput(&small[..5], 2, |s| {
        hog.detect_small(s).expect("detects");
    });
    let ratio = haar_fps / hog_fps;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let msg = format!(
        "end-to-end {e2e:.1} fps on {cores} core(s) (20 fps target informational); \
         detection haar {haar_fps:.1} fps, hog {hog_fps:.1} fps, ratio {ratio:.1}x"
    );
    if ratio >= 2.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism() -> Outcome {
    let run = || {
        let p = Pipeline::new(PipelineConfig::default()).map_err(|e| e.to_string())?;
        evaluate_mission(&p, &Mission::standard(11, 100)).map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    if a.sbs_crcs != b.sbs_crcs {
        let at = a.sbs_crcs.iter().zip(&b.sbs_crcs).position(|(x, y)| x != y);
        return Err(format!("SBS streams diverge at frame {at:?}"));
    }
    if a.metrics.counters != b.metrics.counters {
        return Err(format!(
            "counters differ: {:?} vs {:?}",
            a.metrics.counters, b.metrics.counters
        ));
    }
    Ok(format!(
        "{} SBS frames and all counters identical",
        a.sbs_crcs.len()
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("oracle equivalence", oracle_equivalence),
        ("protocol suite", protocol_suite),
        ("telemetry", telemetry),
        ("sbs bit-exactness", sbs_exactness),
        ("end-to-end mission", mission),
        ("performance budget", performance),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} criteria failed");
        std::process::exit(1);
    }
}
