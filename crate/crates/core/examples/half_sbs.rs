//! Produces one annotated half side-by-side headset frame and writes it as
//! a PPM.
//!
//! ```text
//! cargo run --release --example half_sbs -- [out.ppm] [seed]
//! ```

use std::fs::File;
use std::io::BufWriter;

use teleop::overlay::{label_text, write_ppm};
use teleop::service::{Pipeline, PipelineConfig};
use teleop::sim::Mission;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "sbs.ppm".into());
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let f = Mission::standard(seed, 1)
        .frames()
        .next()
        .expect("one frame");
    let out = Pipeline::new(PipelineConfig::default())?.process_frame(
        &f.image,
        0,
        f.timestamp_us,
        None,
    )?;
    for (d, v) in &out.annotated.detections {
        println!("{:?} {:?} \"{}\"", d.bbox, v.color, label_text(v));
    }
    let img = out.sbs.image();
    println!(
        "sbs {}x{}, halves identical: {}",
        img.width(),
        img.height(),
        out.sbs.halves_identical()
    );
    write_ppm(img, BufWriter::new(File::create(&path)?))?;
    println!("wrote {path}");
    Ok(())
}
