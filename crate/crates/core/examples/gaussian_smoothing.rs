//! Prints a normalized Gaussian kernel and blurs a simulated camera frame.
//!
//! ```text
//! cargo run --release --example gaussian_smoothing -- [sigma] [radius] [out.pgm]
//! ```

use std::fs::File;
use std::io::BufWriter;

use teleop::overlay::write_pgm;
use teleop::sim::Mission;
use teleop::vision::{gaussian_blur, gaussian_kernel, GaussianKernelParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let sigma: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    let radius: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2);
    let out = args.next();

    let params = GaussianKernelParams {
        sigma_x: sigma,
        sigma_y: sigma,
        radius,
        ..GaussianKernelParams::default()
    };
    let k = gaussian_kernel(&params)?;
    let r = radius as i32;
    for dy in -r..=r {
        let row: Vec<String> = (-r..=r).map(|dx| format!("{:.6}", k.at(dx, dy))).collect();
        println!("{}", row.join(" "));
    }
    println!("sum {:.12}", k.values().iter().sum::<f64>());

    let frame = Mission::standard(1, 1)
        .frames()
        .next()
        .expect("one frame")
        .image;
    let blurred = gaussian_blur(&frame, &params)?;
    let changed = frame
        .data()
        .iter()
        .zip(blurred.data())
        .filter(|(a, b)| a != b)
        .count();
    println!(
        "{}x{} frame, {changed} pixels changed by the blur",
        frame.width(),
        frame.height()
    );
    if let Some(path) = out {
        write_pgm(&blurred, BufWriter::new(File::create(&path)?))?;
        println!("wrote {path}");
    }
    Ok(())
}
