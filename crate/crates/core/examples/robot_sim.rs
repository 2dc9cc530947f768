//! Steps the simulated robot: pans the camera, switches to aerial mode and
//! writes the rendered camera frames.
//!
//! ```text
//! cargo run --release --example robot_sim -- [out_dir]
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use teleop::overlay::write_pgm;
use teleop::sim::{Mission, SimCommand, Simulator};
use teleop::telemetry::PanTiltCommand;
use teleop::transport::{ControlCommand, VehicleMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&dir)?;
    let mut sim = Simulator::new(Mission::standard(1, 0).scene);
    let dt = 1.0 / 30.0;

    let pan = |pan| {
        SimCommand::PanTilt(PanTiltCommand {
            pan,
            tilt: 0.0,
            seq: 0,
        })
    };
    let plan: [(&str, Vec<SimCommand>, usize); 3] = [
        ("ground_ahead", vec![], 1),
        ("ground_pan_left", vec![pan(20.0)], 60),
        (
            "aerial",
            vec![
                pan(0.0),
                SimCommand::Control(ControlCommand::ModeSwitch(VehicleMode::Uav)),
            ],
            60,
        ),
    ];
    for (name, cmds, steps) in plan {
        sim.step(dt, &cmds);
        for _ in 1..steps {
            sim.step(dt, &[]);
        }
        let frame = sim.render();
        let path = dir.join(format!("{name}.pgm"));
        write_pgm(&frame, BufWriter::new(File::create(&path)?))?;
        let s = sim.status();
        println!(
            "{name}: mode {:?} pan {:.2}° tilt {:.2}°, {} people visible -> {}",
            s.mode,
            s.pan_cd as f64 / 100.0,
            s.tilt_cd as f64 / 100.0,
            sim.visible_people().len(),
            path.display()
        );
    }
    Ok(())
}
