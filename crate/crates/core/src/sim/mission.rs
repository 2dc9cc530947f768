//! Scripted, seeded scenario used for end-to-end checks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dynamics::{SimCommand, Simulator};
use super::render::SpriteView;
use super::scene::{EntityKind, Facing, Scene};
use crate::classifier::WeaponClass;
use crate::telemetry::PanTiltCommand;
use crate::transport::ControlCommand;
use crate::vision::GrayImage;

#[derive(Debug, Clone)]
pub struct Mission {
    pub scene: Scene,
    pub dt: f64,
    /// Commands applied before rendering frame `i`.
    pub script: Vec<Vec<SimCommand>>,
}

/// A rendered mission frame with its ground truth.
#[derive(Debug, Clone)]
pub struct MissionFrame {
    pub index: usize,
    pub timestamp_us: u64,
    pub image: GrayImage,
    pub truth: Vec<SpriteView>,
}

impl Mission {
    /// Three people ahead of a ground robot: one unarmed, two armed with
    /// seed-chosen weapons. The operator sweeps the camera left and right,
    /// nods slightly, and drives forward for part of the run.
    pub fn standard(seed: u64, frames: usize) -> Mission {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scene = Scene::new((40.0, 40.0), seed).expect("fixed bounds are valid");
        scene.start.x = 20.0;
        scene.start.y = 2.0;
        scene.start.heading_deg = 90.0;
        let mut facing = || {
            if rng.gen::<bool>() {
                Facing::Right
            } else {
                Facing::Left
            }
        };
        let (f1, f2, f3) = (facing(), facing(), facing());
        let armed = |r: &mut ChaCha8Rng| WeaponClass::ALL[r.gen_range(1..WeaponClass::ALL.len())];
        let (w1, w2) = (armed(&mut rng), armed(&mut rng));
        let jitter = |r: &mut ChaCha8Rng| r.gen_range(-0.3..0.3);
        let (j1, j2, j3) = (jitter(&mut rng), jitter(&mut rng), jitter(&mut rng));
        scene
            .add(18.9 + j1, 8.2, EntityKind::PersonUnarmed, f1)
            .expect("in bounds");
        scene
            .add(21.2 + j2, 9.0, EntityKind::PersonArmed(w1), f2)
            .expect("in bounds");
        scene
            .add(20.1 + j3, 12.5, EntityKind::PersonArmed(w2), f3)
            .expect("in bounds");
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);

        let dt = 1.0 / 30.0;
        let script = (0..frames)
            .map(|i| {
                let t = i as f64 * dt;
                let mut cmds = vec![SimCommand::PanTilt(PanTiltCommand {
                    pan: 14.0 * (0.9 * t + phase).sin(),
                    tilt: 3.0 * (1.7 * t).sin(),
                    seq: i as u32,
                })];
                if i == frames * 2 / 5 {
                    cmds.push(SimCommand::Control(ControlCommand::Drive {
                        left: 40,
                        right: 40,
                    }));
                }
                if i == frames * 7 / 10 {
                    cmds.push(SimCommand::Control(ControlCommand::Drive {
                        left: 0,
                        right: 0,
                    }));
                }
                cmds
            })
            .collect();
        Mission { scene, dt, script }
    }

    pub fn len(&self) -> usize {
        self.script.len()
    }

    pub fn is_empty(&self) -> bool {
        self.script.is_empty()
    }

    /// Steps and renders every frame in order.
    pub fn frames(&self) -> impl Iterator<Item = MissionFrame> + '_ {
        let mut sim = Simulator::new(self.scene.clone());
        self.script.iter().enumerate().map(move |(index, cmds)| {
            sim.step(self.dt, cmds);
            MissionFrame {
                index,
                timestamp_us: sim.time_us(),
                image: sim.render(),
                truth: sim.visible_people(),
            }
        })
    }
}
