use proptest::prelude::*;
use teleop::sim::{
    labeled_corpus, Mission, Scene, ServoModel, SimCommand, Simulator, PIXELS_PER_DEGREE,
    SERVO_SLEW_DEG_PER_S,
};
use teleop::telemetry::{PanTiltCommand, PAN_LIMIT_DEG, TILT_LIMIT_DEG};
use teleop::transport::{ControlCommand, VehicleMode};
use teleop::vision::GrayImage;

fn pan_tilt(pan: f64, tilt: f64) -> SimCommand {
    SimCommand::PanTilt(PanTiltCommand { pan, tilt, seq: 0 })
}

fn empty_sim() -> Simulator {
    Simulator::new(Scene::new((30.0, 30.0), 11).unwrap())
}

/// Horizontal offset `d` minimizing the mean absolute difference between
/// `b(x)` and `a(x + d)` over the middle rows.
fn best_shift(a: &GrayImage, b: &GrayImage, range: std::ops::RangeInclusive<i64>) -> i64 {
    let w = a.width() as i64;
    let mut best = (f64::MAX, 0);
    for d in range {
        let mut sad = 0u64;
        let mut n = 0u64;
        for y in (300..700).step_by(7) {
            for x in 0..w {
                let xa = x + d;
                if xa < 0 || xa >= w {
                    continue;
                }
                sad += a.get(xa as u32, y).abs_diff(b.get(x as u32, y)) as u64;
                n += 1;
            }
        }
        let mean = sad as f64 / n as f64;
        if mean < best.0 {
            best = (mean, d);
        }
    }
    best.1
}

#[test]
fn panning_shifts_the_view_by_pixels_per_degree() {
    let mut sim = empty_sim();
    let a = sim.render();
    sim.step(1.0, &[pan_tilt(10.0, 0.0)]);
    assert_eq!(sim.camera().pan, 10.0);
    let b = sim.render();
    let d = best_shift(&a, &b, 150..=250);
    assert_eq!(d, (10.0 * PIXELS_PER_DEGREE) as i64);
}

#[test]
fn command_log_replays_bit_identically() {
    let m = Mission::standard(21, 12);
    let mut extra = m.clone();
    extra.script[3].push(SimCommand::Control(ControlCommand::ModeSwitch(
        VehicleMode::Uav,
    )));
    extra.script[8].push(SimCommand::Control(ControlCommand::ModeSwitch(
        VehicleMode::Ugv,
    )));
    for mission in [&m, &extra] {
        let a: Vec<_> = mission
            .frames()
            .map(|f| (f.timestamp_us, f.image))
            .collect();
        let b: Vec<_> = mission
            .frames()
            .map(|f| (f.timestamp_us, f.image))
            .collect();
        assert_eq!(a, b);
    }
}

#[test]
fn corpus_is_deterministic() {
    let a = labeled_corpus(8, 10);
    let b = labeled_corpus(8, 10);
    for ((ra, la), (rb, lb)) in a.iter().zip(&b) {
        assert_eq!(la, lb);
        assert_eq!(ra.bytes(), rb.bytes());
    }
}

#[test]
fn mode_switch_keeps_scene_and_poses() {
    let mut sim = Simulator::new(Mission::standard(2, 0).scene);
    sim.step(0.5, &[pan_tilt(20.0, 5.0)]);
    let before = *sim.camera();
    let entities = sim.scene().entities.clone();
    sim.step(
        0.0,
        &[SimCommand::Control(ControlCommand::ModeSwitch(
            VehicleMode::Uav,
        ))],
    );
    sim.step(1e-6, &[]);
    let after = *sim.camera();
    assert_eq!(after.mode, VehicleMode::Uav);
    assert_eq!(sim.scene().entities, entities);
    assert_eq!((after.ugv.x, after.ugv.y), (before.ugv.x, before.ugv.y));
    assert_eq!((after.uav.x, after.uav.y), (before.uav.x, before.uav.y));
    assert!((after.pan - before.pan).abs() <= SERVO_SLEW_DEG_PER_S * 1e-6 + 1e-12);
}

fn arb_command() -> impl Strategy<Value = SimCommand> {
    prop_oneof![
        (-400.0f64..400.0, -400.0f64..400.0).prop_map(|(p, t)| pan_tilt(p, t)),
        (any::<i8>(), any::<i8>()).prop_map(|(l, r)| SimCommand::Control(ControlCommand::Drive {
            left: l.max(-127),
            right: r.max(-127)
        })),
        any::<bool>().prop_map(|e| SimCommand::Control(ControlCommand::EStop { engaged: e })),
        any::<bool>().prop_map(|u| SimCommand::Control(ControlCommand::ModeSwitch(if u {
            VehicleMode::Uav
        } else {
            VehicleMode::Ugv
        }))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn servos_respect_range_and_slew(
        steps in proptest::collection::vec((0.001f64..0.2, proptest::collection::vec(arb_command(), 0..3)), 1..60),
    ) {
        let mut sim = empty_sim();
        for (dt, cmds) in steps {
            let (p0, t0) = (sim.camera().pan, sim.camera().tilt);
            sim.step(dt, &cmds);
            let c = sim.camera();
            prop_assert!(c.pan.abs() <= PAN_LIMIT_DEG && c.tilt.abs() <= TILT_LIMIT_DEG);
            let lim = SERVO_SLEW_DEG_PER_S * dt + 1e-9;
            prop_assert!((c.pan - p0).abs() <= lim && (c.tilt - t0).abs() <= lim);
        }
    }

    #[test]
    fn servo_model_never_overshoots(target in -500.0f64..500.0, dts in proptest::collection::vec(0.0f64..0.5, 1..40)) {
        let mut s = ServoModel::new(-90.0, 90.0);
        s.set_target(target);
        let goal = target.clamp(-90.0, 90.0);
        for dt in dts {
            let before = (goal - s.position).abs();
            s.step(dt);
            let after = (goal - s.position).abs();
            prop_assert!(after <= before + 1e-12);
            prop_assert!((-90.0..=90.0).contains(&s.position));
        }
    }
}
