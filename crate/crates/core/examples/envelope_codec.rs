//! Encodes one of each wire message, shows the envelope header and checks
//! that a flipped bit is caught.
//!
//! ```text
//! cargo run --release --example envelope_codec
//! ```

use teleop::transport::{
    decode_envelope, decode_message, encode_message, ControlCommand, DetectionsMsg, Message,
    RobotStatus, VehicleMode, VideoFrame, HEADER_LEN,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let msgs = [
        Message::VideoFrame(VideoFrame::gray(4, 2, (0..8).collect())),
        Message::Detections(DetectionsMsg {
            frame_seq: 7,
            items: Vec::new(),
        }),
        Message::Control(ControlCommand::ModeSwitch(VehicleMode::Uav)),
        Message::Control(ControlCommand::Drive {
            left: 40,
            right: -40,
        }),
        Message::Heartbeat(Some(RobotStatus {
            mode: VehicleMode::Ugv,
            pan_cd: -1250,
            tilt_cd: 300,
            estop: false,
        })),
    ];
    for (seq, m) in msgs.iter().enumerate() {
        let bytes = encode_message(m, seq as u32, 1_000_000)?;
        let hex: Vec<String> = bytes[..HEADER_LEN]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        println!(
            "{:?}: {} bytes, header {}",
            m.kind(),
            bytes.len(),
            hex.join("")
        );
        let (env, back) = decode_message(&bytes)?;
        assert_eq!(&back, m);
        assert_eq!(env.sequence, seq as u32);

        let mut bad = bytes.clone();
        let last_payload_byte = bad.len() - 5;
        bad[last_payload_byte] ^= 0x10;
        println!("  flipped bit: {}", decode_envelope(&bad).unwrap_err());
    }
    Ok(())
}
