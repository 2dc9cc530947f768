//! Classifies labeled person crops with the reference model and shows the
//! verdict each would be drawn with.
//!
//! ```text
//! cargo run --release --example threat_classification -- [count] [threshold]
//! ```

use teleop::classifier::{classify, verdict, StubClassifier, WeaponClass};
use teleop::models::reference_classifier;
use teleop::overlay::label_text;
use teleop::sim::labeled_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(12);
    let threshold: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.5);

    let model = reference_classifier();
    let mut right = 0;
    for (roi, truth) in labeled_corpus(2024, n) {
        let scores = model.scores(&roi)?;
        let v = verdict(&scores, threshold);
        let guess = scores.argmax_label();
        right += (guess == truth) as usize;
        println!(
            "{:<14} -> {:<14} threat {:.3} {:?} label \"{}\"",
            truth.name(),
            guess.name(),
            v.threat_probability,
            v.color,
            label_text(&v)
        );
    }
    println!("{right}/{n} labels correct");

    // Any plugin goes through the same validation; a one-hot stub makes
    // the verdict arithmetic easy to see.
    let roi = labeled_corpus(1, 1).remove(0).0;
    let stub = StubClassifier::one_hot(WeaponClass::Pistol);
    let v = verdict(&classify(&roi, &stub)?, threshold);
    println!("stub pistol: {:?} {}%", v.color, v.percent);
    Ok(())
}
