//! Keyframe selection: the frame with the highest confidence becomes the
//! propagation seed.
//!
//! ```bash
//! cargo run -p rvos --example keyframe_selection
//! ```

use anyhow::Result;
use rvos::keyframe::select_keyframe;
use rvos::mask::ConfidenceSeries;

fn main() -> Result<()> {
    // Confidences of a 10-frame clip: the object drifts out of view in the
    // middle and returns at the end.
    let scores = vec![0.62, 0.71, 0.88, 0.91, 0.40, 0.12, 0.08, 0.35, 0.90, 0.91];
    let series = ConfidenceSeries::new(scores.clone())?;
    let choice = select_keyframe(&series)?;
    println!("scores: {scores:?}");
    println!(
        "keyframe: index {} with score {} (ties resolve to the lowest index)",
        choice.index, choice.score
    );

    // The selection only depends on the order of the scores, so any strictly
    // increasing rescaling picks the same frame.
    let rescaled: Vec<f64> = scores.iter().map(|s| s * s).collect();
    let rescaled_choice = select_keyframe(&ConfidenceSeries::new(rescaled)?)?;
    println!(
        "after squaring every score the keyframe is still index {}",
        rescaled_choice.index
    );

    // Singleton clips are legal; empty series are an input error.
    println!(
        "singleton series picks index {}",
        select_keyframe(&ConfidenceSeries::new(vec![0.5])?)?.index
    );
    println!(
        "empty series: {}",
        select_keyframe(&ConfidenceSeries::new(vec![])?).unwrap_err()
    );
    Ok(())
}
