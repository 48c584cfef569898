//! Mask propagation: spread a trusted keyframe mask to the whole clip with
//! the built-in propagators.
//!
//! ```bash
//! cargo run -p rvos --example propagation
//! ```

use std::path::Path;

use anyhow::Result;
use rvos::backends::{run_propagator, BackendDescriptor, PropagationRequest};
use rvos::mask::BinaryMask;

fn show(label: &str, frames: &[BinaryMask]) {
    println!("{label}:");
    for y in 0..frames[0].height() {
        let row: String = frames
            .iter()
            .map(|m| {
                let cells: String = (0..m.width())
                    .map(|x| if m.get(x, y) { '#' } else { '.' })
                    .collect();
                format!("{cells}  ")
            })
            .collect();
        println!("  {row}");
    }
}

fn main() -> Result<()> {
    // A 3x3 square sits at the center of frame 2 of a 5-frame clip.
    let mut key_mask = BinaryMask::new(9, 5)?;
    for y in 1..4 {
        for x in 3..6 {
            key_mask.set(x, y, true);
        }
    }
    let frame_ids: Vec<String> = (0..5).map(|i| format!("{i:05}")).collect();
    let request = PropagationRequest::new(key_mask, 2, frame_ids)?;

    // The identity propagator broadcasts the key mask everywhere.
    let identity = run_propagator(&BackendDescriptor::identity(), &request, Path::new("."))?;
    show("identity (frames 0..5)", identity.frames());

    // The translation propagator moves the mask by a constant velocity:
    // frames after the key shift forward, frames before it retrace.
    let translation = run_propagator(
        &BackendDescriptor::translation(2, 0),
        &request,
        Path::new("."),
    )?;
    show("translation dx=2 (frames 0..5)", translation.frames());

    // The keyframe is always authoritative.
    assert_eq!(translation.frame(2), &request.key_mask);
    println!("keyframe fixpoint holds: frame 2 equals the submitted key mask");
    Ok(())
}
