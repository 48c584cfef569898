//! The external-process file-exchange protocol, end to end.
//!
//! A real deployment points `command_template` at a wrapper script around a
//! segmentation or propagation model. This example writes a tiny Python
//! propagator at runtime and drives it through the same protocol: the
//! harness stages `request.json`, the frame images, and `key.png`; the
//! backend answers with one `<frame_id>.png` per frame.
//!
//! ```bash
//! cargo run -p rvos --example external_backend
//! ```

use std::fs;

use anyhow::Result;
use rvos::backends::{run_propagator, BackendDescriptor, PropagationRequest};
use rvos::dataset::write_mask_png;
use rvos::mask::BinaryMask;

const PROPAGATOR_STUB: &str = r#"import json, os, shutil, sys
request_dir, response_dir = sys.argv[1], sys.argv[2]
with open(os.path.join(request_dir, "request.json")) as fh:
    request = json.load(fh)
print("propagating", len(request["frame_ids"]), "frames from key", request["key_index"])
for frame_id in request["frame_ids"]:
    shutil.copyfile(
        os.path.join(request_dir, "key.png"),
        os.path.join(response_dir, frame_id + ".png"),
    )
"#;

fn main() -> Result<()> {
    let work = tempfile::tempdir()?;

    // Frame images for one 4-frame video; a wrapper around a real model
    // would read these. Any jpg/jpeg/png under <frames>/<video_id> works.
    let frame_ids: Vec<String> = (0..4).map(|i| format!("{:05}", 5 * i)).collect();
    let frames_dir = work.path().join("frames");
    fs::create_dir_all(&frames_dir)?;
    for frame_id in &frame_ids {
        write_mask_png(
            &BinaryMask::new(12, 8)?,
            &frames_dir.join(format!("{frame_id}.png")),
        )?;
    }

    let script = work.path().join("propagator.py");
    fs::write(&script, PROPAGATOR_STUB)?;
    let backend = BackendDescriptor::external(format!(
        "/usr/bin/python3 {} {{request_dir}} {{response_dir}}",
        script.display()
    ))
    .with_timeout(30.0);

    let mut key_mask = BinaryMask::new(12, 8)?;
    for y in 2..6 {
        for x in 4..8 {
            key_mask.set(x, y, true);
        }
    }
    let request = PropagationRequest::new(key_mask, 1, frame_ids)?;
    let propagated = run_propagator(&backend, &request, &frames_dir)?;

    println!(
        "external backend returned {} frames of {}x{}",
        propagated.len(),
        propagated.dimensions().0,
        propagated.dimensions().1
    );
    let builtin = run_propagator(&BackendDescriptor::identity(), &request, &frames_dir)?;
    assert_eq!(propagated, builtin);
    println!("stub output matches the built-in identity propagator exactly");
    Ok(())
}
