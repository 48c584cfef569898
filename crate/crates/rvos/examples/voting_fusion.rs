//! Pixel-vote fusion: group sequences that describe one target and fuse
//! them with a majority threshold.
//!
//! ```bash
//! cargo run -p rvos --example voting_fusion
//! ```

use anyhow::Result;
use rvos::dataset::ExpressionRecord;
use rvos::fusion::{fuse_group, group_by_target, FusionConfig};
use rvos::mask::{BinaryMask, MaskSequence, VoteGrid};

fn print_mask(label: &str, mask: &BinaryMask) {
    println!("{label}:");
    for y in 0..mask.height() {
        let row: String = (0..mask.width())
            .map(|x| if mask.get(x, y) { '#' } else { '.' })
            .collect();
        println!("  {row}");
    }
}

fn main() -> Result<()> {
    // Three models disagree about a 6x4 object.
    let predictions = [
        BinaryMask::from_rows(&[
            &[1, 1, 1, 0, 0, 0],
            &[1, 1, 1, 0, 0, 0],
            &[1, 1, 1, 0, 0, 0],
            &[0, 0, 0, 0, 0, 0],
        ])?,
        BinaryMask::from_rows(&[
            &[0, 1, 1, 1, 0, 0],
            &[0, 1, 1, 1, 0, 0],
            &[0, 1, 1, 1, 0, 0],
            &[0, 0, 0, 0, 0, 0],
        ])?,
        BinaryMask::from_rows(&[
            &[1, 1, 1, 1, 0, 0],
            &[1, 1, 1, 1, 0, 0],
            &[0, 0, 0, 0, 0, 0],
            &[0, 0, 0, 1, 1, 1],
        ])?,
    ];

    // Low-level view: accumulate votes, then threshold.
    let grid = VoteGrid::from_masks(predictions.iter())?;
    println!("vote counts: {:?}", grid.counts());
    print_mask("majority (2 of 3 votes)", &grid.threshold(2)?);
    print_mask("unanimous (3 of 3 votes)", &grid.threshold(3)?);

    // Pipeline view: expressions annotated on the same object form one
    // fusion group, across models.
    let expression = |id: &str, text: &str| ExpressionRecord {
        expression_id: id.to_string(),
        text: text.to_string(),
        object_id: Some("1".to_string()),
    };
    let records = vec![
        (
            "model_a".to_string(),
            expression("0", "the dog on the left"),
            MaskSequence::new(vec![predictions[0].clone()], vec!["00000".into()])?,
        ),
        (
            "model_a".to_string(),
            expression("1", "a brown dog"),
            MaskSequence::new(vec![predictions[1].clone()], vec!["00000".into()])?,
        ),
        (
            "model_b".to_string(),
            expression("0", "the dog on the left"),
            MaskSequence::new(vec![predictions[2].clone()], vec!["00000".into()])?,
        ),
    ];
    let groups = group_by_target(records)?;
    println!(
        "\n{} group(s); group {:?} has {} members from expressions {:?}",
        groups.len(),
        groups[0].key(),
        groups[0].len(),
        groups[0].expression_ids()
    );
    let cfg = FusionConfig::default();
    println!(
        "majority threshold for {} members: {}",
        groups[0].len(),
        cfg.group_threshold(groups[0].len())
    );
    let fused = fuse_group(&groups[0], &cfg);
    print_mask("fused frame 0", fused.frame(0));
    Ok(())
}
