//! Keyframe selection from a per-frame confidence series.

use thiserror::Error;

use crate::mask::ConfidenceSeries;

#[derive(Debug, Error)]
pub enum KeyframeError {
    #[error("cannot select a keyframe from an empty confidence series")]
    EmptySeries,
}

/// The frame chosen as the propagation seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyframeChoice {
    /// Zero-based position of the winning frame.
    pub index: usize,
    /// The confidence value at that position.
    pub score: f64,
}

/// Picks the argmax of the series. Ties resolve to the lowest index so the
/// choice is deterministic.
pub fn select_keyframe(series: &ConfidenceSeries) -> Result<KeyframeChoice, KeyframeError> {
    let scores = series.scores();
    if scores.is_empty() {
        return Err(KeyframeError::EmptySeries);
    }
    let mut best = KeyframeChoice {
        index: 0,
        score: scores[0],
    };
    for (index, &score) in scores.iter().enumerate().skip(1) {
        if score > best.score {
            best = KeyframeChoice { index, score };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(scores: &[f64]) -> ConfidenceSeries {
        ConfidenceSeries::new(scores.to_vec()).unwrap()
    }

    #[test]
    fn picks_the_maximum() {
        let choice = select_keyframe(&series(&[0.2, 0.9, 0.5])).unwrap();
        assert_eq!(choice.index, 1);
        assert_eq!(choice.score, 0.9);
    }

    #[test]
    fn ties_resolve_to_lowest_index() {
        let choice = select_keyframe(&series(&[0.7, 0.7])).unwrap();
        assert_eq!(choice.index, 0);
        assert_eq!(choice.score, 0.7);
    }

    #[test]
    fn singleton_series() {
        let choice = select_keyframe(&series(&[0.3])).unwrap();
        assert_eq!(choice.index, 0);
        assert_eq!(choice.score, 0.3);
    }

    #[test]
    fn empty_series_is_an_input_error() {
        assert!(matches!(
            select_keyframe(&series(&[])),
            Err(KeyframeError::EmptySeries)
        ));
    }

    proptest! {
        #[test]
        fn matches_linear_scan_oracle(scores in proptest::collection::vec(0.0f64..=1.0, 1..64)) {
            let choice = select_keyframe(&series(&scores)).unwrap();
            let mut oracle_index = 0;
            for i in 0..scores.len() {
                if scores[i] > scores[oracle_index] {
                    oracle_index = i;
                }
            }
            prop_assert_eq!(choice.index, oracle_index);
            prop_assert_eq!(choice.score, scores[oracle_index]);
        }

        #[test]
        fn score_dominates_the_series(scores in proptest::collection::vec(0.0f64..=1.0, 1..64)) {
            let choice = select_keyframe(&series(&scores)).unwrap();
            for &s in &scores {
                prop_assert!(choice.score >= s);
            }
        }

        #[test]
        fn strictly_increasing_rescale_keeps_the_index(
            grid in proptest::collection::vec(0u32..=128, 1..64),
        ) {
            // Grid-valued scores keep distinct inputs distinct after rescaling,
            // so ties are preserved exactly.
            let scores: Vec<f64> = grid.iter().map(|&g| g as f64 / 128.0).collect();
            let base = select_keyframe(&series(&scores)).unwrap();
            // x/2 and (x + x^2)/2 are strictly increasing on [0, 1] and stay inside it.
            let halved: Vec<f64> = scores.iter().map(|s| s / 2.0).collect();
            let curved: Vec<f64> = scores.iter().map(|s| (s + s * s) / 2.0).collect();
            prop_assert_eq!(select_keyframe(&series(&halved)).unwrap().index, base.index);
            prop_assert_eq!(select_keyframe(&series(&curved)).unwrap().index, base.index);
        }
    }
}
