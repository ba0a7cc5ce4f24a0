//! Masked-language-modeling data transformation and loss.
//!
//! Positions are selected independently (15% by default, specials excluded);
//! selected positions are replaced by `[MASK]`, by a random non-special
//! token, or kept, at 80/10/10. The loss is the mean negative log-likelihood
//! of the true token over the selected positions.

use crate::tokenizer::{MASK, SPECIAL_TOKENS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

const FIRST_REGULAR_ID: u32 = SPECIAL_TOKENS.len() as u32;

#[derive(Debug, Error, PartialEq)]
pub enum MlmError {
    #[error("invalid rates: select must lie in (0,1) and mask+random+keep must sum to 1")]
    InvalidRates,
    #[error("vocabulary of {0} has no non-special tokens to sample replacements from")]
    VocabularyTooSmall(usize),
    #[error("token id {id} out of range for vocabulary of {size}")]
    IdOutOfRange { id: u32, size: usize },
    #[error("prediction {index} is not a distribution (sums to {sum})")]
    NotNormalized { index: usize, sum: f64 },
    #[error("expected {expected} predictions for the selected positions, got {got}")]
    PredictionCountMismatch { expected: usize, got: usize },
}

/// Selection and corruption rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskRates {
    pub select: f64,
    pub mask: f64,
    pub random: f64,
    pub keep: f64,
}

impl Default for MaskRates {
    fn default() -> MaskRates {
        MaskRates {
            select: 0.15,
            mask: 0.8,
            random: 0.1,
            keep: 0.1,
        }
    }
}

impl MaskRates {
    fn validate(&self) -> Result<(), MlmError> {
        let partition_ok = (self.mask + self.random + self.keep - 1.0).abs() <= 1e-9
            && self.mask >= 0.0
            && self.random >= 0.0
            && self.keep >= 0.0;
        if self.select > 0.0 && self.select < 1.0 && partition_ok {
            Ok(())
        } else {
            Err(MlmError::InvalidRates)
        }
    }
}

/// One corrupted sequence with its prediction targets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedBatch {
    /// Sequence after corruption; same length as the original.
    pub inputs: Vec<u32>,
    /// True id at selected positions, `None` elsewhere.
    pub targets: Vec<Option<u32>>,
    /// Selection flags per position.
    pub selection_mask: Vec<bool>,
}

impl MaskedBatch {
    /// Indices of selected positions, ascending.
    pub fn selected_positions(&self) -> Vec<usize> {
        self.selection_mask
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| s.then_some(i))
            .collect()
    }

    pub fn selected_count(&self) -> usize {
        self.selection_mask.iter().filter(|&&s| s).count()
    }
}

/// Corrupts a token sequence for masked-language-modeling.
///
/// Special-token positions (ids 0..=4) are never selected and consume no
/// randomness, so the draw sequence depends only on the non-special
/// positions. Random replacements are drawn uniformly from the non-special
/// ids.
pub fn mask(
    sequence: &[u32],
    rates: &MaskRates,
    vocab_size: usize,
    seed: u64,
) -> Result<MaskedBatch, MlmError> {
    rates.validate()?;
    if vocab_size <= FIRST_REGULAR_ID as usize {
        return Err(MlmError::VocabularyTooSmall(vocab_size));
    }
    for &id in sequence {
        if id as usize >= vocab_size {
            return Err(MlmError::IdOutOfRange {
                id,
                size: vocab_size,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = sequence.to_vec();
    let mut targets = vec![None; sequence.len()];
    let mut selection_mask = vec![false; sequence.len()];

    for (position, &id) in sequence.iter().enumerate() {
        if id < FIRST_REGULAR_ID {
            continue;
        }
        if rng.gen::<f64>() >= rates.select {
            continue;
        }
        selection_mask[position] = true;
        targets[position] = Some(id);
        let strategy = rng.gen::<f64>();
        if strategy < rates.mask {
            inputs[position] = MASK;
        } else if strategy < rates.mask + rates.random {
            inputs[position] = rng.gen_range(FIRST_REGULAR_ID..vocab_size as u32);
        }
        // Otherwise the original token stays in place.
    }

    Ok(MaskedBatch {
        inputs,
        targets,
        selection_mask,
    })
}

/// Mean negative log-likelihood over the selected positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MlmLossReport {
    pub loss: f64,
    pub count: usize,
}

/// Computes the MLM loss from per-selected-position probability
/// distributions over the vocabulary, ordered by ascending position.
pub fn mlm_loss(batch: &MaskedBatch, predictions: &[Vec<f64>]) -> Result<MlmLossReport, MlmError> {
    let selected = batch.selected_positions();
    if predictions.len() != selected.len() {
        return Err(MlmError::PredictionCountMismatch {
            expected: selected.len(),
            got: predictions.len(),
        });
    }
    let mut total = 0.0;
    for (index, (&position, distribution)) in selected.iter().zip(predictions).enumerate() {
        let sum: f64 = distribution.iter().sum();
        if (sum - 1.0).abs() > 1e-6 || distribution.iter().any(|&p| p < 0.0) {
            return Err(MlmError::NotNormalized { index, sum });
        }
        let target = batch.targets[position].expect("selected position carries a target") as usize;
        let p = distribution.get(target).copied().unwrap_or(0.0);
        total += -p.ln();
    }
    let count = selected.len();
    let loss = if count == 0 { 0.0 } else { total / count as f64 };
    Ok(MlmLossReport { loss, count })
}

#[derive(Debug, Serialize)]
struct MaskedRow<'a> {
    id: &'a str,
    inputs: &'a [u32],
    targets: BTreeMap<usize, u32>,
}

/// Serializes masked batches as paired line-delimited records
/// `{id, inputs, targets}` with targets keyed by position.
pub fn masked_to_jsonl<'a>(rows: impl IntoIterator<Item = (&'a str, &'a MaskedBatch)>) -> String {
    let mut out = String::new();
    for (id, batch) in rows {
        let targets: BTreeMap<usize, u32> = batch
            .targets
            .iter()
            .enumerate()
            .filter_map(|(pos, t)| t.map(|id| (pos, id)))
            .collect();
        let row = MaskedRow {
            id,
            inputs: &batch.inputs,
            targets,
        };
        out.push_str(&serde_json::to_string(&row).expect("batch serialization cannot fail"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::{CLS, SEP};

    const VOCAB: usize = 1000;

    #[test]
    fn specials_are_never_selected() {
        let batch = mask(&[CLS, SEP], &MaskRates::default(), VOCAB, 1).unwrap();
        assert_eq!(batch.selected_count(), 0);
        assert_eq!(batch.inputs, vec![CLS, SEP]);

        let sequence = vec![CLS, 10, 11, MASK, 12, SEP];
        for seed in 0..50 {
            let batch = mask(&sequence, &MaskRates::default(), VOCAB, seed).unwrap();
            assert!(!batch.selection_mask[0]);
            assert!(!batch.selection_mask[3]);
            assert!(!batch.selection_mask[5]);
        }
    }

    #[test]
    fn corruption_statistics_match_the_configured_rates() {
        let sequence: Vec<u32> = (0..100_000).map(|i| 5 + (i % 900) as u32).collect();
        let batch = mask(&sequence, &MaskRates::default(), VOCAB, 1).unwrap();

        let selected = batch.selected_count();
        let fraction = selected as f64 / sequence.len() as f64;
        assert!(
            (fraction - 0.15).abs() <= 0.005,
            "selected fraction {fraction}"
        );

        let mut masked = 0usize;
        let mut kept = 0usize;
        let mut randomized = 0usize;
        for (position, (&input, &original)) in
            batch.inputs.iter().zip(sequence.iter()).enumerate()
        {
            if !batch.selection_mask[position] {
                assert_eq!(input, original, "unselected positions must be identical");
                continue;
            }
            if input == MASK {
                masked += 1;
            } else if input == original {
                kept += 1;
            } else {
                randomized += 1;
            }
        }
        let share = |n: usize| n as f64 / selected as f64;
        assert!((share(masked) - 0.8).abs() <= 0.01, "mask share");
        assert!((share(randomized) - 0.1).abs() <= 0.01, "random share");
        assert!((share(kept) - 0.1).abs() <= 0.01, "keep share");
    }

    #[test]
    fn corruption_preserves_length_and_is_deterministic() {
        let sequence: Vec<u32> = (5..200).collect();
        let a = mask(&sequence, &MaskRates::default(), VOCAB, 7).unwrap();
        let b = mask(&sequence, &MaskRates::default(), VOCAB, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.inputs.len(), sequence.len());
        let c = mask(&sequence, &MaskRates::default(), VOCAB, 8).unwrap();
        assert_ne!(a, c, "different seeds should corrupt differently");
    }

    #[test]
    fn random_replacements_are_never_special() {
        let sequence: Vec<u32> = (5..VOCAB as u32).collect();
        let rates = MaskRates {
            select: 0.5,
            mask: 0.0,
            random: 1.0,
            keep: 0.0,
        };
        let batch = mask(&sequence, &rates, VOCAB, 3).unwrap();
        assert!(batch.inputs.iter().all(|&id| id >= 5));
    }

    #[test]
    fn invalid_rates_are_rejected() {
        let bad = [
            MaskRates { select: 0.0, ..MaskRates::default() },
            MaskRates { select: 1.0, ..MaskRates::default() },
            MaskRates { select: 0.15, mask: 0.8, random: 0.2, keep: 0.1 },
            MaskRates { select: 0.15, mask: 1.2, random: -0.1, keep: -0.1 },
        ];
        for rates in bad {
            assert_eq!(mask(&[5, 6], &rates, VOCAB, 0).unwrap_err(), MlmError::InvalidRates);
        }
    }

    #[test]
    fn out_of_range_ids_are_rejected() {
        let err = mask(&[5, 2000], &MaskRates::default(), VOCAB, 0).unwrap_err();
        assert!(matches!(err, MlmError::IdOutOfRange { id: 2000, .. }));
    }

    fn batch_with_selected(targets: &[(usize, u32)], len: usize) -> MaskedBatch {
        let mut batch = MaskedBatch {
            inputs: vec![0; len],
            targets: vec![None; len],
            selection_mask: vec![false; len],
        };
        for &(position, id) in targets {
            batch.targets[position] = Some(id);
            batch.selection_mask[position] = true;
        }
        batch
    }

    #[test]
    fn uniform_predictions_give_log_vocab_loss() {
        let v = 64usize;
        let batch = batch_with_selected(&[(0, 5), (1, 6), (2, 7)], 3);
        let uniform = vec![vec![1.0 / v as f64; v]; 3];
        let report = mlm_loss(&batch, &uniform).unwrap();
        assert_eq!(report.count, 3);
        assert!((report.loss - (v as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn one_hot_correct_predictions_give_zero_loss() {
        let batch = batch_with_selected(&[(0, 5), (2, 9)], 3);
        let mut p0 = vec![0.0; 16];
        p0[5] = 1.0;
        let mut p1 = vec![0.0; 16];
        p1[9] = 1.0;
        let report = mlm_loss(&batch, &[p0, p1]).unwrap();
        assert_eq!(report.loss, 0.0);
        assert_eq!(report.count, 2);
    }

    #[test]
    fn hand_built_three_position_case() {
        // Probabilities 1/2, 1/4, 1/8 at the targets: mean NLL = 2 ln 2.
        let batch = batch_with_selected(&[(0, 5), (1, 5), (2, 5)], 3);
        let dist = |p: f64| {
            let mut d = vec![0.0; 8];
            d[5] = p;
            d[6] = 1.0 - p;
            d
        };
        let report = mlm_loss(&batch, &[dist(0.5), dist(0.25), dist(0.125)]).unwrap();
        assert!((report.loss - 2.0 * 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_or_missing_predictions_are_rejected() {
        let batch = batch_with_selected(&[(0, 5)], 2);
        let err = mlm_loss(&batch, &[vec![0.5; 8]]).unwrap_err();
        assert!(matches!(err, MlmError::NotNormalized { .. }));
        let err = mlm_loss(&batch, &[]).unwrap_err();
        assert!(matches!(
            err,
            MlmError::PredictionCountMismatch { expected: 1, got: 0 }
        ));
    }

    #[test]
    fn loss_is_permutation_invariant_over_selected_positions() {
        let batch_a = batch_with_selected(&[(0, 5), (3, 6)], 4);
        let batch_b = batch_with_selected(&[(1, 6), (2, 5)], 4);
        let mut p5 = vec![0.0; 8];
        p5[5] = 0.25;
        p5[6] = 0.75;
        let mut p6 = vec![0.0; 8];
        p6[5] = 0.9;
        p6[6] = 0.1;
        let a = mlm_loss(&batch_a, &[p5.clone(), p6.clone()]).unwrap();
        let b = mlm_loss(&batch_b, &[p6, p5]).unwrap();
        assert!((a.loss - b.loss).abs() < 1e-12);
    }

    #[test]
    fn masked_batches_export_as_paired_records() {
        let sequence = vec![CLS, 10, 11, 12, SEP];
        let batch = mask(&sequence, &MaskRates::default(), VOCAB, 99).unwrap();
        let jsonl = masked_to_jsonl([("s0", &batch)]);
        assert!(jsonl.starts_with("{\"id\":\"s0\",\"inputs\":["));
        let line = jsonl.lines().next().unwrap();
        let value: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(value["inputs"].as_array().unwrap().len(), 5);
    }
}
