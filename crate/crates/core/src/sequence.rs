//! Model-input sequence assembly.
//!
//! Pre-training sequences join the function text with its reduced-AST kind
//! sequence; fine-tuning sequences join it with the stylometry annotation.
//! Either payload sits behind a single reserved separator token. Records in
//! other languages pass through verbatim, and parse failures degrade to
//! source-only sequences instead of dropping records.

use crate::corpus::{CorpusMode, FunctionRecord, Language};
use crate::cstyle::{extract_features, to_annotation};
use crate::parser::parse;
use crate::reduce::extract_nonterminals;
use crate::tokenizer::{decode, encode, encode_for_model, Vocabulary};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Separator literal placed between source text and modality payload. The
/// tokenizer encodes it as the single reserved [`SEP`] id.
pub const SEPARATOR: &str = "[SEP]";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SequenceError {
    #[error("record `{id}` has no label; fine-tuning sequences require one")]
    MissingLabel { id: String },
    #[error("line {line}: malformed sequence record: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: missing `label` required in finetune mode")]
    MissingLabelLine { line: usize },
}

/// One assembled model-input sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModalSequence {
    pub text: String,
    pub mode: CorpusMode,
    pub origin: String,
    pub label: Option<u8>,
}

fn compose(source: &str, payload: &str) -> String {
    if payload.is_empty() {
        format!("{source} {SEPARATOR}")
    } else {
        format!("{source} {SEPARATOR} {payload}")
    }
}

/// Splits a sequence text back into `(source, payload)` at the last
/// separator occurrence; payloads never contain the separator themselves.
fn split_at_separator(text: &str) -> Option<(&str, &str)> {
    let marker = format!(" {SEPARATOR}");
    let pos = text.rfind(&marker)?;
    let rest = &text[pos + marker.len()..];
    let payload = rest.strip_prefix(' ').unwrap_or(rest);
    Some((&text[..pos], payload))
}

/// Builds the pre-training sequence for a record: C-like sources gain their
/// reduced-AST kind payload, everything else passes through unchanged.
pub fn build_pretrain_sequence(record: &FunctionRecord) -> ModalSequence {
    let text = match record.language {
        Language::Other => record.source.clone(),
        Language::CLike => match parse(&record.source) {
            Ok(tree) => {
                let payload = extract_nonterminals(&tree, record.id.clone()).to_text();
                compose(&record.source, &payload)
            }
            Err(error) => {
                log::warn!(
                    "record `{}` failed to parse ({error}); using source only",
                    record.id
                );
                record.source.clone()
            }
        },
    };
    ModalSequence {
        text,
        mode: CorpusMode::Pretrain,
        origin: record.id.clone(),
        label: record.label,
    }
}

/// Builds the fine-tuning sequence for a labeled record: C-like sources gain
/// their stylometry annotation payload.
pub fn build_finetune_sequence(record: &FunctionRecord) -> Result<ModalSequence, SequenceError> {
    let label = record.label.ok_or_else(|| SequenceError::MissingLabel {
        id: record.id.clone(),
    })?;
    let text = match record.language {
        Language::Other => record.source.clone(),
        Language::CLike => match parse(&record.source) {
            Ok(tree) => {
                let annotation = to_annotation(&extract_features(&tree, record.id.clone()));
                compose(&record.source, &annotation.to_text())
            }
            Err(error) => {
                log::warn!(
                    "record `{}` failed to parse ({error}); using source only",
                    record.id
                );
                record.source.clone()
            }
        },
    };
    Ok(ModalSequence {
        text,
        mode: CorpusMode::Finetune,
        origin: record.id.clone(),
        label: Some(label),
    })
}

/// Measured model length of a composed text: `[CLS] src [SEP]-sep payload
/// [SEP]`. Encoding splits at the separator literal, so the parts measure
/// independently and sum exactly.
fn measure_parts(vocab: &Vocabulary, source: &str, payload: Option<&str>) -> usize {
    match payload {
        Some(payload) => {
            let head = encode(vocab, &format!("{source} ")).len() + 1;
            let tail = if payload.is_empty() {
                0
            } else {
                encode(vocab, &format!(" {payload}")).len()
            };
            head + tail + 2
        }
        None => encode(vocab, source).len() + 2,
    }
}

/// Trims a sequence until its model encoding fits `max_tokens`, removing
/// payload tokens from the end first and source tokens only when the payload
/// is exhausted. The leading classification token always survives.
pub fn truncate(sequence: &ModalSequence, max_tokens: usize, vocab: &Vocabulary) -> ModalSequence {
    assert!(max_tokens >= 8, "max_tokens must be at least 8");
    if encode_for_model(vocab, &sequence.text).len() <= max_tokens {
        return sequence.clone();
    }

    let mut result = sequence.clone();
    match split_at_separator(&sequence.text) {
        Some((source, payload)) => {
            let payload_ids = encode(vocab, payload);
            for keep in (0..=payload_ids.len()).rev() {
                let kept = decode(vocab, &payload_ids[..keep]).expect("ids from encode");
                if measure_parts(vocab, source, Some(&kept)) <= max_tokens {
                    result.text = compose(source, &kept);
                    return result;
                }
            }
            // Payload fully removed and still too long: trim the source.
            let source_ids = encode(vocab, source);
            for keep in (0..=source_ids.len()).rev() {
                let kept = decode(vocab, &source_ids[..keep]).expect("ids from encode");
                if measure_parts(vocab, &kept, Some("")) <= max_tokens {
                    result.text = compose(&kept, "");
                    return result;
                }
            }
        }
        None => {
            let source_ids = encode(vocab, &sequence.text);
            for keep in (0..=source_ids.len()).rev() {
                let kept = decode(vocab, &source_ids[..keep]).expect("ids from encode");
                if measure_parts(vocab, &kept, None) <= max_tokens {
                    result.text = kept;
                    return result;
                }
            }
        }
    }
    unreachable!("an empty sequence always fits within max_tokens >= 8");
}

#[derive(Debug, Serialize, Deserialize)]
struct SequenceRow<'a> {
    id: &'a str,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<u8>,
}

/// Line-delimited export: `{id, text, label?}`.
pub fn sequences_to_jsonl(sequences: &[ModalSequence]) -> String {
    let mut out = String::new();
    for sequence in sequences {
        let row = SequenceRow {
            id: &sequence.origin,
            text: &sequence.text,
            label: sequence.label,
        };
        out.push_str(&serde_json::to_string(&row).expect("sequence serialization cannot fail"));
        out.push('\n');
    }
    out
}

/// Parses sequences exported by [`sequences_to_jsonl`]. In finetune mode a
/// label is required on every row.
pub fn sequences_from_jsonl(
    content: &str,
    mode: CorpusMode,
) -> Result<Vec<ModalSequence>, SequenceError> {
    #[derive(Deserialize)]
    struct OwnedRow {
        id: String,
        text: String,
        label: Option<u8>,
    }
    let mut sequences = Vec::new();
    for (index, line) in content.lines().enumerate() {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: OwnedRow = serde_json::from_str(line).map_err(|e| SequenceError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if mode == CorpusMode::Finetune && row.label.is_none() {
            return Err(SequenceError::MissingLabelLine { line: line_no });
        }
        sequences.push(ModalSequence {
            text: row.text,
            mode,
            origin: row.id,
            label: row.label,
        });
    }
    Ok(sequences)
}

// Re-export used by truncation tests and the CLI for measuring sequences.
pub use crate::tokenizer::CLS;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::FunctionRecord;
    use crate::tokenizer::train_bpe;

    fn c_record(id: &str, source: &str) -> FunctionRecord {
        FunctionRecord::new(id, source)
    }

    /// Merge-free vocabulary: every non-special token is one byte, which
    /// makes token arithmetic in truncation tests exact.
    fn plain_vocab() -> Vocabulary {
        train_bpe(&["z"], 261).unwrap()
    }

    #[test]
    fn pretrain_sequence_composes_source_and_kind_payload() {
        let source = "int f(){return 0;}";
        let record = c_record("r1", source);
        let sequence = build_pretrain_sequence(&record);

        let tree = parse(source).unwrap();
        let expected_payload = extract_nonterminals(&tree, "r1").to_text();
        assert_eq!(sequence.text, format!("{source} [SEP] {expected_payload}"));
        assert!(expected_payload.starts_with("FunctionDefinition"));
        assert_eq!(sequence.mode, CorpusMode::Pretrain);
    }

    #[test]
    fn non_c_like_records_pass_through_verbatim() {
        let record = c_record("r2", "def f():\n    return 0")
            .with_language(Language::Other)
            .with_label(0);
        let pretrain = build_pretrain_sequence(&record);
        assert_eq!(pretrain.text, record.source);
        let finetune = build_finetune_sequence(&record).unwrap();
        assert_eq!(finetune.text, record.source);
    }

    #[test]
    fn building_is_deterministic() {
        let record = c_record("r3", "int f(int a){if(a){return 1;}return 0;}").with_label(1);
        assert_eq!(
            build_pretrain_sequence(&record),
            build_pretrain_sequence(&record)
        );
        assert_eq!(
            build_finetune_sequence(&record).unwrap(),
            build_finetune_sequence(&record).unwrap()
        );
    }

    #[test]
    fn unparseable_sources_fall_back_to_source_only() {
        let record = c_record("r4", "this is not C at all $$$").with_label(1);
        let sequence = build_pretrain_sequence(&record);
        assert_eq!(sequence.text, record.source);
        let sequence = build_finetune_sequence(&record).unwrap();
        assert_eq!(sequence.text, record.source);
    }

    #[test]
    fn finetune_sequence_carries_annotation_and_label() {
        let source = "int f(int a){if(a>0){return 1;}if(a<0){return 2;}return 0;}";
        let record = c_record("r5", source).with_label(1);
        let sequence = build_finetune_sequence(&record).unwrap();
        assert_eq!(sequence.label, Some(1));
        let (src, payload) = split_at_separator(&sequence.text).unwrap();
        assert_eq!(src, source);
        assert!(payload.contains("IfStatement=2"));
        assert!(payload.split_whitespace().all(|tok| tok.contains('=')));
    }

    #[test]
    fn missing_label_is_an_error() {
        let record = c_record("r6", "int f(){return 0;}");
        assert_eq!(
            build_finetune_sequence(&record).unwrap_err(),
            SequenceError::MissingLabel { id: "r6".into() }
        );
    }

    #[test]
    fn empty_payload_keeps_the_separator() {
        assert_eq!(compose("src", ""), "src [SEP]");
        assert_eq!(split_at_separator("src [SEP]"), Some(("src", "")));
    }

    #[test]
    fn mode_discipline_separates_payload_shapes() {
        let source = "int f(int a){if(a){return g(a);}return 0;}";
        let record = c_record("r7", source).with_label(0);
        let pre = build_pretrain_sequence(&record);
        let fine = build_finetune_sequence(&record).unwrap();
        let (_, pre_payload) = split_at_separator(&pre.text).unwrap();
        let (_, fine_payload) = split_at_separator(&fine.text).unwrap();
        assert!(pre_payload.split_whitespace().all(|t| !t.contains('=')));
        assert!(fine_payload.split_whitespace().all(|t| t.contains('=')));
    }

    #[test]
    fn short_sequences_are_left_unchanged() {
        let vocab = plain_vocab();
        let sequence = ModalSequence {
            text: compose("ab", "xy"),
            mode: CorpusMode::Finetune,
            origin: "t".into(),
            label: Some(0),
        };
        let out = truncate(&sequence, 64, &vocab);
        assert_eq!(out, sequence);
    }

    #[test]
    fn hard_limit_lands_exactly_and_keeps_cls() {
        let vocab = plain_vocab();
        let sequence = ModalSequence {
            text: compose("abcdef", "xyz"),
            mode: CorpusMode::Finetune,
            origin: "t".into(),
            label: Some(0),
        };
        // 14 tokens untruncated; at limit 8 the payload is gone and the
        // source is cut to four bytes: [CLS] a b c d ' ' [SEP] [SEP].
        let out = truncate(&sequence, 8, &vocab);
        let ids = encode_for_model(&vocab, &out.text);
        assert_eq!(ids.len(), 8);
        assert_eq!(ids[0], CLS);
        assert_eq!(out.text, "abcd [SEP]");
    }

    #[test]
    fn payload_is_trimmed_before_source() {
        let vocab = plain_vocab();
        let sequence = ModalSequence {
            text: compose("abcdef", "xyz"),
            mode: CorpusMode::Finetune,
            origin: "t".into(),
            label: Some(0),
        };
        let out = truncate(&sequence, 12, &vocab);
        let (src, payload) = split_at_separator(&out.text).unwrap();
        assert_eq!(src, "abcdef", "source must stay intact while payload shrinks");
        assert_eq!(payload, "x");
        assert_eq!(encode_for_model(&vocab, &out.text).len(), 12);
    }

    #[test]
    fn truncation_is_monotone_in_the_limit() {
        let vocab = plain_vocab();
        let sequence = ModalSequence {
            text: compose("abcdefghij", "uvwxyz"),
            mode: CorpusMode::Finetune,
            origin: "t".into(),
            label: Some(0),
        };
        let mut previous: Option<(String, String)> = None;
        for max in 8..=24 {
            let out = truncate(&sequence, max, &vocab);
            let (src, payload) = split_at_separator(&out.text).unwrap();
            if let Some((prev_src, prev_payload)) = previous {
                assert!(src.starts_with(&prev_src), "source kept-set must grow");
                assert!(payload.starts_with(&prev_payload), "payload kept-set must grow");
            }
            previous = Some((src.to_string(), payload.to_string()));
        }
    }

    #[test]
    fn sequences_round_trip_through_jsonl() {
        let records = [
            c_record("a", "int f(){return 0;}").with_label(1),
            c_record("b", "int g(){return 1;}").with_label(0),
        ];
        let sequences: Vec<ModalSequence> = records
            .iter()
            .map(|r| build_finetune_sequence(r).unwrap())
            .collect();
        let jsonl = sequences_to_jsonl(&sequences);
        let back = sequences_from_jsonl(&jsonl, CorpusMode::Finetune).unwrap();
        assert_eq!(sequences, back);

        let unlabeled = "{\"id\":\"x\",\"text\":\"t\"}\n";
        assert!(sequences_from_jsonl(unlabeled, CorpusMode::Finetune).is_err());
        assert!(sequences_from_jsonl(unlabeled, CorpusMode::Pretrain).is_ok());
    }
}
