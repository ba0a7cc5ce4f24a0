//! Labeled/unlabeled function corpora: loading, validation, deterministic
//! splitting, class weighting, and statistics.
//!
//! The record format is line-delimited JSON with fields `func` (required),
//! `target` (0 or 1, required when loading for fine-tuning), `id` (optional,
//! synthesized from the line number when missing), plus optional `language`
//! and `split`. The field names match the public benchmark releases so real
//! corpus files load unmodified; unknown fields are ignored.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: missing `func` field")]
    MissingSource { line: usize },
    #[error("line {line}: missing `target` label required in finetune mode")]
    MissingLabel { line: usize },
    #[error("line {line}: `target` must be 0 or 1")]
    InvalidLabel { line: usize },
    #[error("line {line}: `language` must be `c_like` or `other`")]
    InvalidLanguage { line: usize },
    #[error("line {line}: `split` must be `train`, `validation` or `test`")]
    InvalidSplit { line: usize },
    #[error("line {line}: duplicate record id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("split ratios must sum to 1.0 (got {sum})")]
    BadRatios { sum: f64 },
    #[error("class weights require at least one record of each class")]
    EmptyClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Language {
    CLike,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// Loading mode: pre-training corpora may omit labels, fine-tuning corpora
/// must label every record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusMode {
    Pretrain,
    Finetune,
}

impl fmt::Display for CorpusMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusMode::Pretrain => f.write_str("pretrain"),
            CorpusMode::Finetune => f.write_str("finetune"),
        }
    }
}

/// One source function with its metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionRecord {
    pub id: String,
    pub source: String,
    pub language: Language,
    pub label: Option<u8>,
    pub split: Option<Split>,
}

impl FunctionRecord {
    pub fn new(id: impl Into<String>, source: impl Into<String>) -> FunctionRecord {
        FunctionRecord {
            id: id.into(),
            source: source.into(),
            language: Language::CLike,
            label: None,
            split: None,
        }
    }

    pub fn with_label(mut self, label: u8) -> FunctionRecord {
        self.label = Some(label);
        self
    }

    pub fn with_language(mut self, language: Language) -> FunctionRecord {
        self.language = language;
        self
    }
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    id: Option<String>,
    func: Option<String>,
    target: Option<serde_json::Value>,
    language: Option<String>,
    split: Option<String>,
}

#[derive(Debug, Serialize)]
struct OutRecord<'a> {
    id: &'a str,
    func: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    language: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    split: Option<Split>,
}

/// Loads a line-delimited corpus, validating each record for `mode`.
/// Record order is preserved. Blank lines are skipped.
pub fn load_corpus(path: impl AsRef<Path>, mode: CorpusMode) -> Result<Vec<FunctionRecord>, CorpusError> {
    let content = std::fs::read_to_string(path)?;
    parse_corpus(&content, mode)
}

/// Same as [`load_corpus`] but over in-memory text.
pub fn parse_corpus(content: &str, mode: CorpusMode) -> Result<Vec<FunctionRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for (index, line) in content.lines().enumerate() {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord =
            serde_json::from_str(line).map_err(|e| CorpusError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        let source = raw.func.ok_or(CorpusError::MissingSource { line: line_no })?;
        let id = raw.id.unwrap_or_else(|| line_no.to_string());
        if !seen_ids.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { line: line_no, id });
        }
        let label = match raw.target {
            None => None,
            Some(value) => Some(parse_label(&value, line_no)?),
        };
        if mode == CorpusMode::Finetune && label.is_none() {
            return Err(CorpusError::MissingLabel { line: line_no });
        }
        let language = match raw.language.as_deref() {
            None | Some("c_like") => Language::CLike,
            Some("other") => Language::Other,
            Some(_) => return Err(CorpusError::InvalidLanguage { line: line_no }),
        };
        let split = match raw.split.as_deref() {
            None => None,
            Some("train") => Some(Split::Train),
            Some("validation") => Some(Split::Validation),
            Some("test") => Some(Split::Test),
            Some(_) => return Err(CorpusError::InvalidSplit { line: line_no }),
        };
        records.push(FunctionRecord {
            id,
            source,
            language,
            label,
            split,
        });
    }
    Ok(records)
}

fn parse_label(value: &serde_json::Value, line: usize) -> Result<u8, CorpusError> {
    match value {
        serde_json::Value::Number(n) => match n.as_u64() {
            Some(0) => Ok(0),
            Some(1) => Ok(1),
            _ => Err(CorpusError::InvalidLabel { line }),
        },
        serde_json::Value::Bool(b) => Ok(u8::from(*b)),
        _ => Err(CorpusError::InvalidLabel { line }),
    }
}

/// Serializes records back to the line-delimited format, including split
/// assignments. The `language` field is written only when it is not the
/// `c_like` default.
pub fn records_to_jsonl(records: &[FunctionRecord]) -> String {
    let mut out = String::new();
    for record in records {
        let row = OutRecord {
            id: &record.id,
            func: &record.source,
            target: record.label,
            language: match record.language {
                Language::CLike => None,
                Language::Other => Some("other"),
            },
            split: record.split,
        };
        out.push_str(&serde_json::to_string(&row).expect("record serialization cannot fail"));
        out.push('\n');
    }
    out
}

/// Assigns train/validation/test splits.
///
/// Records that already carry a split pass through unchanged. The remaining
/// records are assigned deterministically from `seed`, independent of input
/// order: they are sorted by id, shuffled with a seeded generator, and cut
/// into floor-sized groups with the remainder going to train. Output order
/// equals input order.
pub fn split_corpus(
    mut records: Vec<FunctionRecord>,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<Vec<FunctionRecord>, CorpusError> {
    let (train, validation, test) = ratios;
    let sum = train + validation + test;
    if (sum - 1.0).abs() > 1e-9 || train < 0.0 || validation < 0.0 || test < 0.0 {
        return Err(CorpusError::BadRatios { sum });
    }

    let mut unassigned: Vec<(String, usize)> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.split.is_none())
        .map(|(i, r)| (r.id.clone(), i))
        .collect();
    unassigned.sort();

    let n = unassigned.len();
    let n_validation = (n as f64 * validation + 1e-9).floor() as usize;
    let n_test = (n as f64 * test + 1e-9).floor() as usize;
    let n_train_floor = (n as f64 * train + 1e-9).floor() as usize;
    let n_train = n - n_validation - n_test;
    debug_assert!(n_train >= n_train_floor);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    unassigned.shuffle(&mut rng);

    for (position, (_, index)) in unassigned.into_iter().enumerate() {
        let split = if position < n_train {
            Split::Train
        } else if position < n_train + n_validation {
            Split::Validation
        } else {
            Split::Test
        };
        records[index].split = Some(split);
    }
    Ok(records)
}

/// Per-class loss weights: `total / (2 * count_c)`, the inverse-frequency
/// weighting normalized to mean one on balanced data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassWeights {
    pub vulnerable: f64,
    pub safe: f64,
}

impl ClassWeights {
    pub fn for_label(&self, label: u8) -> f64 {
        if label == 1 {
            self.vulnerable
        } else {
            self.safe
        }
    }
}

pub fn class_weights(records: &[FunctionRecord]) -> Result<ClassWeights, CorpusError> {
    let vulnerable = records.iter().filter(|r| r.label == Some(1)).count();
    let safe = records.iter().filter(|r| r.label == Some(0)).count();
    if vulnerable == 0 || safe == 0 {
        return Err(CorpusError::EmptyClass);
    }
    let total = (vulnerable + safe) as f64;
    Ok(ClassWeights {
        vulnerable: total / (2.0 * vulnerable as f64),
        safe: total / (2.0 * safe as f64),
    })
}

/// Corpus-level counts reported by the `stats` command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub total: usize,
    pub vulnerable: usize,
    pub non_vulnerable: usize,
    pub unlabeled: usize,
    pub per_split: SplitCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub unsplit: usize,
}

pub fn corpus_stats(records: &[FunctionRecord]) -> CorpusStats {
    let mut stats = CorpusStats {
        total: records.len(),
        vulnerable: 0,
        non_vulnerable: 0,
        unlabeled: 0,
        per_split: SplitCounts {
            train: 0,
            validation: 0,
            test: 0,
            unsplit: 0,
        },
    };
    for record in records {
        match record.label {
            Some(1) => stats.vulnerable += 1,
            Some(_) => stats.non_vulnerable += 1,
            None => stats.unlabeled += 1,
        }
        match record.split {
            Some(Split::Train) => stats.per_split.train += 1,
            Some(Split::Validation) => stats.per_split.validation += 1,
            Some(Split::Test) => stats.per_split.test += 1,
            None => stats.per_split.unsplit += 1,
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labeled(i: usize, label: u8) -> FunctionRecord {
        FunctionRecord::new(format!("r{i:03}"), format!("int f{i}(){{return {label};}}"))
            .with_label(label)
    }

    #[test]
    fn three_labeled_lines_load_in_order() {
        let content = concat!(
            "{\"id\":\"a\",\"func\":\"int f(){return 1;}\",\"target\":1}\n",
            "{\"id\":\"b\",\"func\":\"int g(){return 0;}\",\"target\":0}\n",
            "{\"id\":\"c\",\"func\":\"int h(){return 0;}\",\"target\":0}\n",
        );
        let records = parse_corpus(content, CorpusMode::Finetune).unwrap();
        assert_eq!(records.len(), 3);
        let labels: Vec<u8> = records.iter().map(|r| r.label.unwrap()).collect();
        assert_eq!(labels, [1, 0, 0]);
        let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn empty_file_is_an_empty_corpus() {
        assert!(parse_corpus("", CorpusMode::Pretrain).unwrap().is_empty());
        assert!(parse_corpus("\n\n", CorpusMode::Pretrain).unwrap().is_empty());
    }

    #[test]
    fn missing_func_field_names_the_line() {
        let content = "{\"func\":\"int f(){}\"}\n{\"id\":\"x\"}\n";
        let err = parse_corpus(content, CorpusMode::Pretrain).unwrap_err();
        assert!(matches!(err, CorpusError::MissingSource { line: 2 }));
    }

    #[test]
    fn malformed_json_names_the_line() {
        let err = parse_corpus("{\"func\":\"ok\"}\nnot json\n", CorpusMode::Pretrain).unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }));
    }

    #[test]
    fn finetune_mode_requires_labels() {
        let content = "{\"func\":\"int f(){}\"}\n";
        assert!(parse_corpus(content, CorpusMode::Pretrain).is_ok());
        let err = parse_corpus(content, CorpusMode::Finetune).unwrap_err();
        assert!(matches!(err, CorpusError::MissingLabel { line: 1 }));
    }

    #[test]
    fn missing_ids_synthesize_from_line_numbers() {
        let content = "{\"func\":\"a\"}\n\n{\"func\":\"b\"}\n";
        let records = parse_corpus(content, CorpusMode::Pretrain).unwrap();
        assert_eq!(records[0].id, "1");
        assert_eq!(records[1].id, "3");
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let content = "{\"id\":\"x\",\"func\":\"a\"}\n{\"id\":\"x\",\"func\":\"b\"}\n";
        let err = parse_corpus(content, CorpusMode::Pretrain).unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId { line: 2, .. }));
    }

    #[test]
    fn labels_accept_integers_and_bools_only() {
        assert!(parse_corpus("{\"func\":\"a\",\"target\":true}", CorpusMode::Finetune).is_ok());
        let err =
            parse_corpus("{\"func\":\"a\",\"target\":2}", CorpusMode::Finetune).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidLabel { line: 1 }));
        let err =
            parse_corpus("{\"func\":\"a\",\"target\":\"1\"}", CorpusMode::Finetune).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidLabel { line: 1 }));
    }

    #[test]
    fn ten_records_split_eight_one_one() {
        let records: Vec<FunctionRecord> = (0..10).map(|i| labeled(i, (i % 2) as u8)).collect();
        let split = split_corpus(records, (0.8, 0.1, 0.1), 7).unwrap();
        let count = |s: Split| split.iter().filter(|r| r.split == Some(s)).count();
        assert_eq!(count(Split::Train), 8);
        assert_eq!(count(Split::Validation), 1);
        assert_eq!(count(Split::Test), 1);
    }

    #[test]
    fn single_record_goes_to_train() {
        let split = split_corpus(vec![labeled(0, 1)], (0.8, 0.1, 0.1), 3).unwrap();
        assert_eq!(split[0].split, Some(Split::Train));
    }

    #[test]
    fn splitting_is_seed_deterministic() {
        let records: Vec<FunctionRecord> = (0..50).map(|i| labeled(i, (i % 2) as u8)).collect();
        let a = split_corpus(records.clone(), (0.8, 0.1, 0.1), 42).unwrap();
        let b = split_corpus(records, (0.8, 0.1, 0.1), 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn splitting_is_order_independent() {
        let records: Vec<FunctionRecord> = (0..30).map(|i| labeled(i, (i % 2) as u8)).collect();
        let mut reversed = records.clone();
        reversed.reverse();
        let a = split_corpus(records, (0.6, 0.2, 0.2), 9).unwrap();
        let b = split_corpus(reversed, (0.6, 0.2, 0.2), 9).unwrap();
        for record in &a {
            let other = b.iter().find(|r| r.id == record.id).unwrap();
            assert_eq!(record.split, other.split, "id {}", record.id);
        }
    }

    #[test]
    fn splitting_partitions_every_record() {
        let records: Vec<FunctionRecord> = (0..37).map(|i| labeled(i, (i % 2) as u8)).collect();
        let ids: BTreeSet<String> = records.iter().map(|r| r.id.clone()).collect();
        let split = split_corpus(records, (0.8, 0.1, 0.1), 11).unwrap();
        assert!(split.iter().all(|r| r.split.is_some()));
        let after: BTreeSet<String> = split.iter().map(|r| r.id.clone()).collect();
        assert_eq!(ids, after);
    }

    #[test]
    fn preexisting_splits_pass_through() {
        let mut records: Vec<FunctionRecord> = (0..10).map(|i| labeled(i, 1)).collect();
        records[3].split = Some(Split::Test);
        let split = split_corpus(records, (0.8, 0.1, 0.1), 1).unwrap();
        assert_eq!(split[3].split, Some(Split::Test));
        // Ratios apply to the nine unassigned records: floor gives (7,0,0)
        // with the remainder raising train to 9.
        let unassigned_train = split
            .iter()
            .enumerate()
            .filter(|(i, r)| *i != 3 && r.split == Some(Split::Train))
            .count();
        assert_eq!(unassigned_train, 9);
    }

    #[test]
    fn bad_ratios_are_rejected() {
        let err = split_corpus(vec![labeled(0, 1)], (0.8, 0.1, 0.2), 1).unwrap_err();
        assert!(matches!(err, CorpusError::BadRatios { .. }));
    }

    #[test]
    fn balanced_corpus_has_unit_weights() {
        let mut records: Vec<FunctionRecord> = (0..50).map(|i| labeled(i, 1)).collect();
        records.extend((50..100).map(|i| labeled(i, 0)));
        let weights = class_weights(&records).unwrap();
        assert_eq!(weights.vulnerable, 1.0);
        assert_eq!(weights.safe, 1.0);
    }

    #[test]
    fn imbalanced_benchmark_counts_give_inverse_frequency_weights() {
        // 2,240 vulnerable vs 20,494 safe.
        let mut records: Vec<FunctionRecord> = (0..2240).map(|i| labeled(i, 1)).collect();
        records.extend((2240..22734).map(|i| labeled(i, 0)));
        let weights = class_weights(&records).unwrap();
        assert!((weights.vulnerable - 22734.0 / (2.0 * 2240.0)).abs() < 1e-12);
        assert!((weights.safe - 22734.0 / (2.0 * 20494.0)).abs() < 1e-12);
        assert!((weights.vulnerable - 5.0746).abs() < 1e-4);
        assert!((weights.safe - 0.5547).abs() < 1e-4);
    }

    #[test]
    fn small_imbalance_hand_case() {
        let records = vec![labeled(0, 1), labeled(1, 0), labeled(2, 0), labeled(3, 0)];
        let weights = class_weights(&records).unwrap();
        assert!((weights.vulnerable - 2.0).abs() < 1e-12);
        assert!((weights.safe - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_corpora_are_rejected() {
        let records: Vec<FunctionRecord> = (0..5).map(|i| labeled(i, 1)).collect();
        assert!(matches!(
            class_weights(&records).unwrap_err(),
            CorpusError::EmptyClass
        ));
    }

    #[test]
    fn weighted_counts_recover_the_total() {
        for (v, s) in [(1usize, 3usize), (7, 13), (2240, 20494)] {
            let mut records: Vec<FunctionRecord> = (0..v).map(|i| labeled(i, 1)).collect();
            records.extend((v..v + s).map(|i| labeled(i, 0)));
            let weights = class_weights(&records).unwrap();
            let total = (v + s) as f64;
            let weighted = weights.vulnerable * v as f64 + weights.safe * s as f64;
            assert!((weighted - total).abs() <= total * 1e-12);
        }
    }

    #[test]
    fn stats_tally_labels_and_splits() {
        let mut records: Vec<FunctionRecord> = (0..6).map(|i| labeled(i, (i % 2) as u8)).collect();
        records.push(FunctionRecord::new("u", "int u(){}"));
        let records = split_corpus(records, (0.8, 0.1, 0.1), 5).unwrap();
        let stats = corpus_stats(&records);
        assert_eq!(stats.total, 7);
        assert_eq!(stats.vulnerable, 3);
        assert_eq!(stats.non_vulnerable, 3);
        assert_eq!(stats.unlabeled, 1);
        assert_eq!(stats.total, stats.vulnerable + stats.non_vulnerable + stats.unlabeled);
        assert_eq!(
            stats.per_split.train + stats.per_split.validation + stats.per_split.test,
            7
        );
    }

    #[test]
    fn round_trip_through_jsonl_preserves_records() {
        let content = concat!(
            "{\"id\":\"a\",\"func\":\"int f(){return 1;}\",\"target\":1}\n",
            "{\"id\":\"b\",\"func\":\"x\",\"target\":0,\"language\":\"other\"}\n",
        );
        let records = parse_corpus(content, CorpusMode::Finetune).unwrap();
        let out = records_to_jsonl(&records);
        let back = parse_corpus(&out, CorpusMode::Finetune).unwrap();
        assert_eq!(records, back);
    }
}
