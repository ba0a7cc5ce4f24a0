//! Multi-modal code representation pipeline for function-level vulnerability
//! detection.
//!
//! The pipeline parses C-like functions into syntax trees, reduces them to
//! non-terminal kind sequences, extracts stylometry feature vectors, builds
//! model-input sequences, tokenizes them with a byte-level BPE vocabulary,
//! produces masked-language-modeling batches, and trains/evaluates a small
//! attention encoder with a binary classification head.

pub mod corpus;
pub mod cstyle;
pub mod mlm;
pub mod parser;
pub mod reduce;
pub mod sequence;
pub mod tokenizer;

pub use corpus::{
    class_weights, corpus_stats, load_corpus, split_corpus, ClassWeights, CorpusError, CorpusMode,
    CorpusStats, FunctionRecord, Language, Split,
};
pub use cstyle::{
    extract_features, feature_matrix, to_annotation, CStyleAnnotation, CStyleVector,
    FEATURE_UNIVERSE,
};
pub use mlm::{mask, mlm_loss, MaskRates, MaskedBatch, MlmError, MlmLossReport};
pub use parser::{
    export_tree, import_tree, is_nonterminal, parse, KindCategory, Node, NodeKind, ParseError,
    SyntaxTree,
};
pub use reduce::{extract_nonterminals, reduction_ratio, ReducedAstSequence};
pub use sequence::{
    build_finetune_sequence, build_pretrain_sequence, truncate, ModalSequence, SequenceError,
    SEPARATOR,
};
pub use tokenizer::{
    decode, encode, encode_for_model, load_vocabulary, save_vocabulary, train_bpe, TokenizerError,
    Vocabulary,
};
