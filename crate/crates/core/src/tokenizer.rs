//! Byte-level byte-pair-encoding tokenizer.
//!
//! The vocabulary always contains five reserved special tokens at ids 0..=4,
//! followed by the 256-byte base alphabet, optional atomic tokens, and the
//! learned merge products. Training merges the most frequent adjacent pair
//! until the target size is reached or no pair occurs at least twice; ties
//! break toward the lexicographically smaller pair, so training is fully
//! deterministic.
//!
//! Special-token literals (`[CLS]`, `[SEP]`, ...) and atomic tokens are
//! matched atomically during text encoding. Raw-byte encoding skips that
//! matching, which makes `decode_bytes(encode_bytes(x)) == x` hold for every
//! byte string.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use thiserror::Error;

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const CLS: u32 = 2;
pub const SEP: u32 = 3;
pub const MASK: u32 = 4;

pub const SPECIAL_TOKENS: [&str; 5] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"];

/// Specials plus the byte alphabet; the smallest legal vocabulary.
pub const BASE_VOCAB_SIZE: usize = 256 + SPECIAL_TOKENS.len();
const FIRST_BYTE_ID: u32 = SPECIAL_TOKENS.len() as u32;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("vocab size {requested} is below the floor of {floor} (specials + byte alphabet)")]
    VocabTooSmall { requested: usize, floor: usize },
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("token id {id} out of range for vocabulary of {size}")]
    IdOutOfRange { id: u32, size: usize },
    #[error("cannot read or write vocabulary: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed vocabulary artifact: {0}")]
    Malformed(String),
}

/// A trained BPE vocabulary: dense ids, fixed specials, ordered merges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    /// Bytes of every non-special token, indexed by `id - FIRST_BYTE_ID`.
    /// Entries 0..256 are the single-byte alphabet, followed by atomic
    /// tokens, followed by one merge product per learned rule.
    token_bytes: Vec<Vec<u8>>,
    /// Number of atomic tokens seeded before training.
    atomic_count: usize,
    /// Merge rules in rank order; rule `r` produces the id
    /// `FIRST_BYTE_ID + 256 + atomic_count + r`.
    merges: Vec<(u32, u32)>,
    merge_ranks: HashMap<(u32, u32), u32>,
}

impl Vocabulary {
    pub fn size(&self) -> usize {
        SPECIAL_TOKENS.len() + self.token_bytes.len()
    }

    pub fn merges(&self) -> &[(u32, u32)] {
        &self.merges
    }

    /// Bytes of a non-special token.
    pub fn token_bytes(&self, id: u32) -> Option<&[u8]> {
        if id < FIRST_BYTE_ID {
            return None;
        }
        self.token_bytes
            .get((id - FIRST_BYTE_ID) as usize)
            .map(Vec::as_slice)
    }

    pub fn is_special(&self, id: u32) -> bool {
        id < FIRST_BYTE_ID
    }

    /// Atomic tokens seeded before training, in id order.
    pub fn atomic_tokens(&self) -> Vec<String> {
        self.token_bytes[256..256 + self.atomic_count]
            .iter()
            .map(|b| String::from_utf8_lossy(b).into_owned())
            .collect()
    }

    fn merged_id(&self, rank: usize) -> u32 {
        FIRST_BYTE_ID + 256 + self.atomic_count as u32 + rank as u32
    }
}

/// Trains a vocabulary of at most `vocab_size` tokens on the corpus.
pub fn train_bpe<S: AsRef<str>>(
    corpus: &[S],
    vocab_size: usize,
) -> Result<Vocabulary, TokenizerError> {
    train_bpe_with_atomic(corpus, vocab_size, &[])
}

/// Like [`train_bpe`], additionally seeding `atomic` strings as whole tokens
/// that encoding later matches atomically (the mode that reserves syntax
/// kind names as single tokens).
pub fn train_bpe_with_atomic<S: AsRef<str>>(
    corpus: &[S],
    vocab_size: usize,
    atomic: &[&str],
) -> Result<Vocabulary, TokenizerError> {
    if vocab_size < BASE_VOCAB_SIZE + atomic.len() {
        return Err(TokenizerError::VocabTooSmall {
            requested: vocab_size,
            floor: BASE_VOCAB_SIZE + atomic.len(),
        });
    }
    if corpus.is_empty() {
        return Err(TokenizerError::EmptyCorpus);
    }

    let mut token_bytes: Vec<Vec<u8>> = (0u16..256).map(|b| vec![b as u8]).collect();
    token_bytes.extend(atomic.iter().map(|t| t.as_bytes().to_vec()));
    let mut vocab = Vocabulary {
        token_bytes,
        atomic_count: atomic.len(),
        merges: Vec::new(),
        merge_ranks: HashMap::new(),
    };

    // Segment exactly the way encoding will: special literals and atomic
    // tokens act as boundaries, so no merge ever crosses them.
    let mut sequences: Vec<Vec<u32>> = Vec::new();
    for text in corpus {
        for piece in split_pieces(text.as_ref(), &vocab) {
            if let Piece::Text(segment) = piece {
                if !segment.is_empty() {
                    sequences.push(
                        segment
                            .bytes()
                            .map(|b| FIRST_BYTE_ID + b as u32)
                            .collect(),
                    );
                }
            }
        }
    }

    let mut pair_counts: HashMap<(u32, u32), i64> = HashMap::new();
    let mut pair_seqs: HashMap<(u32, u32), BTreeSet<usize>> = HashMap::new();
    for (index, seq) in sequences.iter().enumerate() {
        for pair in adjacent_pairs(seq) {
            *pair_counts.entry(pair).or_insert(0) += 1;
            pair_seqs.entry(pair).or_default().insert(index);
        }
    }

    while vocab.size() < vocab_size {
        let best = select_best_pair(&pair_counts, &vocab);
        let Some(pair) = best else { break };

        let merged: Vec<u8> = {
            let mut bytes = vocab.token_bytes(pair.0).unwrap().to_vec();
            bytes.extend_from_slice(vocab.token_bytes(pair.1).unwrap());
            bytes
        };
        let new_id = FIRST_BYTE_ID + vocab.token_bytes.len() as u32;
        vocab.token_bytes.push(merged);
        let rank = vocab.merges.len() as u32;
        vocab.merges.push(pair);
        vocab.merge_ranks.insert(pair, rank);

        // Rewrite affected sequences, maintaining pair counts by diff.
        let affected = pair_seqs.remove(&pair).unwrap_or_default();
        for index in affected {
            let seq = &mut sequences[index];
            if !contains_pair(seq, pair) {
                continue; // stale index entry from an earlier rewrite
            }
            for old_pair in adjacent_pairs(seq) {
                *pair_counts.entry(old_pair).or_insert(0) -= 1;
            }
            *seq = merge_pair(seq, pair, new_id);
            for new_pair in adjacent_pairs(seq) {
                *pair_counts.entry(new_pair).or_insert(0) += 1;
                pair_seqs.entry(new_pair).or_default().insert(index);
            }
        }
        pair_counts.remove(&pair);
    }

    Ok(vocab)
}

/// Highest count wins; ties break toward the lexicographically smaller
/// `(left bytes, right bytes)` pair, then smaller ids. Only pairs occurring
/// at least twice qualify.
fn select_best_pair(
    pair_counts: &HashMap<(u32, u32), i64>,
    vocab: &Vocabulary,
) -> Option<(u32, u32)> {
    let mut best: Option<((u32, u32), i64)> = None;
    for (&pair, &count) in pair_counts {
        if count < 2 {
            continue;
        }
        let better = match best {
            None => true,
            Some((best_pair, best_count)) => {
                if count != best_count {
                    count > best_count
                } else {
                    let key = (vocab.token_bytes(pair.0), vocab.token_bytes(pair.1), pair);
                    let best_key = (
                        vocab.token_bytes(best_pair.0),
                        vocab.token_bytes(best_pair.1),
                        best_pair,
                    );
                    key < best_key
                }
            }
        };
        if better {
            best = Some((pair, count));
        }
    }
    best.map(|(pair, _)| pair)
}

fn adjacent_pairs(seq: &[u32]) -> impl Iterator<Item = (u32, u32)> + '_ {
    seq.windows(2).map(|w| (w[0], w[1]))
}

fn contains_pair(seq: &[u32], pair: (u32, u32)) -> bool {
    adjacent_pairs(seq).any(|p| p == pair)
}

/// Replaces occurrences of `pair` left to right, non-overlapping.
fn merge_pair(seq: &[u32], pair: (u32, u32), new_id: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(seq.len());
    let mut i = 0;
    while i < seq.len() {
        if i + 1 < seq.len() && seq[i] == pair.0 && seq[i + 1] == pair.1 {
            out.push(new_id);
            i += 2;
        } else {
            out.push(seq[i]);
            i += 1;
        }
    }
    out
}

enum Piece<'a> {
    Text(&'a str),
    Token(u32),
}

/// Splits text on special literals and atomic tokens, longest match first at
/// each position.
fn split_pieces<'a>(text: &'a str, vocab: &Vocabulary) -> Vec<Piece<'a>> {
    let mut literals: Vec<(String, u32)> = SPECIAL_TOKENS
        .iter()
        .enumerate()
        .map(|(id, lit)| (lit.to_string(), id as u32))
        .collect();
    for (offset, token) in vocab.atomic_tokens().into_iter().enumerate() {
        let id = FIRST_BYTE_ID + 256 + offset as u32;
        literals.push((token, id));
    }

    let mut pieces = Vec::new();
    let mut rest = text;
    let mut consumed = 0;
    while !rest.is_empty() {
        let mut earliest: Option<(usize, &(String, u32))> = None;
        for entry in &literals {
            if entry.0.is_empty() {
                continue;
            }
            if let Some(pos) = rest.find(entry.0.as_str()) {
                let replace = match earliest {
                    None => true,
                    Some((best_pos, best)) => {
                        pos < best_pos || (pos == best_pos && entry.0.len() > best.0.len())
                    }
                };
                if replace {
                    earliest = Some((pos, entry));
                }
            }
        }
        match earliest {
            Some((pos, (literal, id))) => {
                if pos > 0 {
                    pieces.push(Piece::Text(&text[consumed..consumed + pos]));
                }
                pieces.push(Piece::Token(*id));
                consumed += pos + literal.len();
                rest = &text[consumed..];
            }
            None => {
                pieces.push(Piece::Text(&text[consumed..]));
                break;
            }
        }
    }
    pieces
}

/// Encodes raw bytes: byte-level segmentation, then merges in rank order.
/// No special or atomic token is ever produced, so decoding is the exact
/// inverse.
pub fn encode_bytes(vocab: &Vocabulary, bytes: &[u8]) -> Vec<u32> {
    let mut seq: Vec<u32> = bytes.iter().map(|&b| FIRST_BYTE_ID + b as u32).collect();
    loop {
        let mut best: Option<(u32, (u32, u32))> = None;
        for pair in adjacent_pairs(&seq) {
            if let Some(&rank) = vocab.merge_ranks.get(&pair) {
                if best.map_or(true, |(best_rank, _)| rank < best_rank) {
                    best = Some((rank, pair));
                }
            }
        }
        let Some((rank, pair)) = best else { break };
        seq = merge_pair(&seq, pair, vocab.merged_id(rank as usize));
    }
    seq
}

/// Encodes text, matching special literals and atomic tokens atomically.
/// Byte-level input never produces `UNK`.
pub fn encode(vocab: &Vocabulary, text: &str) -> Vec<u32> {
    let mut ids = Vec::new();
    for piece in split_pieces(text, vocab) {
        match piece {
            Piece::Token(id) => ids.push(id),
            Piece::Text(segment) => ids.extend(encode_bytes(vocab, segment.as_bytes())),
        }
    }
    ids
}

/// Encodes text for model input: `[CLS] ... [SEP]`.
pub fn encode_for_model(vocab: &Vocabulary, text: &str) -> Vec<u32> {
    let mut ids = vec![CLS];
    ids.extend(encode(vocab, text));
    ids.push(SEP);
    ids
}

/// Decodes to raw bytes, stripping the five specials.
pub fn decode_bytes(vocab: &Vocabulary, ids: &[u32]) -> Result<Vec<u8>, TokenizerError> {
    let mut out = Vec::new();
    for &id in ids {
        if vocab.is_special(id) {
            continue;
        }
        match vocab.token_bytes(id) {
            Some(bytes) => out.extend_from_slice(bytes),
            None => {
                return Err(TokenizerError::IdOutOfRange {
                    id,
                    size: vocab.size(),
                })
            }
        }
    }
    Ok(out)
}

/// Decodes to text (specials stripped). Ids that assemble invalid UTF-8 are
/// replaced lossily.
pub fn decode(vocab: &Vocabulary, ids: &[u32]) -> Result<String, TokenizerError> {
    let bytes = decode_bytes(vocab, ids)?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

// ----------------------------------------------------------------------
// Persistence: two text artifacts. Tokens render through a byte-to-printable
// map (GPT-2 style) so multi-byte tokens containing newlines or spaces stay
// one per line; merges render as two tokens separated by a space.
// ----------------------------------------------------------------------

fn byte_to_char_table() -> Vec<char> {
    let mut table = Vec::with_capacity(256);
    let mut next_private = 0u32;
    for b in 0u32..256 {
        let printable =
            (33..=126).contains(&b) || (161..=172).contains(&b) || (174..=255).contains(&b);
        if printable {
            table.push(char::from_u32(b).unwrap());
        } else {
            table.push(char::from_u32(256 + next_private).unwrap());
            next_private += 1;
        }
    }
    table
}

fn render_bytes(bytes: &[u8], table: &[char]) -> String {
    bytes.iter().map(|&b| table[b as usize]).collect()
}

fn parse_rendered(rendered: &str, inverse: &HashMap<char, u8>) -> Result<Vec<u8>, TokenizerError> {
    rendered
        .chars()
        .map(|c| {
            inverse
                .get(&c)
                .copied()
                .ok_or_else(|| TokenizerError::Malformed(format!("unmappable character {c:?}")))
        })
        .collect()
}

/// Writes `tokens.txt` (one token per line, id = line number) and
/// `merges.txt` (one pair per line, rank = line number) into `dir`.
pub fn save_vocabulary(vocab: &Vocabulary, dir: impl AsRef<Path>) -> Result<(), TokenizerError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let table = byte_to_char_table();

    let mut tokens_out = String::new();
    for special in SPECIAL_TOKENS {
        tokens_out.push_str(special);
        tokens_out.push('\n');
    }
    for bytes in &vocab.token_bytes {
        tokens_out.push_str(&render_bytes(bytes, &table));
        tokens_out.push('\n');
    }
    std::fs::write(dir.join("tokens.txt"), tokens_out)?;

    let mut merges_out = String::new();
    for &(left, right) in &vocab.merges {
        let left_bytes = vocab.token_bytes(left).unwrap();
        let right_bytes = vocab.token_bytes(right).unwrap();
        merges_out.push_str(&render_bytes(left_bytes, &table));
        merges_out.push(' ');
        merges_out.push_str(&render_bytes(right_bytes, &table));
        merges_out.push('\n');
    }
    std::fs::write(dir.join("merges.txt"), merges_out)?;
    Ok(())
}

/// Loads a vocabulary saved by [`save_vocabulary`], validating that merge
/// components exist at earlier ranks and concatenate to their products.
pub fn load_vocabulary(dir: impl AsRef<Path>) -> Result<Vocabulary, TokenizerError> {
    let dir = dir.as_ref();
    let tokens_text = std::fs::read_to_string(dir.join("tokens.txt"))?;
    let merges_text = std::fs::read_to_string(dir.join("merges.txt"))?;
    let table = byte_to_char_table();
    let inverse: HashMap<char, u8> = table
        .iter()
        .enumerate()
        .map(|(b, &c)| (c, b as u8))
        .collect();

    let lines: Vec<&str> = tokens_text.lines().collect();
    if lines.len() < BASE_VOCAB_SIZE {
        return Err(TokenizerError::Malformed(format!(
            "token list has {} entries, need at least {BASE_VOCAB_SIZE}",
            lines.len()
        )));
    }
    for (id, expected) in SPECIAL_TOKENS.iter().enumerate() {
        if lines[id] != *expected {
            return Err(TokenizerError::Malformed(format!(
                "line {id} must be the special token {expected}"
            )));
        }
    }
    let mut token_bytes = Vec::with_capacity(lines.len() - SPECIAL_TOKENS.len());
    for line in &lines[SPECIAL_TOKENS.len()..] {
        token_bytes.push(parse_rendered(line, &inverse)?);
    }
    for (b, bytes) in token_bytes.iter().take(256).enumerate() {
        if bytes.as_slice() != [b as u8] {
            return Err(TokenizerError::Malformed(format!(
                "byte alphabet entry {b} is corrupted"
            )));
        }
    }

    let mut merges = Vec::new();
    let mut merge_ranks = HashMap::new();
    let byte_id_of: HashMap<&[u8], u32> = token_bytes
        .iter()
        .enumerate()
        .map(|(offset, bytes)| (bytes.as_slice(), FIRST_BYTE_ID + offset as u32))
        .collect();
    let merge_lines: Vec<&str> = merges_text.lines().collect();
    let atomic_count = token_bytes.len() - 256 - merge_lines.len();
    for (rank, line) in merge_lines.iter().enumerate() {
        let (left_text, right_text) = line.split_once(' ').ok_or_else(|| {
            TokenizerError::Malformed(format!("merge line {rank} is not a pair"))
        })?;
        let left_bytes = parse_rendered(left_text, &inverse)?;
        let right_bytes = parse_rendered(right_text, &inverse)?;
        let product_id = FIRST_BYTE_ID + 256 + atomic_count as u32 + rank as u32;
        let left = *byte_id_of.get(left_bytes.as_slice()).ok_or_else(|| {
            TokenizerError::Malformed(format!("merge {rank}: unknown left component"))
        })?;
        let right = *byte_id_of.get(right_bytes.as_slice()).ok_or_else(|| {
            TokenizerError::Malformed(format!("merge {rank}: unknown right component"))
        })?;
        if left >= product_id || right >= product_id {
            return Err(TokenizerError::Malformed(format!(
                "merge {rank}: components must exist at earlier ranks"
            )));
        }
        let mut product = left_bytes;
        product.extend_from_slice(&right_bytes);
        let stored = token_bytes
            .get((product_id - FIRST_BYTE_ID) as usize)
            .ok_or_else(|| TokenizerError::Malformed(format!("merge {rank}: missing product")))?;
        if *stored != product {
            return Err(TokenizerError::Malformed(format!(
                "merge {rank}: product does not match components"
            )));
        }
        merges.push((left, right));
        merge_ranks.insert((left, right), rank as u32);
    }

    Ok(Vocabulary {
        token_bytes,
        atomic_count,
        merges,
        merge_ranks,
    })
}
