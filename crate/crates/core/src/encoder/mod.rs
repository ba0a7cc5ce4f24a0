//! A small attention encoder with a binary classification head, implemented
//! from first principles on dense `f64` matrices.
//!
//! Blocks use pre-normalization: `x += MHA(LN(x))` then `x += FFN(LN(x))`,
//! with a final layer norm before the classifier. Classification pools the
//! leading `[CLS]` position through a dense+tanh layer (with dropout during
//! training) and a softmax output map. Training is plain mini-batch gradient
//! descent with optional decoupled weight decay; everything is deterministic
//! given the seed.

mod attention;
mod model;

pub use attention::{attention, attention_weights, multi_head, weight_row_sums};
pub use model::{forward, grad_check, predict, train_classifier, ForwardTrace, TrainExample};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid encoder config: {0}")]
    BadConfig(String),
    #[error("sequence of {len} tokens exceeds max_positions {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("token id {id} out of range for vocabulary of {vocab}")]
    IdOutOfRange { id: u32, vocab: usize },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("cannot read or write parameters: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed parameter file: {0}")]
    Malformed(String),
}

/// Encoder dimensions and training-time dropout rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub layers: usize,
    pub hidden: usize,
    pub heads: usize,
    pub ffn: usize,
    pub vocab: usize,
    pub max_positions: usize,
    pub classes: usize,
    pub dropout: f64,
}

impl EncoderConfig {
    /// Desk-scale defaults: 2 layers, 64-wide hidden states, 4 heads.
    pub fn toy(vocab: usize, max_positions: usize) -> EncoderConfig {
        EncoderConfig {
            layers: 2,
            hidden: 64,
            heads: 4,
            ffn: 256,
            vocab,
            max_positions,
            classes: 2,
            dropout: 0.1,
        }
    }

    pub fn d_k(&self) -> usize {
        self.hidden / self.heads
    }

    pub fn validate(&self) -> Result<(), EncoderError> {
        if self.layers == 0 || self.hidden == 0 || self.heads == 0 || self.ffn == 0 {
            return Err(EncoderError::BadConfig("dimensions must be >= 1".into()));
        }
        if self.hidden % self.heads != 0 {
            return Err(EncoderError::BadConfig(format!(
                "hidden {} not divisible by heads {}",
                self.hidden, self.heads
            )));
        }
        if self.classes < 2 {
            return Err(EncoderError::BadConfig("need at least two classes".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(EncoderError::BadConfig("dropout must lie in [0,1)".into()));
        }
        if self.vocab == 0 || self.max_positions == 0 {
            return Err(EncoderError::BadConfig(
                "vocab and max_positions must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Weights of one encoder block. Per-head query/key/value projections are
/// the column blocks of `w_q`/`w_k`/`w_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub w_q: Array2<f64>,
    pub w_k: Array2<f64>,
    pub w_v: Array2<f64>,
    pub w_o: Array2<f64>,
    pub ln1_gain: Array1<f64>,
    pub ln1_bias: Array1<f64>,
    pub ln2_gain: Array1<f64>,
    pub ln2_bias: Array1<f64>,
    pub w_ff1: Array2<f64>,
    pub b_ff1: Array1<f64>,
    pub w_ff2: Array2<f64>,
    pub b_ff2: Array1<f64>,
}

/// All model weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub config: EncoderConfig,
    pub token_embedding: Array2<f64>,
    pub position_embedding: Array2<f64>,
    pub layers: Vec<LayerParams>,
    pub ln_final_gain: Array1<f64>,
    pub ln_final_bias: Array1<f64>,
    pub w_dense: Array2<f64>,
    pub b_dense: Array1<f64>,
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
}

const INIT_RANGE: f64 = 0.05;

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-INIT_RANGE..INIT_RANGE))
}

impl Parameters {
    /// Deterministic initialization from a seed: small uniform weights,
    /// unit layer-norm gains, zero biases.
    pub fn init(config: EncoderConfig, seed: u64) -> Result<Parameters, EncoderError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.hidden;
        let layers = (0..config.layers)
            .map(|_| LayerParams {
                w_q: uniform_matrix(&mut rng, d, d),
                w_k: uniform_matrix(&mut rng, d, d),
                w_v: uniform_matrix(&mut rng, d, d),
                w_o: uniform_matrix(&mut rng, d, d),
                ln1_gain: Array1::ones(d),
                ln1_bias: Array1::zeros(d),
                ln2_gain: Array1::ones(d),
                ln2_bias: Array1::zeros(d),
                w_ff1: uniform_matrix(&mut rng, d, config.ffn),
                b_ff1: Array1::zeros(config.ffn),
                w_ff2: uniform_matrix(&mut rng, config.ffn, d),
                b_ff2: Array1::zeros(d),
            })
            .collect();
        Ok(Parameters {
            token_embedding: uniform_matrix(&mut rng, config.vocab, d),
            position_embedding: uniform_matrix(&mut rng, config.max_positions, d),
            layers,
            ln_final_gain: Array1::ones(d),
            ln_final_bias: Array1::zeros(d),
            w_dense: uniform_matrix(&mut rng, d, d),
            b_dense: Array1::zeros(d),
            w_out: uniform_matrix(&mut rng, d, config.classes),
            b_out: Array1::zeros(config.classes),
            config,
        })
    }

    /// Flat views over every tensor, in a fixed order shared with
    /// [`Gradients`]. Used by the optimizer step, gradient checking, and
    /// persistence.
    pub fn flat_tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> = vec![
            (
                "token_embedding".into(),
                self.token_embedding.as_slice_mut().unwrap(),
            ),
            (
                "position_embedding".into(),
                self.position_embedding.as_slice_mut().unwrap(),
            ),
        ];
        for (index, layer) in self.layers.iter_mut().enumerate() {
            let name = |field: &str| format!("layer{index}.{field}");
            out.push((name("w_q"), layer.w_q.as_slice_mut().unwrap()));
            out.push((name("w_k"), layer.w_k.as_slice_mut().unwrap()));
            out.push((name("w_v"), layer.w_v.as_slice_mut().unwrap()));
            out.push((name("w_o"), layer.w_o.as_slice_mut().unwrap()));
            out.push((name("ln1_gain"), layer.ln1_gain.as_slice_mut().unwrap()));
            out.push((name("ln1_bias"), layer.ln1_bias.as_slice_mut().unwrap()));
            out.push((name("ln2_gain"), layer.ln2_gain.as_slice_mut().unwrap()));
            out.push((name("ln2_bias"), layer.ln2_bias.as_slice_mut().unwrap()));
            out.push((name("w_ff1"), layer.w_ff1.as_slice_mut().unwrap()));
            out.push((name("b_ff1"), layer.b_ff1.as_slice_mut().unwrap()));
            out.push((name("w_ff2"), layer.w_ff2.as_slice_mut().unwrap()));
            out.push((name("b_ff2"), layer.b_ff2.as_slice_mut().unwrap()));
        }
        out.push((
            "ln_final_gain".into(),
            self.ln_final_gain.as_slice_mut().unwrap(),
        ));
        out.push((
            "ln_final_bias".into(),
            self.ln_final_bias.as_slice_mut().unwrap(),
        ));
        out.push(("w_dense".into(), self.w_dense.as_slice_mut().unwrap()));
        out.push(("b_dense".into(), self.b_dense.as_slice_mut().unwrap()));
        out.push(("w_out".into(), self.w_out.as_slice_mut().unwrap()));
        out.push(("b_out".into(), self.b_out.as_slice_mut().unwrap()));
        out
    }

    fn tensor_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out: Vec<(String, Vec<usize>)> = vec![
            (
                "token_embedding".into(),
                self.token_embedding.shape().to_vec(),
            ),
            (
                "position_embedding".into(),
                self.position_embedding.shape().to_vec(),
            ),
        ];
        for (index, layer) in self.layers.iter().enumerate() {
            let name = |field: &str| format!("layer{index}.{field}");
            out.push((name("w_q"), layer.w_q.shape().to_vec()));
            out.push((name("w_k"), layer.w_k.shape().to_vec()));
            out.push((name("w_v"), layer.w_v.shape().to_vec()));
            out.push((name("w_o"), layer.w_o.shape().to_vec()));
            out.push((name("ln1_gain"), layer.ln1_gain.shape().to_vec()));
            out.push((name("ln1_bias"), layer.ln1_bias.shape().to_vec()));
            out.push((name("ln2_gain"), layer.ln2_gain.shape().to_vec()));
            out.push((name("ln2_bias"), layer.ln2_bias.shape().to_vec()));
            out.push((name("w_ff1"), layer.w_ff1.shape().to_vec()));
            out.push((name("b_ff1"), layer.b_ff1.shape().to_vec()));
            out.push((name("w_ff2"), layer.w_ff2.shape().to_vec()));
            out.push((name("b_ff2"), layer.b_ff2.shape().to_vec()));
        }
        out.push(("ln_final_gain".into(), self.ln_final_gain.shape().to_vec()));
        out.push(("ln_final_bias".into(), self.ln_final_bias.shape().to_vec()));
        out.push(("w_dense".into(), self.w_dense.shape().to_vec()));
        out.push(("b_dense".into(), self.b_dense.shape().to_vec()));
        out.push(("w_out".into(), self.w_out.shape().to_vec()));
        out.push(("b_out".into(), self.b_out.shape().to_vec()));
        out
    }
}

/// Gradient accumulator with the same tensor layout as [`Parameters`].
#[derive(Debug, Clone)]
pub(crate) struct Gradients {
    pub inner: Parameters,
}

impl Gradients {
    pub fn zeros_like(params: &Parameters) -> Gradients {
        let mut inner = params.clone();
        for (_, slice) in inner.flat_tensors_mut() {
            slice.fill(0.0);
        }
        Gradients { inner }
    }
}

// ----------------------------------------------------------------------
// Persistence: a magic string, a JSON header echoing the config and the
// shape table, then raw little-endian f64 data in tensor order.
// ----------------------------------------------------------------------

const PARAMS_MAGIC: &[u8] = b"VDPARAMS1\n";

#[derive(Serialize, Deserialize)]
struct ParamsHeader {
    config: EncoderConfig,
    tensors: Vec<(String, Vec<usize>)>,
}

/// Writes parameters in the documented flat binary layout.
pub fn save_parameters(params: &Parameters, path: impl AsRef<Path>) -> Result<(), EncoderError> {
    let header = ParamsHeader {
        config: params.config.clone(),
        tensors: params.tensor_shapes(),
    };
    let header_bytes =
        serde_json::to_vec(&header).map_err(|e| EncoderError::Malformed(e.to_string()))?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(PARAMS_MAGIC)?;
    file.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
    file.write_all(&header_bytes)?;
    let mut clone = params.clone();
    for (_, slice) in clone.flat_tensors_mut() {
        for value in slice.iter() {
            file.write_all(&value.to_le_bytes())?;
        }
    }
    file.flush()?;
    Ok(())
}

/// Loads parameters written by [`save_parameters`], validating the header
/// against the reconstructed shapes.
pub fn load_parameters(path: impl AsRef<Path>) -> Result<Parameters, EncoderError> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 10];
    file.read_exact(&mut magic)?;
    if magic != PARAMS_MAGIC {
        return Err(EncoderError::Malformed("bad magic".into()));
    }
    let mut len_bytes = [0u8; 4];
    file.read_exact(&mut len_bytes)?;
    let header_len = u32::from_le_bytes(len_bytes) as usize;
    let mut header_bytes = vec![0u8; header_len];
    file.read_exact(&mut header_bytes)?;
    let header: ParamsHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| EncoderError::Malformed(e.to_string()))?;

    let mut params = Parameters::init(header.config, 0)?;
    let expected = params.tensor_shapes();
    if expected != header.tensors {
        return Err(EncoderError::Malformed(
            "tensor table does not match config".into(),
        ));
    }
    for (_, slice) in params.flat_tensors_mut() {
        for value in slice.iter_mut() {
            let mut buf = [0u8; 8];
            file.read_exact(&mut buf)?;
            *value = f64::from_le_bytes(buf);
        }
    }
    let mut trailing = [0u8; 1];
    if file.read(&mut trailing)? != 0 {
        return Err(EncoderError::Malformed("trailing bytes".into()));
    }
    Ok(params)
}
