//! Scaled dot-product attention and its multi-head composition.

use super::{EncoderError, LayerParams};
use ndarray::{s, Array2, Axis};

/// Row-wise softmax with max-subtraction for numerical stability.
pub(super) fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: f64 = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Backward through a row-wise softmax: given `d_out` and the softmax output
/// `probs`, returns the gradient at the logits.
pub(super) fn softmax_rows_backward(probs: &Array2<f64>, d_out: &Array2<f64>) -> Array2<f64> {
    let mut d_logits = Array2::zeros(probs.raw_dim());
    for ((mut d_row, p_row), g_row) in d_logits
        .rows_mut()
        .into_iter()
        .zip(probs.rows())
        .zip(d_out.rows())
    {
        let dot: f64 = p_row.iter().zip(g_row.iter()).map(|(p, g)| p * g).sum();
        for ((d, &p), &g) in d_row.iter_mut().zip(p_row.iter()).zip(g_row.iter()) {
            *d = p * (g - dot);
        }
    }
    d_logits
}

/// Scaled dot-product attention: `softmax(Q Kᵀ / √d_k) V`.
pub fn attention(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
) -> Result<Array2<f64>, EncoderError> {
    Ok(attention_weights(q, k, v)?.1)
}

/// Attention returning both the row-stochastic weight matrix and the output.
pub fn attention_weights(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
) -> Result<(Array2<f64>, Array2<f64>), EncoderError> {
    let d_k = q.ncols();
    if d_k == 0 {
        return Err(EncoderError::ShapeMismatch(
            "attention requires d_k > 0".into(),
        ));
    }
    if k.ncols() != d_k {
        return Err(EncoderError::ShapeMismatch(format!(
            "query width {d_k} does not match key width {}",
            k.ncols()
        )));
    }
    if k.nrows() != v.nrows() {
        return Err(EncoderError::ShapeMismatch(format!(
            "key count {} does not match value count {}",
            k.nrows(),
            v.nrows()
        )));
    }
    let scale = 1.0 / (d_k as f64).sqrt();
    let logits = q.dot(&k.t()) * scale;
    let weights = softmax_rows(&logits);
    let output = weights.dot(v);
    Ok((weights, output))
}

/// Multi-head attention over hidden states: per-head projections through the
/// column blocks of `W^Q`, `W^K`, `W^V`, per-head scaled dot-product
/// attention, concatenation, and the output projection `W^O`.
pub fn multi_head(
    hidden: &Array2<f64>,
    layer: &LayerParams,
    heads: usize,
) -> Result<Array2<f64>, EncoderError> {
    let (output, _) = multi_head_detailed(hidden, layer, heads, None)?;
    Ok(output)
}

pub(super) struct HeadCache {
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    pub weights: Array2<f64>,
}

/// Multi-head attention that also returns per-head caches for backprop and
/// trace inspection. `key_mask`, when present, marks key positions excluded
/// from attention (padding).
pub(super) fn multi_head_detailed(
    hidden: &Array2<f64>,
    layer: &LayerParams,
    heads: usize,
    key_mask: Option<&[bool]>,
) -> Result<(Array2<f64>, Vec<HeadCache>), EncoderError> {
    let d = hidden.ncols();
    if layer.w_q.nrows() != d || layer.w_k.nrows() != d || layer.w_v.nrows() != d {
        return Err(EncoderError::ShapeMismatch(
            "hidden width does not match projection height".into(),
        ));
    }
    if d % heads != 0 || heads == 0 {
        return Err(EncoderError::ShapeMismatch(format!(
            "hidden width {d} is not divisible into {heads} heads"
        )));
    }
    let d_k = d / heads;
    let n = hidden.nrows();
    let scale = 1.0 / (d_k as f64).sqrt();

    let mut concat = Array2::zeros((n, d));
    let mut caches = Vec::with_capacity(heads);
    for head in 0..heads {
        let cols = s![.., head * d_k..(head + 1) * d_k];
        let q = hidden.dot(&layer.w_q.slice(cols));
        let k = hidden.dot(&layer.w_k.slice(cols));
        let v = hidden.dot(&layer.w_v.slice(cols));
        let mut logits = q.dot(&k.t()) * scale;
        if let Some(mask) = key_mask {
            for (column, &masked) in mask.iter().enumerate() {
                if masked {
                    logits.column_mut(column).fill(-1e30);
                }
            }
        }
        let weights = softmax_rows(&logits);
        let output = weights.dot(&v);
        concat.slice_mut(cols).assign(&output);
        caches.push(HeadCache { q, k, v, weights });
    }
    let output = concat.dot(&layer.w_o);
    Ok((output, caches))
}

/// Backward through [`multi_head_detailed`]. Returns the gradient at the
/// hidden states and accumulates parameter gradients into `grads`.
#[allow(clippy::too_many_arguments)]
pub(super) fn multi_head_backward(
    hidden: &Array2<f64>,
    layer: &LayerParams,
    caches: &[HeadCache],
    d_output: &Array2<f64>,
    d_w_q: &mut Array2<f64>,
    d_w_k: &mut Array2<f64>,
    d_w_v: &mut Array2<f64>,
    d_w_o: &mut Array2<f64>,
) -> Array2<f64> {
    let heads = caches.len();
    let d = hidden.ncols();
    let d_k = d / heads;
    let scale = 1.0 / (d_k as f64).sqrt();
    let n = hidden.nrows();

    // Rebuild the concatenated head outputs for the W^O gradient.
    let mut concat = Array2::zeros((n, d));
    for (head, cache) in caches.iter().enumerate() {
        let cols = s![.., head * d_k..(head + 1) * d_k];
        concat.slice_mut(cols).assign(&cache.weights.dot(&cache.v));
    }
    *d_w_o += &concat.t().dot(d_output);
    let d_concat = d_output.dot(&layer.w_o.t());

    let mut d_hidden = Array2::zeros(hidden.raw_dim());
    for (head, cache) in caches.iter().enumerate() {
        let cols = s![.., head * d_k..(head + 1) * d_k];
        let d_head = d_concat.slice(cols).to_owned();

        let d_v = cache.weights.t().dot(&d_head);
        let d_weights = d_head.dot(&cache.v.t());
        let d_logits = softmax_rows_backward(&cache.weights, &d_weights);
        // Masked columns received -1e30 logits; their softmax gradient is
        // already (numerically) zero, so no extra handling is needed.
        let d_q = d_logits.dot(&cache.k) * scale;
        let d_k_mat = d_logits.t().dot(&cache.q) * scale;

        let w_q = layer.w_q.slice(cols);
        let w_k = layer.w_k.slice(cols);
        let w_v = layer.w_v.slice(cols);
        d_hidden += &d_q.dot(&w_q.t());
        d_hidden += &d_k_mat.dot(&w_k.t());
        d_hidden += &d_v.dot(&w_v.t());

        let mut d_w_q_block = d_w_q.slice_mut(cols);
        d_w_q_block += &hidden.t().dot(&d_q);
        let mut d_w_k_block = d_w_k.slice_mut(cols);
        d_w_k_block += &hidden.t().dot(&d_k_mat);
        let mut d_w_v_block = d_w_v.slice_mut(cols);
        d_w_v_block += &hidden.t().dot(&d_v);
    }
    d_hidden
}

/// Row sums of an attention weight matrix; used by invariants and tests.
pub fn weight_row_sums(weights: &Array2<f64>) -> Vec<f64> {
    weights.sum_axis(Axis(1)).to_vec()
}
