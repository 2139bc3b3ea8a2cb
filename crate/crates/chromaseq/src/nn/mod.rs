//! The name-to-color network: embedding → conv1d+ReLU → BiLSTM →
//! dense(ReLU)* → dense(3, sigmoid), with exact reverse-mode gradients.
//!
//! All math runs over a generic element type: f64 where gradients are being
//! verified against finite differences, f32 for training.

pub mod conv;
pub mod dense;
pub mod init;
pub mod lstm;

use serde::{Deserialize, Serialize};

use crate::codec::{TokenSequence, Vocabulary};
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

pub use dense::Activation;
pub use lstm::{LstmParams, GATE_NAMES};

/// Architecture hyperparameters. A config is data: any validated combination
/// must run, not just the reference one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub max_len: usize,
    pub embed_dim: usize,
    pub conv_filters: usize,
    pub conv_kernel: usize,
    pub lstm_hidden: usize,
    pub dense_dims: Vec<usize>,
    pub output_dim: usize,
    /// Average hidden states over time instead of taking the last state of
    /// each direction. Off by default.
    #[serde(default)]
    pub mean_pool: bool,
}

impl ModelConfig {
    /// The full-size configuration: E=64, F=256, K=5, H=256, dense 256→128.
    pub fn reference(vocab_size: usize, max_len: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            max_len,
            embed_dim: 64,
            conv_filters: 256,
            conv_kernel: 5,
            lstm_hidden: 256,
            dense_dims: vec![256, 128],
            output_dim: 3,
            mean_pool: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("max_len", self.max_len),
            ("embed_dim", self.embed_dim),
            ("conv_filters", self.conv_filters),
            ("conv_kernel", self.conv_kernel),
            ("lstm_hidden", self.lstm_hidden),
            ("output_dim", self.output_dim),
        ];
        for (name, value) in dims {
            if value == 0 {
                return Err(Error::Config(format!("{} must be >= 1", name)));
            }
        }
        if self.dense_dims.contains(&0) {
            return Err(Error::Config("dense_dims entries must be >= 1".into()));
        }
        if self.conv_kernel.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "conv_kernel must be odd for same-padding symmetry, got {}",
                self.conv_kernel
            )));
        }
        if self.output_dim != 3 {
            return Err(Error::Config(format!(
                "output_dim must be 3 (one per RGB channel), got {}",
                self.output_dim
            )));
        }
        Ok(())
    }

    /// Widths of the dense chain including its 2H input and the output head.
    pub fn dense_chain(&self) -> Vec<usize> {
        let mut dims = vec![2 * self.lstm_hidden];
        dims.extend(&self.dense_dims);
        dims.push(self.output_dim);
        dims
    }
}

/// Closed-form trainable parameter total:
/// V·E + (K·E·F + F) + 2·[4·(F·H + H·H + H)] + Σ dense (in·out + out).
pub fn parameter_count(config: &ModelConfig) -> u64 {
    let (v, e, f, k, h) = (
        config.vocab_size as u64,
        config.embed_dim as u64,
        config.conv_filters as u64,
        config.conv_kernel as u64,
        config.lstm_hidden as u64,
    );
    let embedding = v * e;
    let conv = k * e * f + f;
    let lstm = 2 * 4 * (f * h + h * h + h);
    let dense: u64 = config
        .dense_chain()
        .windows(2)
        .map(|w| (w[0] * w[1] + w[1]) as u64)
        .sum();
    embedding + conv + lstm + dense
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseParams<F> {
    pub weight: Tensor<F>,
    pub bias: Tensor<F>,
}

/// Every trainable tensor in the model. Gradients reuse this exact structure,
/// so parameter iteration order is the canonical tensor order everywhere
/// (checkpoints, fingerprints, optimizer state).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<F> {
    pub embedding: Tensor<F>,
    pub conv_weight: Tensor<F>,
    pub conv_bias: Tensor<F>,
    pub lstm_fwd: LstmParams<F>,
    pub lstm_bwd: LstmParams<F>,
    pub dense: Vec<DenseParams<F>>,
}

impl<F: Scalar> ModelParams<F> {
    pub fn zeros(config: &ModelConfig) -> ModelParams<F> {
        let chain = config.dense_chain();
        ModelParams {
            embedding: Tensor::zeros(&[config.vocab_size, config.embed_dim]),
            conv_weight: Tensor::zeros(&[config.conv_kernel, config.embed_dim, config.conv_filters]),
            conv_bias: Tensor::zeros(&[config.conv_filters]),
            lstm_fwd: LstmParams::zeros(config.conv_filters, config.lstm_hidden),
            lstm_bwd: LstmParams::zeros(config.conv_filters, config.lstm_hidden),
            dense: chain
                .windows(2)
                .map(|w| DenseParams {
                    weight: Tensor::zeros(&[w[0], w[1]]),
                    bias: Tensor::zeros(&[w[1]]),
                })
                .collect(),
        }
    }

    /// All tensors with their canonical names, in canonical order.
    pub fn tensors(&self) -> Vec<(String, &Tensor<F>)> {
        let mut out: Vec<(String, &Tensor<F>)> = vec![
            ("embedding".into(), &self.embedding),
            ("conv.weight".into(), &self.conv_weight),
            ("conv.bias".into(), &self.conv_bias),
        ];
        for (dir_name, dir) in [("lstm_fwd", &self.lstm_fwd), ("lstm_bwd", &self.lstm_bwd)] {
            for (g, gate) in GATE_NAMES.iter().enumerate() {
                out.push((format!("{}.w_{}", dir_name, gate), &dir.w_in[g]));
                out.push((format!("{}.u_{}", dir_name, gate), &dir.w_rec[g]));
                out.push((format!("{}.b_{}", dir_name, gate), &dir.bias[g]));
            }
        }
        for (i, layer) in self.dense.iter().enumerate() {
            out.push((format!("dense.{}.weight", i), &layer.weight));
            out.push((format!("dense.{}.bias", i), &layer.bias));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Tensor<F>)> {
        let mut out: Vec<(String, &mut Tensor<F>)> = vec![
            ("embedding".into(), &mut self.embedding),
            ("conv.weight".into(), &mut self.conv_weight),
            ("conv.bias".into(), &mut self.conv_bias),
        ];
        for (dir_name, dir) in [
            ("lstm_fwd", &mut self.lstm_fwd),
            ("lstm_bwd", &mut self.lstm_bwd),
        ] {
            for ((w, (u, b)), gate) in dir
                .w_in
                .iter_mut()
                .zip(dir.w_rec.iter_mut().zip(dir.bias.iter_mut()))
                .zip(GATE_NAMES)
            {
                out.push((format!("{}.w_{}", dir_name, gate), w));
                out.push((format!("{}.u_{}", dir_name, gate), u));
                out.push((format!("{}.b_{}", dir_name, gate), b));
            }
        }
        for (i, layer) in self.dense.iter_mut().enumerate() {
            out.push((format!("dense.{}.weight", i), &mut layer.weight));
            out.push((format!("dense.{}.bias", i), &mut layer.bias));
        }
        out
    }

    pub fn num_elements(&self) -> u64 {
        self.tensors().iter().map(|(_, t)| t.len() as u64).sum()
    }

    /// Elementwise `self += other`; shapes must already match.
    pub fn accumulate(&mut self, other: &ModelParams<F>) {
        for ((_, dst), (_, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, &s) in dst.data_mut().iter_mut().zip(src.data()) {
                *d = *d + s;
            }
        }
    }

    pub fn scale(&mut self, factor: F) {
        for (_, t) in self.tensors_mut() {
            for v in t.data_mut() {
                *v = *v * factor;
            }
        }
    }

    pub fn convert<G: Scalar>(&self) -> ModelParams<G> {
        ModelParams {
            embedding: self.embedding.convert(),
            conv_weight: self.conv_weight.convert(),
            conv_bias: self.conv_bias.convert(),
            lstm_fwd: LstmParams {
                w_in: std::array::from_fn(|g| self.lstm_fwd.w_in[g].convert()),
                w_rec: std::array::from_fn(|g| self.lstm_fwd.w_rec[g].convert()),
                bias: std::array::from_fn(|g| self.lstm_fwd.bias[g].convert()),
            },
            lstm_bwd: LstmParams {
                w_in: std::array::from_fn(|g| self.lstm_bwd.w_in[g].convert()),
                w_rec: std::array::from_fn(|g| self.lstm_bwd.w_rec[g].convert()),
                bias: std::array::from_fn(|g| self.lstm_bwd.bias[g].convert()),
            },
            dense: self
                .dense
                .iter()
                .map(|l| DenseParams {
                    weight: l.weight.convert(),
                    bias: l.bias.convert(),
                })
                .collect(),
        }
    }

    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        for (name, t) in self.tensors() {
            t.ensure_finite(&format!("{}.{}", context, name))?;
        }
        Ok(())
    }
}

/// Embedding lookup for a full padded sequence: row t of the output is the
/// embedding row of token id t (PAD positions read row 0).
pub fn embedding_forward<F: Scalar>(
    tokens: &TokenSequence,
    embedding: &Tensor<F>,
) -> Result<Tensor<F>> {
    let (vocab, embed) = (embedding.shape()[0], embedding.shape()[1]);
    let mut out = Tensor::zeros(&[tokens.ids.len(), embed]);
    for (t, &id) in tokens.ids.iter().enumerate() {
        if id >= vocab {
            return Err(Error::Data(format!(
                "token id {} out of range for vocabulary of size {}",
                id, vocab
            )));
        }
        let row = &embedding.data()[id * embed..(id + 1) * embed];
        out.data_mut()[t * embed..(t + 1) * embed].copy_from_slice(row);
    }
    Ok(out)
}

/// Forward-pass intermediates needed by [`model_backward_cached`].
pub struct ModelCache<F> {
    pub true_len: usize,
    pub ids: Vec<usize>,
    pub x_embed: Tensor<F>,
    pub conv_cache: conv::ConvCache<F>,
    pub conv_out: Tensor<F>,
    pub bilstm_cache: lstm::BilstmCache<F>,
    pub dense_inputs: Vec<Vec<F>>,
    pub dense_caches: Vec<dense::DenseCache<F>>,
    pub output: [F; 3],
}

fn dense_activation(layer: usize, total: usize) -> Activation {
    if layer + 1 == total {
        Activation::Sigmoid
    } else {
        Activation::Relu
    }
}

/// Full forward pass to a normalized RGB prediction. Output components are
/// strictly inside (0, 1) because the head is a sigmoid.
pub fn model_forward<F: Scalar>(
    tokens: &TokenSequence,
    params: &ModelParams<F>,
    config: &ModelConfig,
) -> Result<[F; 3]> {
    model_forward_cached(tokens, params, config).map(|c| c.output)
}

pub fn model_forward_cached<F: Scalar>(
    tokens: &TokenSequence,
    params: &ModelParams<F>,
    config: &ModelConfig,
) -> Result<ModelCache<F>> {
    let true_len = tokens.true_length;
    if true_len == 0 || true_len > tokens.ids.len() {
        return Err(Error::Data(format!(
            "token sequence has invalid true_length {} (ids: {})",
            true_len,
            tokens.ids.len()
        )));
    }
    let ids = tokens.ids[..true_len].to_vec();

    // PAD positions are skipped outright: every later stage sees exactly the
    // first true_len positions, so padding cannot alter semantics.
    let active = TokenSequence {
        ids: ids.clone(),
        true_length: true_len,
    };
    let x_embed = embedding_forward(&active, &params.embedding)?;
    x_embed.ensure_finite("embedding")?;

    let (conv_out, conv_cache) =
        conv::conv1d_forward_cached(&x_embed, &params.conv_weight, &params.conv_bias)?;

    let (combined, bilstm_cache) = lstm::bilstm_forward_cached(
        &conv_out,
        true_len,
        &params.lstm_fwd,
        &params.lstm_bwd,
        config.mean_pool,
    )?;

    let total = params.dense.len();
    let mut dense_inputs = Vec::with_capacity(total);
    let mut dense_caches = Vec::with_capacity(total);
    let mut current = combined;
    for (i, layer) in params.dense.iter().enumerate() {
        dense_inputs.push(current.clone());
        let cache =
            dense::dense_forward_cached(&current, &layer.weight, &layer.bias, dense_activation(i, total))?;
        current = cache.out.clone();
        if !current.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("dense.{}", i)));
        }
        dense_caches.push(cache);
    }
    if current.len() != 3 {
        return Err(Error::Shape {
            context: "model output".into(),
            expected: vec![3],
            got: vec![current.len()],
        });
    }
    Ok(ModelCache {
        true_len,
        ids,
        x_embed,
        conv_cache,
        conv_out,
        bilstm_cache,
        dense_inputs,
        dense_caches,
        output: [current[0], current[1], current[2]],
    })
}

/// Mean-squared error over the three channels.
pub fn mse_loss<F: Scalar>(prediction: &[F; 3], target: &[F; 3]) -> F {
    let three = F::from_f64(3.0);
    prediction
        .iter()
        .zip(target)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum::<F>()
        / three
}

/// Gradients of the MSE loss w.r.t. every parameter, by reverse-mode
/// differentiation through the cached forward pass.
pub fn model_backward<F: Scalar>(
    tokens: &TokenSequence,
    target: &[F; 3],
    params: &ModelParams<F>,
    config: &ModelConfig,
) -> Result<(F, ModelParams<F>)> {
    let cache = model_forward_cached(tokens, params, config)?;
    let loss = mse_loss(&cache.output, target);
    let grads = model_backward_cached(&cache, target, params, config)?;
    Ok((loss, grads))
}

pub fn model_backward_cached<F: Scalar>(
    cache: &ModelCache<F>,
    target: &[F; 3],
    params: &ModelParams<F>,
    config: &ModelConfig,
) -> Result<ModelParams<F>> {
    let mut grads = ModelParams::zeros(config);

    // d MSE / d output_i = 2 (output_i − target_i) / 3.
    let scale = F::from_f64(2.0 / 3.0);
    let mut d_current: Vec<F> = cache
        .output
        .iter()
        .zip(target)
        .map(|(&p, &t)| scale * (p - t))
        .collect();

    let total = params.dense.len();
    for i in (0..total).rev() {
        let (dx, dw, db) = dense::dense_backward(
            &cache.dense_inputs[i],
            &params.dense[i].weight,
            dense_activation(i, total),
            &cache.dense_caches[i],
            &d_current,
        )?;
        dw.ensure_finite(&format!("grad.dense.{}.weight", i))?;
        grads.dense[i].weight = dw;
        grads.dense[i].bias = db;
        d_current = dx;
    }

    let (d_conv_out, d_fwd, d_bwd) = lstm::bilstm_backward(
        &cache.conv_out,
        cache.true_len,
        &params.lstm_fwd,
        &params.lstm_bwd,
        config.mean_pool,
        &cache.bilstm_cache,
        &d_current,
    )?;
    grads.lstm_fwd = d_fwd;
    grads.lstm_bwd = d_bwd;

    let (d_x_embed, d_conv_w, d_conv_b) = conv::conv1d_backward(
        &cache.x_embed,
        &params.conv_weight,
        &cache.conv_cache,
        &d_conv_out,
    )?;
    d_conv_w.ensure_finite("grad.conv.weight")?;
    grads.conv_weight = d_conv_w;
    grads.conv_bias = d_conv_b;

    // Scatter sequence-position gradients into the embedding rows that were
    // actually read. PAD rows beyond true_len receive nothing, so their
    // gradient stays exactly zero.
    let embed = config.embed_dim;
    {
        let ed = grads.embedding.data_mut();
        for (t, &id) in cache.ids.iter().enumerate() {
            let src = &d_x_embed.data()[t * embed..(t + 1) * embed];
            let dst = &mut ed[id * embed..(id + 1) * embed];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = *d + s;
            }
        }
    }
    grads.ensure_finite("grad")?;
    Ok(grads)
}

/// A trained model bundled with everything needed to run it on raw names.
#[derive(Clone, Debug)]
pub struct Model<F> {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub params: ModelParams<F>,
}

impl<F: Scalar> Model<F> {
    /// Normalized prediction for one name.
    pub fn predict01(&self, name: &str) -> Result<[F; 3]> {
        let tokens = crate::codec::encode(name, &self.vocab, self.config.max_len)?;
        model_forward(&tokens, &self.params, &self.config)
    }
}
