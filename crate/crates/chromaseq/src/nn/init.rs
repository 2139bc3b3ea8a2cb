//! Deterministic parameter initialization.
//!
//! Embedding, conv, dense, and LSTM input weights: uniform in
//! ±sqrt(6/(fan_in+fan_out)). LSTM recurrent matrices: orthogonal (Gram-
//! Schmidt over a seeded Gaussian matrix), which keeps repeated recurrent
//! multiplication from exploding or vanishing early in training. Forget-gate
//! biases start at 1.0 so cells initially remember; all other biases are 0.
//! The PAD embedding row starts (and stays) zero.
//!
//! All sampling happens in f64 through one seeded ChaCha8 stream in a fixed
//! order, so a seed fully determines the parameters at any precision.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::nn::{ModelConfig, ModelParams};
use crate::tensor::{Scalar, Tensor};

fn xavier_fill<F: Scalar>(rng: &mut ChaCha8Rng, tensor: &mut Tensor<F>, fan_in: usize, fan_out: usize) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in tensor.data_mut() {
        *v = F::from_f64(rng.gen_range(-limit..limit));
    }
}

/// Fills a square matrix with an orthogonal basis: Gaussian rows made
/// mutually orthonormal by modified Gram-Schmidt.
fn orthogonal_fill<F: Scalar>(rng: &mut ChaCha8Rng, tensor: &mut Tensor<F>) {
    let n = tensor.shape()[0];
    debug_assert_eq!(tensor.shape(), &[n, n]);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        loop {
            let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            for q in &rows {
                let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= dot * qi;
                }
            }
            let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            // A Gaussian draw landing in the span of the previous rows has
            // probability zero; resample if it numerically happens anyway.
            if norm > 1e-8 {
                v.iter_mut().for_each(|a| *a /= norm);
                rows.push(v);
                break;
            }
        }
    }
    let data = tensor.data_mut();
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            data[i * n + j] = F::from_f64(v);
        }
    }
}

pub fn init_params<F: Scalar>(config: &ModelConfig, seed: u64) -> Result<ModelParams<F>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::zeros(config);

    xavier_fill(
        &mut rng,
        &mut params.embedding,
        config.vocab_size,
        config.embed_dim,
    );
    // PAD must stay a true zero vector so padded positions carry no signal.
    let embed = config.embed_dim;
    params.embedding.data_mut()[..embed].fill(F::zero());

    xavier_fill(
        &mut rng,
        &mut params.conv_weight,
        config.conv_kernel * config.embed_dim,
        config.conv_filters,
    );

    for dir in [&mut params.lstm_fwd, &mut params.lstm_bwd] {
        for g in 0..4 {
            xavier_fill(&mut rng, &mut dir.w_in[g], config.conv_filters, config.lstm_hidden);
            orthogonal_fill(&mut rng, &mut dir.w_rec[g]);
            if g == 1 {
                for v in dir.bias[g].data_mut() {
                    *v = F::one();
                }
            }
        }
    }

    for layer in &mut params.dense {
        let (fan_in, fan_out) = (layer.weight.shape()[0], layer.weight.shape()[1]);
        xavier_fill(&mut rng, &mut layer.weight, fan_in, fan_out);
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ModelConfig {
        ModelConfig {
            vocab_size: 6,
            max_len: 8,
            embed_dim: 4,
            conv_filters: 5,
            conv_kernel: 3,
            lstm_hidden: 4,
            dense_dims: vec![6],
            output_dim: 3,
            mean_pool: false,
        }
    }

    #[test]
    fn same_seed_reproduces_every_tensor() {
        let config = small_config();
        let a = init_params::<f32>(&config, 123).unwrap();
        let b = init_params::<f32>(&config, 123).unwrap();
        assert_eq!(a, b);
        let c = init_params::<f32>(&config, 124).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pad_embedding_row_is_zero() {
        let params = init_params::<f64>(&small_config(), 9).unwrap();
        let embed = small_config().embed_dim;
        assert!(params.embedding.data()[..embed].iter().all(|&v| v == 0.0));
        assert!(params.embedding.data()[embed..].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn xavier_weights_respect_their_limit() {
        let config = small_config();
        let params = init_params::<f64>(&config, 4).unwrap();
        let limit = (6.0 / (config.vocab_size + config.embed_dim) as f64).sqrt();
        for &v in params.embedding.data() {
            assert!(v.abs() < limit);
        }
    }

    #[test]
    fn recurrent_matrices_are_orthogonal() {
        let config = small_config();
        let params = init_params::<f64>(&config, 77).unwrap();
        let h = config.lstm_hidden;
        for dir in [&params.lstm_fwd, &params.lstm_bwd] {
            for g in 0..4 {
                let u = &dir.w_rec[g];
                // U · Uᵀ = I (rows orthonormal).
                for i in 0..h {
                    for j in 0..h {
                        let dot: f64 = (0..h).map(|k| u.at2(i, k) * u.at2(j, k)).sum();
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!(
                            (dot - expect).abs() < 1e-10,
                            "gate {} rows {},{}: {}",
                            g,
                            i,
                            j,
                            dot
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn forget_gate_bias_starts_at_one_and_others_at_zero() {
        let params = init_params::<f64>(&small_config(), 5).unwrap();
        for dir in [&params.lstm_fwd, &params.lstm_bwd] {
            for g in 0..4 {
                let expect = if g == 1 { 1.0 } else { 0.0 };
                assert!(dir.bias[g].data().iter().all(|&v| v == expect));
            }
        }
        for layer in &params.dense {
            assert!(layer.bias.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn orthogonal_fill_handles_one_by_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut t = Tensor::<f64>::zeros(&[1, 1]);
        orthogonal_fill(&mut rng, &mut t);
        assert!((t.data()[0].abs() - 1.0).abs() < 1e-12);
    }
}
