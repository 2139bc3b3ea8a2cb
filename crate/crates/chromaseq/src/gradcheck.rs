//! Central finite-difference verification of every analytic gradient: each
//! layer in isolation, then the composed model under the MSE loss. All
//! probes run in f64 with step 1e-5 on small random instances.
//!
//! A comparison passes when |analytic − numeric| is within the absolute
//! floor, or their relative error is under the tolerance. ReLU probes are
//! re-rolled until every pre-activation sits clear of the kink, so the
//! two-sided difference never straddles it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codec::{encode, Vocabulary};
use crate::error::{Error, Result};
use crate::nn::conv::{conv1d_backward, conv1d_forward, conv1d_forward_cached};
use crate::nn::dense::{dense_backward, dense_forward, dense_forward_cached, Activation};
use crate::nn::init::init_params;
use crate::nn::lstm::{
    bilstm_backward, bilstm_forward, bilstm_forward_cached, lstm_scan, lstm_scan_grad, LstmParams,
};
use crate::nn::{
    model_backward, model_forward, model_forward_cached, mse_loss, ModelConfig, ModelParams,
};
use crate::tensor::Tensor;

pub const FD_STEP: f64 = 1e-5;
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
pub const ABSOLUTE_FLOOR: f64 = 1e-7;

/// Pre-activation magnitude below which a ReLU probe is considered too close
/// to the kink for a two-sided difference.
const KINK_MARGIN: f64 = 1e-3;

/// Zero when the absolute difference is under the floor, otherwise the
/// difference relative to the larger magnitude.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff <= ABSOLUTE_FLOOR {
        0.0
    } else {
        diff / analytic.abs().max(numeric.abs())
    }
}

/// Worst relative error over every compared slot of one layer probe.
#[derive(Clone, Debug)]
pub struct LayerCheck {
    pub layer: String,
    pub checked: usize,
    pub max_rel_err: f64,
}

impl LayerCheck {
    pub fn passed(&self) -> bool {
        self.max_rel_err < GRADCHECK_TOLERANCE
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub layers: Vec<LayerCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.layers.iter().all(LayerCheck::passed)
    }

    pub fn max_rel_err(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.max_rel_err)
            .fold(0.0, f64::max)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<12} {:>8} {:>13} {:>7}\n",
            "layer", "checked", "max_rel_err", "status"
        );
        for l in &self.layers {
            out.push_str(&format!(
                "{:<12} {:>8} {:>13.3e} {:>7}\n",
                l.layer,
                l.checked,
                l.max_rel_err,
                if l.passed() { "pass" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "overall: {} (max {:.3e}, tolerance {:.0e})\n",
            if self.passed() { "PASS" } else { "FAIL" },
            self.max_rel_err(),
            GRADCHECK_TOLERANCE
        ));
        out
    }
}

struct Probe {
    max_rel_err: f64,
    checked: usize,
}

impl Probe {
    fn new() -> Probe {
        Probe {
            max_rel_err: 0.0,
            checked: 0,
        }
    }

    fn compare(&mut self, analytic: f64, numeric: f64) {
        let e = relative_error(analytic, numeric);
        if e > self.max_rel_err {
            self.max_rel_err = e;
        }
        self.checked += 1;
    }

    fn into_check(self, layer: &str) -> LayerCheck {
        LayerCheck {
            layer: layer.to_string(),
            checked: self.checked,
            max_rel_err: self.max_rel_err,
        }
    }
}

fn fill_random(t: &mut Tensor<f64>, rng: &mut ChaCha8Rng) {
    for v in t.data_mut() {
        *v = rng.gen_range(-0.8..0.8);
    }
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect()
}

fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let mut t = Tensor::zeros(shape);
    fill_random(&mut t, rng);
    t
}

/// Central difference of `loss` w.r.t. one element of `t`.
fn fd_tensor_slot(t: &mut Tensor<f64>, idx: usize, loss: impl Fn(&Tensor<f64>) -> f64) -> f64 {
    let orig = t.data()[idx];
    t.data_mut()[idx] = orig + FD_STEP;
    let plus = loss(t);
    t.data_mut()[idx] = orig - FD_STEP;
    let minus = loss(t);
    t.data_mut()[idx] = orig;
    (plus - minus) / (2.0 * FD_STEP)
}

fn check_embedding(rng: &mut ChaCha8Rng) -> Result<LayerCheck> {
    let (vocab, embed) = (7, 4);
    let mut table = random_tensor(&[vocab, embed], rng);
    // Repeated ids force gradient accumulation onto one row.
    let tokens = crate::codec::TokenSequence {
        ids: vec![2, 4, 2, 6, 1],
        true_length: 5,
    };
    let weights = random_tensor(&[tokens.ids.len(), embed], rng);

    let loss = |table: &Tensor<f64>| -> f64 {
        let out = crate::nn::embedding_forward(&tokens, table).expect("embedding probe");
        out.data()
            .iter()
            .zip(weights.data())
            .map(|(&o, &w)| o * w)
            .sum()
    };

    // The lookup's gradient is a scatter of the output gradient by token id.
    let mut analytic = Tensor::<f64>::zeros(&[vocab, embed]);
    for (t, &id) in tokens.ids.iter().enumerate() {
        for e in 0..embed {
            let slot = id * embed + e;
            analytic.data_mut()[slot] += weights.data()[t * embed + e];
        }
    }

    let mut probe = Probe::new();
    for idx in 0..vocab * embed {
        let numeric = fd_tensor_slot(&mut table, idx, loss);
        probe.compare(analytic.data()[idx], numeric);
    }
    Ok(probe.into_check("embedding"))
}

fn check_conv(rng: &mut ChaCha8Rng) -> Result<LayerCheck> {
    let (len, embed, kernel, filters) = (6, 4, 3, 5);

    // Redraw until no pre-activation sits near the ReLU kink.
    let (mut x, mut w, mut b) = loop {
        let x = random_tensor(&[len, embed], rng);
        let w = random_tensor(&[kernel, embed, filters], rng);
        let mut b = Tensor::<f64>::zeros(&[filters]);
        for v in b.data_mut() {
            *v = rng.gen_range(0.1..0.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        }
        let (_, cache) = conv1d_forward_cached(&x, &w, &b)?;
        if cache.pre.data().iter().all(|p| p.abs() > KINK_MARGIN) {
            break (x, w, b);
        }
    };
    let d_out = random_tensor(&[len, filters], rng);

    let weighted = |out: &Tensor<f64>| -> f64 {
        out.data()
            .iter()
            .zip(d_out.data())
            .map(|(&o, &d)| o * d)
            .sum()
    };

    let (out, cache) = conv1d_forward_cached(&x, &w, &b)?;
    let _ = out;
    let (dx, dw, db) = conv1d_backward(&x, &w, &cache, &d_out)?;

    let mut probe = Probe::new();
    for idx in 0..len * embed {
        let numeric = fd_tensor_slot(&mut x, idx, |x| {
            weighted(&conv1d_forward(x, &w, &b).expect("conv probe"))
        });
        probe.compare(dx.data()[idx], numeric);
    }
    for idx in 0..kernel * embed * filters {
        let numeric = fd_tensor_slot(&mut w, idx, |w| {
            weighted(&conv1d_forward(&x, w, &b).expect("conv probe"))
        });
        probe.compare(dw.data()[idx], numeric);
    }
    for idx in 0..filters {
        let numeric = fd_tensor_slot(&mut b, idx, |b| {
            weighted(&conv1d_forward(&x, &w, b).expect("conv probe"))
        });
        probe.compare(db.data()[idx], numeric);
    }
    Ok(probe.into_check("conv1d"))
}

fn lstm_group_mut(p: &mut LstmParams<f64>, group: usize, gate: usize) -> &mut Tensor<f64> {
    match group {
        0 => &mut p.w_in[gate],
        1 => &mut p.w_rec[gate],
        _ => &mut p.bias[gate],
    }
}

fn lstm_group(p: &LstmParams<f64>, group: usize, gate: usize) -> &Tensor<f64> {
    match group {
        0 => &p.w_in[gate],
        1 => &p.w_rec[gate],
        _ => &p.bias[gate],
    }
}

fn random_lstm(in_dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> LstmParams<f64> {
    let mut p = LstmParams::zeros(in_dim, hidden);
    for group in 0..3 {
        for gate in 0..4 {
            fill_random(lstm_group_mut(&mut p, group, gate), rng);
        }
    }
    p
}

/// A three-step unidirectional scan exercises every cell equation, the
/// recurrent carry included.
fn check_lstm_cell(rng: &mut ChaCha8Rng) -> Result<LayerCheck> {
    let (steps, in_dim, hidden) = (3, 4, 3);
    let mut params = random_lstm(in_dim, hidden, rng);
    let mut xs: Vec<Vec<f64>> = (0..steps).map(|_| random_vec(in_dim, rng)).collect();
    let d_h: Vec<Vec<f64>> = (0..steps).map(|_| random_vec(hidden, rng)).collect();

    let loss = |xs: &[Vec<f64>], params: &LstmParams<f64>| -> f64 {
        let trace = lstm_scan(xs.iter().map(Vec::as_slice), params).expect("lstm probe");
        trace
            .steps
            .iter()
            .zip(&d_h)
            .map(|(step, d)| step.h().iter().zip(d).map(|(&h, &w)| h * w).sum::<f64>())
            .sum()
    };

    let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let trace = lstm_scan(refs.iter().copied(), &params)?;
    let (grads, dxs) = lstm_scan_grad(&refs, &params, &trace, &d_h)?;
    drop(refs);

    let mut probe = Probe::new();
    for group in 0..3 {
        for gate in 0..4 {
            let len = lstm_group(&params, group, gate).len();
            for idx in 0..len {
                let orig = lstm_group(&params, group, gate).data()[idx];
                lstm_group_mut(&mut params, group, gate).data_mut()[idx] = orig + FD_STEP;
                let plus = loss(&xs, &params);
                lstm_group_mut(&mut params, group, gate).data_mut()[idx] = orig - FD_STEP;
                let minus = loss(&xs, &params);
                lstm_group_mut(&mut params, group, gate).data_mut()[idx] = orig;
                let numeric = (plus - minus) / (2.0 * FD_STEP);
                probe.compare(lstm_group(&grads, group, gate).data()[idx], numeric);
            }
        }
    }
    for t in 0..steps {
        for i in 0..in_dim {
            let orig = xs[t][i];
            xs[t][i] = orig + FD_STEP;
            let plus = loss(&xs, &params);
            xs[t][i] = orig - FD_STEP;
            let minus = loss(&xs, &params);
            xs[t][i] = orig;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            probe.compare(dxs[t][i], numeric);
        }
    }
    Ok(probe.into_check("lstm_cell"))
}

fn check_bilstm(rng: &mut ChaCha8Rng) -> Result<LayerCheck> {
    let (len, in_dim, hidden) = (6, 8, 5);
    let mut probe = Probe::new();

    for mean_pool in [false, true] {
        let mut fwd = random_lstm(in_dim, hidden, rng);
        let mut bwd = random_lstm(in_dim, hidden, rng);
        let mut x = random_tensor(&[len, in_dim], rng);
        let d_combined = random_vec(2 * hidden, rng);

        let loss = |x: &Tensor<f64>, fwd: &LstmParams<f64>, bwd: &LstmParams<f64>| -> f64 {
            let out = bilstm_forward(x, len, fwd, bwd, mean_pool).expect("bilstm probe");
            out.iter().zip(&d_combined).map(|(&o, &d)| o * d).sum()
        };

        let (_, cache) = bilstm_forward_cached(&x, len, &fwd, &bwd, mean_pool)?;
        let (dx, fwd_grads, bwd_grads) =
            bilstm_backward(&x, len, &fwd, &bwd, mean_pool, &cache, &d_combined)?;

        for idx in 0..len * in_dim {
            let numeric = fd_tensor_slot(&mut x, idx, |x| loss(x, &fwd, &bwd));
            probe.compare(dx.data()[idx], numeric);
        }
        for group in 0..3 {
            for gate in 0..4 {
                let tensor_len = lstm_group(&fwd, group, gate).len();
                for idx in 0..tensor_len {
                    let orig = lstm_group(&fwd, group, gate).data()[idx];
                    lstm_group_mut(&mut fwd, group, gate).data_mut()[idx] = orig + FD_STEP;
                    let plus = loss(&x, &fwd, &bwd);
                    lstm_group_mut(&mut fwd, group, gate).data_mut()[idx] = orig - FD_STEP;
                    let minus = loss(&x, &fwd, &bwd);
                    lstm_group_mut(&mut fwd, group, gate).data_mut()[idx] = orig;
                    probe.compare(
                        lstm_group(&fwd_grads, group, gate).data()[idx],
                        (plus - minus) / (2.0 * FD_STEP),
                    );

                    let orig = lstm_group(&bwd, group, gate).data()[idx];
                    lstm_group_mut(&mut bwd, group, gate).data_mut()[idx] = orig + FD_STEP;
                    let plus = loss(&x, &fwd, &bwd);
                    lstm_group_mut(&mut bwd, group, gate).data_mut()[idx] = orig - FD_STEP;
                    let minus = loss(&x, &fwd, &bwd);
                    lstm_group_mut(&mut bwd, group, gate).data_mut()[idx] = orig;
                    probe.compare(
                        lstm_group(&bwd_grads, group, gate).data()[idx],
                        (plus - minus) / (2.0 * FD_STEP),
                    );
                }
            }
        }
    }
    Ok(probe.into_check("bilstm"))
}

fn check_dense(rng: &mut ChaCha8Rng) -> Result<LayerCheck> {
    let (fan_in, fan_out) = (6, 4);
    let mut probe = Probe::new();

    for activation in [Activation::Relu, Activation::Sigmoid, Activation::None] {
        let (mut x, mut w, mut b) = loop {
            let x = random_vec(fan_in, rng);
            let w = random_tensor(&[fan_in, fan_out], rng);
            let b = random_tensor(&[fan_out], rng);
            let cache = dense_forward_cached(&x, &w, &b, activation)?;
            if activation != Activation::Relu
                || cache.pre.iter().all(|p| p.abs() > KINK_MARGIN)
            {
                break (x, w, b);
            }
        };
        let d_out = random_vec(fan_out, rng);

        let loss = |x: &[f64], w: &Tensor<f64>, b: &Tensor<f64>| -> f64 {
            let out = dense_forward(x, w, b, activation).expect("dense probe");
            out.iter().zip(&d_out).map(|(&o, &d)| o * d).sum()
        };

        let cache = dense_forward_cached(&x, &w, &b, activation)?;
        let (dx, dw, db) = dense_backward(&x, &w, activation, &cache, &d_out)?;

        for i in 0..fan_in {
            let orig = x[i];
            x[i] = orig + FD_STEP;
            let plus = loss(&x, &w, &b);
            x[i] = orig - FD_STEP;
            let minus = loss(&x, &w, &b);
            x[i] = orig;
            probe.compare(dx[i], (plus - minus) / (2.0 * FD_STEP));
        }
        for idx in 0..fan_in * fan_out {
            let numeric = fd_tensor_slot(&mut w, idx, |w| loss(&x, w, &b));
            probe.compare(dw.data()[idx], numeric);
        }
        for idx in 0..fan_out {
            let numeric = fd_tensor_slot(&mut b, idx, |b| loss(&x, &w, b));
            probe.compare(db.data()[idx], numeric);
        }
    }
    Ok(probe.into_check("dense"))
}

/// Every parameter of a small composed model against the finite-difference
/// gradient of the full MSE loss. The probe name pads, so PAD-row gradients
/// are checked to be zero from both sides.
fn check_model(rng: &mut ChaCha8Rng) -> Result<LayerCheck> {
    let vocab = Vocabulary::from_chars(['a', 'b', 'c', 'd', ' ']);
    let config = ModelConfig {
        vocab_size: vocab.size(),
        max_len: 6,
        embed_dim: 4,
        conv_filters: 7,
        conv_kernel: 3,
        lstm_hidden: 5,
        dense_dims: vec![8],
        output_dim: 3,
        mean_pool: false,
    };
    let tokens = encode("ab cd", &vocab, config.max_len)?;
    let target = [
        rng.gen_range(0.05..0.95),
        rng.gen_range(0.05..0.95),
        rng.gen_range(0.05..0.95),
    ];

    // Redraw the initialization until every ReLU pre-activation is clear of
    // the kink.
    let mut params: ModelParams<f64> = loop {
        let seed = rng.gen::<u64>();
        let candidate: ModelParams<f64> = init_params(&config, seed)?;
        let cache = model_forward_cached(&tokens, &candidate, &config)?;
        let conv_ok = cache.conv_cache.pre.data().iter().all(|p| p.abs() > KINK_MARGIN);
        let dense_ok = cache.dense_caches[..cache.dense_caches.len() - 1]
            .iter()
            .all(|c| c.pre.iter().all(|p| p.abs() > KINK_MARGIN));
        if conv_ok && dense_ok {
            break candidate;
        }
    };

    let loss = |params: &ModelParams<f64>| -> f64 {
        let out = model_forward(&tokens, params, &config).expect("model probe");
        mse_loss(&out, &target)
    };

    let (_, grads) = model_backward(&tokens, &target, &params, &config)?;

    let mut probe = Probe::new();
    let tensor_count = params.tensors().len();
    for ti in 0..tensor_count {
        let len = params.tensors()[ti].1.len();
        for idx in 0..len {
            let orig = params.tensors()[ti].1.data()[idx];
            params.tensors_mut()[ti].1.data_mut()[idx] = orig + FD_STEP;
            let plus = loss(&params);
            params.tensors_mut()[ti].1.data_mut()[idx] = orig - FD_STEP;
            let minus = loss(&params);
            params.tensors_mut()[ti].1.data_mut()[idx] = orig;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            probe.compare(grads.tensors()[ti].1.data()[idx], numeric);
        }
    }
    Ok(probe.into_check("model"))
}

/// Runs every layer probe plus the composed-model probe on instances drawn
/// from `seed`.
pub fn run_gradcheck(seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = vec![
        check_embedding(&mut rng)?,
        check_conv(&mut rng)?,
        check_lstm_cell(&mut rng)?,
        check_bilstm(&mut rng)?,
        check_dense(&mut rng)?,
        check_model(&mut rng)?,
    ];
    Ok(GradCheckReport { layers })
}

/// [`run_gradcheck`] as a pass/fail gate: `Ok(report)` only when every layer
/// passed, a numeric error otherwise.
pub fn run_gradcheck_strict(seed: u64) -> Result<GradCheckReport> {
    let report = run_gradcheck(seed)?;
    if report.passed() {
        Ok(report)
    } else {
        Err(Error::NonFinite(format!(
            "gradient check failed: max relative error {:.3e} over tolerance {:.0e}",
            report.max_rel_err(),
            GRADCHECK_TOLERANCE
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floors_small_differences() {
        assert_eq!(relative_error(1.0, 1.0 + 5e-8), 0.0);
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        let e = relative_error(1.0, 1.01);
        assert!(e > 0.009 && e < 0.011);
    }

    #[test]
    fn relative_error_detects_disagreement() {
        assert!(relative_error(1.0, 2.0) > GRADCHECK_TOLERANCE);
        assert!(relative_error(1e-3, -1e-3) > GRADCHECK_TOLERANCE);
    }

    #[test]
    fn all_layers_pass_on_three_seeds() {
        for seed in [0, 1, 2] {
            let report = run_gradcheck(seed).unwrap();
            assert!(
                report.passed(),
                "seed {}:\n{}",
                seed,
                report.to_table()
            );
        }
    }

    #[test]
    fn report_covers_every_layer_kind() {
        let report = run_gradcheck(9).unwrap();
        let names: Vec<&str> = report.layers.iter().map(|l| l.layer.as_str()).collect();
        assert_eq!(
            names,
            ["embedding", "conv1d", "lstm_cell", "bilstm", "dense", "model"]
        );
        for l in &report.layers {
            assert!(l.checked > 0, "{} checked nothing", l.layer);
        }
        // The composed model probes every parameter element.
        let model = report.layers.last().unwrap();
        assert!(model.checked > 500);
    }

    #[test]
    fn table_lists_layers_and_verdict() {
        let report = run_gradcheck(4).unwrap();
        let table = report.to_table();
        assert!(table.contains("bilstm"));
        assert!(table.contains("overall: PASS"));
    }

    #[test]
    fn strict_mode_passes_on_a_healthy_model() {
        assert!(run_gradcheck_strict(7).is_ok());
    }
}
