//! LSTM cell, directional scan, and the bidirectional wrapper.
//!
//! Gate order everywhere is [i, f, g, o]:
//!
//! ```text
//! i = σ(Wi·x + Ui·h_prev + bi)        f = σ(Wf·x + Uf·h_prev + bf)
//! g = tanh(Wg·x + Ug·h_prev + bg)     o = σ(Wo·x + Uo·h_prev + bo)
//! c = f ⊙ c_prev + i ⊙ g              h = o ⊙ tanh(c)
//! ```
//!
//! A scan runs the cell over a sequence from zero initial state. Direction is
//! the caller's ordering of the input rows: the backward half of the BiLSTM
//! is a scan over the reversed sequence. The backward pass is full
//! backpropagation through time over the cached per-step gates.

use crate::error::{Error, Result};
use crate::nn::dense::sigmoid;
use crate::tensor::{Scalar, Tensor};

pub const GATE_NAMES: [&str; 4] = ["i", "f", "g", "o"];

/// Weights for one LSTM direction. `w_in[g]` is [in_dim, H], `w_rec[g]` is
/// [H, H], `bias[g]` is [H], indexed in gate order.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams<F> {
    pub w_in: [Tensor<F>; 4],
    pub w_rec: [Tensor<F>; 4],
    pub bias: [Tensor<F>; 4],
}

impl<F: Scalar> LstmParams<F> {
    pub fn zeros(in_dim: usize, hidden: usize) -> Self {
        LstmParams {
            w_in: std::array::from_fn(|_| Tensor::zeros(&[in_dim, hidden])),
            w_rec: std::array::from_fn(|_| Tensor::zeros(&[hidden, hidden])),
            bias: std::array::from_fn(|_| Tensor::zeros(&[hidden])),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w_in[0].shape()[0]
    }

    pub fn hidden(&self) -> usize {
        self.bias[0].shape()[0]
    }
}

/// Everything the backward pass needs from one timestep.
#[derive(Clone, Debug)]
pub struct LstmStep<F> {
    pub gates: [Vec<F>; 4],
    pub tanh_c: Vec<F>,
    pub h_prev: Vec<F>,
    pub c_prev: Vec<F>,
    pub c: Vec<F>,
}

impl<F: Scalar> LstmStep<F> {
    /// h for this step; not stored separately since h = o ⊙ tanh(c).
    pub fn h(&self) -> Vec<F> {
        self.gates[3]
            .iter()
            .zip(&self.tanh_c)
            .map(|(&o, &tc)| o * tc)
            .collect()
    }
}

fn gate_pre<F: Scalar>(
    x: &[F],
    h_prev: &[F],
    w_in: &Tensor<F>,
    w_rec: &Tensor<F>,
    bias: &Tensor<F>,
) -> Vec<F> {
    let hidden = bias.len();
    let mut pre = bias.data().to_vec();
    let wd = w_in.data();
    for (e, &xv) in x.iter().enumerate() {
        if xv == F::zero() {
            continue;
        }
        let row = &wd[e * hidden..(e + 1) * hidden];
        for (p, &w) in pre.iter_mut().zip(row) {
            *p = *p + w * xv;
        }
    }
    let ud = w_rec.data();
    for (j, &hv) in h_prev.iter().enumerate() {
        if hv == F::zero() {
            continue;
        }
        let row = &ud[j * hidden..(j + 1) * hidden];
        for (p, &u) in pre.iter_mut().zip(row) {
            *p = *p + u * hv;
        }
    }
    pre
}

pub fn lstm_cell<F: Scalar>(
    x: &[F],
    h_prev: &[F],
    c_prev: &[F],
    params: &LstmParams<F>,
) -> Result<(Vec<F>, Vec<F>)> {
    lstm_cell_cached(x, h_prev, c_prev, params).map(|step| (step.h(), step.c.clone()))
}

pub fn lstm_cell_cached<F: Scalar>(
    x: &[F],
    h_prev: &[F],
    c_prev: &[F],
    params: &LstmParams<F>,
) -> Result<LstmStep<F>> {
    let (in_dim, hidden) = (params.in_dim(), params.hidden());
    if x.len() != in_dim || h_prev.len() != hidden || c_prev.len() != hidden {
        return Err(Error::Shape {
            context: "lstm cell".into(),
            expected: vec![in_dim, hidden, hidden],
            got: vec![x.len(), h_prev.len(), c_prev.len()],
        });
    }

    let mut gates: [Vec<F>; 4] = std::array::from_fn(|_| Vec::new());
    for (g, slot) in gates.iter_mut().enumerate() {
        let pre = gate_pre(x, h_prev, &params.w_in[g], &params.w_rec[g], &params.bias[g]);
        *slot = if g == 2 {
            pre.iter().map(|&p| p.tanh()).collect()
        } else {
            pre.iter().map(|&p| sigmoid(p)).collect()
        };
    }

    let c: Vec<F> = (0..hidden)
        .map(|h| gates[1][h] * c_prev[h] + gates[0][h] * gates[2][h])
        .collect();
    let tanh_c: Vec<F> = c.iter().map(|&v| v.tanh()).collect();

    if !c.iter().chain(tanh_c.iter()).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("lstm cell".into()));
    }
    Ok(LstmStep {
        gates,
        tanh_c,
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        c,
    })
}

/// Per-step caches of one directional scan, in scan order.
pub struct LstmTrace<F> {
    pub steps: Vec<LstmStep<F>>,
}

impl<F: Scalar> LstmTrace<F> {
    pub fn final_h(&self) -> Vec<F> {
        self.steps.last().expect("scan over empty sequence").h()
    }
}

/// Runs the cell over `xs` (already in scan order) from zero initial state.
pub fn lstm_scan<'a, F: Scalar>(
    xs: impl IntoIterator<Item = &'a [F]>,
    params: &LstmParams<F>,
) -> Result<LstmTrace<F>> {
    let hidden = params.hidden();
    let mut h = vec![F::zero(); hidden];
    let mut c = vec![F::zero(); hidden];
    let mut steps = Vec::new();
    for x in xs {
        let step = lstm_cell_cached(x, &h, &c, params)?;
        h = step.h();
        c = step.c.clone();
        steps.push(step);
    }
    if steps.is_empty() {
        return Err(Error::Data("lstm scan over an empty sequence".into()));
    }
    Ok(LstmTrace { steps })
}

/// BPTT over one scan. `d_h_ext[s]` is the loss gradient arriving directly at
/// h of scan step `s` (zeros except the last step for last-state pooling).
/// Returns parameter gradients and the gradient w.r.t. each input row, both
/// in scan order.
pub fn lstm_scan_grad<F: Scalar>(
    xs: &[&[F]],
    params: &LstmParams<F>,
    trace: &LstmTrace<F>,
    d_h_ext: &[Vec<F>],
) -> Result<(LstmParams<F>, Vec<Vec<F>>)> {
    let (in_dim, hidden) = (params.in_dim(), params.hidden());
    let steps = &trace.steps;
    if xs.len() != steps.len() || d_h_ext.len() != steps.len() {
        return Err(Error::Shape {
            context: "lstm backward".into(),
            expected: vec![steps.len()],
            got: vec![xs.len(), d_h_ext.len()],
        });
    }

    let mut grads = LstmParams::zeros(in_dim, hidden);
    let mut dxs = vec![vec![F::zero(); in_dim]; xs.len()];
    let mut dh_carry = vec![F::zero(); hidden];
    let mut dc_carry = vec![F::zero(); hidden];
    let one = F::one();

    for s in (0..steps.len()).rev() {
        let step = &steps[s];
        let [i, f, g, o] = &step.gates;

        let dh: Vec<F> = dh_carry
            .iter()
            .zip(&d_h_ext[s])
            .map(|(&a, &b)| a + b)
            .collect();
        // dL/dc picks up the path through h = o ⊙ tanh(c).
        let dc: Vec<F> = (0..hidden)
            .map(|j| dc_carry[j] + dh[j] * o[j] * (one - step.tanh_c[j] * step.tanh_c[j]))
            .collect();

        // Pre-activation gate gradients, gate order [i, f, g, o].
        let mut d_gate: [Vec<F>; 4] = std::array::from_fn(|_| vec![F::zero(); hidden]);
        for j in 0..hidden {
            d_gate[0][j] = dc[j] * g[j] * i[j] * (one - i[j]);
            d_gate[1][j] = dc[j] * step.c_prev[j] * f[j] * (one - f[j]);
            d_gate[2][j] = dc[j] * i[j] * (one - g[j] * g[j]);
            d_gate[3][j] = dh[j] * step.tanh_c[j] * o[j] * (one - o[j]);
        }

        for (gate, dg) in d_gate.iter().enumerate() {
            let dw = grads.w_in[gate].data_mut();
            for (e, &xv) in xs[s].iter().enumerate() {
                if xv != F::zero() {
                    let row = &mut dw[e * hidden..(e + 1) * hidden];
                    for (w, &d) in row.iter_mut().zip(dg) {
                        *w = *w + xv * d;
                    }
                }
            }
            let du = grads.w_rec[gate].data_mut();
            for (j, &hv) in step.h_prev.iter().enumerate() {
                if hv != F::zero() {
                    let row = &mut du[j * hidden..(j + 1) * hidden];
                    for (u, &d) in row.iter_mut().zip(dg) {
                        *u = *u + hv * d;
                    }
                }
            }
            let db = grads.bias[gate].data_mut();
            for (b, &d) in db.iter_mut().zip(dg) {
                *b = *b + d;
            }
        }

        let mut dh_prev = vec![F::zero(); hidden];
        for (gate, dg) in d_gate.iter().enumerate() {
            let wd = params.w_in[gate].data();
            for e in 0..in_dim {
                let row = &wd[e * hidden..(e + 1) * hidden];
                let mut acc = F::zero();
                for (w, &d) in row.iter().zip(dg) {
                    acc = acc + *w * d;
                }
                dxs[s][e] = dxs[s][e] + acc;
            }
            let ud = params.w_rec[gate].data();
            for j in 0..hidden {
                let row = &ud[j * hidden..(j + 1) * hidden];
                let mut acc = F::zero();
                for (u, &d) in row.iter().zip(dg) {
                    acc = acc + *u * d;
                }
                dh_prev[j] = dh_prev[j] + acc;
            }
        }

        dh_carry = dh_prev;
        for j in 0..hidden {
            dc_carry[j] = dc[j] * f[j];
        }
    }
    Ok((grads, dxs))
}

pub struct BilstmCache<F> {
    pub fwd: LstmTrace<F>,
    pub bwd: LstmTrace<F>,
}

fn pooled<F: Scalar>(trace: &LstmTrace<F>, mean_pool: bool) -> Vec<F> {
    if !mean_pool {
        return trace.final_h();
    }
    let hidden = trace.steps[0].c.len();
    let mut acc = vec![F::zero(); hidden];
    for step in &trace.steps {
        for (a, v) in acc.iter_mut().zip(step.h()) {
            *a = *a + v;
        }
    }
    let n = F::from_f64(trace.steps.len() as f64);
    acc.iter_mut().for_each(|a| *a = *a / n);
    acc
}

/// Runs both directions over the first `true_len` rows of `x` ([L, in_dim],
/// PAD rows beyond `true_len` are never touched) and concatenates the pooled
/// state of each direction into a 2H vector.
pub fn bilstm_forward<F: Scalar>(
    x: &Tensor<F>,
    true_len: usize,
    fwd: &LstmParams<F>,
    bwd: &LstmParams<F>,
    mean_pool: bool,
) -> Result<Vec<F>> {
    bilstm_forward_cached(x, true_len, fwd, bwd, mean_pool).map(|(out, _)| out)
}

fn scan_rows<F: Scalar>(x: &Tensor<F>, true_len: usize) -> Result<Vec<&[F]>> {
    if x.shape().len() != 2 {
        return Err(Error::Shape {
            context: "bilstm".into(),
            expected: vec![2],
            got: vec![x.shape().len()],
        });
    }
    let (len, in_dim) = (x.shape()[0], x.shape()[1]);
    if true_len == 0 {
        return Err(Error::Data("bilstm over an all-PAD input".into()));
    }
    if true_len > len {
        return Err(Error::Shape {
            context: "bilstm true_length".into(),
            expected: vec![len],
            got: vec![true_len],
        });
    }
    Ok((0..true_len)
        .map(|t| &x.data()[t * in_dim..(t + 1) * in_dim])
        .collect())
}

pub fn bilstm_forward_cached<F: Scalar>(
    x: &Tensor<F>,
    true_len: usize,
    fwd: &LstmParams<F>,
    bwd: &LstmParams<F>,
    mean_pool: bool,
) -> Result<(Vec<F>, BilstmCache<F>)> {
    let rows = scan_rows(x, true_len)?;
    let fwd_trace = lstm_scan(rows.iter().copied(), fwd)?;
    let bwd_trace = lstm_scan(rows.iter().rev().copied(), bwd)?;
    let mut combined = pooled(&fwd_trace, mean_pool);
    combined.extend(pooled(&bwd_trace, mean_pool));
    if !combined.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("bilstm".into()));
    }
    Ok((
        combined,
        BilstmCache {
            fwd: fwd_trace,
            bwd: bwd_trace,
        },
    ))
}

fn ext_grads<F: Scalar>(d_half: &[F], steps: usize, mean_pool: bool) -> Vec<Vec<F>> {
    let hidden = d_half.len();
    let mut ext = vec![vec![F::zero(); hidden]; steps];
    if mean_pool {
        let n = F::from_f64(steps as f64);
        for e in ext.iter_mut() {
            for (slot, &d) in e.iter_mut().zip(d_half) {
                *slot = d / n;
            }
        }
    } else {
        ext[steps - 1] = d_half.to_vec();
    }
    ext
}

/// Backward through both directions. Returns (d_x over the first `true_len`
/// rows as a [true_len, in_dim] tensor, forward grads, backward grads).
pub fn bilstm_backward<F: Scalar>(
    x: &Tensor<F>,
    true_len: usize,
    fwd: &LstmParams<F>,
    bwd: &LstmParams<F>,
    mean_pool: bool,
    cache: &BilstmCache<F>,
    d_combined: &[F],
) -> Result<(Tensor<F>, LstmParams<F>, LstmParams<F>)> {
    let rows = scan_rows(x, true_len)?;
    let hidden = fwd.hidden();
    if d_combined.len() != 2 * hidden {
        return Err(Error::Shape {
            context: "bilstm backward".into(),
            expected: vec![2 * hidden],
            got: vec![d_combined.len()],
        });
    }

    let fwd_ext = ext_grads(&d_combined[..hidden], true_len, mean_pool);
    let (fwd_grads, dx_fwd) = lstm_scan_grad(&rows, fwd, &cache.fwd, &fwd_ext)?;

    let rev_rows: Vec<&[F]> = rows.iter().rev().copied().collect();
    let bwd_ext = ext_grads(&d_combined[hidden..], true_len, mean_pool);
    let (bwd_grads, dx_bwd) = lstm_scan_grad(&rev_rows, bwd, &cache.bwd, &bwd_ext)?;

    let in_dim = fwd.in_dim();
    let mut dx = Tensor::zeros(&[true_len, in_dim]);
    {
        let d = dx.data_mut();
        for t in 0..true_len {
            for e in 0..in_dim {
                // Backward-scan step s visited time position true_len-1-s.
                d[t * in_dim + e] = dx_fwd[t][e] + dx_bwd[true_len - 1 - t][e];
            }
        }
    }
    Ok((dx, fwd_grads, bwd_grads))
}
