//! 1-D convolution over a character sequence with same-padding and ReLU.
//!
//! Input is [L, E] (one embedding row per position), weights are [K, E, F],
//! output is [L, F]:
//!
//! ```text
//! out[t,f] = relu( bias[f] + Σ_{k,e} W[k,e,f] · x[t + k - (K-1)/2, e] )
//! ```
//!
//! Positions outside the sequence contribute zero, so the output length
//! always equals the input length.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Pre-activation values kept for the backward pass (the ReLU mask).
pub struct ConvCache<F> {
    pub pre: Tensor<F>,
}

fn check_shapes<F: Scalar>(x: &Tensor<F>, weight: &Tensor<F>, bias: &Tensor<F>) -> Result<(usize, usize, usize, usize)> {
    if x.shape().len() != 2 || weight.shape().len() != 3 || bias.shape().len() != 1 {
        return Err(Error::Shape {
            context: "conv1d".into(),
            expected: vec![2, 3, 1],
            got: vec![x.shape().len(), weight.shape().len(), bias.shape().len()],
        });
    }
    let (len, embed) = (x.shape()[0], x.shape()[1]);
    let (kernel, w_embed, filters) = (weight.shape()[0], weight.shape()[1], weight.shape()[2]);
    if w_embed != embed || bias.shape()[0] != filters {
        return Err(Error::Shape {
            context: "conv1d".into(),
            expected: vec![kernel, embed, filters],
            got: weight.shape().to_vec(),
        });
    }
    if kernel % 2 == 0 {
        return Err(Error::Config(format!("conv kernel must be odd, got {}", kernel)));
    }
    Ok((len, embed, kernel, filters))
}

pub fn conv1d_forward<F: Scalar>(
    x: &Tensor<F>,
    weight: &Tensor<F>,
    bias: &Tensor<F>,
) -> Result<Tensor<F>> {
    conv1d_forward_cached(x, weight, bias).map(|(out, _)| out)
}

pub fn conv1d_forward_cached<F: Scalar>(
    x: &Tensor<F>,
    weight: &Tensor<F>,
    bias: &Tensor<F>,
) -> Result<(Tensor<F>, ConvCache<F>)> {
    let (len, embed, kernel, filters) = check_shapes(x, weight, bias)?;
    let half = (kernel - 1) / 2;
    let xd = x.data();
    let wd = weight.data();
    let bd = bias.data();

    let mut pre = Tensor::zeros(&[len, filters]);
    {
        let pd = pre.data_mut();
        for t in 0..len {
            for f in 0..filters {
                pd[t * filters + f] = bd[f];
            }
            for k in 0..kernel {
                let s = t + k;
                if s < half || s - half >= len {
                    continue;
                }
                let s = s - half;
                for e in 0..embed {
                    let xv = xd[s * embed + e];
                    if xv == F::zero() {
                        continue;
                    }
                    let wbase = (k * embed + e) * filters;
                    for f in 0..filters {
                        pd[t * filters + f] = pd[t * filters + f] + wd[wbase + f] * xv;
                    }
                }
            }
        }
    }

    let mut out = pre.clone();
    for v in out.data_mut() {
        if *v < F::zero() {
            *v = F::zero();
        }
    }
    out.ensure_finite("conv1d")?;
    Ok((out, ConvCache { pre }))
}

/// Gradients of a loss w.r.t. conv input, weights, and bias, given the
/// gradient w.r.t. the post-ReLU output.
pub fn conv1d_backward<F: Scalar>(
    x: &Tensor<F>,
    weight: &Tensor<F>,
    cache: &ConvCache<F>,
    d_out: &Tensor<F>,
) -> Result<(Tensor<F>, Tensor<F>, Tensor<F>)> {
    let (len, embed) = (x.shape()[0], x.shape()[1]);
    let (kernel, _, filters) = (
        weight.shape()[0],
        weight.shape()[1],
        weight.shape()[2],
    );
    if d_out.shape() != [len, filters] {
        return Err(Error::Shape {
            context: "conv1d backward".into(),
            expected: vec![len, filters],
            got: d_out.shape().to_vec(),
        });
    }
    let half = (kernel - 1) / 2;
    let xd = x.data();
    let wd = weight.data();
    let pd = cache.pre.data();

    // ReLU gate: gradient passes only where the pre-activation was positive.
    let mut d_pre = vec![F::zero(); len * filters];
    for (i, dp) in d_pre.iter_mut().enumerate() {
        if pd[i] > F::zero() {
            *dp = d_out.data()[i];
        }
    }

    let mut dx = Tensor::zeros(&[len, embed]);
    let mut dw = Tensor::zeros(&[kernel, embed, filters]);
    let mut db = Tensor::zeros(&[filters]);
    {
        let dxd = dx.data_mut();
        let dwd = dw.data_mut();
        let dbd = db.data_mut();
        for t in 0..len {
            for f in 0..filters {
                dbd[f] = dbd[f] + d_pre[t * filters + f];
            }
            for k in 0..kernel {
                let s = t + k;
                if s < half || s - half >= len {
                    continue;
                }
                let s = s - half;
                for e in 0..embed {
                    let xv = xd[s * embed + e];
                    let wbase = (k * embed + e) * filters;
                    let mut dxv = F::zero();
                    for f in 0..filters {
                        let g = d_pre[t * filters + f];
                        dwd[wbase + f] = dwd[wbase + f] + xv * g;
                        dxv = dxv + wd[wbase + f] * g;
                    }
                    dxd[s * embed + e] = dxd[s * embed + e] + dxv;
                }
            }
        }
    }
    Ok((dx, dw, db))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernel_passes_nonnegative_input_through() {
        // K=1, E=F=3, W[0,e,e]=1: convolution is the identity map.
        let e = 3;
        let mut w = Tensor::<f64>::zeros(&[1, e, e]);
        for i in 0..e {
            w.data_mut()[i * e + i] = 1.0;
        }
        let b = Tensor::zeros(&[e]);
        let x = Tensor::from_vec(&[2, e], vec![0.5, 0.0, 2.0, 1.0, 3.0, 0.25]).unwrap();
        let out = conv1d_forward(&x, &w, &b).unwrap();
        assert_eq!(out.data(), x.data());
    }

    #[test]
    fn zero_weights_yield_relu_of_bias() {
        let w = Tensor::<f64>::zeros(&[3, 2, 2]);
        let b = Tensor::from_vec(&[2], vec![0.7, -0.3]).unwrap();
        let x = Tensor::from_vec(&[4, 2], vec![1.0; 8]).unwrap();
        let out = conv1d_forward(&x, &w, &b).unwrap();
        for t in 0..4 {
            assert_eq!(out.at2(t, 0), 0.7);
            assert_eq!(out.at2(t, 1), 0.0, "negative bias clipped by relu");
        }
    }

    #[test]
    fn even_kernel_is_rejected() {
        let w = Tensor::<f64>::zeros(&[2, 1, 1]);
        let b = Tensor::zeros(&[1]);
        let x = Tensor::zeros(&[3, 1]);
        assert!(conv1d_forward(&x, &w, &b).is_err());
    }

    #[test]
    fn output_length_equals_input_length_for_odd_kernels() {
        for k in [1usize, 3, 5, 7] {
            let w = Tensor::<f64>::from_vec(&[k, 2, 3], vec![0.01; k * 6]).unwrap();
            let b = Tensor::zeros(&[3]);
            for len in 1..6 {
                let x = Tensor::from_vec(&[len, 2], vec![1.0; len * 2]).unwrap();
                let out = conv1d_forward(&x, &w, &b).unwrap();
                assert_eq!(out.shape(), &[len, 3]);
            }
        }
    }

    /// Direct nested-loop evaluation of the same-padding convolution with no
    /// shortcuts, used as the oracle for the optimized kernel.
    fn oracle_forward(x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>) -> Vec<f64> {
        let (len, embed) = (x.shape()[0], x.shape()[1]);
        let (kernel, filters) = (w.shape()[0], w.shape()[2]);
        let half = (kernel as isize - 1) / 2;
        let mut out = vec![0.0; len * filters];
        for t in 0..len as isize {
            for f in 0..filters {
                let mut acc = b.data()[f];
                for k in 0..kernel as isize {
                    let s = t + k - half;
                    if s < 0 || s >= len as isize {
                        continue;
                    }
                    for e in 0..embed {
                        acc += w.data()[((k as usize) * embed + e) * filters + f]
                            * x.data()[(s as usize) * embed + e];
                    }
                }
                out[(t as usize) * filters + f] = acc.max(0.0);
            }
        }
        out
    }

    fn small_case() -> (Tensor<f64>, Tensor<f64>, Tensor<f64>) {
        // Fixed pseudo-random values; mix of signs so ReLU actually gates.
        let (l, e, f, k) = (4, 2, 3, 3);
        let mut seed = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let x = Tensor::from_vec(&[l, e], (0..l * e).map(|_| next()).collect()).unwrap();
        let w = Tensor::from_vec(&[k, e, f], (0..k * e * f).map(|_| next()).collect()).unwrap();
        let b = Tensor::from_vec(&[f], (0..f).map(|_| next()).collect()).unwrap();
        (x, w, b)
    }

    #[test]
    fn forward_matches_nested_loop_oracle() {
        let (x, w, b) = small_case();
        let out = conv1d_forward(&x, &w, &b).unwrap();
        let expect = oracle_forward(&x, &w, &b);
        for (a, e) in out.data().iter().zip(&expect) {
            assert!((a - e).abs() < 1e-10, "got {} want {}", a, e);
        }
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        let (x, w, b) = small_case();
        // Loss: fixed weighted sum of the conv output, so dL/dout is known.
        let (l, f) = (x.shape()[0], w.shape()[2]);
        let coeffs: Vec<f64> = (0..l * f).map(|i| 0.05 * (i as f64 + 1.0)).collect();
        let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| -> f64 {
            let out = conv1d_forward(x, w, b).unwrap();
            out.data().iter().zip(&coeffs).map(|(o, c)| o * c).sum()
        };

        let (out, cache) = conv1d_forward_cached(&x, &w, &b).unwrap();
        let d_out = Tensor::from_vec(out.shape(), coeffs.clone()).unwrap();
        let (dx, dw, db) = conv1d_backward(&x, &w, &cache, &d_out).unwrap();

        let h = 1e-5;
        let check = |analytic: &Tensor<f64>, which: usize| {
            for i in 0..analytic.len() {
                let (mut xp, mut wp, mut bp) = (x.clone(), w.clone(), b.clone());
                let slot = match which {
                    0 => &mut xp.data_mut()[i],
                    1 => &mut wp.data_mut()[i],
                    _ => &mut bp.data_mut()[i],
                };
                let orig = *slot;
                *slot = orig + h;
                let up = loss(&xp, &wp, &bp);
                let slot = match which {
                    0 => &mut xp.data_mut()[i],
                    1 => &mut wp.data_mut()[i],
                    _ => &mut bp.data_mut()[i],
                };
                *slot = orig - h;
                let down = loss(&xp, &wp, &bp);
                let numeric = (up - down) / (2.0 * h);
                let a = analytic.data()[i];
                let tol = 1e-7f64.max(1e-4 * a.abs().max(numeric.abs()));
                assert!(
                    (a - numeric).abs() <= tol,
                    "tensor {} element {}: analytic {} vs numeric {}",
                    which,
                    i,
                    a,
                    numeric
                );
            }
        };
        check(&dx, 0);
        check(&dw, 1);
        check(&db, 2);
    }
}
