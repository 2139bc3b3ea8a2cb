//! Fully connected layers: `activation(W·x + b)` with W stored [in, out].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    None,
}

pub fn sigmoid<F: Scalar>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

fn apply<F: Scalar>(activation: Activation, x: F) -> F {
    match activation {
        Activation::Relu => {
            if x > F::zero() {
                x
            } else {
                F::zero()
            }
        }
        Activation::Sigmoid => sigmoid(x),
        Activation::None => x,
    }
}

pub struct DenseCache<F> {
    pub pre: Vec<F>,
    pub out: Vec<F>,
}

fn check<F: Scalar>(x: &[F], weight: &Tensor<F>, bias: &Tensor<F>) -> Result<(usize, usize)> {
    if weight.shape().len() != 2 {
        return Err(Error::Shape {
            context: "dense".into(),
            expected: vec![2],
            got: vec![weight.shape().len()],
        });
    }
    let (fan_in, fan_out) = (weight.shape()[0], weight.shape()[1]);
    if x.len() != fan_in || bias.shape() != [fan_out] {
        return Err(Error::Shape {
            context: "dense".into(),
            expected: vec![fan_in, fan_out],
            got: vec![x.len(), bias.len()],
        });
    }
    Ok((fan_in, fan_out))
}

pub fn dense_forward<F: Scalar>(
    x: &[F],
    weight: &Tensor<F>,
    bias: &Tensor<F>,
    activation: Activation,
) -> Result<Vec<F>> {
    dense_forward_cached(x, weight, bias, activation).map(|c| c.out)
}

pub fn dense_forward_cached<F: Scalar>(
    x: &[F],
    weight: &Tensor<F>,
    bias: &Tensor<F>,
    activation: Activation,
) -> Result<DenseCache<F>> {
    let (fan_in, fan_out) = check(x, weight, bias)?;
    let wd = weight.data();
    let mut pre: Vec<F> = bias.data().to_vec();
    for i in 0..fan_in {
        let xv = x[i];
        if xv == F::zero() {
            continue;
        }
        let row = &wd[i * fan_out..(i + 1) * fan_out];
        for (p, &w) in pre.iter_mut().zip(row) {
            *p = *p + w * xv;
        }
    }
    let out: Vec<F> = pre.iter().map(|&p| apply(activation, p)).collect();
    Ok(DenseCache { pre, out })
}

/// Gradients (d_input, d_weight, d_bias) given the gradient w.r.t. the
/// post-activation output.
pub fn dense_backward<F: Scalar>(
    x: &[F],
    weight: &Tensor<F>,
    activation: Activation,
    cache: &DenseCache<F>,
    d_out: &[F],
) -> Result<(Vec<F>, Tensor<F>, Tensor<F>)> {
    let (fan_in, fan_out) = (weight.shape()[0], weight.shape()[1]);
    if d_out.len() != fan_out {
        return Err(Error::Shape {
            context: "dense backward".into(),
            expected: vec![fan_out],
            got: vec![d_out.len()],
        });
    }
    let mut d_pre = vec![F::zero(); fan_out];
    for j in 0..fan_out {
        let factor = match activation {
            Activation::Relu => {
                if cache.pre[j] > F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            }
            // σ'(z) = σ(z)(1 − σ(z)), computed from the cached output.
            Activation::Sigmoid => cache.out[j] * (F::one() - cache.out[j]),
            Activation::None => F::one(),
        };
        d_pre[j] = d_out[j] * factor;
    }

    let wd = weight.data();
    let mut dx = vec![F::zero(); fan_in];
    let mut dw = Tensor::zeros(&[fan_in, fan_out]);
    {
        let dwd = dw.data_mut();
        for i in 0..fan_in {
            let xv = x[i];
            let mut acc = F::zero();
            for j in 0..fan_out {
                let g = d_pre[j];
                dwd[i * fan_out + j] = xv * g;
                acc = acc + wd[i * fan_out + j] * g;
            }
            dx[i] = acc;
        }
    }
    let db = Tensor::from_vec(&[fan_out], d_pre)?;
    Ok((dx, dw, db))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights_with_no_activation_pass_through() {
        let mut w = Tensor::<f64>::zeros(&[3, 3]);
        for i in 0..3 {
            w.set2(i, i, 1.0);
        }
        let b = Tensor::zeros(&[3]);
        let x = [0.25, -1.5, 3.0];
        let out = dense_forward(&x, &w, &b, Activation::None).unwrap();
        assert_eq!(out, x.to_vec());
    }

    #[test]
    fn sigmoid_of_zero_preactivation_is_half() {
        let w = Tensor::<f64>::zeros(&[2, 4]);
        let b = Tensor::zeros(&[4]);
        let out = dense_forward(&[1.0, -2.0], &w, &b, Activation::Sigmoid).unwrap();
        assert_eq!(out, vec![0.5; 4]);
    }

    #[test]
    fn random_case_matches_matvec_oracle() {
        let w = Tensor::from_vec(
            &[4, 3],
            vec![0.1, -0.2, 0.3, 0.4, 0.5, -0.6, -0.7, 0.8, 0.9, 1.0, -1.1, 1.2],
        )
        .unwrap();
        let b = Tensor::from_vec(&[3], vec![0.05, -0.05, 0.0]).unwrap();
        let x = [1.5, -0.5, 2.0, 0.25];

        // Plain nested-loop matvec.
        let mut expect = [0.0f64; 3];
        for (j, slot) in expect.iter_mut().enumerate() {
            let mut acc = b.data()[j];
            for (i, &xv) in x.iter().enumerate() {
                acc += w.at2(i, j) * xv;
            }
            *slot = acc;
        }
        let out = dense_forward(&x, &w, &b, Activation::None).unwrap();
        for j in 0..3 {
            assert!((out[j] - expect[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let w = Tensor::<f64>::zeros(&[4, 3]);
        let b = Tensor::zeros(&[3]);
        assert!(dense_forward(&[1.0; 5], &w, &b, Activation::None).is_err());
        let bad_bias = Tensor::zeros(&[2]);
        assert!(dense_forward(&[1.0; 4], &w, &bad_bias, Activation::None).is_err());
    }

    #[test]
    fn gradients_match_finite_differences_for_every_activation() {
        let w0 = Tensor::from_vec(
            &[4, 3],
            vec![0.1, -0.2, 0.3, 0.4, 0.5, -0.6, -0.7, 0.8, 0.9, 1.0, -1.1, 1.2],
        )
        .unwrap();
        let b0 = Tensor::from_vec(&[3], vec![0.3, -0.2, 0.1]).unwrap();
        let x0 = [0.9, -0.4, 0.7, -1.2];
        let coeffs = [0.2, -0.7, 0.4];
        let h = 1e-5;

        for activation in [Activation::Relu, Activation::Sigmoid, Activation::None] {
            let loss = |x: &[f64], w: &Tensor<f64>, b: &Tensor<f64>| -> f64 {
                dense_forward(x, w, b, activation)
                    .unwrap()
                    .iter()
                    .zip(&coeffs)
                    .map(|(o, c)| o * c)
                    .sum()
            };
            let cache = dense_forward_cached(&x0, &w0, &b0, activation).unwrap();
            let (dx, dw, db) = dense_backward(&x0, &w0, activation, &cache, &coeffs).unwrap();

            let assert_close = |a: f64, n: f64, what: &str| {
                let tol = 1e-7f64.max(1e-4 * a.abs().max(n.abs()));
                assert!((a - n).abs() <= tol, "{}: analytic {} vs numeric {}", what, a, n);
            };

            for i in 0..x0.len() {
                let mut xp = x0;
                xp[i] = x0[i] + h;
                let up = loss(&xp, &w0, &b0);
                xp[i] = x0[i] - h;
                let down = loss(&xp, &w0, &b0);
                assert_close(dx[i], (up - down) / (2.0 * h), "dx");
            }
            for i in 0..w0.len() {
                let mut wp = w0.clone();
                wp.data_mut()[i] = w0.data()[i] + h;
                let up = loss(&x0, &wp, &b0);
                wp.data_mut()[i] = w0.data()[i] - h;
                let down = loss(&x0, &wp, &b0);
                assert_close(dw.data()[i], (up - down) / (2.0 * h), "dw");
            }
            for i in 0..b0.len() {
                let mut bp = b0.clone();
                bp.data_mut()[i] = b0.data()[i] + h;
                let up = loss(&x0, &w0, &bp);
                bp.data_mut()[i] = b0.data()[i] - h;
                let down = loss(&x0, &w0, &bp);
                assert_close(db.data()[i], (up - down) / (2.0 * h), "db");
            }
        }
    }
}
