//! The generative-neuron layer and its gradients.

use crate::nn::{conv1d, conv1d_backward, NnError, Tensor};

/// Parameters of one generative layer: a stack of `q_order` kernels, one per
/// input power, plus a per-output-channel bias.
///
/// Weight layout is `[q_order, c_out, c_in, k]`, so slice `q` (zero-based) is
/// the kernel applied to `x^(q+1)`. The zeroth power would only add a second
/// bias, so the series starts at one.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeLayerParams {
    pub c_in: usize,
    pub c_out: usize,
    pub k: usize,
    pub q_order: usize,
    pub pad: usize,
    pub w: Tensor,
    pub b: Vec<f64>,
}

/// Element powers `x^1 .. x^Q` kept from the forward pass. `powers[0]` is the
/// layer input itself, which is why the backward pass needs no separate copy.
pub struct GenerativeCache {
    pub powers: Vec<Tensor>,
}

pub struct GenerativeGrads {
    pub dw: Tensor,
    pub db: Vec<f64>,
    pub dx: Tensor,
}

impl GenerativeLayerParams {
    /// Zero-initialized layer of the given geometry.
    pub fn zeros(c_in: usize, c_out: usize, k: usize, q_order: usize, pad: usize) -> Self {
        Self {
            c_in,
            c_out,
            k,
            q_order,
            pad,
            w: Tensor::zeros(&[q_order, c_out, c_in, k]),
            b: vec![0.0; c_out],
        }
    }

    pub fn weight_count(&self) -> usize {
        self.q_order * self.c_out * self.c_in * self.k
    }

    /// Kernel for power `q_index + 1` as a standalone `[c_out, c_in, k]`
    /// tensor.
    pub fn weight_slice(&self, q_index: usize) -> Tensor {
        let sz = self.c_out * self.c_in * self.k;
        Tensor::from_vec(
            &[self.c_out, self.c_in, self.k],
            self.w.data()[q_index * sz..(q_index + 1) * sz].to_vec(),
        )
    }

    /// `out = b + sum_q conv(w_q, x^q)`. Powers are built by repeated
    /// multiplication so no transcendental calls are involved.
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, GenerativeCache), NnError> {
        let (c_in, _) = x.dims2("generative_forward")?;
        if c_in != self.c_in {
            return Err(NnError::ShapeMismatch {
                op: "generative_forward",
                expected: format!("{} input channels", self.c_in),
                got: format!("{}", c_in),
            });
        }
        let mut powers = Vec::with_capacity(self.q_order);
        powers.push(x.clone());
        for _ in 1..self.q_order {
            let prev = powers.last().unwrap();
            let next: Vec<f64> = prev
                .data()
                .iter()
                .zip(x.data())
                .map(|(&p, &v)| p * v)
                .collect();
            powers.push(Tensor::from_vec(x.shape(), next));
        }
        let mut out: Option<Tensor> = None;
        for qi in 0..self.q_order {
            let y = conv1d(&powers[qi], &self.weight_slice(qi), self.pad)?;
            out = Some(match out {
                None => y,
                Some(mut acc) => {
                    for (a, v) in acc.data_mut().iter_mut().zip(y.data()) {
                        *a += v;
                    }
                    acc
                }
            });
        }
        let mut out = out.expect("q_order is at least 1");
        let l_out = out.shape()[1];
        for o in 0..self.c_out {
            let bias = self.b[o];
            for v in &mut out.data_mut()[o * l_out..(o + 1) * l_out] {
                *v += bias;
            }
        }
        Ok((out, GenerativeCache { powers }))
    }

    /// Gradients through the power expansion:
    ///
    /// `dW_q = corr(x^q, g)`, `db = sum_m g`, and the input picks up
    /// `q * x^(q-1)` from the chain rule on each power, with `x^0 = 1` so the
    /// linear branch stays defined at zero inputs.
    pub fn backward(
        &self,
        cache: &GenerativeCache,
        grad_out: &Tensor,
    ) -> Result<GenerativeGrads, NnError> {
        let x_shape = cache.powers[0].shape().to_vec();
        let mut dw = Tensor::zeros(&[self.q_order, self.c_out, self.c_in, self.k]);
        let mut db = vec![0.0; self.c_out];
        let mut dx = Tensor::zeros(&x_shape);
        let l_out = grad_out.shape()[1];
        for o in 0..self.c_out {
            db[o] = grad_out.data()[o * l_out..(o + 1) * l_out].iter().sum();
        }
        let slice_len = self.c_out * self.c_in * self.k;
        for qi in 0..self.q_order {
            let per_power =
                conv1d_backward(&cache.powers[qi], &self.weight_slice(qi), grad_out, self.pad)?;
            dw.data_mut()[qi * slice_len..(qi + 1) * slice_len]
                .copy_from_slice(per_power.dw.data());
            let q = (qi + 1) as f64;
            if qi == 0 {
                for (d, &g) in dx.data_mut().iter_mut().zip(per_power.dx.data()) {
                    *d += g;
                }
            } else {
                let lower = &cache.powers[qi - 1];
                for ((d, &g), &p) in dx
                    .data_mut()
                    .iter_mut()
                    .zip(per_power.dx.data())
                    .zip(lower.data())
                {
                    *d += q * p * g;
                }
            }
        }
        Ok(GenerativeGrads { dw, db, dx })
    }
}
