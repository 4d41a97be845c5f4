//! Forward and backward implementations for the fixed layer set.

use super::{NnError, Tensor};

/// Cross-correlation of a `[c_in, l]` signal with a `[c_out, c_in, k]` kernel
/// under symmetric zero padding:
///
/// `out[o][m] = sum_i sum_r w[o][i][r] * x[i][m + r - pad]`
///
/// Out-of-range taps read zero. Output length is `l + 2*pad - k + 1`.
pub fn conv1d(x: &Tensor, w: &Tensor, pad: usize) -> Result<Tensor, NnError> {
    let (c_in, l) = x.dims2("conv1d")?;
    let (c_out, w_cin, k) = w.dims3("conv1d")?;
    if w_cin != c_in {
        return Err(NnError::ShapeMismatch {
            op: "conv1d",
            expected: format!("kernel c_in {}", c_in),
            got: format!("{}", w_cin),
        });
    }
    if l == 0 || k == 0 {
        return Err(NnError::EmptyInput { op: "conv1d" });
    }
    if k > l + 2 * pad {
        return Err(NnError::ShapeMismatch {
            op: "conv1d",
            expected: format!("kernel no longer than padded input {}", l + 2 * pad),
            got: format!("{}", k),
        });
    }
    let l_out = l + 2 * pad - k + 1;
    let mut out = vec![0.0; c_out * l_out];
    for o in 0..c_out {
        let orow = &mut out[o * l_out..(o + 1) * l_out];
        for i in 0..c_in {
            let xrow = x.row(i);
            let wrow = &w.data()[(o * c_in + i) * k..(o * c_in + i + 1) * k];
            for (r, &wv) in wrow.iter().enumerate() {
                // x index is m + r - pad; clamp m to where that lands in [0, l)
                let m_lo = pad.saturating_sub(r);
                let m_hi = (l + pad).saturating_sub(r).min(l_out);
                for m in m_lo..m_hi {
                    orow[m] += wv * xrow[m + r - pad];
                }
            }
        }
    }
    Ok(Tensor::from_vec(&[c_out, l_out], out))
}

/// Gradients of [`conv1d`] given `d(loss)/d(out)`.
pub struct Conv1dGrads {
    pub dw: Tensor,
    pub dx: Tensor,
}

pub fn conv1d_backward(
    x: &Tensor,
    w: &Tensor,
    grad_out: &Tensor,
    pad: usize,
) -> Result<Conv1dGrads, NnError> {
    let (c_in, l) = x.dims2("conv1d_backward")?;
    let (c_out, _, k) = w.dims3("conv1d_backward")?;
    let (g_cout, l_out) = grad_out.dims2("conv1d_backward")?;
    if g_cout != c_out || l_out != l + 2 * pad - k + 1 {
        return Err(NnError::ShapeMismatch {
            op: "conv1d_backward",
            expected: format!("grad [{}, {}]", c_out, l + 2 * pad - k + 1),
            got: format!("{:?}", grad_out.shape()),
        });
    }
    let mut dw = vec![0.0; c_out * c_in * k];
    let mut dx = vec![0.0; c_in * l];
    for o in 0..c_out {
        let grow = grad_out.row(o);
        for i in 0..c_in {
            let xrow = x.row(i);
            let wbase = (o * c_in + i) * k;
            let dxrow = &mut dx[i * l..(i + 1) * l];
            for r in 0..k {
                let m_lo = pad.saturating_sub(r);
                let m_hi = (l + pad).saturating_sub(r).min(l_out);
                let mut acc = 0.0;
                let wv = w.data()[wbase + r];
                for m in m_lo..m_hi {
                    let xi = m + r - pad;
                    acc += grow[m] * xrow[xi];
                    dxrow[xi] += wv * grow[m];
                }
                dw[wbase + r] += acc;
            }
        }
    }
    Ok(Conv1dGrads {
        dw: Tensor::from_vec(&[c_out, c_in, k], dw),
        dx: Tensor::from_vec(&[c_in, l], dx),
    })
}

/// Max pooling result with the flat input index of each winning element, kept
/// for routing gradients back.
pub struct Pooled {
    pub y: Tensor,
    pub argmax: Vec<usize>,
}

/// Non-overlapping max pooling with window == stride. A trailing remainder
/// shorter than the window is dropped. Ties go to the earliest position.
pub fn maxpool1d(x: &Tensor, window: usize) -> Result<Pooled, NnError> {
    let (c, l) = x.dims2("maxpool1d")?;
    if window == 0 || window > l {
        return Err(NnError::ShapeMismatch {
            op: "maxpool1d",
            expected: format!("window in 1..={}", l),
            got: format!("{}", window),
        });
    }
    let l_out = l / window;
    let mut y = vec![0.0; c * l_out];
    let mut argmax = vec![0usize; c * l_out];
    for ch in 0..c {
        let xrow = x.row(ch);
        for j in 0..l_out {
            let start = j * window;
            let mut best = xrow[start];
            let mut best_at = start;
            for (off, &v) in xrow[start + 1..start + window].iter().enumerate() {
                if v > best {
                    best = v;
                    best_at = start + 1 + off;
                }
            }
            y[ch * l_out + j] = best;
            argmax[ch * l_out + j] = ch * l + best_at;
        }
    }
    Ok(Pooled {
        y: Tensor::from_vec(&[c, l_out], y),
        argmax,
    })
}

pub fn maxpool1d_backward(pooled: &Pooled, grad_out: &Tensor, input_shape: &[usize]) -> Tensor {
    let mut dx = Tensor::zeros(input_shape);
    for (slot, &src) in pooled.argmax.iter().enumerate() {
        dx.data_mut()[src] += grad_out.data()[slot];
    }
    dx
}

/// Global max over the length axis, one value per channel.
pub fn adaptive_max_to_1(x: &Tensor) -> Result<Pooled, NnError> {
    let (c, l) = x.dims2("adaptive_max_to_1")?;
    if l == 0 {
        return Err(NnError::EmptyInput {
            op: "adaptive_max_to_1",
        });
    }
    let mut y = vec![0.0; c];
    let mut argmax = vec![0usize; c];
    for ch in 0..c {
        let xrow = x.row(ch);
        let mut best = xrow[0];
        let mut best_at = 0;
        for (t, &v) in xrow.iter().enumerate().skip(1) {
            if v > best {
                best = v;
                best_at = t;
            }
        }
        y[ch] = best;
        argmax[ch] = ch * l + best_at;
    }
    Ok(Pooled {
        y: Tensor::from_vec(&[c], y),
        argmax,
    })
}

pub fn adaptive_max_to_1_backward(pooled: &Pooled, grad_out: &Tensor, input_shape: &[usize]) -> Tensor {
    let mut dx = Tensor::zeros(input_shape);
    for (slot, &src) in pooled.argmax.iter().enumerate() {
        dx.data_mut()[src] += grad_out.data()[slot];
    }
    dx
}

/// Affine map `y = W x + b` with `W` of shape `[m, n]`.
pub fn dense(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor, NnError> {
    let (m, n) = w.dims2("dense")?;
    if x.len() != n || b.len() != m {
        return Err(NnError::ShapeMismatch {
            op: "dense",
            expected: format!("x of {} and b of {}", n, m),
            got: format!("x of {} and b of {}", x.len(), b.len()),
        });
    }
    let mut y = b.data().to_vec();
    for i in 0..m {
        let wrow = w.row(i);
        let mut acc = 0.0;
        for (wv, xv) in wrow.iter().zip(x.data()) {
            acc += wv * xv;
        }
        y[i] += acc;
    }
    Ok(Tensor::from_vec(&[m], y))
}

pub struct DenseGrads {
    pub dw: Tensor,
    pub db: Tensor,
    pub dx: Tensor,
}

pub fn dense_backward(x: &Tensor, w: &Tensor, grad_out: &Tensor) -> Result<DenseGrads, NnError> {
    let (m, n) = w.dims2("dense_backward")?;
    if grad_out.len() != m || x.len() != n {
        return Err(NnError::ShapeMismatch {
            op: "dense_backward",
            expected: format!("grad of {} and x of {}", m, n),
            got: format!("grad of {} and x of {}", grad_out.len(), x.len()),
        });
    }
    let mut dw = vec![0.0; m * n];
    let mut dx = vec![0.0; n];
    for i in 0..m {
        let g = grad_out.data()[i];
        let wrow = w.row(i);
        let drow = &mut dw[i * n..(i + 1) * n];
        for j in 0..n {
            drow[j] = g * x.data()[j];
            dx[j] += g * wrow[j];
        }
    }
    Ok(DenseGrads {
        dw: Tensor::from_vec(&[m, n], dw),
        db: grad_out.clone(),
        dx: Tensor::from_vec(&[n], dx),
    })
}

pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::from_vec(x.shape(), data)
}

/// Gradient of ReLU using the cached input; the subgradient at zero is zero.
pub fn relu_backward(x: &Tensor, grad_out: &Tensor) -> Tensor {
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::from_vec(x.shape(), data)
}

pub fn tanh_forward(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| v.tanh()).collect();
    Tensor::from_vec(x.shape(), data)
}

/// Gradient of tanh from the cached output: `1 - y^2`.
pub fn tanh_backward(y: &Tensor, grad_out: &Tensor) -> Tensor {
    let data = y
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&v, &g)| g * (1.0 - v * v))
        .collect();
    Tensor::from_vec(y.shape(), data)
}

/// Learned per-channel affine plus running statistics for inference.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormState {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

impl BatchNormState {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            momentum: 0.1,
            epsilon: 1e-5,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }
}

/// Values cached by the training-mode forward pass for the backward pass.
pub struct BatchNormCache {
    pub x_hat: Vec<Tensor>,
    pub inv_std: Vec<f64>,
}

/// Training-mode batch norm over a batch of `[c, l]` tensors. Statistics are
/// per channel across batch and length. Normalization uses the biased
/// variance; running variance is updated with the unbiased one, and running
/// stats blend as `(1 - momentum) * old + momentum * batch`.
pub fn batchnorm_train(
    xs: &[Tensor],
    state: &mut BatchNormState,
) -> Result<(Vec<Tensor>, BatchNormCache), NnError> {
    if xs.len() < 2 {
        return Err(NnError::BatchTooSmall {
            op: "batchnorm_train",
            got: xs.len(),
        });
    }
    let (c, l) = xs[0].dims2("batchnorm_train")?;
    if c != state.channels() {
        return Err(NnError::ShapeMismatch {
            op: "batchnorm_train",
            expected: format!("{} channels", state.channels()),
            got: format!("{}", c),
        });
    }
    for x in xs {
        if x.shape() != xs[0].shape() {
            return Err(NnError::ShapeMismatch {
                op: "batchnorm_train",
                expected: format!("{:?}", xs[0].shape()),
                got: format!("{:?}", x.shape()),
            });
        }
    }
    let n = (xs.len() * l) as f64;
    let mut mean = vec![0.0; c];
    let mut var = vec![0.0; c];
    for x in xs {
        for ch in 0..c {
            for &v in x.row(ch) {
                mean[ch] += v;
            }
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    for x in xs {
        for ch in 0..c {
            for &v in x.row(ch) {
                let d = v - mean[ch];
                var[ch] += d * d;
            }
        }
    }
    for v in &mut var {
        *v /= n;
    }

    let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + state.epsilon).sqrt()).collect();
    let mut ys = Vec::with_capacity(xs.len());
    let mut x_hat = Vec::with_capacity(xs.len());
    for x in xs {
        let mut h = vec![0.0; c * l];
        let mut y = vec![0.0; c * l];
        for ch in 0..c {
            let xrow = x.row(ch);
            for (t, &v) in xrow.iter().enumerate() {
                let hv = (v - mean[ch]) * inv_std[ch];
                h[ch * l + t] = hv;
                y[ch * l + t] = state.gamma[ch] * hv + state.beta[ch];
            }
        }
        x_hat.push(Tensor::from_vec(&[c, l], h));
        ys.push(Tensor::from_vec(&[c, l], y));
    }

    let unbias = n / (n - 1.0);
    for ch in 0..c {
        state.running_mean[ch] =
            (1.0 - state.momentum) * state.running_mean[ch] + state.momentum * mean[ch];
        state.running_var[ch] =
            (1.0 - state.momentum) * state.running_var[ch] + state.momentum * var[ch] * unbias;
    }

    Ok((ys, BatchNormCache { x_hat, inv_std }))
}

/// Inference-mode batch norm using the stored running statistics.
pub fn batchnorm_eval(x: &Tensor, state: &BatchNormState) -> Result<Tensor, NnError> {
    let (c, l) = x.dims2("batchnorm_eval")?;
    if c != state.channels() {
        return Err(NnError::ShapeMismatch {
            op: "batchnorm_eval",
            expected: format!("{} channels", state.channels()),
            got: format!("{}", c),
        });
    }
    let mut y = vec![0.0; c * l];
    for ch in 0..c {
        let inv = 1.0 / (state.running_var[ch] + state.epsilon).sqrt();
        for (t, &v) in x.row(ch).iter().enumerate() {
            y[ch * l + t] = state.gamma[ch] * (v - state.running_mean[ch]) * inv + state.beta[ch];
        }
    }
    Ok(Tensor::from_vec(&[c, l], y))
}

/// Gradients for training-mode batch norm. Returns `(dgamma, dbeta, dxs)`.
///
/// Because the batch statistics depend on every element, the input gradient is
/// the full three-term expression, not just a rescale of the output gradient:
///
/// `dx = (gamma * inv_std / n) * (n * dy - sum(dy) - x_hat * sum(dy * x_hat))`
pub fn batchnorm_backward(
    cache: &BatchNormCache,
    state: &BatchNormState,
    grad_ys: &[Tensor],
) -> Result<(Vec<f64>, Vec<f64>, Vec<Tensor>), NnError> {
    let (c, l) = cache.x_hat[0].dims2("batchnorm_backward")?;
    if grad_ys.len() != cache.x_hat.len() {
        return Err(NnError::ShapeMismatch {
            op: "batchnorm_backward",
            expected: format!("batch of {}", cache.x_hat.len()),
            got: format!("{}", grad_ys.len()),
        });
    }
    let n = (grad_ys.len() * l) as f64;
    let mut dgamma = vec![0.0; c];
    let mut dbeta = vec![0.0; c];
    for (g, h) in grad_ys.iter().zip(&cache.x_hat) {
        for ch in 0..c {
            let grow = g.row(ch);
            let hrow = h.row(ch);
            for t in 0..l {
                dgamma[ch] += grow[t] * hrow[t];
                dbeta[ch] += grow[t];
            }
        }
    }
    let mut dxs = Vec::with_capacity(grad_ys.len());
    for (g, h) in grad_ys.iter().zip(&cache.x_hat) {
        let mut dx = vec![0.0; c * l];
        for ch in 0..c {
            let scale = state.gamma[ch] * cache.inv_std[ch] / n;
            let grow = g.row(ch);
            let hrow = h.row(ch);
            for t in 0..l {
                dx[ch * l + t] = scale * (n * grow[t] - dbeta[ch] - hrow[t] * dgamma[ch]);
            }
        }
        dxs.push(Tensor::from_vec(&[c, l], dx));
    }
    Ok((dgamma, dbeta, dxs))
}

/// Softmax cross-entropy summed over the batch, with the max-shift trick for
/// stability. `logits` is `[batch, classes]`; returns the scalar loss and
/// `d(loss)/d(logits)` which is `softmax - onehot` per row.
pub fn softmax_cross_entropy(
    logits: &Tensor,
    labels: &[usize],
) -> Result<(f64, Tensor), NnError> {
    let (batch, classes) = logits.dims2("softmax_cross_entropy")?;
    if labels.len() != batch {
        return Err(NnError::ShapeMismatch {
            op: "softmax_cross_entropy",
            expected: format!("{} labels", batch),
            got: format!("{}", labels.len()),
        });
    }
    let mut loss = 0.0;
    let mut grad = vec![0.0; batch * classes];
    for (b, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(NnError::ShapeMismatch {
                op: "softmax_cross_entropy",
                expected: format!("label < {}", classes),
                got: format!("{}", label),
            });
        }
        let row = logits.row(b);
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for &v in row {
            sum += (v - m).exp();
        }
        let log_sum = m + sum.ln();
        loss += log_sum - row[label];
        let grow = &mut grad[b * classes..(b + 1) * classes];
        for (j, &v) in row.iter().enumerate() {
            grow[j] = (v - log_sum).exp();
        }
        grow[label] -= 1.0;
    }
    if !loss.is_finite() {
        return Err(NnError::NonFinite {
            op: "softmax_cross_entropy",
        });
    }
    Ok((loss, Tensor::from_vec(&[batch, classes], grad)))
}
