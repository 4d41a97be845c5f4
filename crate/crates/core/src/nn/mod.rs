//! Minimal deterministic tensor engine.
//!
//! Everything is plain `f64` on the heap, single-threaded per call, with
//! explicit caches for reverse-mode gradients. There is no graph engine: the
//! network that consumes these ops is a fixed chain, so each op exposes a
//! matching `*_backward` instead.

mod ops;
#[cfg(test)]
mod tests;

pub use ops::{
    adaptive_max_to_1, adaptive_max_to_1_backward, batchnorm_backward, batchnorm_eval,
    batchnorm_train, conv1d, conv1d_backward, dense, dense_backward, maxpool1d,
    maxpool1d_backward, relu, relu_backward, softmax_cross_entropy, tanh_forward, tanh_backward,
    BatchNormCache, BatchNormState, Conv1dGrads, DenseGrads, Pooled,
};

use thiserror::Error;

/// Errors from tensor ops. Shape problems are reported with both sides so the
/// caller can see which contract broke.
#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    ShapeMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },
    #[error("{op}: input must not be empty")]
    EmptyInput { op: &'static str },
    #[error("{op}: batch size must be at least 2 in train mode, got {got}")]
    BatchTooSmall { op: &'static str, got: usize },
    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },
}

/// Dense row-major tensor of `f64` values.
///
/// Rank is carried in `shape`; the ops in this module interpret it as
/// `[channels, length]`, `[c_out, c_in, k]`, `[batch, features]`, or a flat
/// vector depending on the operation.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    /// Wrap existing values. Panics if the element count does not match the
    /// shape product; construction is programmer-controlled, not input-driven.
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape {:?} does not match {} values",
            shape,
            data.len()
        );
        Self {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn dims2(&self, op: &'static str) -> Result<(usize, usize), NnError> {
        match self.shape[..] {
            [a, b] => Ok((a, b)),
            _ => Err(NnError::ShapeMismatch {
                op,
                expected: "rank-2 tensor".into(),
                got: format!("{:?}", self.shape),
            }),
        }
    }

    pub fn dims3(&self, op: &'static str) -> Result<(usize, usize, usize), NnError> {
        match self.shape[..] {
            [a, b, c] => Ok((a, b, c)),
            _ => Err(NnError::ShapeMismatch {
                op,
                expected: "rank-3 tensor".into(),
                got: format!("{:?}", self.shape),
            }),
        }
    }

    /// Row `c` of a `[channels, length]` tensor.
    pub fn row(&self, c: usize) -> &[f64] {
        let l = self.shape[self.shape.len() - 1];
        &self.data[c * l..(c + 1) * l]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Numerical checking utilities shared by the test suites.
pub mod check {
    /// Central finite difference of a scalar function at `x`, one partial per
    /// coordinate. Deliberately knows nothing about any layer implementation.
    pub fn central_diff<F>(mut f: F, x: &[f64], h: f64) -> Vec<f64>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let mut grad = vec![0.0; x.len()];
        let mut probe = x.to_vec();
        for i in 0..x.len() {
            let orig = probe[i];
            probe[i] = orig + h;
            let fp = f(&probe);
            probe[i] = orig - h;
            let fm = f(&probe);
            probe[i] = orig;
            grad[i] = (fp - fm) / (2.0 * h);
        }
        grad
    }

    /// Relative error with an absolute floor so near-zero pairs compare by
    /// absolute difference. The floor must cover the noise of the quantities
    /// being compared; central differences of a loss `L` at step `h` carry
    /// roundoff of about `eps * L / h`, which a zero true gradient exposes.
    pub fn rel_err_floor(a: f64, b: f64, floor: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(floor)
    }

    pub fn rel_err(a: f64, b: f64) -> f64 {
        rel_err_floor(a, b, 1e-6)
    }

    /// Largest relative error over two gradient vectors.
    pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
        max_rel_err_floor(a, b, 1e-6)
    }

    pub fn max_rel_err_floor(a: &[f64], b: &[f64], floor: f64) -> f64 {
        assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b)
            .map(|(&x, &y)| rel_err_floor(x, y, floor))
            .fold(0.0, f64::max)
    }
}
