//! Operational network built from generative neurons.
//!
//! A generative neuron widens an ordinary convolution with per-tap powers of
//! the input: the layer output is `b + sum_q conv(w_q, x^q)` for `q` from 1 to
//! `Q`. With `Q = 1` it degenerates to a conventional convolution, so the
//! conventional network is the special case rather than a separate code path.
//!
//! [`Model`] assembles two such layers with batch norm, tanh, and pooling into
//! a fixed classifier head, and owns the exact reverse-mode gradients for the
//! whole chain. [`checkpoint`] serializes parameters to a manifest plus flat
//! binary blob with no timestamps, so identical runs write identical bytes.

mod layer;
mod model;
pub mod checkpoint;

pub use layer::{GenerativeCache, GenerativeGrads, GenerativeLayerParams};
pub use model::{Model, ModelConfig, ModelGrads, ModelInput, TrainCache};
