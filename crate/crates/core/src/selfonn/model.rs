//! The two-layer classifier and its end-to-end gradients.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{
    adaptive_max_to_1, adaptive_max_to_1_backward, batchnorm_backward, batchnorm_eval,
    batchnorm_train, dense, dense_backward, maxpool1d, maxpool1d_backward, relu, relu_backward,
    tanh_backward, tanh_forward, BatchNormCache, BatchNormState, NnError, Pooled, Tensor,
};

use super::checkpoint::NamedArray;
use super::layer::{GenerativeCache, GenerativeLayerParams};

/// Network geometry. The defaults give the production classifier; smaller
/// values are used by tests that need exhaustive numerical checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Scalogram rows fed to the first layer.
    pub in_channels: usize,
    /// Samples per scalogram row.
    pub input_len: usize,
    pub conv1_channels: usize,
    pub conv2_channels: usize,
    /// Kernel width of both generative layers.
    pub kernel: usize,
    /// Highest input power used by the generative neurons.
    pub q_order: usize,
    /// Window and stride of the pooling stage between the layers.
    pub pool_window: usize,
    /// Timing features concatenated before the dense head.
    pub temporal_features: usize,
    pub hidden: usize,
    pub classes: usize,
    /// Shrink the initial scale of higher-power kernels by `1/q!` so the
    /// polynomial terms start gentle.
    pub taper_higher_orders: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            in_channels: 9,
            input_len: 230,
            conv1_channels: 32,
            conv2_channels: 64,
            kernel: 3,
            q_order: 3,
            pool_window: 7,
            temporal_features: 4,
            hidden: 32,
            classes: 3,
            taper_higher_orders: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let fields = [
            self.in_channels,
            self.input_len,
            self.conv1_channels,
            self.conv2_channels,
            self.kernel,
            self.q_order,
            self.pool_window,
            self.hidden,
            self.classes,
        ];
        if fields.iter().any(|&v| v == 0) {
            return Err(NnError::EmptyInput { op: "model_config" });
        }
        if self.kernel % 2 == 0 {
            return Err(NnError::ShapeMismatch {
                op: "model_config",
                expected: "odd kernel for symmetric padding".into(),
                got: format!("{}", self.kernel),
            });
        }
        if self.pool_window > self.input_len {
            return Err(NnError::ShapeMismatch {
                op: "model_config",
                expected: format!("pool window at most {}", self.input_len),
                got: format!("{}", self.pool_window),
            });
        }
        Ok(())
    }

    /// Length after the fixed pooling stage.
    pub fn pooled_len(&self) -> usize {
        self.input_len / self.pool_window
    }

    fn pad(&self) -> usize {
        (self.kernel - 1) / 2
    }

    /// Trainable parameter count (running statistics excluded).
    pub fn param_count(&self) -> usize {
        let l1 = self.q_order * self.conv1_channels * self.in_channels * self.kernel
            + self.conv1_channels;
        let bn1 = 2 * self.conv1_channels;
        let l2 = self.q_order * self.conv2_channels * self.conv1_channels * self.kernel
            + self.conv2_channels;
        let bn2 = 2 * self.conv2_channels;
        let fc1 = self.hidden * (self.conv2_channels + self.temporal_features) + self.hidden;
        let fc2 = self.classes * self.hidden + self.classes;
        l1 + bn1 + l2 + bn2 + fc1 + fc2
    }
}

/// One classified object: a multi-channel image for the convolutional trunk
/// and a short vector joined in before the dense head.
#[derive(Debug, Clone)]
pub struct ModelInput {
    pub image: Tensor,
    pub temporal: Vec<f64>,
}

/// All trainable parameters plus batch-norm running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub l1: GenerativeLayerParams,
    pub bn1: BatchNormState,
    pub l2: GenerativeLayerParams,
    pub bn2: BatchNormState,
    pub fc1_w: Tensor,
    pub fc1_b: Tensor,
    pub fc2_w: Tensor,
    pub fc2_b: Tensor,
}

/// Per-item and per-batch values the backward pass consumes.
pub struct TrainCache {
    l1: Vec<GenerativeCache>,
    bn1: BatchNormCache,
    t1: Vec<Tensor>,
    pool1: Vec<Pooled>,
    l2: Vec<GenerativeCache>,
    bn2: BatchNormCache,
    t2: Vec<Tensor>,
    pool2: Vec<Pooled>,
    z: Vec<Tensor>,
    h_pre: Vec<Tensor>,
    h: Vec<Tensor>,
}

/// Gradient of the summed loss with respect to every trainable parameter,
/// mirroring the field layout of [`Model`].
pub struct ModelGrads {
    pub dl1_w: Tensor,
    pub dl1_b: Vec<f64>,
    pub dbn1_gamma: Vec<f64>,
    pub dbn1_beta: Vec<f64>,
    pub dl2_w: Tensor,
    pub dl2_b: Vec<f64>,
    pub dbn2_gamma: Vec<f64>,
    pub dbn2_beta: Vec<f64>,
    pub dfc1_w: Tensor,
    pub dfc1_b: Tensor,
    pub dfc2_w: Tensor,
    pub dfc2_b: Tensor,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product::<f64>().max(1.0)
}

fn init_uniform(rng: &mut ChaCha20Rng, n: usize, bound: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
}

fn init_generative(
    rng: &mut ChaCha20Rng,
    c_in: usize,
    c_out: usize,
    k: usize,
    q_order: usize,
    pad: usize,
    taper: bool,
) -> GenerativeLayerParams {
    let fan_in = (c_in * k) as f64;
    let base = (6.0 / fan_in).sqrt();
    let mut w = Vec::with_capacity(q_order * c_out * c_in * k);
    for qi in 0..q_order {
        let bound = if taper {
            base / factorial(qi + 1)
        } else {
            base
        };
        w.extend(init_uniform(rng, c_out * c_in * k, bound));
    }
    GenerativeLayerParams {
        c_in,
        c_out,
        k,
        q_order,
        pad,
        w: Tensor::from_vec(&[q_order, c_out, c_in, k], w),
        b: vec![0.0; c_out],
    }
}

impl Model {
    /// Fresh model with uniform Kaiming-style weights, `sqrt(6 / fan_in)`
    /// bounds, zero biases, and identity batch norm. The same seed and config
    /// always produce the same parameters.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self, NnError> {
        config.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let pad = config.pad();
        let l1 = init_generative(
            &mut rng,
            config.in_channels,
            config.conv1_channels,
            config.kernel,
            config.q_order,
            pad,
            config.taper_higher_orders,
        );
        let l2 = init_generative(
            &mut rng,
            config.conv1_channels,
            config.conv2_channels,
            config.kernel,
            config.q_order,
            pad,
            config.taper_higher_orders,
        );
        let fc1_in = config.conv2_channels + config.temporal_features;
        let fc1_w = Tensor::from_vec(
            &[config.hidden, fc1_in],
            init_uniform(&mut rng, config.hidden * fc1_in, (6.0 / fc1_in as f64).sqrt()),
        );
        let fc2_w = Tensor::from_vec(
            &[config.classes, config.hidden],
            init_uniform(
                &mut rng,
                config.classes * config.hidden,
                (6.0 / config.hidden as f64).sqrt(),
            ),
        );
        Ok(Self {
            config: config.clone(),
            l1,
            bn1: BatchNormState::new(config.conv1_channels),
            l2,
            bn2: BatchNormState::new(config.conv2_channels),
            fc1_w,
            fc1_b: Tensor::zeros(&[config.hidden]),
            fc2_w,
            fc2_b: Tensor::zeros(&[config.classes]),
        })
    }

    pub fn param_count(&self) -> usize {
        self.config.param_count()
    }

    fn check_input(&self, input: &ModelInput) -> Result<(), NnError> {
        let (c, l) = input.image.dims2("model_forward")?;
        if c != self.config.in_channels || l != self.config.input_len {
            return Err(NnError::ShapeMismatch {
                op: "model_forward",
                expected: format!("[{}, {}]", self.config.in_channels, self.config.input_len),
                got: format!("{:?}", input.image.shape()),
            });
        }
        if input.temporal.len() != self.config.temporal_features {
            return Err(NnError::ShapeMismatch {
                op: "model_forward",
                expected: format!("{} temporal features", self.config.temporal_features),
                got: format!("{}", input.temporal.len()),
            });
        }
        Ok(())
    }

    fn head(&self, trunk: &Tensor, temporal: &[f64]) -> Result<(Tensor, Tensor, Tensor, Tensor), NnError> {
        let mut z = trunk.data().to_vec();
        z.extend_from_slice(temporal);
        let z = Tensor::from_vec(&[z.len()], z);
        let h_pre = dense(&z, &self.fc1_w, &self.fc1_b)?;
        let h = relu(&h_pre);
        let logits = dense(&h, &self.fc2_w, &self.fc2_b)?;
        Ok((z, h_pre, h, logits))
    }

    /// Training-mode forward over a batch. Batch norm couples the items, so
    /// the whole batch moves through each stage together; running statistics
    /// are updated as a side effect. Returns `[batch, classes]` logits.
    pub fn forward_train(
        &mut self,
        inputs: &[ModelInput],
    ) -> Result<(Tensor, TrainCache), NnError> {
        if inputs.len() < 2 {
            return Err(NnError::BatchTooSmall {
                op: "model_forward_train",
                got: inputs.len(),
            });
        }
        for input in inputs {
            self.check_input(input)?;
        }
        let batch = inputs.len();

        let mut l1_caches = Vec::with_capacity(batch);
        let mut a1 = Vec::with_capacity(batch);
        for input in inputs {
            let (y, cache) = self.l1.forward(&input.image)?;
            a1.push(y);
            l1_caches.push(cache);
        }
        let (bn1_out, bn1_cache) = batchnorm_train(&a1, &mut self.bn1)?;

        let mut t1 = Vec::with_capacity(batch);
        let mut pool1 = Vec::with_capacity(batch);
        let mut l2_caches = Vec::with_capacity(batch);
        let mut a2 = Vec::with_capacity(batch);
        for y in &bn1_out {
            let t = tanh_forward(y);
            let p = maxpool1d(&t, self.config.pool_window)?;
            let (y2, cache) = self.l2.forward(&p.y)?;
            t1.push(t);
            pool1.push(p);
            a2.push(y2);
            l2_caches.push(cache);
        }
        let (bn2_out, bn2_cache) = batchnorm_train(&a2, &mut self.bn2)?;

        let mut t2 = Vec::with_capacity(batch);
        let mut pool2 = Vec::with_capacity(batch);
        let mut zs = Vec::with_capacity(batch);
        let mut h_pres = Vec::with_capacity(batch);
        let mut hs = Vec::with_capacity(batch);
        let mut logits = Vec::with_capacity(batch * self.config.classes);
        for (b, y) in bn2_out.iter().enumerate() {
            let t = tanh_forward(y);
            let p = adaptive_max_to_1(&t)?;
            let (z, h_pre, h, row) = self.head(&p.y, &inputs[b].temporal)?;
            logits.extend_from_slice(row.data());
            t2.push(t);
            pool2.push(p);
            zs.push(z);
            h_pres.push(h_pre);
            hs.push(h);
        }

        Ok((
            Tensor::from_vec(&[batch, self.config.classes], logits),
            TrainCache {
                l1: l1_caches,
                bn1: bn1_cache,
                t1,
                pool1,
                l2: l2_caches,
                bn2: bn2_cache,
                t2,
                pool2,
                z: zs,
                h_pre: h_pres,
                h: hs,
            },
        ))
    }

    /// Inference-mode forward for one item, using running statistics instead
    /// of batch statistics. Returns `[classes]` logits.
    pub fn forward_eval(&self, input: &ModelInput) -> Result<Tensor, NnError> {
        self.check_input(input)?;
        let (a1, _) = self.l1.forward(&input.image)?;
        let t1 = tanh_forward(&batchnorm_eval(&a1, &self.bn1)?);
        let p1 = maxpool1d(&t1, self.config.pool_window)?;
        let (a2, _) = self.l2.forward(&p1.y)?;
        let t2 = tanh_forward(&batchnorm_eval(&a2, &self.bn2)?);
        let p2 = adaptive_max_to_1(&t2)?;
        let (_, _, _, logits) = self.head(&p2.y, &input.temporal)?;
        Ok(logits)
    }

    /// Class index and softmax probabilities for one item.
    pub fn predict(&self, input: &ModelInput) -> Result<(usize, Vec<f64>), NnError> {
        let logits = self.forward_eval(input)?;
        let m = logits.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = logits.data().iter().map(|&v| (v - m).exp()).collect();
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        let best = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("probabilities are finite"))
            .map(|(i, _)| i)
            .expect("at least one class");
        Ok((best, probs))
    }

    /// Reverse pass matching [`Model::forward_train`]. `dlogits` is the
    /// gradient of the summed loss, `[batch, classes]`.
    pub fn backward(&self, cache: &TrainCache, dlogits: &Tensor) -> Result<ModelGrads, NnError> {
        let (batch, classes) = dlogits.dims2("model_backward")?;
        if batch != cache.h.len() || classes != self.config.classes {
            return Err(NnError::ShapeMismatch {
                op: "model_backward",
                expected: format!("[{}, {}]", cache.h.len(), self.config.classes),
                got: format!("{:?}", dlogits.shape()),
            });
        }
        let c2 = self.config.conv2_channels;
        let pooled_len = self.config.pooled_len();

        let mut dfc1_w = Tensor::zeros(self.fc1_w.shape());
        let mut dfc1_b = Tensor::zeros(self.fc1_b.shape());
        let mut dfc2_w = Tensor::zeros(self.fc2_w.shape());
        let mut dfc2_b = Tensor::zeros(self.fc2_b.shape());

        let mut dbn2_out = Vec::with_capacity(batch);
        for b in 0..batch {
            let grow = Tensor::from_vec(&[classes], dlogits.row(b).to_vec());
            let g2 = dense_backward(&cache.h[b], &self.fc2_w, &grow)?;
            accumulate(&mut dfc2_w, &g2.dw);
            accumulate(&mut dfc2_b, &g2.db);
            let dh_pre = relu_backward(&cache.h_pre[b], &g2.dx);
            let g1 = dense_backward(&cache.z[b], &self.fc1_w, &dh_pre)?;
            accumulate(&mut dfc1_w, &g1.dw);
            accumulate(&mut dfc1_b, &g1.db);
            let dp2 = Tensor::from_vec(&[c2], g1.dx.data()[..c2].to_vec());
            let dt2 = adaptive_max_to_1_backward(&cache.pool2[b], &dp2, &[c2, pooled_len]);
            dbn2_out.push(tanh_backward(&cache.t2[b], &dt2));
        }

        let (dbn2_gamma, dbn2_beta, da2) = batchnorm_backward(&cache.bn2, &self.bn2, &dbn2_out)?;

        let mut dl2_w = Tensor::zeros(self.l2.w.shape());
        let mut dl2_b = vec![0.0; self.l2.c_out];
        let mut dbn1_out = Vec::with_capacity(batch);
        let c1 = self.config.conv1_channels;
        let l_in = self.config.input_len;
        for b in 0..batch {
            let g = self.l2.backward(&cache.l2[b], &da2[b])?;
            accumulate(&mut dl2_w, &g.dw);
            for (acc, v) in dl2_b.iter_mut().zip(&g.db) {
                *acc += v;
            }
            let dt1 = maxpool1d_backward(&cache.pool1[b], &g.dx, &[c1, l_in]);
            dbn1_out.push(tanh_backward(&cache.t1[b], &dt1));
        }

        let (dbn1_gamma, dbn1_beta, da1) = batchnorm_backward(&cache.bn1, &self.bn1, &dbn1_out)?;

        let mut dl1_w = Tensor::zeros(self.l1.w.shape());
        let mut dl1_b = vec![0.0; self.l1.c_out];
        for b in 0..batch {
            let g = self.l1.backward(&cache.l1[b], &da1[b])?;
            accumulate(&mut dl1_w, &g.dw);
            for (acc, v) in dl1_b.iter_mut().zip(&g.db) {
                *acc += v;
            }
        }

        Ok(ModelGrads {
            dl1_w,
            dl1_b,
            dbn1_gamma,
            dbn1_beta,
            dl2_w,
            dl2_b,
            dbn2_gamma,
            dbn2_beta,
            dfc1_w,
            dfc1_b,
            dfc2_w,
            dfc2_b,
        })
    }

    /// Append every trainable parameter in the fixed optimizer order: layer
    /// weights then bias, batch-norm gamma then beta, repeated down the
    /// network, then the dense head.
    pub fn write_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(self.l1.w.data());
        out.extend_from_slice(&self.l1.b);
        out.extend_from_slice(&self.bn1.gamma);
        out.extend_from_slice(&self.bn1.beta);
        out.extend_from_slice(self.l2.w.data());
        out.extend_from_slice(&self.l2.b);
        out.extend_from_slice(&self.bn2.gamma);
        out.extend_from_slice(&self.bn2.beta);
        out.extend_from_slice(self.fc1_w.data());
        out.extend_from_slice(self.fc1_b.data());
        out.extend_from_slice(self.fc2_w.data());
        out.extend_from_slice(self.fc2_b.data());
    }

    /// Load parameters from the flat optimizer layout written by
    /// [`Model::write_params`].
    pub fn read_params(&mut self, flat: &[f64]) -> Result<(), NnError> {
        if flat.len() != self.param_count() {
            return Err(NnError::ShapeMismatch {
                op: "read_params",
                expected: format!("{} parameters", self.param_count()),
                got: format!("{}", flat.len()),
            });
        }
        let mut at = 0;
        let mut take = |n: usize| {
            let s = &flat[at..at + n];
            at += n;
            s
        };
        let n = self.l1.weight_count();
        self.l1.w.data_mut().copy_from_slice(take(n));
        let n = self.l1.c_out;
        self.l1.b.copy_from_slice(take(n));
        let n = self.bn1.channels();
        self.bn1.gamma.copy_from_slice(take(n));
        self.bn1.beta.copy_from_slice(take(n));
        let n = self.l2.weight_count();
        self.l2.w.data_mut().copy_from_slice(take(n));
        let n = self.l2.c_out;
        self.l2.b.copy_from_slice(take(n));
        let n = self.bn2.channels();
        self.bn2.gamma.copy_from_slice(take(n));
        self.bn2.beta.copy_from_slice(take(n));
        let n = self.fc1_w.len();
        self.fc1_w.data_mut().copy_from_slice(take(n));
        let n = self.fc1_b.len();
        self.fc1_b.data_mut().copy_from_slice(take(n));
        let n = self.fc2_w.len();
        self.fc2_w.data_mut().copy_from_slice(take(n));
        let n = self.fc2_b.len();
        self.fc2_b.data_mut().copy_from_slice(take(n));
        Ok(())
    }

    /// Every stored array, including batch-norm running statistics, in the
    /// order they are serialized.
    pub fn to_arrays(&self) -> Vec<NamedArray> {
        let bn = |prefix: &str, state: &BatchNormState| {
            vec![
                NamedArray::new(format!("{prefix}.gamma"), vec![state.channels()], state.gamma.clone()),
                NamedArray::new(format!("{prefix}.beta"), vec![state.channels()], state.beta.clone()),
                NamedArray::new(
                    format!("{prefix}.running_mean"),
                    vec![state.channels()],
                    state.running_mean.clone(),
                ),
                NamedArray::new(
                    format!("{prefix}.running_var"),
                    vec![state.channels()],
                    state.running_var.clone(),
                ),
            ]
        };
        let mut arrays = vec![
            NamedArray::new("l1.w".into(), self.l1.w.shape().to_vec(), self.l1.w.data().to_vec()),
            NamedArray::new("l1.b".into(), vec![self.l1.c_out], self.l1.b.clone()),
        ];
        arrays.extend(bn("bn1", &self.bn1));
        arrays.push(NamedArray::new("l2.w".into(), self.l2.w.shape().to_vec(), self.l2.w.data().to_vec()));
        arrays.push(NamedArray::new("l2.b".into(), vec![self.l2.c_out], self.l2.b.clone()));
        arrays.extend(bn("bn2", &self.bn2));
        arrays.push(NamedArray::new("fc1.w".into(), self.fc1_w.shape().to_vec(), self.fc1_w.data().to_vec()));
        arrays.push(NamedArray::new("fc1.b".into(), self.fc1_b.shape().to_vec(), self.fc1_b.data().to_vec()));
        arrays.push(NamedArray::new("fc2.w".into(), self.fc2_w.shape().to_vec(), self.fc2_w.data().to_vec()));
        arrays.push(NamedArray::new("fc2.b".into(), self.fc2_b.shape().to_vec(), self.fc2_b.data().to_vec()));
        arrays
    }

    /// Rebuild a model from stored arrays. Missing arrays and shape drift are
    /// reported by name.
    pub fn from_arrays(config: &ModelConfig, arrays: &[NamedArray]) -> Result<Self, NnError> {
        config.validate()?;
        let mut model = Self::init(config, 0)?;
        let find = |name: &str, shape: &[usize]| -> Result<Vec<f64>, NnError> {
            let arr = arrays.iter().find(|a| a.name == name).ok_or_else(|| {
                NnError::ShapeMismatch {
                    op: "from_arrays",
                    expected: format!("array {name}"),
                    got: "missing".into(),
                }
            })?;
            if arr.shape != shape {
                return Err(NnError::ShapeMismatch {
                    op: "from_arrays",
                    expected: format!("{name} with shape {:?}", shape),
                    got: format!("{:?}", arr.shape),
                });
            }
            Ok(arr.data.clone())
        };
        let c1 = config.conv1_channels;
        let c2 = config.conv2_channels;
        model.l1.w = Tensor::from_vec(
            &[config.q_order, c1, config.in_channels, config.kernel],
            find("l1.w", &[config.q_order, c1, config.in_channels, config.kernel])?,
        );
        model.l1.b = find("l1.b", &[c1])?;
        model.bn1.gamma = find("bn1.gamma", &[c1])?;
        model.bn1.beta = find("bn1.beta", &[c1])?;
        model.bn1.running_mean = find("bn1.running_mean", &[c1])?;
        model.bn1.running_var = find("bn1.running_var", &[c1])?;
        model.l2.w = Tensor::from_vec(
            &[config.q_order, c2, c1, config.kernel],
            find("l2.w", &[config.q_order, c2, c1, config.kernel])?,
        );
        model.l2.b = find("l2.b", &[c2])?;
        model.bn2.gamma = find("bn2.gamma", &[c2])?;
        model.bn2.beta = find("bn2.beta", &[c2])?;
        model.bn2.running_mean = find("bn2.running_mean", &[c2])?;
        model.bn2.running_var = find("bn2.running_var", &[c2])?;
        let fc1_in = c2 + config.temporal_features;
        model.fc1_w = Tensor::from_vec(&[config.hidden, fc1_in], find("fc1.w", &[config.hidden, fc1_in])?);
        model.fc1_b = Tensor::from_vec(&[config.hidden], find("fc1.b", &[config.hidden])?);
        model.fc2_w = Tensor::from_vec(&[config.classes, config.hidden], find("fc2.w", &[config.classes, config.hidden])?);
        model.fc2_b = Tensor::from_vec(&[config.classes], find("fc2.b", &[config.classes])?);
        Ok(model)
    }
}

impl ModelGrads {
    /// Flatten in the same order as [`Model::write_params`].
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(self.dl1_w.data());
        out.extend_from_slice(&self.dl1_b);
        out.extend_from_slice(&self.dbn1_gamma);
        out.extend_from_slice(&self.dbn1_beta);
        out.extend_from_slice(self.dl2_w.data());
        out.extend_from_slice(&self.dl2_b);
        out.extend_from_slice(&self.dbn2_gamma);
        out.extend_from_slice(&self.dbn2_beta);
        out.extend_from_slice(self.dfc1_w.data());
        out.extend_from_slice(self.dfc1_b.data());
        out.extend_from_slice(self.dfc2_w.data());
        out.extend_from_slice(self.dfc2_b.data());
        out
    }
}

fn accumulate(acc: &mut Tensor, add: &Tensor) {
    for (a, v) in acc.data_mut().iter_mut().zip(add.data()) {
        *a += v;
    }
}
