//! Release gates, one per numbered criterion, each printing a single
//! PASS / SKIP / FAIL line. Run them in order with:
//!
//! ```text
//! cargo test -p ecgonn-cli --test acceptance -- --nocapture --test-threads=1
//! ```
//!
//! Every check here recomputes its expectation independently: brute-force
//! summations, inline finite differences, a second annotation reader, and
//! dense spectral sweeps, so agreement means two implementations concur
//! rather than one implementation agreeing with itself. Criteria that need
//! the archive corpus skip with a note when it is absent.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use ecgonn::nn::{
    adaptive_max_to_1, adaptive_max_to_1_backward, batchnorm_backward, batchnorm_train, conv1d,
    conv1d_backward, dense, dense_backward, maxpool1d, maxpool1d_backward, relu, relu_backward,
    softmax_cross_entropy, tanh_backward, tanh_forward, BatchNormState,
};
use ecgonn::wfdb::{decode_format_212, encode_format_212, parse_annotations};
use ecgonn::{cwt, GenerativeLayerParams, Model, ModelConfig, ModelInput, Tensor, WaveletSpec};

type Outcome = Result<Option<String>, String>;

fn gate(number: u32, what: &str, body: impl FnOnce() -> Outcome) {
    match body() {
        Ok(None) => println!("criterion {number} ({what}): PASS"),
        Ok(Some(reason)) => println!("criterion {number} ({what}): SKIP ({reason})"),
        Err(message) => {
            println!("criterion {number} ({what}): FAIL ({message})");
            panic!("criterion {number} ({what}): {message}");
        }
    }
}

fn ensure(condition: bool, message: impl Into<String>) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(message.into())
    }
}

fn within(start: Instant, budget: Duration, what: &str) -> Result<(), String> {
    let elapsed = start.elapsed();
    ensure(
        elapsed <= budget,
        format!("{what} took {elapsed:.1?}, budget {budget:?}"),
    )
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ecgonn"))
}

fn run_ok(args: &[&str]) -> Result<Output, String> {
    let output = bin()
        .args(args)
        .output()
        .map_err(|e| format!("cannot launch the binary: {e}"))?;
    if !output.status.success() {
        return Err(format!(
            "`ecgonn {}` exited with {:?}: {}",
            args.join(" "),
            output.status.code(),
            String::from_utf8_lossy(&output.stderr).trim(),
        ));
    }
    Ok(output)
}

fn work_root() -> PathBuf {
    let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&root).expect("create acceptance workspace");
    root
}

fn fresh_dir(name: &str) -> Result<PathBuf, String> {
    let dir = work_root().join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    Ok(dir)
}

/// The archive corpus, if present: `ECGONN_DATA_DIR` first, then a `data`
/// directory beside the workspace.
fn archive_dir() -> Option<PathBuf> {
    let candidates = [
        std::env::var_os("ECGONN_DATA_DIR").map(PathBuf::from),
        Some(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mitdb")),
    ];
    candidates
        .into_iter()
        .flatten()
        .find(|dir| dir.join("100.hea").exists())
}

/// One cell of the `class,...` table the evaluate command prints.
fn table_cell(stdout: &str, row: &str, column: &str) -> Result<f64, String> {
    let mut lines = stdout.lines().skip_while(|l| !l.starts_with("class,"));
    let header: Vec<&str> = lines
        .next()
        .ok_or("no metrics table in the output")?
        .split(',')
        .collect();
    let col = header
        .iter()
        .position(|&h| h == column)
        .ok_or_else(|| format!("no column {column}"))?;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.first() == Some(&row) {
            return fields[col]
                .parse()
                .map_err(|_| format!("cell {row}/{column} is not a number: {:?}", fields[col]));
        }
    }
    Err(format!("no row {row} in the metrics table"))
}

#[test]
fn criterion_1_metrics_oracle() {
    gate(1, "metrics oracle", || {
        let start = Instant::now();
        let dir = fresh_dir("c1")?;

        // published confusion matrices with the rates they must imply
        let cases: [(&str, &str, &[(&str, &str, f64)]); 2] = [
            (
                "held_out.csv",
                ",N,S,V\nN,43868,266,43\nS,269,1529,36\nV,241,36,2941\n",
                &[
                    ("N", "sensitivity", 99.30),
                    ("N", "precision", 98.85),
                    ("S", "sensitivity", 83.37),
                    ("S", "precision", 83.51),
                    ("S", "specificity", 99.36),
                    ("V", "sensitivity", 91.39),
                    ("V", "precision", 97.38),
                    ("overall", "accuracy", 98.19),
                ],
            ),
            (
                "train_side.csv",
                ",N,S,V\nN,45355,170,299\nS,122,749,72\nV,91,6,3691\n",
                &[("N", "sensitivity", 98.98), ("overall", "accuracy", 98.50)],
            ),
        ];

        for (name, matrix, expectations) in cases {
            let path = dir.join(name);
            fs::write(&path, matrix).map_err(|e| e.to_string())?;
            let output = run_ok(&["evaluate", "--confusion", path.to_str().unwrap()])?;
            let stdout = String::from_utf8_lossy(&output.stdout).into_owned();
            for &(row, column, want) in expectations {
                let got = table_cell(&stdout, row, column)?;
                ensure(
                    (got - want).abs() <= 0.01 + 1e-9,
                    format!("{name} {row}/{column}: got {got}, want {want} within 0.01"),
                )?;
            }
        }
        within(start, Duration::from_secs(1), "the calculator runs")?;
        Ok(None)
    });
}

#[test]
fn criterion_2_architecture_size() {
    gate(2, "architecture size", || {
        let start = Instant::now();
        ensure(
            ModelConfig::default().param_count() == 23_619,
            format!(
                "default config counts {} parameters, want 23619",
                ModelConfig::default().param_count()
            ),
        )?;
        let output = run_ok(&["train", "--dry-run"])?;
        let stdout = String::from_utf8_lossy(&output.stdout);
        ensure(
            stdout.contains("trainable parameters: 23619"),
            format!("dry run reported: {}", stdout.trim()),
        )?;
        within(start, Duration::from_secs(1), "the dry run")?;
        Ok(None)
    });
}

/// The generative layer written as its plain summation: for each output
/// position, add `w_q[o][i][r] * x[i][m + r - pad]^q` over every power,
/// channel, and tap, with the signal zero outside its bounds.
fn naive_generative_forward(layer: &GenerativeLayerParams, x: &Tensor) -> Vec<f64> {
    let l = x.shape()[1];
    let l_out = l + 2 * layer.pad - layer.k + 1;
    let mut out = vec![0.0; layer.c_out * l_out];
    for o in 0..layer.c_out {
        for m in 0..l_out {
            let mut acc = layer.b[o];
            for q in 1..=layer.q_order {
                for i in 0..layer.c_in {
                    for r in 0..layer.k {
                        let xi = (m + r) as isize - layer.pad as isize;
                        if xi < 0 || xi >= l as isize {
                            continue;
                        }
                        let w = layer.w.data()
                            [(((q - 1) * layer.c_out + o) * layer.c_in + i) * layer.k + r];
                        acc += w * x.row(i)[xi as usize].powi(q as i32);
                    }
                }
            }
            out[o * l_out + m] = acc;
        }
    }
    out
}

fn random_layer(rng: &mut ChaCha20Rng, q_order: usize) -> (GenerativeLayerParams, Tensor) {
    let c_in = rng.gen_range(1..=3);
    let c_out = rng.gen_range(1..=3);
    let k = *[1usize, 3, 5].choose(rng).unwrap();
    let l = rng.gen_range(k.max(5)..=16);
    let mut layer = GenerativeLayerParams::zeros(c_in, c_out, k, q_order, (k - 1) / 2);
    layer.w = Tensor::from_vec(
        &[q_order, c_out, c_in, k],
        (0..q_order * c_out * c_in * k)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect(),
    );
    layer.b = (0..c_out).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x = Tensor::from_vec(
        &[c_in, l],
        (0..c_in * l).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    );
    (layer, x)
}

#[test]
fn criterion_3_generative_neuron_forward() {
    gate(3, "generative neuron forward", || {
        let start = Instant::now();
        let mut rng = ChaCha20Rng::seed_from_u64(303);

        for trial in 0..120 {
            let q_order = rng.gen_range(1..=4);
            let (layer, x) = random_layer(&mut rng, q_order);
            let (y, _) = layer.forward(&x).map_err(|e| e.to_string())?;
            let oracle = naive_generative_forward(&layer, &x);
            let worst = y
                .data()
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            ensure(
                worst < 1e-10,
                format!("trial {trial}: naive summation disagrees by {worst:e}"),
            )?;
        }

        for trial in 0..120 {
            let (layer, x) = random_layer(&mut rng, 1);
            let (y, _) = layer.forward(&x).map_err(|e| e.to_string())?;
            let plain = conv1d(&x, &layer.weight_slice(0), layer.pad).map_err(|e| e.to_string())?;
            let mut worst = 0.0f64;
            for o in 0..layer.c_out {
                for (a, b) in y.row(o).iter().zip(plain.row(o)) {
                    worst = worst.max((a - (b + layer.b[o])).abs());
                }
            }
            ensure(
                worst < 1e-12,
                format!("trial {trial}: first-order layer is not the plain convolution ({worst:e})"),
            )?;
        }

        within(start, Duration::from_secs(30), "the forward comparisons")?;
        Ok(None)
    });
}

/// Central finite difference, one partial per coordinate, written out here so
/// the gradient checks share nothing with the library they probe.
fn fd_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = f(&probe);
        probe[i] = orig - h;
        let down = f(&probe);
        probe[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Worst relative disagreement, with near-zero pairs compared absolutely
/// against the floor.
fn worst_rel(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

fn rand_vec(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Values with every pairwise gap at least 0.05, shuffled, so max pools have
/// unique winners and a 1e-6 step cannot cross a kink.
fn well_separated(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    let mut values: Vec<f64> = (0..n).map(|i| -1.0 + 0.06 * i as f64).collect();
    values.shuffle(rng);
    values
}

#[test]
fn criterion_4_gradient_suite() {
    gate(4, "gradient suite", || {
        let start = Instant::now();
        let mut rng = ChaCha20Rng::seed_from_u64(404);
        // near the optimum for central differences of O(1) functions
        let h = 1e-5;
        let smooth = 1e-6;
        let kinked = 1e-4;
        let floor = 1e-6;
        let check = |op: &str, tolerance: f64, analytic: &[f64], numeric: &[f64]| {
            let worst = worst_rel(analytic, numeric, floor);
            ensure(
                worst < tolerance,
                format!("{op}: worst relative error {worst:e}, tolerance {tolerance:e}"),
            )
        };

        // convolution: weight and input gradients against a probed scalar loss
        {
            let x0 = rand_vec(&mut rng, 2 * 9);
            let w0 = rand_vec(&mut rng, 3 * 2 * 3);
            let probe = rand_vec(&mut rng, 3 * 9);
            let loss = |xv: &[f64], wv: &[f64]| {
                let y = conv1d(
                    &Tensor::from_vec(&[2, 9], xv.to_vec()),
                    &Tensor::from_vec(&[3, 2, 3], wv.to_vec()),
                    1,
                )
                .unwrap();
                y.data().iter().zip(&probe).map(|(a, b)| a * b).sum::<f64>()
            };
            let grads = conv1d_backward(
                &Tensor::from_vec(&[2, 9], x0.clone()),
                &Tensor::from_vec(&[3, 2, 3], w0.clone()),
                &Tensor::from_vec(&[3, 9], probe.clone()),
                1,
            )
            .map_err(|e| e.to_string())?;
            check("conv1d dw", smooth, grads.dw.data(), &fd_gradient(|v| loss(&x0, v), &w0, h))?;
            check("conv1d dx", smooth, grads.dx.data(), &fd_gradient(|v| loss(v, &w0), &x0, h))?;
        }

        // dense head: all three gradients
        {
            let x0 = rand_vec(&mut rng, 5);
            let w0 = rand_vec(&mut rng, 4 * 5);
            let b0 = rand_vec(&mut rng, 4);
            let probe = rand_vec(&mut rng, 4);
            let loss = |xv: &[f64], wv: &[f64], bv: &[f64]| {
                let y = dense(
                    &Tensor::from_vec(&[5], xv.to_vec()),
                    &Tensor::from_vec(&[4, 5], wv.to_vec()),
                    &Tensor::from_vec(&[4], bv.to_vec()),
                )
                .unwrap();
                y.data().iter().zip(&probe).map(|(a, b)| a * b).sum::<f64>()
            };
            let grads = dense_backward(
                &Tensor::from_vec(&[5], x0.clone()),
                &Tensor::from_vec(&[4, 5], w0.clone()),
                &Tensor::from_vec(&[4], probe.clone()),
            )
            .map_err(|e| e.to_string())?;
            check("dense dw", smooth, grads.dw.data(), &fd_gradient(|v| loss(&x0, v, &b0), &w0, h))?;
            check("dense db", smooth, grads.db.data(), &fd_gradient(|v| loss(&x0, &w0, v), &b0, h))?;
            check("dense dx", smooth, grads.dx.data(), &fd_gradient(|v| loss(v, &w0, &b0), &x0, h))?;
        }

        // tanh
        {
            let x0 = rand_vec(&mut rng, 2 * 7);
            let probe = rand_vec(&mut rng, 2 * 7);
            let loss = |xv: &[f64]| {
                tanh_forward(&Tensor::from_vec(&[2, 7], xv.to_vec()))
                    .data()
                    .iter()
                    .zip(&probe)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            };
            let y = tanh_forward(&Tensor::from_vec(&[2, 7], x0.clone()));
            let analytic = tanh_backward(&y, &Tensor::from_vec(&[2, 7], probe.clone()));
            check("tanh dx", smooth, analytic.data(), &fd_gradient(loss, &x0, h))?;
        }

        // batch norm in training mode: scale, shift, and inputs together,
        // through the batch statistics
        {
            let batch = 3;
            let (c, l) = (2, 5);
            let gamma0 = (0..c).map(|_| rng.gen_range(0.5..1.5)).collect::<Vec<_>>();
            let beta0 = rand_vec(&mut rng, c);
            let xs0: Vec<Vec<f64>> = (0..batch).map(|_| rand_vec(&mut rng, c * l)).collect();
            let probes: Vec<Tensor> = (0..batch)
                .map(|_| Tensor::from_vec(&[c, l], rand_vec(&mut rng, c * l)))
                .collect();
            // flat layout: gamma, beta, then each batch member
            let flat0: Vec<f64> = gamma0
                .iter()
                .chain(&beta0)
                .copied()
                .chain(xs0.iter().flatten().copied())
                .collect();
            let loss = |flat: &[f64]| {
                let mut state = BatchNormState::new(c);
                state.gamma = flat[..c].to_vec();
                state.beta = flat[c..2 * c].to_vec();
                let xs: Vec<Tensor> = (0..batch)
                    .map(|b| {
                        Tensor::from_vec(&[c, l], flat[2 * c + b * c * l..2 * c + (b + 1) * c * l].to_vec())
                    })
                    .collect();
                let (ys, _) = batchnorm_train(&xs, &mut state).unwrap();
                ys.iter()
                    .zip(&probes)
                    .flat_map(|(y, p)| y.data().iter().zip(p.data()).map(|(a, b)| a * b))
                    .sum::<f64>()
            };
            let mut state = BatchNormState::new(c);
            state.gamma = gamma0.clone();
            state.beta = beta0.clone();
            let xs: Vec<Tensor> = xs0
                .iter()
                .map(|x| Tensor::from_vec(&[c, l], x.clone()))
                .collect();
            let (_, cache) = batchnorm_train(&xs, &mut state).map_err(|e| e.to_string())?;
            let (dgamma, dbeta, dxs) =
                batchnorm_backward(&cache, &state, &probes).map_err(|e| e.to_string())?;
            let analytic: Vec<f64> = dgamma
                .iter()
                .chain(&dbeta)
                .copied()
                .chain(dxs.iter().flat_map(|t| t.data().iter().copied()))
                .collect();
            check("batchnorm", smooth, &analytic, &fd_gradient(loss, &flat0, h))?;
        }

        // softmax cross-entropy: the loss is the scalar itself
        {
            let logits0 = rand_vec(&mut rng, 3 * 4);
            let labels = [1usize, 0, 3];
            let loss = |lv: &[f64]| {
                softmax_cross_entropy(&Tensor::from_vec(&[3, 4], lv.to_vec()), &labels)
                    .unwrap()
                    .0
            };
            let (_, dlogits) =
                softmax_cross_entropy(&Tensor::from_vec(&[3, 4], logits0.clone()), &labels)
                    .map_err(|e| e.to_string())?;
            check("softmax-ce", smooth, dlogits.data(), &fd_gradient(loss, &logits0, h))?;
        }

        // kinked ops at a smaller step, with inputs held away from the kinks
        let hk = 1e-6;
        {
            let x0: Vec<f64> = (0..2 * 8)
                .map(|_| rng.gen_range(0.05..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
                .collect();
            let probe = rand_vec(&mut rng, 2 * 8);
            let loss = |xv: &[f64]| {
                relu(&Tensor::from_vec(&[2, 8], xv.to_vec()))
                    .data()
                    .iter()
                    .zip(&probe)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            };
            let analytic = relu_backward(
                &Tensor::from_vec(&[2, 8], x0.clone()),
                &Tensor::from_vec(&[2, 8], probe.clone()),
            );
            check("relu dx", kinked, analytic.data(), &fd_gradient(loss, &x0, hk))?;
        }
        {
            let x0 = well_separated(&mut rng, 2 * 12);
            let probe = rand_vec(&mut rng, 2 * 4);
            let loss = |xv: &[f64]| {
                maxpool1d(&Tensor::from_vec(&[2, 12], xv.to_vec()), 3)
                    .unwrap()
                    .y
                    .data()
                    .iter()
                    .zip(&probe)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            };
            let pooled = maxpool1d(&Tensor::from_vec(&[2, 12], x0.clone()), 3)
                .map_err(|e| e.to_string())?;
            let analytic =
                maxpool1d_backward(&pooled, &Tensor::from_vec(&[2, 4], probe.clone()), &[2, 12]);
            check("maxpool dx", kinked, analytic.data(), &fd_gradient(loss, &x0, hk))?;
        }
        {
            let x0 = well_separated(&mut rng, 3 * 9);
            let probe = rand_vec(&mut rng, 3);
            let loss = |xv: &[f64]| {
                adaptive_max_to_1(&Tensor::from_vec(&[3, 9], xv.to_vec()))
                    .unwrap()
                    .y
                    .data()
                    .iter()
                    .zip(&probe)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            };
            let pooled = adaptive_max_to_1(&Tensor::from_vec(&[3, 9], x0.clone()))
                .map_err(|e| e.to_string())?;
            let analytic =
                adaptive_max_to_1_backward(&pooled, &Tensor::from_vec(&[3], probe.clone()), &[3, 9]);
            check("adaptive max dx", kinked, analytic.data(), &fd_gradient(loss, &x0, hk))?;
        }

        // the whole network: every parameter of a reduced geometry against
        // finite differences of the batch loss
        {
            let config = ModelConfig {
                in_channels: 2,
                input_len: 21,
                conv1_channels: 3,
                conv2_channels: 4,
                kernel: 3,
                q_order: 3,
                pool_window: 7,
                temporal_features: 3,
                hidden: 5,
                classes: 3,
                taper_higher_orders: true,
            };
            let inputs: Vec<ModelInput> = (0..3)
                .map(|_| ModelInput {
                    image: Tensor::from_vec(&[2, 21], rand_vec(&mut rng, 2 * 21)),
                    temporal: rand_vec(&mut rng, 3),
                })
                .collect();
            let labels = [0usize, 2, 1];
            let base = Model::init(&config, 17).map_err(|e| e.to_string())?;
            let mut flat = Vec::new();
            base.write_params(&mut flat);

            let mut model = base.clone();
            let (logits, cache) = model.forward_train(&inputs).map_err(|e| e.to_string())?;
            let (_, dlogits) = softmax_cross_entropy(&logits, &labels).map_err(|e| e.to_string())?;
            let analytic = model.backward(&cache, &dlogits).map_err(|e| e.to_string())?.to_vec();

            let loss_at = |params: &[f64]| {
                let mut m = base.clone();
                m.read_params(params).unwrap();
                let (lg, _) = m.forward_train(&inputs).unwrap();
                softmax_cross_entropy(&lg, &labels).unwrap().0
            };
            let numeric = fd_gradient(loss_at, &flat, 1e-6);
            // layer biases feed straight into batch norm, so their true
            // gradient is exactly zero; the floor absorbs the difference
            // noise on those coordinates
            let worst = worst_rel(&analytic, &numeric, 1e-5);
            ensure(
                worst < 1e-3,
                format!("end-to-end: worst relative error {worst:e}, tolerance 1e-3"),
            )?;
        }

        within(start, Duration::from_secs(120), "the gradient checks")?;
        Ok(None)
    });
}

/// The wavelet shape written out directly, unit energy.
fn mexican_hat(t: f64) -> f64 {
    let norm = 2.0 / (3.0f64.sqrt() * std::f64::consts::PI.powf(0.25));
    norm * (1.0 - t * t) * (-0.5 * t * t).exp()
}

#[test]
fn criterion_5_wavelet_oracle() {
    gate(5, "wavelet transform", || {
        let start = Instant::now();
        let spec = WaveletSpec::default_for_fs(360.0).map_err(|e| e.to_string())?;
        ensure(
            spec.scales.len() == 9,
            format!("bank holds {} scales, want 9", spec.scales.len()),
        )?;

        // brute-force correlation against the full, untruncated wavelet
        let mut rng = ChaCha20Rng::seed_from_u64(505);
        for segment in 0..50 {
            let x: Vec<f64> = (0..230).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let scalogram = cwt(&x, &spec).map_err(|e| e.to_string())?;
            let mut worst = 0.0f64;
            let mut peak = 0.0f64;
            for (s, &scale) in spec.scales.iter().enumerate() {
                let inv = 1.0 / scale.sqrt();
                let row = scalogram.data.row(s);
                for b in 0..x.len() {
                    let mut oracle = 0.0;
                    for (t, &xv) in x.iter().enumerate() {
                        oracle += xv * mexican_hat((t as f64 - b as f64) / scale) * inv;
                    }
                    worst = worst.max((row[b] - oracle).abs());
                    peak = peak.max(oracle.abs());
                }
            }
            ensure(
                worst / peak < 1e-6,
                format!("segment {segment}: max error {worst:e} against peak {peak:e}"),
            )?;
        }

        // each scale's sampled, truncated kernel must peak on its band
        for (index, &scale) in spec.scales.iter().enumerate() {
            let target = 10.0 * (index + 1) as f64;
            let n = (6.0 * scale).ceil() as i64;
            let taps: Vec<f64> =
                (-n..=n).map(|d| mexican_hat(d as f64 / scale) / scale.sqrt()).collect();
            let center = n as usize;
            let mut best_hz = 0.0;
            let mut best_mag = -1.0;
            let mut hz = 0.5;
            while hz <= 150.0 {
                let w = 2.0 * std::f64::consts::PI * hz / 360.0;
                let mut acc = taps[center];
                for d in 1..=n {
                    acc += 2.0 * taps[center + d as usize] * (w * d as f64).cos();
                }
                let mag = acc.abs();
                if mag > best_mag {
                    best_mag = mag;
                    best_hz = hz;
                }
                hz += 0.01;
            }
            ensure(
                (best_hz - target).abs() <= 1.0,
                format!("scale {scale:.4}: spectral peak at {best_hz:.2} Hz, want {target} +/- 1"),
            )?;
        }

        within(start, Duration::from_secs(60), "the wavelet checks")?;
        Ok(None)
    });
}

/// A second, minimal reader for the annotation stream: enough to recover the
/// (sample, code) sequence while skipping all metadata words.
fn reference_annotation_stream(bytes: &[u8]) -> Result<Vec<(u64, u8)>, String> {
    let word = |at: usize| -> Result<u16, String> {
        bytes
            .get(at..at + 2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]))
            .ok_or_else(|| format!("stream ends mid-word at {at}"))
    };
    let mut at = 0usize;
    let mut time: i64 = 0;
    let mut pending: i64 = 0;
    let mut out = Vec::new();
    loop {
        let w = word(at)?;
        at += 2;
        let code = (w >> 10) as u8;
        let payload = (w & 0x3FF) as i64;
        match code {
            0 => return Ok(out),
            59 => {
                let high = word(at)? as u32;
                let low = word(at + 2)? as u32;
                at += 4;
                pending += ((high << 16) | low) as i32 as i64;
            }
            60..=62 => {}
            63 => at += (payload as usize) + (payload as usize & 1),
            1..=49 => {
                time += pending + payload;
                pending = 0;
                out.push((time as u64, code));
            }
            other => return Err(format!("unsupported code {other}")),
        }
    }
}

#[test]
fn criterion_6_archive_round_trip() {
    gate(6, "archive format round trip", || {
        let start = Instant::now();

        // a million random 12-bit pairs survive packing, plus an odd tail
        let mut rng = ChaCha20Rng::seed_from_u64(606);
        let samples: Vec<i32> = (0..2_000_000).map(|_| rng.gen_range(-2048..=2047)).collect();
        let packed = encode_format_212(&samples).map_err(|e| e.to_string())?;
        let unpacked = decode_format_212(&packed, samples.len()).map_err(|e| e.to_string())?;
        ensure(unpacked == samples, "even-length round trip lost samples")?;
        let odd = &samples[..999_999];
        let packed = encode_format_212(odd).map_err(|e| e.to_string())?;
        let unpacked = decode_format_212(&packed, odd.len()).map_err(|e| e.to_string())?;
        ensure(unpacked == odd, "odd-length round trip lost samples")?;

        // the annotation parser against the independent reader, on generated
        // records always, and on a real one when the archive is present
        let corpus = fresh_dir("c6-corpus")?;
        let synth = ecgonn::SynthConfig {
            records: 2,
            seconds: 30.0,
            fs: 360.0,
            seed: 99,
        };
        ecgonn::write_synth_dataset(&corpus, &synth).map_err(|e| e.to_string())?;
        let mut streams = vec![corpus.join("s00.atr"), corpus.join("s01.atr")];
        let real = archive_dir().map(|dir| dir.join("100.atr"));
        if let Some(path) = &real {
            streams.push(path.clone());
        }
        for path in &streams {
            let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let events = parse_annotations(&bytes).map_err(|e| e.to_string())?;
            let reference = reference_annotation_stream(&bytes)?;
            ensure(!events.is_empty(), format!("{} parsed empty", path.display()))?;
            let parsed: Vec<(u64, u8)> = events.iter().map(|e| (e.sample, e.code)).collect();
            ensure(
                parsed == reference,
                format!("{}: streams disagree", path.display()),
            )?;
            // spot-check the symbol mapping on the codes that appear
            for event in &events {
                let expected = match event.code {
                    1 => Some('N'),
                    5 => Some('V'),
                    8 => Some('A'),
                    9 => Some('S'),
                    28 => Some('+'),
                    _ => None,
                };
                if let Some(symbol) = expected {
                    ensure(
                        event.symbol == symbol,
                        format!("code {} decoded as {:?}", event.code, event.symbol),
                    )?;
                }
            }
        }

        within(start, Duration::from_secs(30), "the round trips")?;
        Ok(None)
    });
}

struct ChainRun {
    elapsed: Duration,
    macro_f1: f64,
    metrics_json: Vec<u8>,
    confusion_csv: Vec<u8>,
    history_csv: Vec<u8>,
}

/// The seeded offline pipeline, executed twice over the command-line binary.
/// Both end-to-end gates read from this one shared result.
fn chain() -> &'static Result<Vec<ChainRun>, String> {
    static CHAIN: OnceLock<Result<Vec<ChainRun>, String>> = OnceLock::new();
    CHAIN.get_or_init(|| {
        let root = fresh_dir("chain")?;
        let config = root.join("config.json");
        fs::write(
            &config,
            "{ \"split\": \"synthetic\", \"seed\": 42, \"synth\": { \"records\": 8, \"seconds\": 90.0 } }\n",
        )
        .map_err(|e| e.to_string())?;
        let config = config.to_str().unwrap();

        let mut runs = Vec::new();
        for repeat in 0..2 {
            let corpus = root.join(format!("corpus{repeat}"));
            let dataset = root.join(format!("dataset{repeat}"));
            let run = root.join(format!("run{repeat}"));
            let eval = root.join(format!("eval{repeat}"));
            let started = Instant::now();
            run_ok(&["synth", "--config", config, "--out", corpus.to_str().unwrap()])?;
            run_ok(&[
                "preprocess",
                "--config",
                config,
                "--data-dir",
                corpus.to_str().unwrap(),
                "--out",
                dataset.to_str().unwrap(),
            ])?;
            run_ok(&[
                "train",
                "--config",
                config,
                "--data-dir",
                dataset.to_str().unwrap(),
                "--out",
                run.to_str().unwrap(),
            ])?;
            run_ok(&[
                "evaluate",
                "--checkpoint",
                run.join("model.json").to_str().unwrap(),
                "--data-dir",
                dataset.to_str().unwrap(),
                "--out",
                eval.to_str().unwrap(),
            ])?;
            let elapsed = started.elapsed();

            let metrics_json = fs::read(eval.join("metrics.json")).map_err(|e| e.to_string())?;
            let metrics: serde_json::Value =
                serde_json::from_slice(&metrics_json).map_err(|e| e.to_string())?;
            let macro_f1 = metrics["macro_f1"]
                .as_f64()
                .ok_or("metrics.json has no numeric macro_f1")?;
            runs.push(ChainRun {
                elapsed,
                macro_f1,
                metrics_json,
                confusion_csv: fs::read(eval.join("confusion.csv")).map_err(|e| e.to_string())?,
                history_csv: fs::read(run.join("metrics.csv")).map_err(|e| e.to_string())?,
            });
        }
        Ok(runs)
    })
}

#[test]
fn criterion_7_synthetic_end_to_end() {
    gate(7, "synthetic end to end", || {
        let runs = chain().as_ref().map_err(Clone::clone)?;
        let first = &runs[0];
        ensure(
            first.elapsed <= Duration::from_secs(300),
            format!("pipeline took {:.1?}, budget 300s", first.elapsed),
        )?;
        ensure(
            first.macro_f1 >= 0.95,
            format!("held-out macro-F1 {:.4}, want at least 0.95", first.macro_f1),
        )?;
        Ok(None)
    });
}

#[test]
fn criterion_8_determinism() {
    gate(8, "seeded determinism", || {
        let runs = chain().as_ref().map_err(Clone::clone)?;
        let (a, b) = (&runs[0], &runs[1]);
        ensure(
            a.metrics_json == b.metrics_json,
            "metrics.json differs between identically seeded runs",
        )?;
        ensure(
            a.confusion_csv == b.confusion_csv,
            "confusion.csv differs between identically seeded runs",
        )?;
        ensure(
            a.history_csv == b.history_csv,
            "training history differs between identically seeded runs",
        )?;
        Ok(None)
    });
}

#[test]
fn criterion_9_archive_reproduction() {
    gate(9, "archive reproduction", || {
        let Some(archive) = archive_dir() else {
            return Ok(Some(
                "archive corpus not found; point ECGONN_DATA_DIR at it to run".into(),
            ));
        };

        // class totals across the usable records
        let output = run_ok(&["ingest", "--data-dir", archive.to_str().unwrap()])?;
        let manifest: serde_json::Value =
            serde_json::from_slice(&output.stdout).map_err(|e| e.to_string())?;
        let records = manifest["records"]
            .as_object()
            .ok_or("ingest manifest has no records map")?;
        ensure(
            records.len() == 44,
            format!("{} usable records, want 44", records.len()),
        )?;
        let expected = [89_963.0, 2_775.0, 7_002.0];
        for (i, want) in expected.into_iter().enumerate() {
            let got = manifest["totals"][i]
                .as_f64()
                .ok_or("ingest manifest has no totals")?;
            ensure(
                (got - want).abs() <= 0.005 * want,
                format!("class {i} count {got}, want {want} within 0.5%"),
            )?;
        }

        // three seeded end-to-end runs on the patient-disjoint split
        let root = fresh_dir("c9")?;
        let mut reached = 0;
        let mut details = Vec::new();
        for seed in [1u64, 2, 3] {
            let config = root.join(format!("config{seed}.json"));
            fs::write(&config, format!("{{ \"seed\": {seed} }}\n")).map_err(|e| e.to_string())?;
            let dataset = root.join(format!("dataset{seed}"));
            let run = root.join(format!("run{seed}"));
            let eval = root.join(format!("eval{seed}"));
            run_ok(&[
                "preprocess",
                "--config",
                config.to_str().unwrap(),
                "--data-dir",
                archive.to_str().unwrap(),
                "--out",
                dataset.to_str().unwrap(),
            ])?;
            run_ok(&[
                "train",
                "--config",
                config.to_str().unwrap(),
                "--data-dir",
                dataset.to_str().unwrap(),
                "--out",
                run.to_str().unwrap(),
            ])?;
            run_ok(&[
                "evaluate",
                "--checkpoint",
                run.join("model.json").to_str().unwrap(),
                "--data-dir",
                dataset.to_str().unwrap(),
                "--out",
                eval.to_str().unwrap(),
            ])?;
            let metrics: serde_json::Value = serde_json::from_slice(
                &fs::read(eval.join("metrics.json")).map_err(|e| e.to_string())?,
            )
            .map_err(|e| e.to_string())?;
            let accuracy = metrics["metrics"]["accuracy"].as_f64().unwrap_or(0.0);
            let f1_s = metrics["metrics"]["per_class"][1]["f1"].as_f64().unwrap_or(0.0);
            let f1_v = metrics["metrics"]["per_class"][2]["f1"].as_f64().unwrap_or(0.0);
            if accuracy >= 0.96 && f1_v >= 0.90 && f1_s >= 0.70 {
                reached += 1;
            }
            details.push(format!(
                "seed {seed}: acc {accuracy:.4}, F1(V) {f1_v:.4}, F1(S) {f1_s:.4}"
            ));
        }
        ensure(
            reached >= 2,
            format!("only {reached} of 3 seeds reached the targets ({})", details.join("; ")),
        )?;
        Ok(None)
    });
}
