use super::check::{central_diff, max_rel_err};
use super::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn rand_vec(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Reference cross-correlation written as the direct quadruple loop with an
/// explicit bounds test, sharing no index arithmetic with the production path.
fn conv1d_naive(x: &Tensor, w: &Tensor, pad: usize) -> Tensor {
    let (c_in, l) = x.dims2("naive").unwrap();
    let (c_out, _, k) = w.dims3("naive").unwrap();
    let l_out = l + 2 * pad - k + 1;
    let mut out = Tensor::zeros(&[c_out, l_out]);
    for o in 0..c_out {
        for m in 0..l_out {
            let mut acc = 0.0;
            for i in 0..c_in {
                for r in 0..k {
                    let t = m as isize + r as isize - pad as isize;
                    if t >= 0 && (t as usize) < l {
                        acc += w.data()[(o * c_in + i) * k + r] * x.data()[i * l + t as usize];
                    }
                }
            }
            out.data_mut()[o * l_out + m] = acc;
        }
    }
    out
}

#[test]
fn conv1d_identity_kernel_passes_input_through() {
    let x = Tensor::from_vec(&[1, 6], vec![0.5, -1.0, 2.0, 0.0, 3.0, -0.25]);
    // K=3 kernel with only the center tap set, same padding
    let w = Tensor::from_vec(&[1, 1, 3], vec![0.0, 1.0, 0.0]);
    let y = conv1d(&x, &w, 1).unwrap();
    assert_eq!(y.shape(), &[1, 6]);
    assert_eq!(y.data(), x.data());
}

#[test]
fn conv1d_impulse_recovers_kernel() {
    let mut x = Tensor::zeros(&[1, 9]);
    x.data_mut()[4] = 1.0;
    let w = Tensor::from_vec(&[1, 1, 3], vec![0.25, -0.5, 0.75]);
    let y = conv1d(&x, &w, 1).unwrap();
    // cross-correlation slides the kernel reversed relative to convolution,
    // so the impulse reads the taps back in reverse order around its position
    assert_eq!(&y.data()[3..6], &[0.75, -0.5, 0.25]);
    assert!(y.data()[..3].iter().all(|&v| v == 0.0));
    assert!(y.data()[6..].iter().all(|&v| v == 0.0));
}

#[test]
fn conv1d_matches_naive_reference() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for &(c_in, l, c_out, k, pad) in
        &[(1, 5, 1, 3, 1), (2, 7, 3, 3, 1), (3, 12, 2, 5, 2), (2, 9, 4, 1, 0), (1, 4, 1, 4, 3)]
    {
        let x = Tensor::from_vec(&[c_in, l], rand_vec(&mut rng, c_in * l));
        let w = Tensor::from_vec(&[c_out, c_in, k], rand_vec(&mut rng, c_out * c_in * k));
        let got = conv1d(&x, &w, pad).unwrap();
        let want = conv1d_naive(&x, &w, pad);
        assert_eq!(got.shape(), want.shape());
        for (a, b) in got.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
        }
    }
}

#[test]
fn conv1d_rejects_bad_shapes() {
    let x = Tensor::from_vec(&[2, 5], vec![0.0; 10]);
    let w = Tensor::from_vec(&[1, 3, 3], vec![0.0; 9]);
    assert!(matches!(conv1d(&x, &w, 1), Err(NnError::ShapeMismatch { .. })));
    let w_long = Tensor::from_vec(&[1, 2, 9], vec![0.0; 18]);
    assert!(conv1d(&x, &w_long, 1).is_err());
}

#[test]
fn conv1d_gradients_match_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(23);
    let (c_in, l, c_out, k, pad) = (2, 7, 3, 3, 1);
    let x0 = rand_vec(&mut rng, c_in * l);
    let w0 = rand_vec(&mut rng, c_out * c_in * k);
    // probe weights make the scalar loss sensitive to every output position
    let probe = rand_vec(&mut rng, c_out * l);

    let loss = |xv: &[f64], wv: &[f64]| -> f64 {
        let x = Tensor::from_vec(&[c_in, l], xv.to_vec());
        let w = Tensor::from_vec(&[c_out, c_in, k], wv.to_vec());
        let y = conv1d(&x, &w, pad).unwrap();
        y.data().iter().zip(&probe).map(|(a, b)| a * b).sum()
    };

    let x = Tensor::from_vec(&[c_in, l], x0.clone());
    let w = Tensor::from_vec(&[c_out, c_in, k], w0.clone());
    let grad_out = Tensor::from_vec(&[c_out, l], probe.clone());
    let grads = conv1d_backward(&x, &w, &grad_out, pad).unwrap();

    let fd_w = central_diff(|wv| loss(&x0, wv), &w0, 1e-6);
    let fd_x = central_diff(|xv| loss(xv, &w0), &x0, 1e-6);
    assert!(max_rel_err(grads.dw.data(), &fd_w) < 1e-6);
    assert!(max_rel_err(grads.dx.data(), &fd_x) < 1e-6);
}

#[test]
fn maxpool_shapes_and_values() {
    let x = Tensor::from_vec(&[1, 7], vec![1.0, 3.0, 2.0, 5.0, 4.0, 0.0, -1.0]);
    let p = maxpool1d(&x, 3).unwrap();
    assert_eq!(p.y.shape(), &[1, 2]);
    assert_eq!(p.y.data(), &[3.0, 5.0]);
    assert_eq!(p.argmax, &[1, 3]);

    // 230 samples pooled by 7 leaves 32, remainder 6 dropped
    let long = Tensor::zeros(&[4, 230]);
    let p = maxpool1d(&long, 7).unwrap();
    assert_eq!(p.y.shape(), &[4, 32]);
}

#[test]
fn maxpool_ties_route_to_first_position() {
    let x = Tensor::from_vec(&[1, 4], vec![2.0, 2.0, 1.0, 2.0]);
    let p = maxpool1d(&x, 4).unwrap();
    assert_eq!(p.argmax, &[0]);
    let g = Tensor::from_vec(&[1, 1], vec![1.5]);
    let dx = maxpool1d_backward(&p, &g, &[1, 4]);
    assert_eq!(dx.data(), &[1.5, 0.0, 0.0, 0.0]);
}

#[test]
fn maxpool_gradient_matches_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(31);
    let x0 = rand_vec(&mut rng, 2 * 9);
    let probe = rand_vec(&mut rng, 2 * 3);
    let loss = |xv: &[f64]| -> f64 {
        let x = Tensor::from_vec(&[2, 9], xv.to_vec());
        let p = maxpool1d(&x, 3).unwrap();
        p.y.data().iter().zip(&probe).map(|(a, b)| a * b).sum()
    };
    let x = Tensor::from_vec(&[2, 9], x0.clone());
    let p = maxpool1d(&x, 3).unwrap();
    let g = Tensor::from_vec(&[2, 3], probe.clone());
    let dx = maxpool1d_backward(&p, &g, &[2, 9]);
    let fd = central_diff(loss, &x0, 1e-6);
    assert!(max_rel_err(dx.data(), &fd) < 1e-6);
}

#[test]
fn adaptive_max_takes_global_peak_per_channel() {
    let x = Tensor::from_vec(&[2, 4], vec![0.1, 0.9, 0.3, 0.2, -5.0, -1.0, -2.0, -1.5]);
    let p = adaptive_max_to_1(&x).unwrap();
    assert_eq!(p.y.shape(), &[2]);
    assert_eq!(p.y.data(), &[0.9, -1.0]);
    let g = Tensor::from_vec(&[2], vec![1.0, 2.0]);
    let dx = adaptive_max_to_1_backward(&p, &g, &[2, 4]);
    assert_eq!(dx.data(), &[0.0, 1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
}

#[test]
fn dense_gradients_match_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(41);
    let (m, n) = (4, 6);
    let x0 = rand_vec(&mut rng, n);
    let w0 = rand_vec(&mut rng, m * n);
    let b0 = rand_vec(&mut rng, m);
    let probe = rand_vec(&mut rng, m);
    let loss = |xv: &[f64], wv: &[f64], bv: &[f64]| -> f64 {
        let y = dense(
            &Tensor::from_vec(&[n], xv.to_vec()),
            &Tensor::from_vec(&[m, n], wv.to_vec()),
            &Tensor::from_vec(&[m], bv.to_vec()),
        )
        .unwrap();
        y.data().iter().zip(&probe).map(|(a, b)| a * b).sum()
    };
    let grads = dense_backward(
        &Tensor::from_vec(&[n], x0.clone()),
        &Tensor::from_vec(&[m, n], w0.clone()),
        &Tensor::from_vec(&[m], probe.clone()),
    )
    .unwrap();
    let fd_x = central_diff(|v| loss(v, &w0, &b0), &x0, 1e-6);
    let fd_w = central_diff(|v| loss(&x0, v, &b0), &w0, 1e-6);
    let fd_b = central_diff(|v| loss(&x0, &w0, v), &b0, 1e-6);
    assert!(max_rel_err(grads.dx.data(), &fd_x) < 1e-6);
    assert!(max_rel_err(grads.dw.data(), &fd_w) < 1e-6);
    assert!(max_rel_err(grads.db.data(), &fd_b) < 1e-6);
}

#[test]
fn activations_basic_values_and_gradients() {
    let x = Tensor::from_vec(&[1, 4], vec![-2.0, 0.0, 0.5, 3.0]);
    let r = relu(&x);
    assert_eq!(r.data(), &[0.0, 0.0, 0.5, 3.0]);
    let g = Tensor::from_vec(&[1, 4], vec![1.0, 1.0, 1.0, 1.0]);
    let dr = relu_backward(&x, &g);
    assert_eq!(dr.data(), &[0.0, 0.0, 1.0, 1.0]);

    let t = tanh_forward(&x);
    assert!((t.data()[3] - 3.0f64.tanh()).abs() < 1e-15);

    let mut rng = ChaCha20Rng::seed_from_u64(53);
    let x0 = rand_vec(&mut rng, 8);
    let probe = rand_vec(&mut rng, 8);
    let loss = |xv: &[f64]| -> f64 {
        let y = tanh_forward(&Tensor::from_vec(&[1, 8], xv.to_vec()));
        y.data().iter().zip(&probe).map(|(a, b)| a * b).sum()
    };
    let y = tanh_forward(&Tensor::from_vec(&[1, 8], x0.clone()));
    let dt = tanh_backward(&y, &Tensor::from_vec(&[1, 8], probe.clone()));
    let fd = central_diff(loss, &x0, 1e-6);
    assert!(max_rel_err(dt.data(), &fd) < 1e-6);
}

#[test]
fn batchnorm_normalizes_batch_statistics() {
    let mut rng = ChaCha20Rng::seed_from_u64(61);
    let (c, l, batch) = (3, 10, 8);
    let xs: Vec<Tensor> = (0..batch)
        .map(|_| {
            let v: Vec<f64> = (0..c * l).map(|i| rng.gen_range(-1.0..1.0) + i as f64 * 0.1).collect();
            Tensor::from_vec(&[c, l], v)
        })
        .collect();
    let mut state = BatchNormState::new(c);
    let (ys, _) = batchnorm_train(&xs, &mut state).unwrap();
    let n = (batch * l) as f64;
    for ch in 0..c {
        let mut mean = 0.0;
        let mut var = 0.0;
        for y in &ys {
            for &v in y.row(ch) {
                mean += v;
            }
        }
        mean /= n;
        for y in &ys {
            for &v in y.row(ch) {
                var += (v - mean) * (v - mean);
            }
        }
        var /= n;
        assert!(mean.abs() < 1e-10, "channel {} mean {}", ch, mean);
        // epsilon pulls the normalized variance slightly below one
        assert!((var - 1.0).abs() < 1e-3, "channel {} var {}", ch, var);
    }
}

#[test]
fn batchnorm_running_stats_follow_momentum_blend() {
    let xs = vec![
        Tensor::from_vec(&[1, 2], vec![1.0, 3.0]),
        Tensor::from_vec(&[1, 2], vec![5.0, 7.0]),
    ];
    let mut state = BatchNormState::new(1);
    batchnorm_train(&xs, &mut state).unwrap();
    // batch mean 4, biased var 5, unbiased var 20/3
    assert!((state.running_mean[0] - 0.1 * 4.0).abs() < 1e-12);
    assert!((state.running_var[0] - (0.9 + 0.1 * 20.0 / 3.0)).abs() < 1e-12);
}

#[test]
fn batchnorm_eval_uses_running_stats() {
    let mut state = BatchNormState::new(1);
    state.running_mean[0] = 2.0;
    state.running_var[0] = 4.0;
    state.gamma[0] = 3.0;
    state.beta[0] = -1.0;
    let x = Tensor::from_vec(&[1, 2], vec![2.0, 6.0]);
    let y = batchnorm_eval(&x, &state).unwrap();
    assert!((y.data()[0] - -1.0).abs() < 1e-9);
    assert!((y.data()[1] - (3.0 * 4.0 / (4.0f64 + 1e-5).sqrt() - 1.0)).abs() < 1e-9);
}

#[test]
fn batchnorm_rejects_batch_of_one() {
    let xs = vec![Tensor::zeros(&[2, 4])];
    let mut state = BatchNormState::new(2);
    assert!(matches!(
        batchnorm_train(&xs, &mut state),
        Err(NnError::BatchTooSmall { .. })
    ));
}

#[test]
fn batchnorm_gradients_match_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(71);
    let (c, l, batch) = (2, 5, 4);
    let x0 = rand_vec(&mut rng, batch * c * l);
    let probe = rand_vec(&mut rng, batch * c * l);
    let gamma0 = rand_vec(&mut rng, c);
    let beta0 = rand_vec(&mut rng, c);

    let split = |flat: &[f64]| -> Vec<Tensor> {
        (0..batch)
            .map(|b| Tensor::from_vec(&[c, l], flat[b * c * l..(b + 1) * c * l].to_vec()))
            .collect()
    };
    let loss = |xv: &[f64], gv: &[f64], bv: &[f64]| -> f64 {
        let mut state = BatchNormState::new(c);
        state.gamma = gv.to_vec();
        state.beta = bv.to_vec();
        let (ys, _) = batchnorm_train(&split(xv), &mut state).unwrap();
        ys.iter()
            .enumerate()
            .map(|(b, y)| {
                y.data()
                    .iter()
                    .zip(&probe[b * c * l..(b + 1) * c * l])
                    .map(|(a, p)| a * p)
                    .sum::<f64>()
            })
            .sum()
    };

    let mut state = BatchNormState::new(c);
    state.gamma = gamma0.clone();
    state.beta = beta0.clone();
    let (_, cache) = batchnorm_train(&split(&x0), &mut state).unwrap();
    let grad_ys = split(&probe);
    let (dgamma, dbeta, dxs) = batchnorm_backward(&cache, &state, &grad_ys).unwrap();

    let fd_g = central_diff(|v| loss(&x0, v, &beta0), &gamma0, 1e-6);
    let fd_b = central_diff(|v| loss(&x0, &gamma0, v), &beta0, 1e-6);
    let fd_x = central_diff(|v| loss(v, &gamma0, &beta0), &x0, 1e-6);
    assert!(max_rel_err(&dgamma, &fd_g) < 1e-5);
    assert!(max_rel_err(&dbeta, &fd_b) < 1e-5);
    let dx_flat: Vec<f64> = dxs.iter().flat_map(|t| t.data().to_vec()).collect();
    assert!(max_rel_err(&dx_flat, &fd_x) < 1e-4);
}

#[test]
fn cross_entropy_of_uniform_logits_is_ln_classes() {
    let logits = Tensor::from_vec(&[2, 3], vec![0.7; 6]);
    let (loss, _) = softmax_cross_entropy(&logits, &[0, 2]).unwrap();
    assert!((loss - 2.0 * 3.0f64.ln()).abs() < 1e-12);
}

#[test]
fn cross_entropy_gradient_is_softmax_minus_onehot() {
    let logits = Tensor::from_vec(&[1, 3], vec![1.0, 2.0, 3.0]);
    let (_, grad) = softmax_cross_entropy(&logits, &[1]).unwrap();
    let z: Vec<f64> = [1.0f64, 2.0, 3.0].iter().map(|v| v.exp()).collect();
    let s: f64 = z.iter().sum();
    assert!((grad.data()[0] - z[0] / s).abs() < 1e-12);
    assert!((grad.data()[1] - (z[1] / s - 1.0)).abs() < 1e-12);
    assert!((grad.data()[2] - z[2] / s).abs() < 1e-12);
    // gradient rows sum to zero
    assert!(grad.data().iter().sum::<f64>().abs() < 1e-12);
}

#[test]
fn cross_entropy_is_stable_for_large_logits() {
    let logits = Tensor::from_vec(&[1, 3], vec![1000.0, 0.0, -1000.0]);
    let (loss, grad) = softmax_cross_entropy(&logits, &[0]).unwrap();
    assert!(loss.is_finite());
    assert!(loss < 1e-12);
    assert!(grad.all_finite());
}

#[test]
fn cross_entropy_gradient_matches_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(83);
    let x0 = rand_vec(&mut rng, 4 * 3);
    let labels = [0usize, 2, 1, 1];
    let loss = |v: &[f64]| -> f64 {
        softmax_cross_entropy(&Tensor::from_vec(&[4, 3], v.to_vec()), &labels)
            .unwrap()
            .0
    };
    let (_, grad) = softmax_cross_entropy(&Tensor::from_vec(&[4, 3], x0.clone()), &labels).unwrap();
    let fd = central_diff(loss, &x0, 1e-6);
    assert!(max_rel_err(grad.data(), &fd) < 1e-6);
}
