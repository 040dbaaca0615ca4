use pifnet_core::model::{patchify, Head, Mode, ModelConfig, PifNet, PifNetParams};
use pifnet_core::numerics::outer_acc;
use pifnet_core::rng::{seeded, Rng};

fn config(lookback: usize, patch_len: usize, stride: usize, hidden: usize, dims: usize) -> ModelConfig {
    ModelConfig {
        lookback,
        horizon: 1,
        patch_len,
        stride,
        hidden,
        layers: 2,
        dropout: 0.2,
        dims,
        head: Head::Linear,
        gating: true,
        residual: true,
    }
}

fn random_window(cfg: &ModelConfig, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    (0..cfg.lookback * cfg.dims).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn shared_encoder_gives_identical_states_for_identical_patches() {
    let cfg = config(24, 4, 2, 16, 2);
    let net = PifNet::new(cfg.clone(), 3).unwrap();
    let mut x = random_window(&cfg, 1);
    // patch 0 covers rows 0..4, patch 4 covers rows 8..12
    let (head, tail) = x.split_at_mut(8 * cfg.dims);
    tail[..4 * cfg.dims].copy_from_slice(&head[..4 * cfg.dims]);
    let tr = net.forward(&x, Mode::Eval).unwrap();
    assert_eq!(tr.h.len(), 11);
    assert_eq!(tr.h[0], tr.h[4]);
    assert_ne!(tr.h[0], tr.h[1]);
}

#[test]
fn residual_branch_cases() {
    let cfg = config(12, 4, 4, 64, 3);
    let params = PifNetParams::init(&cfg, 0);
    assert_eq!(params.w_res.shape(), &[64, 12]);

    let mut p = params.clone();
    p.w_res.fill(0.0);
    p.b_res.fill(0.0);
    let net = PifNet::from_params(cfg.clone(), p).unwrap();
    let tr = net.forward(&random_window(&cfg, 2), Mode::Eval).unwrap();
    assert_eq!(tr.u, tr.h);

    let mut p = params;
    for g in &mut p.gru {
        g.w.fill(0.0);
        g.u.fill(0.0);
        g.b.fill(0.0);
    }
    let net = PifNet::from_params(cfg.clone(), p).unwrap();
    let x = random_window(&cfg, 3);
    let tr = net.forward(&x, Mode::Eval).unwrap();
    let patches = patchify(&x, cfg.dims, cfg.patch_len, cfg.stride).unwrap();
    for i in 0..patches.count {
        assert!(tr.h[i].iter().all(|&v| v == 0.0));
        let flat = patches.patch(i);
        for k in 0..cfg.hidden {
            let want: f64 = net.params.b_res.data()[k] + net.params.w_res.row(k).iter().zip(flat).map(|(a, b)| a * b).sum::<f64>();
            assert!((tr.u[i][k] - want).abs() < 1e-14);
        }
    }
}

#[test]
fn gate_hand_case_three_to_one() {
    // two patches, zero encoder, u_i[0] = first value of patch i
    let cfg = ModelConfig {
        dropout: 0.0,
        ..config(8, 4, 4, 4, 1)
    };
    let mut p = PifNetParams::zeros(&cfg);
    p.w_res.data_mut()[0] = 1.0;
    p.w_g.data_mut()[0] = 1.0;
    p.b_g.data_mut()[0] = -0.4;
    p.head_w.data_mut()[0] = 1.0;
    let net = PifNet::from_params(cfg, p).unwrap();
    let mut x = vec![0.0; 8];
    x[0] = 3f64.ln();
    let tr = net.forward(&x, Mode::Eval).unwrap();
    assert!((tr.e[0] - (3f64.ln() - 0.4)).abs() < 1e-15);
    assert!((tr.alpha[0] - 0.75).abs() < 1e-15);
    assert!((tr.alpha[1] - 0.25).abs() < 1e-15);
    assert!((tr.c[0] - 0.75 * 3f64.ln()).abs() < 1e-15);
    assert!((tr.y_hat[0] - 0.75 * 3f64.ln()).abs() < 1e-15);
}

#[test]
fn uniform_gate_cases() {
    let cfg = config(24, 4, 2, 8, 1);
    let x = vec![0.5; 24];
    // constant input gives identical patches, hence identical u_i
    let net = PifNet::new(cfg.clone(), 1).unwrap();
    let tr = net.forward(&x, Mode::Eval).unwrap();
    for (a, u) in tr.alpha.iter().zip(&tr.u) {
        assert!((a - 1.0 / 11.0).abs() < 1e-15);
        assert_eq!(u, &tr.u[0]);
    }

    let mut zero_gate = net.clone();
    zero_gate.params.w_g.fill(0.0);
    let tr = zero_gate.forward(&random_window(&cfg, 5), Mode::Eval).unwrap();
    assert!(tr.alpha.iter().all(|&a| (a - 1.0 / 11.0).abs() < 1e-15));

    let pooled = PifNet::from_params(
        ModelConfig {
            gating: false,
            ..cfg.clone()
        },
        net.params.clone(),
    )
    .unwrap();
    let tr = pooled.forward(&random_window(&cfg, 6), Mode::Eval).unwrap();
    assert!(tr.alpha.iter().all(|&a| a == 1.0 / 11.0));
}

#[test]
fn frozen_gate_matches_average_pooling_gradient() {
    let cfg = ModelConfig {
        dropout: 0.0,
        ..config(12, 4, 4, 8, 3)
    };
    let mut net = PifNet::new(cfg.clone(), 8).unwrap();
    net.params.w_g.fill(0.0);
    let x = random_window(&cfg, 9);
    let tr = net.forward(&x, Mode::Eval).unwrap();
    let dy = [0.7];
    let mut grads = net.params.zeros_like();
    net.backward(&tr, &dy, &mut grads).unwrap();

    // dL/dC = head_Wᵀ dy, dL/dW_res = (1/P) Σ_i dC ⊗ flat_i
    let dc: Vec<f64> = net.params.head_w.data().iter().map(|w| w * dy[0]).collect();
    let patches = patchify(&x, cfg.dims, cfg.patch_len, cfg.stride).unwrap();
    let mut expected = vec![0.0; net.params.w_res.len()];
    let scaled: Vec<f64> = dc.iter().map(|v| v / patches.count as f64).collect();
    for i in 0..patches.count {
        outer_acc(&mut expected, &scaled, patches.patch(i));
    }
    for (a, b) in grads.w_res.data().iter().zip(&expected) {
        assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
    }
}

#[test]
fn zero_upstream_gradient_gives_zero_gradients() {
    for head in [Head::Linear, Head::DecoderGru] {
        let cfg = ModelConfig {
            head,
            ..config(12, 4, 2, 8, 2)
        };
        let net = PifNet::new(cfg.clone(), 4).unwrap();
        let tr = net.forward(&random_window(&cfg, 1), Mode::Train { seed: 3 }).unwrap();
        let mut g = net.params.zeros_like();
        net.backward(&tr, &[0.0], &mut g).unwrap();
        assert!(g.flatten().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn train_mode_dropout_is_seeded() {
    let cfg = config(24, 4, 2, 16, 1);
    let net = PifNet::new(cfg.clone(), 0).unwrap();
    let x = random_window(&cfg, 0);
    let a = net.forward(&x, Mode::Train { seed: 1 }).unwrap().y_hat;
    let b = net.forward(&x, Mode::Train { seed: 1 }).unwrap().y_hat;
    let c = net.forward(&x, Mode::Train { seed: 2 }).unwrap().y_hat;
    let e = net.forward(&x, Mode::Eval).unwrap().y_hat;
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_ne!(a, e);
}

#[test]
fn alpha_is_a_distribution_across_random_inputs() {
    let cfg = config(48, 6, 3, 8, 2);
    let net = PifNet::new(cfg.clone(), 12).unwrap();
    for s in 0..50 {
        let tr = net.forward(&random_window(&cfg, s), Mode::Eval).unwrap();
        assert!((tr.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(tr.alpha.iter().all(|&a| a > 0.0 && a < 1.0));
    }
}
