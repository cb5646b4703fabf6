//! Analytic gradients versus central finite differences across every
//! combination of algebra, RBF kind, and normalization scheme.

use clkan::network::{ForwardCache, Model, ModelConfig, NormKind, RbfKind};
use clkan::training::mse_mae;
use clkan::{GridSpec, Signature};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// MSE loss of the model in training mode on a fixed batch.
fn loss(model: &mut Model, inputs: &[f64], targets: &[f64], dim: usize) -> f64 {
    let mut cache = ForwardCache::default();
    let out = model.forward_train(inputs, &mut cache).unwrap();
    mse_mae(&out, targets, dim).unwrap().0
}

fn check_gradients(sig: Signature, rbf: RbfKind, norm: NormKind) {
    let config = ModelConfig {
        signature: sig,
        widths: vec![1, 2, 1],
        grid: GridSpec::full(3),
        rbf,
        norm,
    };
    let mut model = Model::new(config, 42).unwrap();
    let dim = model.algebra().dim();
    let batch = 5;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let inputs: Vec<f64> = (0..batch * dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let targets: Vec<f64> = (0..batch * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();

    // analytic gradients
    let mut cache = ForwardCache::default();
    let out = model.forward_train(&inputs, &mut cache).unwrap();
    let scale = 2.0 / batch as f64;
    let grad_out: Vec<f64> = out
        .iter()
        .zip(&targets)
        .map(|(o, t)| scale * (o - t))
        .collect();
    let mut grads = vec![0.0; model.param_count()];
    model.backward(&cache, &grad_out, &mut grads);

    // central finite differences over every parameter
    let h = 1e-6;
    let mut max_rel = 0.0f64;
    let mut worst = 0usize;
    for i in 0..model.param_count() {
        let orig = model.params()[i];
        model.params_mut()[i] = orig + h;
        let lp = loss(&mut model, &inputs, &targets, dim);
        model.params_mut()[i] = orig - h;
        let lm = loss(&mut model, &inputs, &targets, dim);
        model.params_mut()[i] = orig;
        let fd = (lp - lm) / (2.0 * h);
        let diff = (grads[i] - fd).abs();
        if diff < 1e-8 {
            // below the resolution of central differences at h = 1e-6
            continue;
        }
        let denom = grads[i].abs().max(fd.abs()).max(1e-6);
        let rel = diff / denom;
        if rel > max_rel {
            max_rel = rel;
            worst = i;
        }
    }
    assert!(
        max_rel <= 1e-4,
        "{sig:?} {rbf:?} {norm:?}: max rel err {max_rel:.3e} at param {worst} \
         (analytic {}, fd mismatch)",
        grads[worst]
    );
}

#[test]
fn gradients_match_finite_differences_in_every_configuration() {
    let signatures = [
        Signature::new(0, 1, 0),
        Signature::new(0, 2, 0),
        Signature::new(1, 0, 1),
    ];
    let norms = [
        NormKind::None,
        NormKind::NodeWise,
        NormKind::DimWise,
        NormKind::ComponentWise,
    ];
    for sig in signatures {
        for rbf in [RbfKind::Naive, RbfKind::Clifford] {
            for norm in norms {
                check_gradients(sig, rbf, norm);
            }
        }
    }
}

#[test]
fn gradients_match_on_a_deeper_sobol_model() {
    // two hidden layers and a Sobol grid exercise the multi-layer backward
    let config = ModelConfig {
        signature: Signature::new(0, 1, 0),
        widths: vec![2, 3, 2, 1],
        grid: GridSpec::sobol(2, 11),
        rbf: RbfKind::Clifford,
        norm: NormKind::NodeWise,
    };
    let mut model = Model::new(config, 1).unwrap();
    let dim = model.algebra().dim();
    let (batch, arity) = (4, 2);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inputs: Vec<f64> = (0..batch * arity * dim)
        .map(|_| rng.gen_range(-1.5..1.5))
        .collect();
    let targets: Vec<f64> = (0..batch * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let mut cache = ForwardCache::default();
    let out = model.forward_train(&inputs, &mut cache).unwrap();
    let scale = 2.0 / batch as f64;
    let grad_out: Vec<f64> = out
        .iter()
        .zip(&targets)
        .map(|(o, t)| scale * (o - t))
        .collect();
    let mut grads = vec![0.0; model.param_count()];
    model.backward(&cache, &grad_out, &mut grads);

    let h = 1e-6;
    for i in (0..model.param_count()).step_by(3) {
        let orig = model.params()[i];
        model.params_mut()[i] = orig + h;
        let lp = loss(&mut model, &inputs, &targets, dim);
        model.params_mut()[i] = orig - h;
        let lm = loss(&mut model, &inputs, &targets, dim);
        model.params_mut()[i] = orig;
        let fd = (lp - lm) / (2.0 * h);
        let diff = (grads[i] - fd).abs();
        let denom = grads[i].abs().max(fd.abs()).max(1e-6);
        assert!(
            diff < 1e-8 || diff / denom <= 1e-4,
            "param {i}: analytic {} vs fd {fd}",
            grads[i]
        );
    }
}
