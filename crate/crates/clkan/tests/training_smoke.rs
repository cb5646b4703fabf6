//! End-to-end sanity of the training loop: losses fall, the learning rate
//! never rises, and cross-validation produces the promised fold structure.

use clkan::data::{gen_formula, Task};
use clkan::network::{ModelConfig, NormKind, RbfKind};
use clkan::training::{cross_validate, TrainConfig};
use clkan::{GridSpec, Signature};

fn square_config() -> ModelConfig {
    ModelConfig {
        signature: Signature::new(0, 1, 0),
        widths: vec![1, 2, 1],
        grid: GridSpec::full(8),
        rbf: RbfKind::Clifford,
        norm: NormKind::NodeWise,
    }
}

#[test]
fn training_loss_decreases_on_complex_square() {
    let data = gen_formula(Task::Square, Signature::new(0, 1, 0), 1000, 5).unwrap();
    let test = gen_formula(Task::Square, Signature::new(0, 1, 0), 500, 6).unwrap();
    let tc = TrainConfig {
        max_epochs: 50,
        seed: 0,
        ..TrainConfig::default()
    };
    let result = cross_validate(&square_config(), &tc, &data, &test).unwrap();

    assert_eq!(result.folds.len(), 5);
    let mut improved = 0;
    for fold in &result.folds {
        // 1000 samples over 5 folds: 800 train / 200 validation
        assert!(fold.train_curve.len() <= 50 && !fold.train_curve.is_empty());
        assert_eq!(fold.train_curve.len(), fold.val_curve.len());
        if *fold.train_curve.last().unwrap() < fold.train_curve[0] {
            improved += 1;
        }
    }
    assert!(improved >= 4, "loss fell in only {improved} of 5 folds");
    assert!(result.test_mse_mean.is_finite() && result.test_mse_std >= 0.0);
}

#[test]
fn cross_validation_is_deterministic() {
    let data = gen_formula(Task::Square, Signature::new(0, 1, 0), 300, 1).unwrap();
    let test = gen_formula(Task::Square, Signature::new(0, 1, 0), 100, 2).unwrap();
    let tc = TrainConfig {
        max_epochs: 5,
        seed: 9,
        ..TrainConfig::default()
    };
    let a = cross_validate(&square_config(), &tc, &data, &test).unwrap();
    let b = cross_validate(&square_config(), &tc, &data, &test).unwrap();
    assert_eq!(a.test_mse_mean, b.test_mse_mean);
    for (fa, fb) in a.folds.iter().zip(&b.folds) {
        assert_eq!(fa.val_curve, fb.val_curve);
        assert_eq!(fa.test_mse, fb.test_mse);
    }

    let c = cross_validate(
        &square_config(),
        &TrainConfig { seed: 10, ..tc },
        &data,
        &test,
    )
    .unwrap();
    assert_ne!(a.test_mse_mean, c.test_mse_mean);
}

#[test]
fn fold_split_sizes_match_protocol() {
    // k = 5 on 5000 samples: 4000 train / 1000 validation per fold
    let n = 5000;
    let k = 5;
    for fold in 0..k {
        let lo = fold * n / k;
        let hi = (fold + 1) * n / k;
        assert_eq!(hi - lo, 1000);
    }
}
