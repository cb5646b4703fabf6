//! Quick convergence probe used while tuning epoch budgets; not part of the
//! test suite. Run with `cargo run --release -p clkan --example probe -- NAME`.

use std::time::Instant;

use clkan::data::{gen_formula, gen_holography, Task};
use clkan::network::{ModelConfig, NormKind, RbfKind};
use clkan::training::{cross_validate, TrainConfig};
use clkan::{GridSpec, Signature};

fn report(name: &str, cfg: &ModelConfig, tc: &TrainConfig, train: &clkan::data::Dataset, test: &clkan::data::Dataset) {
    let t0 = Instant::now();
    let r = cross_validate(cfg, tc, train, test).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let epochs: Vec<usize> = r.folds.iter().map(|f| f.epochs).collect();
    let mses: Vec<f64> = r.folds.iter().map(|f| f.test_mse).collect();
    let best = mses.iter().cloned().fold(f64::INFINITY, f64::min);
    println!(
        "{name}: mean {:.5} +- {:.5}, best {best:.5}, epochs {epochs:?}, {dt:.1}s",
        r.test_mse_mean, r.test_mse_std
    );
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "square".into());
    let c = Signature::new(0, 1, 0);
    match which.as_str() {
        "square" => {
            let train = gen_formula(Task::Square, c, 5000, 1).unwrap();
            let test = gen_formula(Task::Square, c, 5000, 2).unwrap();
            let cfg = ModelConfig {
                signature: c,
                widths: vec![1, 2, 1],
                grid: GridSpec::full(8),
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            for me in [100usize, 300] {
                let tc = TrainConfig { max_epochs: me, seed: 0, ..Default::default() };
                report(&format!("square F-8 me={me}"), &cfg, &tc, &train, &test);
            }
        }
        "mult" => {
            let train = gen_formula(Task::Mult, c, 5000, 1).unwrap();
            let test = gen_formula(Task::Mult, c, 5000, 2).unwrap();
            let cfg = ModelConfig {
                signature: c,
                widths: vec![2, 4, 2, 1],
                grid: GridSpec::full(8),
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            let tc = TrainConfig { max_epochs: 300, seed: 0, ..Default::default() };
            report("mult F-8 me=300", &cfg, &tc, &train, &test);
        }
        "squaresquare" => {
            let train = gen_formula(Task::SquareSquare, c, 5000, 1).unwrap();
            let test = gen_formula(Task::SquareSquare, c, 5000, 2).unwrap();
            let cfg = ModelConfig {
                signature: c,
                widths: vec![2, 4, 2, 1],
                grid: GridSpec::full(8),
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            let tc = TrainConfig { max_epochs: 300, seed: 0, ..Default::default() };
            report("squaresquare F-8 me=300", &cfg, &tc, &train, &test);
        }
        "holo" => {
            let train = gen_holography(20_000, 1).unwrap();
            let test = gen_holography(20_000, 2).unwrap();
            for (label, grid) in [
                ("F-8", GridSpec::full(8)),
                ("S-2", GridSpec::sobol(2, 0)),
                ("S-4", GridSpec::sobol(4, 0)),
                ("S-8", GridSpec::sobol(8, 0)),
            ] {
                let cfg = ModelConfig {
                    signature: c,
                    widths: vec![3, 10, 3, 1],
                    grid,
                    rbf: RbfKind::Clifford,
                    norm: NormKind::NodeWise,
                };
                let tc = TrainConfig { max_epochs: 150, seed: 0, ..Default::default() };
                report(&format!("holo {label} me=150"), &cfg, &tc, &train, &test);
            }
        }
        "holo-curve" => {
            let train = gen_holography(20_000, 1).unwrap();
            let test = gen_holography(20_000, 2).unwrap();
            let cfg = ModelConfig {
                signature: c,
                widths: vec![3, 10, 3, 1],
                grid: GridSpec::full(8),
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            let me: usize = std::env::args()
                .nth(2)
                .and_then(|s| s.parse().ok())
                .unwrap_or(500);
            let bs: usize = std::env::args()
                .nth(3)
                .and_then(|s| s.parse().ok())
                .unwrap_or(1024);
            let tc = TrainConfig {
                max_epochs: me,
                batch_size: bs,
                seed: 0,
                ..Default::default()
            };
            // single fold on an 80/20 split: fastest way to trace a long curve
            let n = train.len();
            let tr_idx: Vec<usize> = (0..n * 4 / 5).collect();
            let va_idx: Vec<usize> = (n * 4 / 5..n).collect();
            let tr = train.subset(&tr_idx);
            let va = train.subset(&va_idx);
            let t0 = Instant::now();
            let (model, train_curve, val_curve) =
                clkan::training::train_fold(&cfg, &tc, &tr, &va, 0, 7).unwrap();
            let out = model.forward(&test.inputs).unwrap();
            let (test_mse, _) =
                clkan::training::mse_mae(&out, &test.targets, cfg.signature.dim()).unwrap();
            let samples: Vec<String> = (0..val_curve.len())
                .step_by(25)
                .map(|i| format!("{i}:{:.4}", val_curve[i]))
                .collect();
            println!(
                "{} epochs, val {}, last {:.5}, train last {:.5}, test {:.5} ({:.0}s)",
                val_curve.len(), samples.join(" "), val_curve.last().unwrap(),
                train_curve.last().unwrap(), test_mse,
                t0.elapsed().as_secs_f64()
            );
        }
        "bench" => {
            // phase timing on the holography F-8 shape, batch 1024
            use clkan::network::{ForwardCache, Model};
            let train = gen_holography(1024, 1).unwrap();
            let cfg = ModelConfig {
                signature: c,
                widths: vec![3, 10, 3, 1],
                grid: GridSpec::full(8),
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            let mut model = Model::new(cfg, 7).unwrap();
            let mut cache = ForwardCache::default();
            let reps = 50;
            let t0 = Instant::now();
            for _ in 0..reps {
                let _ = model.forward_train(&train.inputs, &mut cache).unwrap();
            }
            let t_fwd = t0.elapsed().as_secs_f64() / reps as f64;
            let out = model.forward_train(&train.inputs, &mut cache).unwrap();
            let gout = vec![1.0; out.len()];
            let mut grads = vec![0.0; model.param_count()];
            let t1 = Instant::now();
            for _ in 0..reps {
                grads.iter_mut().for_each(|v| *v = 0.0);
                model.backward(&cache, &gout, &mut grads);
            }
            let t_bwd = t1.elapsed().as_secs_f64() / reps as f64;
            let t2 = Instant::now();
            for _ in 0..reps {
                let _ = model.forward(&train.inputs).unwrap();
            }
            let t_eval = t2.elapsed().as_secs_f64() / reps as f64;
            println!(
                "batch 1024: forward_train {:.2} ms, backward {:.2} ms, eval {:.2} ms",
                t_fwd * 1e3, t_bwd * 1e3, t_eval * 1e3
            );
        }
        "holo-long" => {
            let train = gen_holography(20_000, 1).unwrap();
            let test = gen_holography(20_000, 2).unwrap();
            let cfg = ModelConfig {
                signature: c,
                widths: vec![3, 10, 3, 1],
                grid: GridSpec::full(8),
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            let me: usize = std::env::args()
                .nth(2)
                .and_then(|s| s.parse().ok())
                .unwrap_or(2000);
            let tc = TrainConfig { max_epochs: me, seed: 0, ..Default::default() };
            let t0 = Instant::now();
            let r = cross_validate(&cfg, &tc, &train, &test).unwrap();
            for f in &r.folds {
                println!(
                    "fold {}: {} epochs, test {:.5} ({:.0}s)",
                    f.fold, f.epochs, f.test_mse,
                    t0.elapsed().as_secs_f64()
                );
            }
            println!("mean {:.5} +- {:.5}", r.test_mse_mean, r.test_mse_std);
        }
        "holo-bs" => {
            let train = gen_holography(20_000, 1).unwrap();
            let test = gen_holography(20_000, 2).unwrap();
            let cfg = ModelConfig {
                signature: c,
                widths: vec![3, 10, 3, 1],
                grid: GridSpec::full(8),
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            for bs in [256usize, 128] {
                let tc = TrainConfig {
                    max_epochs: 150,
                    folds: 2,
                    batch_size: bs,
                    seed: 0,
                    ..Default::default()
                };
                report(&format!("holo F-8 bs={bs} me=150"), &cfg, &tc, &train, &test);
            }
        }
        "holo-nonorm" => {
            let train = gen_holography(20_000, 1).unwrap();
            let test = gen_holography(20_000, 2).unwrap();
            let cfg = ModelConfig {
                signature: c,
                widths: vec![3, 10, 3, 1],
                grid: GridSpec::full(8),
                rbf: RbfKind::Clifford,
                norm: NormKind::None,
            };
            let tc = TrainConfig { max_epochs: 150, seed: 0, ..Default::default() };
            report("holo F-8 no-norm me=150", &cfg, &tc, &train, &test);
        }
        "degen" => {
            let d = Signature::new(1, 0, 1);
            let train = gen_formula(Task::Square, d, 20_000, 1).unwrap();
            let test = gen_formula(Task::Square, d, 20_000, 2).unwrap();
            for (label, grid) in [("S-3", GridSpec::sobol(3, 0)), ("F-8", GridSpec::full(8))] {
                let cfg = ModelConfig {
                    signature: d,
                    widths: vec![1, 2, 1],
                    grid,
                    rbf: RbfKind::Clifford,
                    norm: NormKind::NodeWise,
                };
                let tc = TrainConfig { max_epochs: 100, seed: 0, ..Default::default() };
                report(&format!("degen square {label} me=100"), &cfg, &tc, &train, &test);
            }
        }
        "degen2" => {
            let d = Signature::new(1, 0, 1);
            let train = gen_formula(Task::Square, d, 20_000, 1).unwrap();
            let test = gen_formula(Task::Square, d, 20_000, 2).unwrap();
            let mk = |grid| ModelConfig {
                signature: d,
                widths: vec![1, 2, 1],
                grid,
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            let tc = TrainConfig { max_epochs: 300, seed: 0, ..Default::default() };
            report("degen2 S-3 me=300", &mk(GridSpec::sobol(3, 0)), &tc, &train, &test);
            let tc8 = TrainConfig { max_epochs: 5, seed: 0, ..Default::default() };
            report("degen2 F-8 me=5", &mk(GridSpec::full(8)), &tc8, &train, &test);
        }
        "degen3" => {
            let d = Signature::new(1, 0, 1);
            let train = gen_formula(Task::Square, d, 20_000, 1).unwrap();
            let test = gen_formula(Task::Square, d, 20_000, 2).unwrap();
            let cfg = ModelConfig {
                signature: d,
                widths: vec![1, 2, 1],
                grid: GridSpec::sobol(3, 0),
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            let tc = TrainConfig { max_epochs: 600, seed: 0, ..Default::default() };
            report("degen3 S-3 me=600", &cfg, &tc, &train, &test);
        }
        "ss-bs" => {
            let train = gen_formula(Task::SquareSquare, c, 5000, 1).unwrap();
            let test = gen_formula(Task::SquareSquare, c, 5000, 2).unwrap();
            let cfg = ModelConfig {
                signature: c,
                widths: vec![2, 4, 2, 1],
                grid: GridSpec::full(8),
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            for bs in [256usize, 128] {
                let tc = TrainConfig { max_epochs: 300, batch_size: bs, seed: 0, ..Default::default() };
                report(&format!("squaresquare F-8 bs={bs}"), &cfg, &tc, &train, &test);
            }
        }
        "ss-norm" => {
            let train = gen_formula(Task::SquareSquare, c, 5000, 1).unwrap();
            let test = gen_formula(Task::SquareSquare, c, 5000, 2).unwrap();
            for norm in [NormKind::DimWise, NormKind::ComponentWise] {
                let cfg = ModelConfig {
                    signature: c,
                    widths: vec![2, 4, 2, 1],
                    grid: GridSpec::full(8),
                    rbf: RbfKind::Clifford,
                    norm,
                };
                let tc = TrainConfig { max_epochs: 300, seed: 0, ..Default::default() };
                report(&format!("squaresquare F-8 {norm:?}"), &cfg, &tc, &train, &test);
            }
        }
        "degen-long" => {
            let d = Signature::new(1, 0, 1);
            let train = gen_formula(Task::Square, d, 20_000, 1).unwrap();
            let test = gen_formula(Task::Square, d, 20_000, 2).unwrap();
            let cfg = ModelConfig {
                signature: d,
                widths: vec![1, 2, 1],
                grid: GridSpec::sobol(3, 0),
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            let tc = TrainConfig { max_epochs: 600, folds: 2, seed: 0, ..Default::default() };
            let t0 = Instant::now();
            let r = cross_validate(&cfg, &tc, &train, &test).unwrap();
            for f in &r.folds {
                let v = &f.val_curve;
                let samples: Vec<String> = (0..v.len())
                    .step_by(50)
                    .map(|i| format!("{i}:{:.4}", v[i]))
                    .collect();
                println!(
                    "fold {}: {} epochs, val {}, last {:.5}, test {:.5} ({:.0}s)",
                    f.fold, f.epochs, samples.join(" "), v.last().unwrap(), f.test_mse,
                    t0.elapsed().as_secs_f64()
                );
            }
        }
        "degen-exp" => {
            let d = Signature::new(1, 0, 1);
            let train = gen_formula(Task::Square, d, 20_000, 1).unwrap();
            let test = gen_formula(Task::Square, d, 20_000, 2).unwrap();
            let base = ModelConfig {
                signature: d,
                widths: vec![1, 2, 1],
                grid: GridSpec::sobol(3, 0),
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            let tc0 = TrainConfig { max_epochs: 300, folds: 2, seed: 0, ..Default::default() };
            report("base", &base, &tc0, &train, &test);
            report(
                "no-norm",
                &ModelConfig { norm: NormKind::None, ..base.clone() },
                &tc0,
                &train,
                &test,
            );
            report(
                "no-decay",
                &base,
                &TrainConfig { plateau_factor: 0.999, ..tc0.clone() },
                &train,
                &test,
            );
            report(
                "lr-0.01",
                &base,
                &TrainConfig { initial_lr: 0.01, ..tc0.clone() },
                &train,
                &test,
            );
            report(
                "wider",
                &ModelConfig { widths: vec![1, 4, 1], ..base.clone() },
                &tc0,
                &train,
                &test,
            );
            report(
                "naive",
                &ModelConfig { rbf: RbfKind::Naive, ..base.clone() },
                &tc0,
                &train,
                &test,
            );
        }
        "degen-bs" => {
            let d = Signature::new(1, 0, 1);
            let train = gen_formula(Task::Square, d, 20_000, 1).unwrap();
            let test = gen_formula(Task::Square, d, 20_000, 2).unwrap();
            let base = ModelConfig {
                signature: d,
                widths: vec![1, 2, 1],
                grid: GridSpec::sobol(3, 0),
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            for bs in [128usize, 256] {
                let tc = TrainConfig { max_epochs: 200, folds: 2, batch_size: bs, seed: 0, ..Default::default() };
                report(&format!("bs={bs}"), &base, &tc, &train, &test);
            }
        }
        "degen-gs" => {
            let d = Signature::new(1, 0, 1);
            let train = gen_formula(Task::Square, d, 20_000, 1).unwrap();
            let test = gen_formula(Task::Square, d, 20_000, 2).unwrap();
            let tc = TrainConfig { max_epochs: 200, folds: 2, seed: 0, ..Default::default() };
            for gs in [1u64, 2, 3] {
                let cfg = ModelConfig {
                    signature: d,
                    widths: vec![1, 2, 1],
                    grid: GridSpec::sobol(3, gs),
                    rbf: RbfKind::Clifford,
                    norm: NormKind::NodeWise,
                };
                report(&format!("grid-seed={gs}"), &cfg, &tc, &train, &test);
            }
        }
        // Closed-form linear least squares of a single Clifford-RBF edge onto
        // the Cl(1,0,1) square target: the edge output is linear in its
        // weights, so this measures pure representational capacity.
        "degen-ls" => {
            use clkan::grid::make_grid;
            use clkan::Algebra;
            let d = Signature::new(1, 0, 1);
            let alg = Algebra::new(d).unwrap();
            let dim = alg.dim();
            let data = gen_formula(Task::Square, d, 20_000, 1).unwrap();
            let n = data.len();
            // norm_mask: which components enter the RBF distance. All four is
            // the Euclidean coefficient norm; {scalar, e1} is the
            // quadratic-form norm of Cl(1,0,1), degenerate in e2/e12.
            let norm_mask: Vec<usize> = match std::env::args().nth(2).as_deref() {
                Some("qf") => vec![0, 1],
                _ => (0..dim).collect(),
            };
            for (label, spec) in [("S-3", GridSpec::sobol(3, 0)), ("S-4", GridSpec::sobol(4, 0))] {
                let grid = make_grid(&spec, dim).unwrap();
                let ng = grid.len();
                // unknowns: w_g (ng*dim) + silu_w (dim) + silu_b (dim)
                let p = ng * dim + 2 * dim;
                // feature matrix row block per sample: pred_k = sum_j m[k][j] c[j]
                let mut ata = vec![0.0; p * p];
                let mut atb = vec![0.0; p];
                let mut row = vec![0.0; p];
                for s in 0..n {
                    let x = &data.inputs[s * dim..(s + 1) * dim];
                    let y = &data.targets[s * dim..(s + 1) * dim];
                    // per-sample feature vectors u_g = phi_g * (x - g)
                    let mut us = vec![0.0; ng * dim];
                    for g in 0..ng {
                        let gp = grid.point(g);
                        let mut d2 = 0.0;
                        for &c in &norm_mask {
                            let t = x[c] - gp[c];
                            d2 += t * t;
                        }
                        let phi = (-d2).exp();
                        for c in 0..dim {
                            us[g * dim + c] = phi * (x[c] - gp[c]);
                        }
                    }
                    let silu: Vec<f64> =
                        x.iter().map(|&t| t / (1.0 + (-t).exp())).collect();
                    // assemble one output-component row at a time
                    for k in 0..dim {
                        row.iter_mut().for_each(|v| *v = 0.0);
                        // GP(w_g, u_g): contribution of w_g[a] is sign(a,b) u_g[b] at blade a^b=k
                        for a in 0..dim {
                            let b = a ^ k;
                            let sgn = alg.sign(a, b);
                            if sgn == 0.0 {
                                continue;
                            }
                            for g in 0..ng {
                                row[g * dim + a] = sgn * us[g * dim + b];
                            }
                            row[ng * dim + a] = sgn * silu[b];
                        }
                        row[ng * dim + dim + k] = 1.0;
                        for i in 0..p {
                            if row[i] == 0.0 {
                                continue;
                            }
                            atb[i] += row[i] * y[k];
                            for j in 0..p {
                                ata[i * p + j] += row[i] * row[j];
                            }
                        }
                    }
                }
                // ridge-regularized Gaussian elimination
                for i in 0..p {
                    ata[i * p + i] += 1e-8;
                }
                let mut m = ata.clone();
                let mut rhs = atb.clone();
                for col in 0..p {
                    let mut piv = col;
                    for r2 in col + 1..p {
                        if m[r2 * p + col].abs() > m[piv * p + col].abs() {
                            piv = r2;
                        }
                    }
                    for j in 0..p {
                        m.swap(col * p + j, piv * p + j);
                    }
                    rhs.swap(col, piv);
                    let pv = m[col * p + col];
                    for r2 in col + 1..p {
                        let f = m[r2 * p + col] / pv;
                        if f == 0.0 {
                            continue;
                        }
                        for j in col..p {
                            m[r2 * p + j] -= f * m[col * p + j];
                        }
                        rhs[r2] -= f * rhs[col];
                    }
                }
                let mut coef = vec![0.0; p];
                for col in (0..p).rev() {
                    let mut acc = rhs[col];
                    for j in col + 1..p {
                        acc -= m[col * p + j] * coef[j];
                    }
                    coef[col] = acc / m[col * p + col];
                }
                // residual MSE
                let mut mse = 0.0;
                for s in 0..n {
                    let x = &data.inputs[s * dim..(s + 1) * dim];
                    let y = &data.targets[s * dim..(s + 1) * dim];
                    let silu: Vec<f64> =
                        x.iter().map(|&t| t / (1.0 + (-t).exp())).collect();
                    for k in 0..dim {
                        let mut pred = coef[ng * dim + dim + k];
                        for a in 0..dim {
                            let b = a ^ k;
                            let sgn = alg.sign(a, b);
                            if sgn == 0.0 {
                                continue;
                            }
                            for g in 0..ng {
                                let gpt = grid.point(g);
                                let mut d2 = 0.0;
                                for &c in &norm_mask {
                                    let t = x[c] - gpt[c];
                                    d2 += t * t;
                                }
                                let phi = (-d2).exp();
                                pred += coef[g * dim + a] * sgn * phi * (x[b] - gpt[b]);
                            }
                            pred += coef[ng * dim + a] * sgn * silu[b];
                        }
                        let e = pred - y[k];
                        mse += e * e;
                    }
                }
                mse /= n as f64;
                println!("degen-ls {label}: |G|={ng}, params {p}, LS train MSE {mse:.5}");
            }
        }
        "degen-asym" => {
            let d = Signature::new(1, 0, 1);
            let train = gen_formula(Task::Square, d, 20_000, 1).unwrap();
            let test = gen_formula(Task::Square, d, 20_000, 2).unwrap();
            let cfg = ModelConfig {
                signature: d,
                widths: vec![1, 2, 1],
                grid: GridSpec::sobol(3, 0),
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            let tc = TrainConfig {
                max_epochs: 2000,
                folds: 2,
                plateau_factor: 0.9999,
                seed: 0,
                ..Default::default()
            };
            let t0 = Instant::now();
            let r = cross_validate(&cfg, &tc, &train, &test).unwrap();
            for f in &r.folds {
                let v = &f.val_curve;
                let samples: Vec<String> = (0..v.len())
                    .step_by(100)
                    .map(|i| format!("{i}:{:.4}", v[i]))
                    .collect();
                println!(
                    "fold {}: {} epochs, val {}, last {:.5}, test {:.5} ({:.0}s)",
                    f.fold, f.epochs, samples.join(" "), v.last().unwrap(), f.test_mse,
                    t0.elapsed().as_secs_f64()
                );
            }
        }
        "ss-seed" => {
            let train = gen_formula(Task::SquareSquare, c, 5000, 1).unwrap();
            let test = gen_formula(Task::SquareSquare, c, 5000, 2).unwrap();
            let cfg = ModelConfig {
                signature: c,
                widths: vec![2, 4, 2, 1],
                grid: GridSpec::full(8),
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            for seed in [1u64, 2, 3] {
                let tc = TrainConfig { max_epochs: 300, seed, ..Default::default() };
                report(&format!("squaresquare F-8 seed={seed}"), &cfg, &tc, &train, &test);
            }
        }
        "ss-long" => {
            let train = gen_formula(Task::SquareSquare, c, 5000, 1).unwrap();
            let test = gen_formula(Task::SquareSquare, c, 5000, 2).unwrap();
            let cfg = ModelConfig {
                signature: c,
                widths: vec![2, 4, 2, 1],
                grid: GridSpec::full(8),
                rbf: RbfKind::Clifford,
                norm: NormKind::NodeWise,
            };
            let tc = TrainConfig { max_epochs: 800, seed: 0, ..Default::default() };
            report("squaresquare F-8 me=800", &cfg, &tc, &train, &test);
        }
        other => eprintln!("unknown probe `{other}`"),
    }
}
