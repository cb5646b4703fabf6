//! Fast self-verification: re-runs the cheap invariant oracles and prints a
//! pass/fail summary. Returns an error if any check fails.

use anyhow::{bail, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use clkan::network::{param_count, ModelConfig, NormKind, RbfKind};
use clkan::oracle::{blade_sign_bruteforce, signatures_up_to};
use clkan::sobol::{sobol_points, Scramble};
use clkan::{Algebra, GridSpec, Signature};

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool) {
        println!("{} {name}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures += 1;
        }
    }
}

fn cayley_matches_oracle() -> bool {
    for (p, q, r) in signatures_up_to(4) {
        let sig = Signature::new(p, q, r);
        let alg = match Algebra::new(sig) {
            Ok(a) => a,
            Err(_) => return false,
        };
        let d = alg.dim();
        for a in 0..d {
            for b in 0..d {
                if alg.sign(a, b) != blade_sign_bruteforce(&sig, a, b) as f64 {
                    return false;
                }
            }
        }
    }
    true
}

fn associativity_holds() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (p, q, r) in signatures_up_to(4) {
        let alg = Algebra::new(Signature::new(p, q, r)).unwrap();
        let d = alg.dim();
        for _ in 0..100 {
            let a: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut ab = vec![0.0; d];
            let mut bc = vec![0.0; d];
            alg.gp_acc(&a, &b, &mut ab);
            alg.gp_acc(&b, &c, &mut bc);
            let mut left = vec![0.0; d];
            let mut right = vec![0.0; d];
            alg.gp_acc(&ab, &c, &mut left);
            alg.gp_acc(&a, &bc, &mut right);
            if left
                .iter()
                .zip(&right)
                .any(|(l, r)| (l - r).abs() > 1e-10)
            {
                return false;
            }
        }
    }
    true
}

fn sobol_stratified() -> bool {
    for d in 1..=4usize {
        for m in [4u32, 8] {
            let n = 1usize << m;
            let pts = match sobol_points(d, n, Scramble::Owen { seed: 3 }) {
                Ok(p) => p,
                Err(_) => return false,
            };
            for c in 0..d {
                let mut bins = vec![0usize; n];
                for i in 0..n {
                    bins[(pts[i * d + c] * n as f64) as usize] += 1;
                }
                if bins.iter().any(|&b| b != 1) {
                    return false;
                }
            }
        }
    }
    true
}

/// Published parameter-count rows: (signature, widths, N_g, expected N_p).
pub fn param_count_table() -> Vec<(Signature, Vec<usize>, usize, usize)> {
    let c = Signature::new(0, 1, 0);
    let q = Signature::new(0, 2, 0);
    let deep = vec![3usize, 10, 5, 3, 1];
    let shallow = vec![3usize, 10, 3, 1];
    let small = vec![1usize, 2, 1];
    let two_in = vec![2usize, 4, 2, 1];
    let mut rows = Vec::new();
    for (ng, np) in [(2, 782), (3, 1412), (4, 2294), (5, 3428), (6, 4814), (7, 6452), (8, 8342)] {
        rows.push((c, shallow.clone(), ng, np));
    }
    for (ng, np) in [
        (2, 1212),
        (3, 2192),
        (4, 3564),
        (5, 5328),
        (6, 7484),
        (7, 10032),
        (8, 12972),
    ] {
        rows.push((c, deep.clone(), ng, np));
    }
    for (ng, np) in [
        (2, 292),
        (3, 1332),
        (4, 4132),
        (5, 10036),
        (6, 20772),
        (7, 38452),
        (8, 65572),
    ] {
        rows.push((q, small.clone(), ng, np));
    }
    for (ng, np) in [
        (2, 1308),
        (3, 5988),
        (4, 18588),
        (5, 45156),
        (6, 93468),
        (7, 173028),
        (8, 295068),
    ] {
        rows.push((q, two_in.clone(), ng, np));
    }
    rows
}

fn param_counts_match() -> bool {
    param_count_table().into_iter().all(|(sig, widths, ng, np)| {
        let config = ModelConfig {
            signature: sig,
            widths,
            grid: GridSpec::full(ng),
            rbf: RbfKind::Clifford,
            norm: NormKind::NodeWise,
        };
        param_count(&config).map(|got| got == np).unwrap_or(false)
    })
}

fn gradient_spot_check() -> bool {
    use clkan::network::{ForwardCache, Model};
    use clkan::training::mse_mae;

    let config = ModelConfig {
        signature: Signature::new(0, 1, 0),
        widths: vec![1, 2, 1],
        grid: GridSpec::full(3),
        rbf: RbfKind::Clifford,
        norm: NormKind::NodeWise,
    };
    let mut model = Model::new(config, 5).unwrap();
    let dim = 2;
    let batch = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let inputs: Vec<f64> = (0..batch * dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let targets: Vec<f64> = (0..batch * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();

    let mut cache = ForwardCache::default();
    let out = model.forward_train(&inputs, &mut cache).unwrap();
    let grad_out: Vec<f64> = out
        .iter()
        .zip(&targets)
        .map(|(o, t)| 2.0 * (o - t) / batch as f64)
        .collect();
    let mut grads = vec![0.0; model.param_count()];
    model.backward(&cache, &grad_out, &mut grads);

    let h = 1e-6;
    for i in (0..model.param_count()).step_by(7) {
        let orig = model.params()[i];
        let eval = |v: f64, model: &mut Model| {
            model.params_mut()[i] = v;
            let mut c = ForwardCache::default();
            let o = model.forward_train(&inputs, &mut c).unwrap();
            mse_mae(&o, &targets, dim).unwrap().0
        };
        let lp = eval(orig + h, &mut model);
        let lm = eval(orig - h, &mut model);
        model.params_mut()[i] = orig;
        let fd = (lp - lm) / (2.0 * h);
        let diff = (grads[i] - fd).abs();
        if diff > 1e-8 && diff / grads[i].abs().max(fd.abs()).max(1e-6) > 1e-4 {
            return false;
        }
    }
    true
}

/// Runs the full fast-check suite, printing one line per check.
pub fn verify() -> Result<()> {
    let mut report = Report { failures: 0 };
    report.check("cayley table vs brute-force sign oracle (n <= 4)", cayley_matches_oracle());
    report.check("geometric product associativity (1e-10)", associativity_holds());
    report.check("scrambled Sobol dyadic stratification", sobol_stratified());
    report.check("published parameter-count table (28 rows)", param_counts_match());
    report.check("analytic gradients vs finite differences", gradient_spot_check());
    if report.failures > 0 {
        bail!("{} verification check(s) failed", report.failures);
    }
    println!("all checks passed");
    Ok(())
}
