//! Synthetic regression datasets over multivector inputs.
//!
//! All input components are i.i.d. uniform over [-2, 2]; targets are exact
//! multivector arithmetic. Four formula tasks (square, sin, mult,
//! squaresquare) work in any algebra (sin is complex-only), and the
//! holography task maps three complex beams to H = Ê_R · |E_R + E_0|².

use rand::distributions::Uniform;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Signature};
use crate::error::Error;

/// Supported regression tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// f(x) = x²
    Square,
    /// f(x) = sin(x), complex algebras only
    Sin,
    /// f(x₁, x₂) = x₁·x₂
    Mult,
    /// f(x₁, x₂) = (x₁² + x₂²)²
    SquareSquare,
    /// H(Ê_R, E_R, E_0) = Ê_R·|E_R + E_0|², all beams complex
    Holography,
}

impl Task {
    pub fn parse(name: &str) -> Result<Self, Error> {
        match name {
            "square" => Ok(Self::Square),
            "sin" => Ok(Self::Sin),
            "mult" => Ok(Self::Mult),
            "squaresquare" => Ok(Self::SquareSquare),
            "holography" => Ok(Self::Holography),
            other => Err(Error::UnknownTask(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Square => "square",
            Self::Sin => "sin",
            Self::Mult => "mult",
            Self::SquareSquare => "squaresquare",
            Self::Holography => "holography",
        }
    }

    /// Number of multivector inputs the formula takes.
    pub fn arity(&self) -> usize {
        match self {
            Self::Square | Self::Sin => 1,
            Self::Mult | Self::SquareSquare => 2,
            Self::Holography => 3,
        }
    }
}

/// Flat sample store: `inputs` is n × arity × D and `targets` is n × D,
/// row-major, matching the network's batch layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub task: Task,
    pub signature: Signature,
    pub arity: usize,
    pub dim: usize,
    pub seed: u64,
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.targets.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Copies the selected samples into a new dataset (fold splitting).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let is = self.arity * self.dim;
        let mut inputs = Vec::with_capacity(indices.len() * is);
        let mut targets = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            inputs.extend_from_slice(&self.inputs[i * is..(i + 1) * is]);
            targets.extend_from_slice(&self.targets[i * self.dim..(i + 1) * self.dim]);
        }
        Dataset {
            inputs,
            targets,
            ..self.clone()
        }
    }
}

/// Default (train+val, test) sample counts per task family.
pub fn sample_counts(signature: Signature, task: Task) -> (usize, usize) {
    match task {
        Task::Holography => (100_000, 100_000),
        _ if signature.dim() >= 4 => (80_000, 80_000),
        _ => (5_000, 5_000),
    }
}

/// Evaluates the formula target for one sample; `x` holds arity·D components.
fn target(alg: &Algebra, task: Task, x: &[f64], out: &mut [f64]) {
    let d = alg.dim();
    out.iter_mut().for_each(|v| *v = 0.0);
    match task {
        Task::Square => alg.gp_acc(&x[..d], &x[..d], out),
        Task::Sin => {
            // sin(a + bi) = sin a cosh b + i cos a sinh b
            let (a, b) = (x[0], x[1]);
            out[0] = a.sin() * b.cosh();
            out[1] = a.cos() * b.sinh();
        }
        Task::Mult => alg.gp_acc(&x[..d], &x[d..2 * d], out),
        Task::SquareSquare => {
            let mut s = vec![0.0; d];
            let mut t = vec![0.0; d];
            alg.gp_acc(&x[..d], &x[..d], &mut s);
            alg.gp_acc(&x[d..2 * d], &x[d..2 * d], &mut t);
            for c in 0..d {
                s[c] += t[c];
            }
            alg.gp_acc(&s, &s, out);
        }
        Task::Holography => {
            // H = Ê_R · |E_R + E_0|², the modulus² a real scalar factor
            let (hr_re, hr_im) = (x[0], x[1]);
            let sr = x[2] + x[4];
            let si = x[3] + x[5];
            let m2 = sr * sr + si * si;
            out[0] = hr_re * m2;
            out[1] = hr_im * m2;
        }
    }
}

/// Generates `n_samples` of the given formula task in `signature`.
pub fn gen_formula(
    task: Task,
    signature: Signature,
    n_samples: usize,
    seed: u64,
) -> Result<Dataset, Error> {
    if n_samples == 0 {
        return Err(Error::EmptyBatch);
    }
    let is_complex = signature == Signature::new(0, 1, 0);
    if matches!(task, Task::Sin | Task::Holography) && !is_complex {
        return Err(Error::SinNeedsComplex(format!("{signature:?}")));
    }
    let alg = Algebra::new(signature)?;
    let d = alg.dim();
    let arity = task.arity();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unif = Uniform::new_inclusive(-2.0, 2.0);
    let mut inputs = vec![0.0; n_samples * arity * d];
    let mut targets = vec![0.0; n_samples * d];
    for i in 0..n_samples {
        let xs = &mut inputs[i * arity * d..(i + 1) * arity * d];
        for v in xs.iter_mut() {
            *v = rng.sample(unif);
        }
        target(&alg, task, xs, &mut targets[i * d..(i + 1) * d]);
    }
    Ok(Dataset {
        task,
        signature,
        arity,
        dim: d,
        seed,
        inputs,
        targets,
    })
}

/// Generates the complex holography dataset.
pub fn gen_holography(n_samples: usize, seed: u64) -> Result<Dataset, Error> {
    gen_formula(Task::Holography, Signature::new(0, 1, 0), n_samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(task: Task, sig: Signature, x: &[f64]) -> Vec<f64> {
        let alg = Algebra::new(sig).unwrap();
        let mut out = vec![0.0; alg.dim()];
        target(&alg, task, x, &mut out);
        out
    }

    #[test]
    fn square_complex_example() {
        // (1 + i)² = 2i
        let y = eval(Task::Square, Signature::new(0, 1, 0), &[1.0, 1.0]);
        assert_eq!(y, vec![0.0, 2.0]);
    }

    #[test]
    fn square_quaternion_example() {
        // e1² = -1
        let y = eval(Task::Square, Signature::new(0, 2, 0), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(y, vec![-1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn squaresquare_at_origin() {
        let y = eval(Task::SquareSquare, Signature::new(0, 2, 0), &[0.0; 8]);
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sin_of_i_is_i_sinh_one() {
        let y = eval(Task::Sin, Signature::new(0, 1, 0), &[0.0, 1.0]);
        assert!(y[0].abs() < 1e-15);
        assert!((y[1] - 1.0f64.sinh()).abs() < 1e-15);
        assert!((y[1] - 1.1752011936438014).abs() < 1e-10);
    }

    #[test]
    fn sin_rejected_outside_complex() {
        assert!(gen_formula(Task::Sin, Signature::new(0, 2, 0), 10, 0).is_err());
        assert!(gen_formula(Task::Sin, Signature::new(0, 1, 0), 10, 0).is_ok());
    }

    #[test]
    fn holography_formula() {
        // Ê_R = i, E_R = 1, E_0 = 1 + i → |2 + i|² = 5, H = 5i
        let y = eval(
            Task::Holography,
            Signature::new(0, 1, 0),
            &[0.0, 1.0, 1.0, 0.0, 1.0, 1.0],
        );
        assert_eq!(y, vec![0.0, 5.0]);
    }

    #[test]
    fn generation_is_seeded_and_in_range() {
        let a = gen_formula(Task::Mult, Signature::new(0, 1, 0), 200, 3).unwrap();
        let b = gen_formula(Task::Mult, Signature::new(0, 1, 0), 200, 3).unwrap();
        let c = gen_formula(Task::Mult, Signature::new(0, 1, 0), 200, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.inputs, c.inputs);
        assert_eq!(a.len(), 200);
        assert_eq!(a.inputs.len(), 200 * 2 * 2);
        assert!(a.inputs.iter().all(|&v| (-2.0..=2.0).contains(&v)));
    }

    #[test]
    fn targets_match_formula_pointwise() {
        let ds = gen_formula(Task::SquareSquare, Signature::new(0, 2, 0), 50, 11).unwrap();
        let alg = Algebra::new(ds.signature).unwrap();
        let d = ds.dim;
        for i in 0..ds.len() {
            let mut out = vec![0.0; d];
            target(&alg, ds.task, &ds.inputs[i * 2 * d..(i + 1) * 2 * d], &mut out);
            assert_eq!(out, ds.targets[i * d..(i + 1) * d]);
        }
    }

    #[test]
    fn subset_selects_rows() {
        let ds = gen_formula(Task::Square, Signature::new(0, 1, 0), 10, 0).unwrap();
        let sub = ds.subset(&[3, 7]);
        assert_eq!(sub.len(), 2);
        assert_eq!(&sub.inputs[..2], &ds.inputs[6..8]);
        assert_eq!(&sub.targets[2..4], &ds.targets[14..16]);
    }

    #[test]
    fn default_sample_counts() {
        let c = Signature::new(0, 1, 0);
        let q = Signature::new(0, 2, 0);
        assert_eq!(sample_counts(c, Task::Square), (5_000, 5_000));
        assert_eq!(sample_counts(q, Task::Mult), (80_000, 80_000));
        assert_eq!(sample_counts(c, Task::Holography), (100_000, 100_000));
    }
}
