//! RBF center grids: full Cartesian lattices and scrambled-Sobol grids.
//!
//! Both kinds place `points_per_dim ^ D` centers inside `[lo, hi]^D`, where D
//! is the dimension of the owning algebra. Grids are immutable after creation
//! and serialized verbatim into checkpoints so a trained Sobol model reloads
//! with its exact centers.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::sobol::{sobol_points, Scramble};

pub const DEFAULT_MAX_POINTS: usize = 1_000_000;

fn default_range() -> (f64, f64) {
    (-2.0, 2.0)
}

fn default_max_points() -> usize {
    DEFAULT_MAX_POINTS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Full,
    Sobol,
}

/// Declarative description of a grid; `seed` only matters for Sobol grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: GridKind,
    pub points_per_dim: usize,
    #[serde(default = "default_range")]
    pub range: (f64, f64),
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

impl GridSpec {
    pub fn full(points_per_dim: usize) -> Self {
        Self {
            kind: GridKind::Full,
            points_per_dim,
            range: default_range(),
            seed: 0,
            max_points: DEFAULT_MAX_POINTS,
        }
    }

    pub fn sobol(points_per_dim: usize, seed: u64) -> Self {
        Self {
            kind: GridKind::Sobol,
            points_per_dim,
            range: default_range(),
            seed,
            max_points: DEFAULT_MAX_POINTS,
        }
    }

    /// Total grid size N_g^D, or an error when it exceeds the cap.
    pub fn point_count(&self, dim: usize) -> Result<usize, Error> {
        if self.points_per_dim == 0 {
            return Err(Error::EmptyGrid);
        }
        let total = (self.points_per_dim as u128).checked_pow(dim as u32);
        match total {
            Some(t) if t <= self.max_points as u128 => Ok(t as usize),
            other => Err(Error::GridTooLarge {
                requested: other.unwrap_or(u128::MAX),
                ng: self.points_per_dim,
                dim,
                cap: self.max_points,
            }),
        }
    }
}

/// A realized grid: `len` points of `dim` coordinates each, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub spec: GridSpec,
    pub dim: usize,
    points: Vec<f64>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn point(&self, g: usize) -> &[f64] {
        &self.points[g * self.dim..(g + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Rebuild a grid from serialized points (checkpoint loading).
    pub fn from_raw(spec: GridSpec, dim: usize, points: Vec<f64>) -> Self {
        assert_eq!(points.len() % dim, 0);
        Self { spec, dim, points }
    }
}

/// Builds the grid for an algebra of dimension `dim`.
///
/// Full grids are the D-fold Cartesian product of `points_per_dim` equally
/// spaced values including both endpoints; Sobol grids map N_g^D scrambled
/// Sobol points affinely from [0,1)^D into the range. A new seed yields a new
/// Sobol realization.
pub fn make_grid(spec: &GridSpec, dim: usize) -> Result<Grid, Error> {
    let (lo, hi) = spec.range;
    if !(lo < hi) {
        return Err(Error::InvalidRange { lo, hi });
    }
    let total = spec.point_count(dim)?;
    let ng = spec.points_per_dim;

    let points = match spec.kind {
        GridKind::Full => {
            // 1-D lattice including both endpoints; a single point sits at the center
            let lattice: Vec<f64> = if ng == 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..ng)
                    .map(|i| lo + (hi - lo) * i as f64 / (ng - 1) as f64)
                    .collect()
            };
            let mut pts = Vec::with_capacity(total * dim);
            let mut idx = vec![0usize; dim];
            for _ in 0..total {
                for &i in &idx {
                    pts.push(lattice[i]);
                }
                // odometer increment, last coordinate fastest
                for c in (0..dim).rev() {
                    idx[c] += 1;
                    if idx[c] < ng {
                        break;
                    }
                    idx[c] = 0;
                }
            }
            pts
        }
        GridKind::Sobol => {
            let unit = sobol_points(dim, total, Scramble::Owen { seed: spec.seed })?;
            unit.into_iter().map(|u| lo + (hi - lo) * u).collect()
        }
    };

    Ok(Grid {
        spec: *spec,
        dim,
        points,
    })
}

/// Arithmetic mean of `f` over a row-major point set; the test oracle for the
/// RQMC variance-decay properties.
pub fn qmc_estimate<F: Fn(&[f64]) -> f64>(f: F, points: &[f64], dim: usize) -> f64 {
    assert!(!points.is_empty() && points.len() % dim == 0);
    let n = points.len() / dim;
    let mut acc = 0.0;
    for i in 0..n {
        acc += f(&points[i * dim..(i + 1) * dim]);
    }
    acc / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_grid_1d_includes_endpoints() {
        let g = make_grid(&GridSpec::full(3), 1).unwrap();
        assert_eq!(g.points(), &[-2.0, 0.0, 2.0]);
    }

    #[test]
    fn full_grid_4096_points_for_quaternions() {
        let g = make_grid(&GridSpec::full(8), 4).unwrap();
        assert_eq!(g.len(), 4096);
    }

    #[test]
    fn full_grid_is_cartesian_product() {
        let g = make_grid(&GridSpec::full(3), 2).unwrap();
        assert_eq!(g.len(), 9);
        // projection onto each axis hits each lattice value ng^(d-1) times
        for c in 0..2 {
            let mut counts = std::collections::HashMap::new();
            for i in 0..g.len() {
                *counts.entry(g.point(i)[c].to_bits()).or_insert(0usize) += 1;
            }
            assert_eq!(counts.len(), 3);
            assert!(counts.values().all(|&v| v == 3));
        }
    }

    #[test]
    fn sobol_grid_size_and_range() {
        let g = make_grid(&GridSpec::sobol(2, 17), 2).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.points().iter().all(|&x| (-2.0..2.0).contains(&x)));
    }

    #[test]
    fn sobol_grid_seed_determinism() {
        let a = make_grid(&GridSpec::sobol(4, 9), 3).unwrap();
        let b = make_grid(&GridSpec::sobol(4, 9), 3).unwrap();
        let c = make_grid(&GridSpec::sobol(4, 10), 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn oversized_grid_rejected_with_explanation() {
        let spec = GridSpec::full(8);
        let err = make_grid(&spec, 8).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("exponential"), "{msg}");
    }

    #[test]
    fn qmc_estimate_constant_and_linear() {
        let pts = sobol_points(1, 1024, Scramble::None).unwrap();
        assert_eq!(qmc_estimate(|_| 1.0, &pts, 1), 1.0);
        let mean = qmc_estimate(|y| y[0], &pts, 1);
        assert!((mean - 0.5).abs() < 1e-3, "mean = {mean}");
    }
}
