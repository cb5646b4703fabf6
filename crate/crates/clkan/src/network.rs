//! The Clifford KAN model: RBF kernels, ClSiLU residuals, layer composition,
//! batch normalization placement and exact parameter counting.
//!
//! Every edge (j, k) of a layer carries |G| multivector RBF weights plus the
//! ClSiLU weight and bias, giving |G|*D + 2D reals per edge. Node k of the
//! next layer is the sum of its incoming edge activations; hidden-layer node
//! outputs are batch-normalized, the final layer never is.
//!
//! The batched forward/backward paths below are written against flat `f64`
//! buffers for speed; the multivector-level functions ([`rbf_naive`],
//! [`rbf_clifford`], [`clsilu`], [`edge_forward_reference`]) are the readable
//! single-sample forms used by tests and by anyone poking at the model.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Multivector, Signature};
use crate::error::Error;
use crate::grid::{make_grid, Grid, GridKind, GridSpec};
use crate::math::{exp_neg, silu, silu_deriv};
use crate::norm::{self, NormCache, RunningStats};

pub const NORM_EPS: f64 = 1e-5;
pub const NORM_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RbfKind {
    Naive,
    Clifford,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    None,
    NodeWise,
    DimWise,
    ComponentWise,
}

/// Declarative model description; together with a seed it fully determines a
/// model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub signature: Signature,
    pub widths: Vec<usize>,
    pub grid: GridSpec,
    pub rbf: RbfKind,
    pub norm: NormKind,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.widths.len() < 2 || self.widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidWidths(self.widths.clone()));
        }
        Ok(())
    }
}

/// RBF kernel: exp(-||x - g||^2), always in (0, 1]. The distance is the
/// algebra's RBF distance (Euclidean over non-null blade coefficients; plain
/// Euclidean whenever r = 0).
pub fn rbf_naive(alg: &Algebra, x: &Multivector, g: &Multivector) -> f64 {
    exp_neg(alg.rbf_dist_sq(&x.coeffs, &g.coeffs))
}

/// Clifford RBF: the shifted input scaled by the naive kernel,
/// (x - g) * exp(-||x - g||^2).
pub fn rbf_clifford(alg: &Algebra, x: &Multivector, g: &Multivector) -> Multivector {
    let phi = rbf_naive(alg, x, g);
    Multivector::from_coeffs(
        x.coeffs
            .iter()
            .zip(&g.coeffs)
            .map(|(xc, gc)| (xc - gc) * phi)
            .collect(),
    )
}

/// Residual activation: w * SiLU(x) + b with component-wise SiLU and the
/// geometric product for the weight.
pub fn clsilu(alg: &Algebra, x: &Multivector, w: &Multivector, b: &Multivector) -> Multivector {
    let s = Multivector::from_coeffs(x.coeffs.iter().map(|&c| silu(c)).collect());
    let mut out = b.clone();
    alg.gp_acc(&w.coeffs, &s.coeffs, &mut out.coeffs);
    out
}

/// Single-edge activation in multivector form: the weighted RBF sum over the
/// grid plus the ClSiLU residual. Reference path for tests; the batched model
/// uses an algebraically identical fused formulation.
pub fn edge_forward_reference(
    alg: &Algebra,
    kind: RbfKind,
    grid: &Grid,
    rbf_weights: &[Multivector],
    silu_w: &Multivector,
    silu_b: &Multivector,
    x: &Multivector,
) -> Multivector {
    assert_eq!(rbf_weights.len(), grid.len(), "grid/weight mismatch");
    let mut out = clsilu(alg, x, silu_w, silu_b);
    for (g_idx, w_g) in rbf_weights.iter().enumerate() {
        let g = Multivector::from_coeffs(grid.point(g_idx).to_vec());
        match kind {
            RbfKind::Naive => {
                let phi = rbf_naive(alg, x, &g);
                for (o, wc) in out.coeffs.iter_mut().zip(&w_g.coeffs) {
                    *o += phi * wc;
                }
            }
            RbfKind::Clifford => {
                let phi_cl = rbf_clifford(alg, x, &g);
                alg.gp_acc(&w_g.coeffs, &phi_cl.coeffs, &mut out.coeffs);
            }
        }
    }
    out
}

/// Offsets of one layer's parameters inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerLayout {
    pub n_in: usize,
    pub n_out: usize,
    pub edge_base: usize,
    /// gamma/beta block for this layer's output normalization, if any
    pub norm_base: Option<usize>,
    pub norm_units: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub dim: usize,
    pub grid_len: usize,
    pub edge_stride: usize,
    pub layers: Vec<LayerLayout>,
    pub total: usize,
}

impl Layout {
    pub fn new(config: &ModelConfig) -> Result<Self, Error> {
        config.validate()?;
        let dim = config.signature.dim();
        let grid_len = config.grid.point_count(dim)?;
        let edge_stride = grid_len * dim + 2 * dim;
        let n_layers = config.widths.len() - 1;
        let mut layers = Vec::with_capacity(n_layers);
        let mut offset = 0;
        for l in 0..n_layers {
            let n_in = config.widths[l];
            let n_out = config.widths[l + 1];
            let edge_base = offset;
            offset += n_in * n_out * edge_stride;
            let is_hidden = l < n_layers - 1;
            let (norm_base, norm_units) = if is_hidden && config.norm != NormKind::None {
                let units = norm::learnable_count(config.norm, n_out, dim) / 2;
                let base = offset;
                offset += 2 * units;
                (Some(base), units)
            } else {
                (None, 0)
            };
            layers.push(LayerLayout {
                n_in,
                n_out,
                edge_base,
                norm_base,
                norm_units,
            });
        }
        Ok(Self {
            dim,
            grid_len,
            edge_stride,
            layers,
            total: offset,
        })
    }

    #[inline]
    pub fn edge_offset(&self, layer: usize, j: usize, k: usize) -> usize {
        let ll = &self.layers[layer];
        debug_assert!(j < ll.n_in && k < ll.n_out);
        ll.edge_base + (k * ll.n_in + j) * self.edge_stride
    }
}

/// Total number of trainable real parameters for a configuration.
pub fn param_count(config: &ModelConfig) -> Result<usize, Error> {
    Ok(Layout::new(config)?.total)
}

/// Borrowed view of one edge's parameter blocks.
pub struct EdgeView<'a> {
    pub rbf_weights: &'a [f64],
    pub silu_w: &'a [f64],
    pub silu_b: &'a [f64],
}

/// Per-layer intermediates kept by the training forward pass.
#[derive(Debug, Default, Clone)]
struct LayerCache {
    /// post-norm outputs of the previous layer (= this layer's inputs), B x n_in x D
    inputs: Vec<f64>,
    /// RBF values per source node, B x n_in x |G|
    phi: Vec<f64>,
    /// Clifford path only: A = sum_g phi_g w_g per edge, B x (n_out * n_in) x D
    a_sums: Vec<f64>,
    norm: NormCache,
}

/// Reusable buffer bundle for `forward_train` / `backward`.
#[derive(Debug, Default, Clone)]
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    batch: usize,
}

/// A Clifford KAN with flat parameter storage.
///
/// Inference (`forward`) is pure over shared immutable state; training-mode
/// calls mutate the running normalization statistics and must be serialized
/// by the caller (single writer per model).
#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    algebra: Algebra,
    grids: Vec<Grid>,
    layout: Layout,
    params: Vec<f64>,
    stats: Vec<RunningStats>,
}

fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

impl Model {
    /// Builds and initializes a model. The seed determines the parameter init
    /// and, for Sobol grids, the per-layer scramble (independently streamed).
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, Error> {
        let layout = Layout::new(&config)?;
        let algebra = Algebra::new(config.signature)?;
        let dim = algebra.dim();
        let n_layers = config.widths.len() - 1;

        let mut grids = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let mut spec = config.grid;
            spec.seed = mix_seed(seed, 1_000 + l as u64);
            grids.push(make_grid(&spec, dim)?);
        }

        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0));
        let w_std = 1.0 / (layout.grid_len as f64).sqrt();
        let normal = Normal::new(0.0, w_std).unwrap();
        for l in 0..n_layers {
            let ll = layout.layers[l].clone();
            for k in 0..ll.n_out {
                for j in 0..ll.n_in {
                    let off = layout.edge_offset(l, j, k);
                    for p in &mut params[off..off + layout.grid_len * dim] {
                        *p = normal.sample(&mut rng);
                    }
                    // silu_w starts as the unit scalar blade, silu_b at zero
                    params[off + layout.grid_len * dim] = 1.0;
                }
            }
            if let Some(nb) = ll.norm_base {
                for g in &mut params[nb..nb + ll.norm_units] {
                    *g = 1.0;
                }
            }
        }

        let stats = (0..n_layers)
            .map(|l| {
                if l < n_layers - 1 {
                    RunningStats::new(config.norm, config.widths[l + 1], dim)
                } else {
                    RunningStats::new(NormKind::None, 0, 0)
                }
            })
            .collect();

        Ok(Self {
            config,
            algebra,
            grids,
            layout,
            params,
            stats,
        })
    }

    /// Reassembles a model from checkpoint pieces.
    pub fn from_parts(
        config: ModelConfig,
        grids: Vec<Grid>,
        params: Vec<f64>,
        stats: Vec<RunningStats>,
    ) -> Result<Self, Error> {
        let layout = Layout::new(&config)?;
        let algebra = Algebra::new(config.signature)?;
        assert_eq!(params.len(), layout.total, "parameter vector size mismatch");
        assert_eq!(grids.len(), config.widths.len() - 1, "grid count mismatch");
        Ok(Self {
            config,
            algebra,
            grids,
            layout,
            params,
            stats,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn grids(&self) -> &[Grid] {
        &self.grids
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn stats(&self) -> &[RunningStats] {
        &self.stats
    }

    pub fn stats_mut(&mut self) -> &mut [RunningStats] {
        &mut self.stats
    }

    pub fn param_count(&self) -> usize {
        self.layout.total
    }

    pub fn edge(&self, layer: usize, j: usize, k: usize) -> EdgeView<'_> {
        let off = self.layout.edge_offset(layer, j, k);
        let d = self.layout.dim;
        let wg = self.layout.grid_len * d;
        EdgeView {
            rbf_weights: &self.params[off..off + wg],
            silu_w: &self.params[off + wg..off + wg + d],
            silu_b: &self.params[off + wg + d..off + wg + 2 * d],
        }
    }

    fn batch_of(&self, inputs: &[f64]) -> Result<usize, Error> {
        let per_sample = self.config.widths[0] * self.layout.dim;
        if inputs.is_empty() || inputs.len() % per_sample != 0 {
            return Err(Error::ArityMismatch {
                got: inputs.len(),
                expected: per_sample,
            });
        }
        Ok(inputs.len() / per_sample)
    }

    /// Inference-mode forward: deterministic and pure, uses running
    /// normalization statistics.
    pub fn forward(&self, inputs: &[f64]) -> Result<Vec<f64>, Error> {
        let batch = self.batch_of(inputs)?;
        let mut x = inputs.to_vec();
        let d = self.layout.dim;
        let n_layers = self.config.widths.len() - 1;
        for l in 0..n_layers {
            let mut out = self.layer_forward(l, &x, batch, None);
            if l < n_layers - 1 {
                let ll = &self.layout.layers[l];
                if let Some(nb) = ll.norm_base {
                    let nu = ll.norm_units;
                    let (gamma, beta) = (
                        &self.params[nb..nb + nu],
                        &self.params[nb + nu..nb + 2 * nu],
                    );
                    norm::forward_eval(
                        self.config.norm,
                        &mut out,
                        batch,
                        ll.n_out,
                        d,
                        gamma,
                        beta,
                        &self.stats[l],
                        NORM_EPS,
                    );
                }
            }
            x = out;
        }
        Ok(x)
    }

    /// Training-mode forward: batch normalization uses batch statistics,
    /// running statistics are updated, and all intermediates needed by
    /// [`Model::backward`] land in `cache`.
    pub fn forward_train(
        &mut self,
        inputs: &[f64],
        cache: &mut ForwardCache,
    ) -> Result<Vec<f64>, Error> {
        let batch = self.batch_of(inputs)?;
        let n_layers = self.config.widths.len() - 1;
        let has_norm = self.config.norm != NormKind::None && n_layers > 1;
        if batch < 2 && has_norm {
            return Err(Error::BatchTooSmall);
        }
        cache.layers.resize_with(n_layers, LayerCache::default);
        cache.batch = batch;
        let d = self.layout.dim;

        let mut x = inputs.to_vec();
        for l in 0..n_layers {
            cache.layers[l].inputs.clear();
            cache.layers[l].inputs.extend_from_slice(&x);
            // split borrow: the cache entry is taken out while the layer runs
            let mut lc = core::mem::take(&mut cache.layers[l]);
            let mut out = self.layer_forward(l, &x, batch, Some(&mut lc));
            if l < n_layers - 1 {
                let ll = self.layout.layers[l].clone();
                if let Some(nb) = ll.norm_base {
                    let nu = ll.norm_units;
                    let (gamma, beta) = (
                        self.params[nb..nb + nu].to_vec(),
                        self.params[nb + nu..nb + 2 * nu].to_vec(),
                    );
                    norm::forward_train(
                        self.config.norm,
                        &mut out,
                        batch,
                        ll.n_out,
                        d,
                        &gamma,
                        &beta,
                        &mut self.stats[l],
                        NORM_MOMENTUM,
                        NORM_EPS,
                        &mut lc.norm,
                    );
                }
            }
            cache.layers[l] = lc;
            x = out;
        }
        Ok(x)
    }

    /// One layer's edge sums for the whole batch. When `cache` is given, phi
    /// and the Clifford A-sums are recorded for the backward pass.
    ///
    /// The per-grid-point loops below dominate training time, so they are
    /// monomorphized over the algebra dimension (see `phi_row_fill` /
    /// `edge_grad_gloop`); the dynamic fallbacks keep the identical
    /// summation order, so dispatch never changes results.
    fn layer_forward(
        &self,
        layer: usize,
        x: &[f64],
        batch: usize,
        cache: Option<&mut LayerCache>,
    ) -> Vec<f64> {
        let d = self.layout.dim;
        let gl = self.layout.grid_len;
        let ll = &self.layout.layers[layer];
        let (n_in, n_out) = (ll.n_in, ll.n_out);
        let grid = &self.grids[layer];
        let clifford = self.config.rbf == RbfKind::Clifford;

        // phi[b][j][g]
        let mask = self.algebra.rbf_mask();
        let gpts = grid.points();
        let mut phi = vec![0.0; batch * n_in * gl];
        if grid.spec.kind == GridKind::Full {
            // A full grid is the Cartesian product of one 1-D lattice, so
            // exp(-sum_c m_c d_c^2) = prod_c exp(-m_c d_c^2): N_g exponentials
            // per coordinate replace N_g^D per point. The exponentials
            // dominate epoch time, so this is worth the index bookkeeping.
            let ng = grid.spec.points_per_dim;
            // last coordinate varies fastest, so points 0..ng trace the lattice
            let lattice: Vec<f64> = (0..ng).map(|t| grid.point(t)[d - 1]).collect();
            let mut etab = vec![0.0; d * ng];
            let mut idx = vec![0usize; d];
            for b in 0..batch {
                for j in 0..n_in {
                    let xv = &x[(b * n_in + j) * d..(b * n_in + j + 1) * d];
                    for c in 0..d {
                        for (t, &u) in lattice.iter().enumerate() {
                            let dd = xv[c] - u;
                            etab[c * ng + t] = exp_neg(mask[c] * dd * dd);
                        }
                    }
                    let row = &mut phi[(b * n_in + j) * gl..(b * n_in + j + 1) * gl];
                    idx.iter_mut().for_each(|v| *v = 0);
                    for pv in row.iter_mut() {
                        let mut p = etab[idx[0]];
                        for c in 1..d {
                            p *= etab[c * ng + idx[c]];
                        }
                        *pv = p;
                        for c in (0..d).rev() {
                            idx[c] += 1;
                            if idx[c] < ng {
                                break;
                            }
                            idx[c] = 0;
                        }
                    }
                }
            }
        } else {
            for b in 0..batch {
                for j in 0..n_in {
                    let xv = &x[(b * n_in + j) * d..(b * n_in + j + 1) * d];
                    let row = &mut phi[(b * n_in + j) * gl..(b * n_in + j + 1) * gl];
                    match d {
                        2 => phi_row_fill::<2>(xv, gpts, mask, row),
                        4 => phi_row_fill::<4>(xv, gpts, mask, row),
                        8 => phi_row_fill::<8>(xv, gpts, mask, row),
                        16 => phi_row_fill::<16>(xv, gpts, mask, row),
                        _ => {
                            for (g_idx, pv) in row.iter_mut().enumerate() {
                                *pv = exp_neg(self.algebra.rbf_dist_sq(xv, grid.point(g_idx)));
                            }
                        }
                    }
                }
            }
        }

        // Clifford path: per-edge P_g = w_g * g, fused so the grid loop below
        // is a pair of phi-weighted sums instead of a product per point
        let mut p_table = Vec::new();
        if clifford {
            p_table.resize(n_out * n_in * gl * d, 0.0);
            for k in 0..n_out {
                for j in 0..n_in {
                    let off = self.layout.edge_offset(layer, j, k);
                    let w = &self.params[off..off + gl * d];
                    let pt = &mut p_table[(k * n_in + j) * gl * d..(k * n_in + j + 1) * gl * d];
                    for g_idx in 0..gl {
                        self.algebra.gp_acc(
                            &w[g_idx * d..(g_idx + 1) * d],
                            grid.point(g_idx),
                            &mut pt[g_idx * d..(g_idx + 1) * d],
                        );
                    }
                }
            }
        }

        // SiLU(x) per input node, shared by all outgoing edges
        let mut s_tab = vec![0.0; batch * n_in * d];
        for (s, &xc) in s_tab.iter_mut().zip(x.iter()) {
            *s = silu(xc);
        }

        let mut out = vec![0.0; batch * n_out * d];
        let (mut a_sums, mut b_sums) = if clifford {
            (
                vec![0.0; batch * n_out * n_in * d],
                vec![0.0; batch * n_out * n_in * d],
            )
        } else {
            (Vec::new(), Vec::new())
        };

        // Clifford pass 1: A = sum_g phi_g w_g and B = sum_g phi_g P_g for
        // every edge. For a fixed input node this is one (batch x gl) x
        // (gl x n_out*d) product, so the weights are repacked with the
        // (k, c) columns contiguous and the grid loop runs over whole rows;
        // per-accumulator summation order stays ascending in g.
        if clifford {
            let kd = n_out * d;
            let mut wj = vec![0.0; gl * kd];
            let mut pj = vec![0.0; gl * kd];
            let mut acc_av = vec![0.0; kd];
            let mut acc_bv = vec![0.0; kd];
            for j in 0..n_in {
                for k in 0..n_out {
                    let off = self.layout.edge_offset(layer, j, k);
                    let w = &self.params[off..off + gl * d];
                    let pt = &p_table[(k * n_in + j) * gl * d..(k * n_in + j + 1) * gl * d];
                    for g_idx in 0..gl {
                        for c in 0..d {
                            wj[g_idx * kd + k * d + c] = w[g_idx * d + c];
                            pj[g_idx * kd + k * d + c] = pt[g_idx * d + c];
                        }
                    }
                }
                for b in 0..batch {
                    let phi_row = &phi[(b * n_in + j) * gl..(b * n_in + j + 1) * gl];
                    acc_av.iter_mut().for_each(|v| *v = 0.0);
                    acc_bv.iter_mut().for_each(|v| *v = 0.0);
                    for (g_idx, &f) in phi_row.iter().enumerate() {
                        let wrow = &wj[g_idx * kd..(g_idx + 1) * kd];
                        let prow = &pj[g_idx * kd..(g_idx + 1) * kd];
                        for m in 0..kd {
                            acc_av[m] += f * wrow[m];
                            acc_bv[m] += f * prow[m];
                        }
                    }
                    for k in 0..n_out {
                        let e = ((b * n_out + k) * n_in + j) * d;
                        a_sums[e..e + d].copy_from_slice(&acc_av[k * d..(k + 1) * d]);
                        b_sums[e..e + d].copy_from_slice(&acc_bv[k * d..(k + 1) * d]);
                    }
                }
            }
        }

        // pass 2: combine the edge sums with the geometric product and add
        // the ClSiLU residual, in the per-edge order of the definition
        for b in 0..batch {
            for k in 0..n_out {
                let out_kv = &mut out[(b * n_out + k) * d..(b * n_out + k + 1) * d];
                for j in 0..n_in {
                    let xv = &x[(b * n_in + j) * d..(b * n_in + j + 1) * d];
                    let off = self.layout.edge_offset(layer, j, k);

                    if clifford {
                        let e = ((b * n_out + k) * n_in + j) * d;
                        // Phi_Cl = A * x - sum phi P  (since w*(x-g)phi = phi(w*x) - phi(w*g))
                        let a = &a_sums[e..e + d];
                        self.algebra.gp_acc(a, xv, out_kv);
                        for c in 0..d {
                            out_kv[c] -= b_sums[e + c];
                        }
                    } else {
                        let phi_row = &phi[(b * n_in + j) * gl..(b * n_in + j + 1) * gl];
                        let w = &self.params[off..off + gl * d];
                        for g_idx in 0..gl {
                            let f = phi_row[g_idx];
                            let wg = &w[g_idx * d..(g_idx + 1) * d];
                            for c in 0..d {
                                out_kv[c] += f * wg[c];
                            }
                        }
                    }

                    // ClSiLU residual
                    let silu_w = &self.params[off + gl * d..off + gl * d + d];
                    let silu_b = &self.params[off + gl * d + d..off + gl * d + 2 * d];
                    let sv = &s_tab[(b * n_in + j) * d..(b * n_in + j + 1) * d];
                    for c in 0..d {
                        out_kv[c] += silu_b[c];
                    }
                    self.algebra.gp_acc(silu_w, sv, out_kv);
                }
            }
        }

        if let Some(lc) = cache {
            lc.phi = phi;
            lc.a_sums = a_sums;
        }
        out
    }

    /// Reverse pass: accumulates dLoss/dparam into `grads` (same layout as
    /// `params`) given the output gradient from `forward_train`'s cache.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &[f64], grads: &mut [f64]) {
        assert_eq!(grads.len(), self.layout.total);
        let batch = cache.batch;
        let d = self.layout.dim;
        let gl = self.layout.grid_len;
        let n_layers = self.config.widths.len() - 1;
        assert_eq!(grad_out.len(), batch * self.config.widths[n_layers] * d);

        let mut upstream = grad_out.to_vec();
        for l in (0..n_layers).rev() {
            let ll = self.layout.layers[l].clone();
            let lc = &cache.layers[l];
            let clifford = self.config.rbf == RbfKind::Clifford;
            let grid = &self.grids[l];

            // through this layer's output normalization first
            if let Some(nb) = ll.norm_base {
                let nu = ll.norm_units;
                let gamma = &self.params[nb..nb + nu];
                let (gg, gb) = {
                    let (a, b) = grads[nb..nb + 2 * nu].split_at_mut(nu);
                    (a, b)
                };
                norm::backward(
                    self.config.norm,
                    &mut upstream,
                    batch,
                    ll.n_out,
                    d,
                    gamma,
                    &lc.norm,
                    gg,
                    gb,
                );
            }

            let mut grad_in = vec![0.0; batch * ll.n_in * d];
            let mut r_buf = vec![0.0; d];
            let mut vsum = vec![0.0; d];
            let mut sbuf = vec![0.0; gl * d];
            let mut p_table = vec![0.0; if clifford { gl * d } else { 0 }];
            let mut silu_vals = vec![0.0; d];
            let mut adj = vec![0.0; d];

            for k in 0..ll.n_out {
                for j in 0..ll.n_in {
                    let off = self.layout.edge_offset(l, j, k);
                    let (w, rest) = self.params[off..off + gl * d + 2 * d].split_at(gl * d);
                    let silu_w = &rest[..d];
                    if clifford {
                        sbuf.iter_mut().for_each(|v| *v = 0.0);
                        // P_g = w_g * g, shared by every sample of this edge
                        p_table.iter_mut().for_each(|v| *v = 0.0);
                        for g_idx in 0..gl {
                            self.algebra.gp_acc(
                                &w[g_idx * d..(g_idx + 1) * d],
                                grid.point(g_idx),
                                &mut p_table[g_idx * d..(g_idx + 1) * d],
                            );
                        }
                    }

                    for b in 0..batch {
                        let ybar = &upstream[(b * ll.n_out + k) * d..(b * ll.n_out + k + 1) * d];
                        let xv = &lc.inputs[(b * ll.n_in + j) * d..(b * ll.n_in + j + 1) * d];
                        let phi_row = &lc.phi[(b * ll.n_in + j) * gl..(b * ll.n_in + j + 1) * gl];
                        let gx =
                            &mut grad_in[(b * ll.n_in + j) * d..(b * ll.n_in + j + 1) * d];

                        let mut csum = 0.0;
                        vsum.iter_mut().for_each(|v| *v = 0.0);

                        if clifford {
                            // R = dL/dA where the edge output is A*x - sum phi P
                            r_buf.iter_mut().for_each(|v| *v = 0.0);
                            self.algebra.gp_adj_a(xv, ybar, &mut r_buf);
                            let gw = &mut grads[off..off + gl * d];
                            let gpts = grid.points();
                            csum = match d {
                                2 => edge_grad_gloop::<2>(
                                    phi_row, w, &p_table, gpts, &r_buf, ybar, gw,
                                    &mut sbuf, &mut vsum,
                                ),
                                4 => edge_grad_gloop::<4>(
                                    phi_row, w, &p_table, gpts, &r_buf, ybar, gw,
                                    &mut sbuf, &mut vsum,
                                ),
                                8 => edge_grad_gloop::<8>(
                                    phi_row, w, &p_table, gpts, &r_buf, ybar, gw,
                                    &mut sbuf, &mut vsum,
                                ),
                                16 => edge_grad_gloop::<16>(
                                    phi_row, w, &p_table, gpts, &r_buf, ybar, gw,
                                    &mut sbuf, &mut vsum,
                                ),
                                _ => edge_grad_gloop_dyn(
                                    d, phi_row, w, &p_table, gpts, &r_buf, ybar, gw,
                                    &mut sbuf, &mut vsum,
                                ),
                            };
                            // dL/dx through A * x
                            let a = &lc.a_sums
                                [((b * ll.n_out + k) * ll.n_in + j) * d..][..d];
                            self.algebra.gp_adj_b(a, ybar, gx);
                        } else {
                            let gw = &mut grads[off..off + gl * d];
                            for g_idx in 0..gl {
                                let f = phi_row[g_idx];
                                let wg = &w[g_idx * d..(g_idx + 1) * d];
                                let gp = grid.point(g_idx);
                                let mut t = 0.0;
                                for c in 0..d {
                                    t += wg[c] * ybar[c];
                                    gw[g_idx * d + c] += f * ybar[c];
                                }
                                let tb = t * f;
                                csum += tb;
                                for c in 0..d {
                                    vsum[c] += tb * gp[c];
                                }
                            }
                        }

                        // dphi/dx: phi' = -2 mask (x - g) phi, summed over the
                        // grid; null components never enter the distance
                        let mask = self.algebra.rbf_mask();
                        for c in 0..d {
                            gx[c] += -2.0 * mask[c] * (xv[c] * csum - vsum[c]);
                        }

                        // residual: out += silu_w * SiLU(x) + silu_b
                        for c in 0..d {
                            silu_vals[c] = silu(xv[c]);
                        }
                        adj.iter_mut().for_each(|v| *v = 0.0);
                        self.algebra.gp_adj_b(silu_w, ybar, &mut adj);
                        for c in 0..d {
                            gx[c] += adj[c] * silu_deriv(xv[c]);
                        }
                        let gsw = &mut grads[off + gl * d..off + gl * d + d];
                        adj.iter_mut().for_each(|v| *v = 0.0);
                        self.algebra.gp_adj_a(&silu_vals, ybar, &mut adj);
                        for c in 0..d {
                            gsw[c] += adj[c];
                        }
                        let gsb = &mut grads[off + gl * d + d..off + gl * d + 2 * d];
                        for c in 0..d {
                            gsb[c] += ybar[c];
                        }
                    }

                    if clifford {
                        // the -sum_b phi P_g term: dL/dw_g += adj_a(g, -S_g)
                        let gw = &mut grads[off..off + gl * d];
                        for g_idx in 0..gl {
                            let gp = grid.point(g_idx);
                            let s_g = &sbuf[g_idx * d..(g_idx + 1) * d];
                            for i in 0..d {
                                let mut acc = 0.0;
                                for jj in 0..d {
                                    acc += self.algebra.sign(i, jj) * gp[jj] * s_g[i ^ jj];
                                }
                                gw[g_idx * d + i] -= acc;
                            }
                        }
                    }
                }
            }
            upstream = grad_in;
        }
    }
}

/// phi[g] = exp(-masked dist^2(x, g)) for one input node over a whole grid.
/// Same accumulation order as `Algebra::rbf_dist_sq`.
#[inline]
fn phi_row_fill<const D: usize>(xv: &[f64], grid_pts: &[f64], mask: &[f64], row: &mut [f64]) {
    let mut x = [0.0f64; D];
    x.copy_from_slice(&xv[..D]);
    let mut m = [0.0f64; D];
    m.copy_from_slice(&mask[..D]);
    for (g_idx, pv) in row.iter_mut().enumerate() {
        let gp = &grid_pts[g_idx * D..(g_idx + 1) * D];
        let mut acc = 0.0;
        for c in 0..D {
            let dd = x[c] - gp[c];
            acc += m[c] * dd * dd;
        }
        *pv = exp_neg(acc);
    }
}

/// Backward grid loop of one Clifford edge for one sample: accumulates the
/// phi-weighted weight gradients (`gw`), the per-point ybar sums (`sbuf`,
/// consumed by the -sum phi P_g term), writes the dphi/dx grid moment into
/// `vsum`, and returns csum = sum_g phi_g dL/dphi_g.
#[inline]
#[allow(clippy::too_many_arguments)]
fn edge_grad_gloop<const D: usize>(
    phi_row: &[f64],
    w: &[f64],
    pt: &[f64],
    grid_pts: &[f64],
    r: &[f64],
    ybar: &[f64],
    gw: &mut [f64],
    sbuf: &mut [f64],
    vsum: &mut [f64],
) -> f64 {
    let mut rr = [0.0f64; D];
    rr.copy_from_slice(&r[..D]);
    let mut yy = [0.0f64; D];
    yy.copy_from_slice(&ybar[..D]);
    let mut vs = [0.0f64; D];
    let mut csum = 0.0;
    for (g_idx, &f) in phi_row.iter().enumerate() {
        let wg = &w[g_idx * D..(g_idx + 1) * D];
        let pg = &pt[g_idx * D..(g_idx + 1) * D];
        let gp = &grid_pts[g_idx * D..(g_idx + 1) * D];
        // dL/dphi_g = w_g . R - P_g . ybar
        let mut t = 0.0;
        for c in 0..D {
            t += wg[c] * rr[c] - pg[c] * yy[c];
        }
        let tb = t * f;
        csum += tb;
        let gwr = &mut gw[g_idx * D..(g_idx + 1) * D];
        let sbr = &mut sbuf[g_idx * D..(g_idx + 1) * D];
        for c in 0..D {
            vs[c] += tb * gp[c];
            gwr[c] += f * rr[c];
            sbr[c] += f * yy[c];
        }
    }
    vsum[..D].copy_from_slice(&vs);
    csum
}

#[allow(clippy::too_many_arguments)]
fn edge_grad_gloop_dyn(
    d: usize,
    phi_row: &[f64],
    w: &[f64],
    pt: &[f64],
    grid_pts: &[f64],
    r: &[f64],
    ybar: &[f64],
    gw: &mut [f64],
    sbuf: &mut [f64],
    vsum: &mut [f64],
) -> f64 {
    vsum[..d].iter_mut().for_each(|v| *v = 0.0);
    let mut csum = 0.0;
    for (g_idx, &f) in phi_row.iter().enumerate() {
        let wg = &w[g_idx * d..(g_idx + 1) * d];
        let pg = &pt[g_idx * d..(g_idx + 1) * d];
        let gp = &grid_pts[g_idx * d..(g_idx + 1) * d];
        let mut t = 0.0;
        for c in 0..d {
            t += wg[c] * r[c] - pg[c] * ybar[c];
        }
        let tb = t * f;
        csum += tb;
        let gwr = &mut gw[g_idx * d..(g_idx + 1) * d];
        let sbr = &mut sbuf[g_idx * d..(g_idx + 1) * d];
        for c in 0..d {
            vsum[c] += tb * gp[c];
            gwr[c] += f * r[c];
            sbr[c] += f * ybar[c];
        }
    }
    csum
}
