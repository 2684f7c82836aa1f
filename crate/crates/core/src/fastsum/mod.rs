//! Near/far split evaluation with pluggable far-field summation.

mod tree;

pub use tree::{direct_cauchy_sum, direct_log_sum, series_order, SourceTree, LEAF_SIZE, MIN_EPS, THETA};

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closeeval::{expansion_coefficients, CloseEvalOutput, CloseEvalParams, EvalPath, FineGrid, LocalExpansion};
use crate::error::{Error, Result};
use crate::geometry::{BoxCover, Curve, NodeGeometry};
use crate::potentials::{physical, point_kernel, Density, Kernel, Layer, Pde};

/// Kernel used by summation backends: the layer-potential kernel, except that
/// the Laplace single layer uses `log |y - z|`.
#[inline]
pub fn sum_kernel(kernel: &Kernel, g: &NodeGeometry, z: Complex64) -> Complex64 {
    match (kernel.pde, kernel.layer) {
        (Pde::Laplace, Layer::Single) => Complex64::new(-(g.z - z).norm().ln() * g.speed() / TAU, 0.0),
        _ => point_kernel(kernel, g, z),
    }
}

/// Far-field summation `out_i = sum_j k(z_i, y_j) w_j`.
pub trait SummationBackend: Sync {
    fn name(&self) -> &'static str;
    fn supports(&self, kernel: &Kernel) -> bool;
    /// Declared accuracy relative to `sum |w_j|`.
    fn accuracy(&self) -> f64;
    fn sum(&self, kernel: &Kernel, sources: &[NodeGeometry], weights: &[Complex64], targets: &[Complex64]) -> Result<Vec<Complex64>>;
}

/// Exact `O(sources x targets)` summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectBackend;

impl SummationBackend for DirectBackend {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn supports(&self, _kernel: &Kernel) -> bool {
        true
    }

    fn accuracy(&self) -> f64 {
        0.0
    }

    fn sum(&self, kernel: &Kernel, sources: &[NodeGeometry], weights: &[Complex64], targets: &[Complex64]) -> Result<Vec<Complex64>> {
        Ok(targets
            .par_iter()
            .map(|&z| sources.iter().zip(weights).map(|(g, w)| sum_kernel(kernel, g, z) * w).sum())
            .collect())
    }
}

/// Quadtree treecode for Laplace kernels.
#[derive(Debug, Clone, Copy)]
pub struct TreeBackend {
    eps: f64,
}

impl TreeBackend {
    pub fn new(eps: f64) -> Result<Self> {
        series_order(eps)?;
        Ok(Self { eps })
    }
}

impl SummationBackend for TreeBackend {
    fn name(&self) -> &'static str {
        "tree"
    }

    fn supports(&self, kernel: &Kernel) -> bool {
        kernel.pde == Pde::Laplace
    }

    fn accuracy(&self) -> f64 {
        self.eps
    }

    fn sum(&self, kernel: &Kernel, sources: &[NodeGeometry], weights: &[Complex64], targets: &[Complex64]) -> Result<Vec<Complex64>> {
        if !self.supports(kernel) {
            return Err(Error::BackendMismatch(format!("{:?} kernels in the tree backend", kernel.pde)));
        }
        let points: Vec<Complex64> = sources.iter().map(|g| g.z).collect();
        let tree = SourceTree::new(&points, self.eps)?;
        Ok(match kernel.layer {
            Layer::Double => {
                let q: Vec<Complex64> = sources.iter().zip(weights).map(|(g, w)| Complex64::new(0.0, 1.0 / TAU) * g.dz * w).collect();
                tree.cauchy_sum(&q, targets)
            }
            _ => {
                let q: Vec<Complex64> = sources.iter().zip(weights).map(|(g, w)| -w * g.speed() / TAU).collect();
                tree.log_sum(&q, targets)
            }
        })
    }
}

/// Cutoff radius rule: `factor` times the widest bad annulus among the box
/// and `neighbors` boxes on each side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffRule {
    pub factor: f64,
    pub neighbors: usize,
}

impl Default for CutoffRule {
    fn default() -> Self {
        Self { factor: 2.5, neighbors: 3 }
    }
}

const WIDTH_SAMPLES: usize = 9;

/// Width `max_t |Z(t +- i alpha_bad) - Z(t)|` of the bad annulus over each box.
pub fn annulus_widths(curve: &Curve, cover: &BoxCover) -> Vec<f64> {
    let a = cover.spec.side.sign() * cover.spec.alpha_bad;
    cover
        .boxes
        .iter()
        .map(|b| {
            (0..WIDTH_SAMPLES)
                .map(|i| {
                    let t = b.t_lo + (b.t_hi - b.t_lo) * i as f64 / (WIDTH_SAMPLES - 1) as f64;
                    (curve.eval(Complex64::new(t, a)) - curve.point(t)).norm()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Cutoff `G` of every box.
pub fn cutoffs(curve: &Curve, cover: &BoxCover, rule: CutoffRule) -> Vec<f64> {
    let widths = annulus_widths(curve, cover);
    let n = widths.len();
    let k = rule.neighbors.min(n / 2);
    (0..n)
        .map(|b| {
            let w = (0..=2 * k).map(|o| widths[(b + n + o - k) % n]).fold(0.0, f64::max);
            rule.factor * w
        })
        .collect()
}

/// Cutoff `G` of one box.
pub fn choose_cutoff(curve: &Curve, cover: &BoxCover, box_index: usize, rule: CutoffRule) -> f64 {
    cutoffs(curve, cover, rule)[box_index]
}

/// Contiguous band of fine nodes within the cutoff of a box center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearSet {
    pub box_index: usize,
    pub cutoff: f64,
    pub start: usize,
    pub len: usize,
    pub m: usize,
}

impl NearSet {
    /// Grows the band from the fine node nearest `center` while nodes stay
    /// within `cutoff`; the search for that node starts at parameter `t0`.
    pub fn build(box_index: usize, center: Complex64, t0: f64, cutoff: f64, fine: &FineGrid) -> Self {
        let nodes = &fine.nodes.nodes;
        let m = nodes.len();
        let dist = |j: usize| (nodes[j % m].z - center).norm();
        let mut nearest = ((t0.rem_euclid(TAU) * m as f64 / TAU).round() as usize) % m;
        loop {
            let (l, r) = ((nearest + m - 1) % m, (nearest + 1) % m);
            let next = if dist(l) < dist(nearest) { l } else if dist(r) < dist(nearest) { r } else { break };
            nearest = next;
        }
        if dist(nearest) > cutoff {
            return Self { box_index, cutoff, start: nearest, len: 0, m };
        }
        let mut left = 0;
        while left + 1 < m && dist(nearest + m - left - 1) <= cutoff {
            left += 1;
        }
        let mut right = 0;
        while left + right + 1 < m && dist(nearest + right + 1) <= cutoff {
            right += 1;
        }
        Self { box_index, cutoff, start: (nearest + m - left) % m, len: left + right + 1, m }
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).map(move |k| (self.start + k) % self.m)
    }
}

/// Cover, fine data, near sets and near-only expansions, built once.
pub struct SplitPlan {
    pub kernel: Kernel,
    pub params: CloseEvalParams,
    pub cover: BoxCover,
    pub fine: FineGrid,
    pub near: Vec<NearSet>,
    pub expansions: Vec<LocalExpansion>,
    curve: std::sync::Arc<Curve>,
}

impl SplitPlan {
    pub fn new(kernel: &Kernel, density: &Density, params: &CloseEvalParams, rule: CutoffRule) -> Result<Self> {
        params.validate()?;
        let curve = density.curve().clone();
        let cover = BoxCover::build(&curve, params.cover_spec())?;
        let fine = FineGrid::new(density, params.fine_count(density.len()))?;
        let g = cutoffs(&curve, &cover, rule);
        let near: Vec<NearSet> = cover.boxes.iter().map(|b| NearSet::build(b.index, b.center, b.center_param.re, g[b.index], &fine)).collect();
        let w = fine.weight();
        let expansions = cover
            .boxes
            .par_iter()
            .zip(&near)
            .map(|(b, ns)| {
                let nodes = &fine.nodes.nodes;
                let sources = ns.indices().map(|j| (&nodes[j], &fine.values[j]));
                let coeffs = expansion_coefficients(kernel, params.p, b.center, sources, w);
                let kind = match kernel.pde {
                    Pde::Laplace => crate::closeeval::ExpansionKind::LaplaceTaylor,
                    Pde::Helmholtz => crate::closeeval::ExpansionKind::HelmholtzFb,
                };
                LocalExpansion { center: b.center, kind, omega: kernel.omega, p: params.p, coeffs, radius: b.radius }
            })
            .collect();
        Ok(Self { kernel: *kernel, params: *params, cover, fine, near, expansions, curve })
    }

    /// Mean `|J_near|` over the boxes.
    pub fn mean_near(&self) -> f64 {
        self.near.iter().map(|n| n.len as f64).sum::<f64>() / self.near.len().max(1) as f64
    }

    pub fn evaluate(&self, targets: &[Complex64], backend: &dyn SummationBackend) -> Result<CloseEvalOutput> {
        if !backend.supports(&self.kernel) {
            return Err(Error::BackendMismatch(format!("{} backend with {:?} kernel", backend.name(), self.kernel.pde)));
        }
        let paths: Vec<EvalPath> = targets
            .par_iter()
            .map(|&z| self.cover.locate(&self.curve, z).map_or(EvalPath::Native, |(b, _)| EvalPath::Surrogate(b)))
            .collect();
        let w = self.fine.weight();
        let weights: Vec<Complex64> = self.fine.values.iter().map(|v| v * w).collect();
        let nodes = &self.fine.nodes.nodes;
        let far = backend.sum(&self.kernel, nodes, &weights, targets)?;
        let values = targets
            .par_iter()
            .zip(&paths)
            .zip(&far)
            .map(|((&z, path), &f)| match *path {
                EvalPath::Native => physical(&self.kernel, f),
                EvalPath::Surrogate(b) => {
                    let near_direct: Complex64 = self.near[b].indices().map(|j| sum_kernel(&self.kernel, &nodes[j], z) * weights[j]).sum();
                    physical(&self.kernel, self.expansions[b].eval(z) + f - near_direct)
                }
            })
            .collect();
        Ok(CloseEvalOutput { values, paths })
    }
}

/// Split evaluation: near expansions plus backend far sums.
pub fn split_evaluate(
    kernel: &Kernel,
    density: &Density,
    params: &CloseEvalParams,
    rule: CutoffRule,
    targets: &[Complex64],
    backend: &dyn SummationBackend,
) -> Result<CloseEvalOutput> {
    SplitPlan::new(kernel, density, params, rule)?.evaluate(targets, backend)
}
