//! Quadtree treecode for the complex Cauchy sum `sum q / (y - z)` and the
//! log sum `sum q log |z - y|`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Maximum number of sources in a leaf.
pub const LEAF_SIZE: usize = 40;
/// Multipole acceptance ratio: a box of radius `r` is used through its
/// expansion when `r <= THETA * |z - c|`.
pub const THETA: f64 = 0.5;
/// Smallest supported accuracy.
pub const MIN_EPS: f64 = 1e-14;

enum Visit {
    /// Node index and offset `z - center`.
    Far(usize, Complex64),
    /// Sorted source range of a leaf.
    Near(usize, usize),
}

#[derive(Debug, Clone)]
struct Node {
    center: Complex64,
    radius: f64,
    start: usize,
    end: usize,
    children: Vec<usize>,
}

/// Source tree with a fixed expansion order.
#[derive(Debug, Clone)]
pub struct SourceTree {
    order: usize,
    points: Vec<Complex64>,
    /// `perm[k]` is the original index of the `k`-th sorted source.
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

/// Series order `ceil(log2(1/eps)) + 2`.
pub fn series_order(eps: f64) -> Result<usize> {
    if !(eps >= MIN_EPS && eps < 1.0) {
        return Err(Error::Unsupported(format!("tree accuracy {eps:e} outside [{MIN_EPS:e}, 1)")));
    }
    Ok((1.0 / eps).log2().ceil() as usize + 2)
}

impl SourceTree {
    pub fn new(points: &[Complex64], eps: f64) -> Result<Self> {
        let order = series_order(eps)?;
        let mut perm: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        if !points.is_empty() {
            let (mut lo, mut hi) = (points[0], points[0]);
            for p in points {
                lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
                hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
            }
            let half = 0.5 * (hi.re - lo.re).max(hi.im - lo.im) * (1.0 + 1e-12) + f64::MIN_POSITIVE;
            build(points, &mut perm, 0, points.len(), 0.5 * (lo + hi), half, &mut nodes);
        }
        let sorted = perm.iter().map(|&i| points[i]).collect();
        Ok(Self { order, points: sorted, perm, nodes })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn sorted_charges(&self, charges: &[Complex64]) -> Vec<Complex64> {
        self.perm.iter().map(|&i| charges[i]).collect()
    }

    /// Coefficients `a_0 = sum q`, `a_k = -sum q (y - c)^k / k` of every node.
    fn moments(&self, q: &[Complex64]) -> Vec<Vec<Complex64>> {
        self.nodes
            .par_iter()
            .map(|node| {
                let mut a = vec![Complex64::new(0.0, 0.0); self.order + 1];
                for (y, qj) in self.points[node.start..node.end].iter().zip(&q[node.start..node.end]) {
                    let d = y - node.center;
                    let mut pw = *qj;
                    a[0] += qj;
                    for (k, ak) in a.iter_mut().enumerate().skip(1) {
                        pw *= d;
                        *ak -= pw / k as f64;
                    }
                }
                a
            })
            .collect()
    }

    fn traverse(&self, z: Complex64, mut visit: impl FnMut(Visit)) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            let d = z - node.center;
            if node.radius <= THETA * d.norm() {
                visit(Visit::Far(i, d));
            } else if node.children.is_empty() {
                visit(Visit::Near(node.start, node.end));
            } else {
                stack.extend(node.children.iter().copied());
            }
        }
    }

    /// `sum_j q_j / (y_j - z)` at every target.
    pub fn cauchy_sum(&self, charges: &[Complex64], targets: &[Complex64]) -> Vec<Complex64> {
        let q = self.sorted_charges(charges);
        let moments = self.moments(&q);
        targets
            .par_iter()
            .map(|&z| {
                let mut acc = Complex64::new(0.0, 0.0);
                self.traverse(z, |v| match v {
                    Visit::Far(i, d) => {
                        // -Phi'(z) = -a_0/d + sum k a_k d^{-k-1}
                        let a = &moments[i];
                        let inv = 1.0 / d;
                        let mut horner = Complex64::new(0.0, 0.0);
                        for k in (1..a.len()).rev() {
                            horner = horner * inv + a[k] * k as f64;
                        }
                        acc += -a[0] * inv + horner * inv * inv;
                    }
                    Visit::Near(s, e) => {
                        for (y, qj) in self.points[s..e].iter().zip(&q[s..e]) {
                            acc += qj / (y - z);
                        }
                    }
                });
                acc
            })
            .collect()
    }

    /// `sum_j q_j log |z - y_j|` at every target.
    pub fn log_sum(&self, charges: &[Complex64], targets: &[Complex64]) -> Vec<Complex64> {
        let q = self.sorted_charges(charges);
        let re: Vec<Complex64> = q.iter().map(|c| Complex64::new(c.re, 0.0)).collect();
        let im: Vec<Complex64> = q.iter().map(|c| Complex64::new(c.im, 0.0)).collect();
        let (m_re, m_im) = (self.moments(&re), self.moments(&im));
        let phi = |a: &[Complex64], d: Complex64| -> f64 {
            let inv = 1.0 / d;
            let mut horner = Complex64::new(0.0, 0.0);
            for ak in a[1..].iter().rev() {
                horner = (horner + ak) * inv;
            }
            a[0].re * d.norm().ln() + horner.re
        };
        targets
            .par_iter()
            .map(|&z| {
                let (mut sr, mut si) = (0.0, 0.0);
                self.traverse(z, |v| match v {
                    Visit::Far(i, d) => {
                        sr += phi(&m_re[i], d);
                        si += phi(&m_im[i], d);
                    }
                    Visit::Near(s, e) => {
                        for (y, qj) in self.points[s..e].iter().zip(&q[s..e]) {
                            let l = (z - y).norm().ln();
                            sr += qj.re * l;
                            si += qj.im * l;
                        }
                    }
                });
                Complex64::new(sr, si)
            })
            .collect()
    }
}

fn build(
    points: &[Complex64],
    perm: &mut [usize],
    start: usize,
    end: usize,
    center: Complex64,
    half: f64,
    nodes: &mut Vec<Node>,
) -> usize {
    let radius = perm[start..end].iter().map(|&i| (points[i] - center).norm()).fold(0.0, f64::max);
    let id = nodes.len();
    nodes.push(Node { center, radius, start, end, children: Vec::new() });
    if end - start <= LEAF_SIZE || half < 1e-14 * center.norm().max(1.0) {
        return id;
    }
    let slice = &mut perm[start..end];
    // Partition by quadrant: first along x, then each half along y.
    let split = |s: &mut [usize], pred: &dyn Fn(Complex64) -> bool| -> usize {
        let mut k = 0;
        for j in 0..s.len() {
            if pred(points[s[j]]) {
                s.swap(k, j);
                k += 1;
            }
        }
        k
    };
    let mx = split(slice, &|p| p.re < center.re);
    let my_lo = split(&mut slice[..mx], &|p| p.im < center.im);
    let my_hi = split(&mut slice[mx..], &|p| p.im < center.im);
    let bounds = [
        (start, start + my_lo, Complex64::new(-1.0, -1.0)),
        (start + my_lo, start + mx, Complex64::new(-1.0, 1.0)),
        (start + mx, start + mx + my_hi, Complex64::new(1.0, -1.0)),
        (start + mx + my_hi, end, Complex64::new(1.0, 1.0)),
    ];
    let h = 0.5 * half;
    let mut children = Vec::new();
    for (s, e, dir) in bounds {
        if e > s {
            children.push(build(points, perm, s, e, center + dir * h, h, nodes));
        }
    }
    nodes[id].children = children;
    id
}

/// Reference `sum_j q_j / (y_j - z)`.
pub fn direct_cauchy_sum(sources: &[Complex64], charges: &[Complex64], targets: &[Complex64]) -> Vec<Complex64> {
    targets.par_iter().map(|&z| sources.iter().zip(charges).map(|(y, q)| q / (y - z)).sum()).collect()
}

/// Reference `sum_j q_j log |z - y_j|`.
pub fn direct_log_sum(sources: &[Complex64], charges: &[Complex64], targets: &[Complex64]) -> Vec<Complex64> {
    targets
        .par_iter()
        .map(|&z| sources.iter().zip(charges).map(|(y, q)| q * (z - y).norm().ln()).sum())
        .collect()
}
