//! Inverting the complexified parametrization: `Z(s) = z` and `Z'(s) = 0`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{Curve, Side};

const MAX_NEWTON: usize = 30;
const DEDUP_TOL: f64 = 1e-9;

/// Multistart grid for the global root searches.
#[derive(Debug, Clone)]
pub struct PreimageSearch {
    /// Number of equispaced real parts.
    pub n_real: usize,
    /// Imaginary parts of the starting points.
    pub offsets: Vec<f64>,
}

impl PreimageSearch {
    /// 256 real starts on nine rows spread over `|Im s| < strip_limit`.
    pub fn for_strip(strip_limit: f64) -> Self {
        let fractions = [0.0, 0.25, -0.25, 0.5, -0.5, 0.75, -0.75, 0.95, -0.95];
        Self { n_real: 256, offsets: fractions.iter().map(|f| f * strip_limit).collect() }
    }

    fn starts(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.offsets.iter().flat_map(move |&a| {
            (0..self.n_real).map(move |j| Complex64::new(TAU * j as f64 / self.n_real as f64, a))
        })
    }
}

fn wrap_param(s: Complex64) -> Complex64 {
    Complex64::new(s.re.rem_euclid(TAU), s.im)
}

fn param_distance(a: Complex64, b: Complex64) -> f64 {
    let dre = (a.re - b.re + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
    Complex64::new(dre, a.im - b.im).norm()
}

fn push_unique(roots: &mut Vec<Complex64>, s: Complex64) {
    if roots.iter().all(|r| param_distance(*r, s) > DEDUP_TOL) {
        roots.push(s);
    }
}

impl Curve {
    /// Newton's method for `Z(s) = z` from `start`; `None` when it leaves
    /// `|Im s| <= escape` or fails to converge.
    pub fn newton_preimage(&self, z: Complex64, start: Complex64, escape: f64) -> Option<Complex64> {
        let tol = 1e-12 * self.diameter();
        let mut s = start;
        for _ in 0..MAX_NEWTON {
            let f = self.eval(s) - z;
            let df = self.eval_d1(s);
            if f.norm() < tol {
                // Two polishing steps.
                for _ in 0..2 {
                    let df = self.eval_d1(s);
                    if df.norm() == 0.0 {
                        break;
                    }
                    s -= (self.eval(s) - z) / df;
                }
                return Some(wrap_param(s));
            }
            if df.norm() < 1e-14 * self.diameter() {
                return None;
            }
            let step = f / df;
            // Damp wild steps so starts do not jump across the strip.
            let step = if step.norm() > 1.0 { step / step.norm() } else { step };
            s -= step;
            if s.im.abs() > escape || !s.re.is_finite() {
                return None;
            }
        }
        None
    }

    /// All distinct solutions of `Z(s) = z` with `|Im s| < strip_limit`,
    /// sorted by `|Im s|`, with real parts in `[0, 2 pi)`.
    pub fn preimages(&self, z: Complex64, strip_limit: f64) -> Vec<Complex64> {
        self.preimages_with(z, strip_limit, &PreimageSearch::for_strip(strip_limit))
    }

    pub fn preimages_with(&self, z: Complex64, strip_limit: f64, search: &PreimageSearch) -> Vec<Complex64> {
        let escape = (1.2 * strip_limit).min(self.strip_limit().max(strip_limit));
        let mut roots = Vec::new();
        if let Some(s) = self.nearest_preimage(z, escape) {
            push_unique(&mut roots, s);
        }
        for start in search.starts() {
            if let Some(s) = self.newton_preimage(z, start, escape) {
                push_unique(&mut roots, s);
            }
        }
        roots.retain(|s| s.im.abs() < strip_limit);
        roots.sort_by(|a, b| a.im.abs().total_cmp(&b.im.abs()));
        roots
    }

    /// Preimage found by local Newton runs started from the closest real
    /// samples; returns the root with the smallest `|Im s|` among those found.
    /// Cheap enough for per-target use in the collar.
    pub fn nearest_preimage(&self, z: Complex64, escape: f64) -> Option<Complex64> {
        let samples = self.samples();
        let n = samples.len();
        let dist: Vec<f64> = samples.iter().map(|(_, p)| (p - z).norm()).collect();
        let mut minima: Vec<usize> = (0..n)
            .filter(|&i| dist[i] <= dist[(i + n - 1) % n] && dist[i] <= dist[(i + 1) % n])
            .collect();
        minima.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]));
        minima.truncate(3);
        let mut best: Option<Complex64> = None;
        for &i in &minima {
            let t = samples[i].0;
            let a = dist[i] / self.speed(t);
            for start in [Complex64::new(t, a), Complex64::new(t, -a)] {
                if let Some(s) = self.newton_preimage(z, start, escape) {
                    if best.map_or(true, |b| s.im.abs() < b.im.abs()) {
                        best = Some(s);
                    }
                }
            }
            if best.is_some_and(|b| b.im.abs() < 0.5 * escape) {
                break;
            }
        }
        best
    }

    /// Preimage with the smallest `|Im s|` below `limit`, from the local
    /// search plus a coarse multistart on rows up to `limit`.
    pub fn min_preimage(&self, z: Complex64, limit: f64) -> Option<Complex64> {
        let rows = [0.0, 0.5, -0.5, 1.0, -1.0];
        let search = PreimageSearch { n_real: 64, offsets: rows.iter().map(|r| r * limit).collect() };
        let escape = (1.2 * limit).min(self.strip_limit().max(limit));
        let mut best = self.nearest_preimage(z, escape);
        for start in search.starts() {
            if let Some(s) = self.newton_preimage(z, start, escape) {
                if best.map_or(true, |b| s.im.abs() < b.im.abs()) {
                    best = Some(s);
                }
            }
        }
        best.filter(|s| s.im.abs() < limit)
    }

    /// Side of the boundary containing `z`.
    pub fn side_of(&self, z: Complex64) -> Side {
        if let Some(s) = self.nearest_preimage(z, 0.3f64.min(self.strip_limit())) {
            if s.im.abs() < 0.2 {
                return Side::of_param(s);
            }
        }
        if self.polyline_contains(z) {
            Side::Interior
        } else {
            Side::Exterior
        }
    }

    /// Whether `z` has a preimage with `0 < sign * Im s < alpha_bad` on one of
    /// the requested sides.
    pub fn in_bad_region(&self, z: Complex64, alpha_bad: f64, sides: &[Side]) -> bool {
        self.bad_region_param(z, alpha_bad)
            .is_some_and(|s| sides.contains(&Side::of_param(s)))
    }

    /// Preimage witnessing membership of the annulus `|Im s| < alpha_bad`.
    pub fn bad_region_param(&self, z: Complex64, alpha_bad: f64) -> Option<Complex64> {
        let escape = (2.0 * alpha_bad).max(0.05).min(self.strip_limit());
        self.nearest_preimage(z, escape).filter(|s| s.im.abs() < alpha_bad)
    }

    /// Zeros of `Z'` with `|Im s| < strip_limit`, sorted by `|Im s|`.
    pub fn schwarz_singularities(&self, strip_limit: f64) -> Vec<Complex64> {
        let search = PreimageSearch::for_strip(strip_limit);
        let escape = 1.2 * strip_limit;
        let mut roots = Vec::new();
        'starts: for start in search.starts() {
            let mut s = start;
            for _ in 0..(2 * MAX_NEWTON) {
                let f = self.eval_d1(s);
                let df = self.eval_d2(s);
                if df.norm() == 0.0 {
                    continue 'starts;
                }
                let step = f / df;
                let step = if step.norm() > 0.5 { 0.5 * step / step.norm() } else { step };
                s -= step;
                if s.im.abs() > escape {
                    continue 'starts;
                }
                if step.norm() < 1e-14 {
                    break;
                }
            }
            if self.eval_d1(s).norm() < 1e-11 && s.im.abs() < strip_limit {
                push_unique(&mut roots, wrap_param(s));
            }
        }
        roots.sort_by(|a, b| a.im.abs().total_cmp(&b.im.abs()));
        roots
    }
}
