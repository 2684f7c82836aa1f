//! Surrogate local expansions for targets close to the boundary.

use std::f64::consts::TAU;
use std::sync::Arc;

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{default_alpha_bad, BoxCover, CoverSpec, Curve, NodeGeometry, NodeSet, Side};
use crate::potentials::{native_eval, physical, Density, Kernel, Layer, Pde};
use crate::special::{bessel_j_array_unchecked, hankel1_array_unchecked};

pub const P_MAX: usize = 30;
pub const BETA_MAX: f64 = 16.0;

/// Parameters of the surrogate scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloseEvalParams {
    pub p: usize,
    pub beta: f64,
    pub n_boxes: usize,
    pub alpha_bad: f64,
    pub alpha0: f64,
    pub side: Side,
}

impl CloseEvalParams {
    /// Defaults for `n` nodes: `ceil(n/5)` boxes, `alpha_bad = 10 pi / n`,
    /// `alpha0 = alpha_bad / 2`.
    pub fn new(p: usize, beta: f64, n: usize, side: Side) -> Self {
        Self::with_divisor(p, beta, n, 5, side)
    }

    /// `ceil(n / divisor)` boxes.
    pub fn with_divisor(p: usize, beta: f64, n: usize, divisor: usize, side: Side) -> Self {
        let alpha_bad = default_alpha_bad(n);
        Self { p, beta, n_boxes: n.div_ceil(divisor.max(1)), alpha_bad, alpha0: 0.5 * alpha_bad, side }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=P_MAX).contains(&self.p) {
            return Err(Error::InvalidParameter(format!("p must lie in [1, {P_MAX}], got {}", self.p)));
        }
        if !(1.0..=BETA_MAX).contains(&self.beta) {
            return Err(Error::InvalidParameter(format!("beta must lie in [1, {BETA_MAX}], got {}", self.beta)));
        }
        Ok(())
    }

    pub fn cover_spec(&self) -> CoverSpec {
        CoverSpec { n_boxes: self.n_boxes, alpha_bad: self.alpha_bad, alpha0: self.alpha0, side: self.side }
    }

    /// Fine node count `M = ceil(beta N)`.
    pub fn fine_count(&self, n: usize) -> usize {
        (self.beta * n as f64 - 1e-9).ceil() as usize
    }

    /// `delta = alpha0 N / (2 pi)`.
    pub fn delta(&self, n: usize) -> f64 {
        self.alpha0 * n as f64 / TAU
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionKind {
    LaplaceTaylor,
    HelmholtzFb,
}

/// Truncated local expansion about `center`. Laplace coefficients are
/// `c_0 .. c_{p-1}`; Helmholtz ones are `c_{-(p-1)} .. c_{p-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExpansion {
    pub center: Complex64,
    pub kind: ExpansionKind,
    pub omega: f64,
    pub p: usize,
    pub coeffs: Vec<Complex64>,
    pub radius: f64,
}

impl LocalExpansion {
    /// Coefficient of order `m`.
    pub fn coeff(&self, m: i64) -> Complex64 {
        match self.kind {
            ExpansionKind::LaplaceTaylor => self.coeffs[m as usize],
            ExpansionKind::HelmholtzFb => self.coeffs[(m + self.p as i64 - 1) as usize],
        }
    }

    /// Complex series value at `z` (Laplace: `v`, whose real part is the field).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let d = z - self.center;
        match self.kind {
            ExpansionKind::LaplaceTaylor => self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * d + c),
            ExpansionKind::HelmholtzFb => {
                let r = d.norm();
                let p = self.p;
                let j = bessel_j_array_unchecked(p - 1, self.omega * r);
                let e = if r > 0.0 { d / r } else { Complex64::new(1.0, 0.0) };
                let mut acc = self.coeffs[p - 1] * j[0];
                let (mut ep, mut em) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
                let ec = e.conj();
                for m in 1..p {
                    ep *= e;
                    em *= ec;
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    acc += self.coeffs[p - 1 + m] * ep * j[m] + self.coeffs[p - 1 - m] * em * (sign * j[m]);
                }
                acc
            }
        }
    }
}

/// Density sampled at `M` equispaced fine nodes.
#[derive(Debug, Clone)]
pub struct FineGrid {
    pub nodes: NodeSet,
    pub values: Vec<Complex64>,
}

impl FineGrid {
    pub fn new(density: &Density, m: usize) -> Result<Self> {
        let values = density.upsample(m)?;
        Ok(Self { nodes: density.curve().nodes(m), values })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight(&self) -> f64 {
        self.nodes.weight()
    }
}

/// `H_k` for any integer `k` from the nonnegative orders.
fn hankel_signed(h: &[Complex64], k: i64) -> Complex64 {
    let v = h[k.unsigned_abs() as usize];
    if k < 0 && k % 2 != 0 {
        -v
    } else {
        v
    }
}

/// Expansion coefficients from weighted source nodes `(g, value)`.
pub fn expansion_coefficients<'a>(
    kernel: &Kernel,
    p: usize,
    center: Complex64,
    sources: impl Iterator<Item = (&'a NodeGeometry, &'a Complex64)>,
    weight: f64,
) -> Vec<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    match kernel.pde {
        Pde::Laplace => {
            let mut c = vec![zero; p];
            for (g, v) in sources {
                let inv = 1.0 / (g.z - center);
                match kernel.layer {
                    Layer::Double => {
                        // (i / 2pi) w tau Z' / (y - z0)^{m+1}
                        let mut t = Complex64::new(0.0, weight / TAU) * v * g.dz * inv;
                        for cm in c.iter_mut() {
                            *cm += t;
                            t *= inv;
                        }
                    }
                    Layer::Single => {
                        let amp = v * (g.speed() * weight / TAU);
                        // Only the real part of c_0 enters the field.
                        c[0] += -amp * (g.z - center).norm().ln();
                        let mut t = amp * inv;
                        for (m, cm) in c.iter_mut().enumerate().skip(1) {
                            *cm += t / m as f64;
                            t *= inv;
                        }
                    }
                    Layer::Combined => unreachable!("rejected by Kernel::new"),
                }
            }
            c
        }
        Pde::Helmholtz => {
            let omega = kernel.omega;
            let mm = p as i64 - 1;
            let mut c = vec![zero; 2 * p - 1];
            let want_s = matches!(kernel.layer, Layer::Single | Layer::Combined);
            let want_d = matches!(kernel.layer, Layer::Double | Layer::Combined);
            for (g, v) in sources {
                let d = g.z - center;
                let rho = d.norm();
                let h = hankel1_array_unchecked(p, omega * rho);
                let e = (d / rho).conj();
                let nu = g.normal();
                let amp = v * g.speed() * weight;
                // e^{-i m phi} for m = -(p) .. p.
                let mut pow = vec![zero; 2 * p + 1];
                pow[p] = Complex64::new(1.0, 0.0);
                for k in 1..=p {
                    pow[p + k] = pow[p + k - 1] * e;
                    pow[p - k] = pow[p - k + 1] * e.conj();
                }
                let ph = |m: i64| pow[(m + p as i64) as usize];
                for m in -mm..=mm {
                    let mut term = zero;
                    if want_s {
                        // (i/4) H_m e^{-i m phi}
                        let s = Complex64::new(0.0, 0.25) * hankel_signed(&h, m) * ph(m);
                        term += if want_d { Complex64::new(0.0, -omega) * s } else { s };
                    }
                    if want_d {
                        // (i omega / 8) [e^{-i(m-1)phi - i nu} H_{m-1} - e^{-i(m+1)phi + i nu} H_{m+1}]
                        term += Complex64::new(0.0, omega / 8.0)
                            * (ph(m - 1) * nu.conj() * hankel_signed(&h, m - 1) - ph(m + 1) * nu * hankel_signed(&h, m + 1));
                    }
                    c[(m + mm) as usize] += term * amp;
                }
            }
            c
        }
    }
}

fn expansion_kind(kernel: &Kernel) -> ExpansionKind {
    match kernel.pde {
        Pde::Laplace => ExpansionKind::LaplaceTaylor,
        Pde::Helmholtz => ExpansionKind::HelmholtzFb,
    }
}

/// Expansion about `center` from all fine nodes.
pub fn form_expansion_at(kernel: &Kernel, fine: &FineGrid, p: usize, center: Complex64, radius: f64) -> Result<LocalExpansion> {
    let h = fine.weight();
    for g in &fine.nodes.nodes {
        let distance = (g.z - center).norm();
        if distance < 1e-3 * h * g.speed() {
            return Err(Error::DegenerateGeometry { distance });
        }
    }
    let coeffs = expansion_coefficients(kernel, p, center, fine.nodes.nodes.iter().zip(&fine.values), h);
    Ok(LocalExpansion { center, kind: expansion_kind(kernel), omega: kernel.omega, p, coeffs, radius })
}

/// Expansion for box `box_index` of the cover described by `params`.
pub fn form_expansion(kernel: &Kernel, density: &Density, params: &CloseEvalParams, box_index: usize) -> Result<LocalExpansion> {
    params.validate()?;
    let cover = BoxCover::build(density.curve(), params.cover_spec())?;
    let bx = cover
        .boxes
        .get(box_index)
        .ok_or_else(|| Error::InvalidParameter(format!("box {box_index} out of range")))?;
    let fine = FineGrid::new(density, params.fine_count(density.len()))?;
    form_expansion_at(kernel, &fine, params.p, bx.center, bx.radius)
}

/// Evaluates an expansion at targets; targets outside the expansion's disc
/// are evaluated anyway with a warning.
pub fn eval_expansion(exp: &LocalExpansion, targets: &[Complex64]) -> Vec<Complex64> {
    let outside = targets.iter().filter(|z| (**z - exp.center).norm() > exp.radius * (1.0 + 1e-12)).count();
    if outside > 0 {
        warn!("{outside} targets lie outside the expansion disc of radius {:.3e}", exp.radius);
    }
    targets.iter().map(|&z| exp.eval(z)).collect()
}

/// How a target value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "path", content = "box")]
pub enum EvalPath {
    Native,
    Surrogate(usize),
}

impl EvalPath {
    pub fn tag(&self) -> &'static str {
        match self {
            EvalPath::Native => "native",
            EvalPath::Surrogate(_) => "surrogate",
        }
    }
}

/// Physical field values and the path used for each target.
#[derive(Debug, Clone, PartialEq)]
pub struct CloseEvalOutput {
    pub values: Vec<Complex64>,
    pub paths: Vec<EvalPath>,
}

impl CloseEvalOutput {
    pub fn surrogate_count(&self) -> usize {
        self.paths.iter().filter(|p| matches!(p, EvalPath::Surrogate(_))).count()
    }
}

/// Box cover, fine data and one expansion per box, built once.
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub kernel: Kernel,
    pub params: CloseEvalParams,
    pub cover: BoxCover,
    pub fine: FineGrid,
    pub expansions: Vec<LocalExpansion>,
    density: Density,
}

impl Surrogate {
    pub fn new(kernel: &Kernel, density: &Density, params: &CloseEvalParams) -> Result<Self> {
        params.validate()?;
        let cover = BoxCover::build(density.curve(), params.cover_spec())?;
        let fine = FineGrid::new(density, params.fine_count(density.len()))?;
        let expansions = cover
            .boxes
            .par_iter()
            .map(|b| form_expansion_at(kernel, &fine, params.p, b.center, b.radius))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kernel: *kernel, params: *params, cover, fine, expansions, density: density.clone() })
    }

    pub fn curve(&self) -> &Arc<Curve> {
        self.density.curve()
    }

    /// Box serving `z`, if it lies in the covered collar.
    pub fn locate(&self, z: Complex64) -> Option<usize> {
        self.cover.locate(self.curve(), z).map(|(b, _)| b)
    }

    /// Physical value from the expansion of box `b`, wherever `z` lies.
    pub fn eval_box(&self, b: usize, z: Complex64) -> Complex64 {
        physical(&self.kernel, self.expansions[b].eval(z))
    }

    /// Surrogate inside the collar, native evaluation elsewhere.
    pub fn evaluate(&self, targets: &[Complex64]) -> Result<CloseEvalOutput> {
        let paths: Vec<EvalPath> = targets
            .par_iter()
            .map(|&z| self.locate(z).map_or(EvalPath::Native, EvalPath::Surrogate))
            .collect();
        let far: Vec<Complex64> = targets.iter().zip(&paths).filter(|(_, p)| **p == EvalPath::Native).map(|(z, _)| *z).collect();
        let mut far_vals = native_eval(&self.kernel, &self.density, &far)?.into_iter();
        let values = targets
            .iter()
            .zip(&paths)
            .map(|(&z, path)| match path {
                EvalPath::Surrogate(b) => self.eval_box(*b, z),
                EvalPath::Native => physical(&self.kernel, far_vals.next().expect("one value per native target")),
            })
            .collect();
        Ok(CloseEvalOutput { values, paths })
    }
}

/// Evaluates a layer potential at arbitrary targets, switching to local
/// expansions inside the bad collar.
pub fn close_evaluate(kernel: &Kernel, density: &Density, params: &CloseEvalParams, targets: &[Complex64]) -> Result<CloseEvalOutput> {
    Surrogate::new(kernel, density, params)?.evaluate(targets)
}

/// Physical values from native evaluation on `factor * N` upsampled nodes.
pub fn fine_native(kernel: &Kernel, density: &Density, factor: usize, targets: &[Complex64]) -> Result<Vec<Complex64>> {
    let m = factor * density.len();
    let fine = Density::new(density.curve().clone(), density.upsample(m)?)?;
    Ok(native_eval(kernel, &fine, targets)?.into_iter().map(|v| physical(kernel, v)).collect())
}

/// Relative L-infinity and L2 errors of `values` against `reference`.
pub fn relative_errors(values: &[Complex64], reference: &[Complex64]) -> (f64, f64) {
    let scale = reference.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let max = values.iter().zip(reference).map(|(v, r)| (v - r).norm()).fold(0.0, f64::max);
    let num: f64 = values.iter().zip(reference).map(|(v, r)| (v - r).norm_sqr()).sum();
    let den: f64 = reference.iter().map(|r| r.norm_sqr()).sum();
    (max / scale, (num / den).sqrt())
}

/// One cell of a `(p, beta)` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: usize,
    pub beta: f64,
    pub max_rel_err: f64,
    pub l2_rel_err: f64,
}

/// Relative grid errors of the surrogate scheme for every `(p, beta)`.
pub fn convergence_sweep(
    kernel: &Kernel,
    density: &Density,
    base: &CloseEvalParams,
    p_values: &[usize],
    beta_values: &[f64],
    targets: &[Complex64],
    reference: &[Complex64],
) -> Result<Vec<SweepRow>> {
    if p_values.is_empty() || beta_values.is_empty() {
        return Err(Error::InvalidParameter("sweep ranges must be nonempty".into()));
    }
    if targets.len() != reference.len() {
        return Err(Error::InvalidParameter("one reference value per target required".into()));
    }
    let mut rows = Vec::with_capacity(p_values.len() * beta_values.len());
    for &p in p_values {
        for &beta in beta_values {
            let params = CloseEvalParams { p, beta, ..*base };
            let out = close_evaluate(kernel, density, &params, targets)?;
            let (max_rel_err, l2_rel_err) = relative_errors(&out.values, reference);
            rows.push(SweepRow { p, beta, max_rel_err, l2_rel_err });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Field;
    use crate::geometry::{builtin_curve, CurveId};
    use crate::special::bessel_j;

    fn kite() -> Arc<Curve> {
        Arc::new(builtin_curve(CurveId::Kite, None).unwrap())
    }

    #[test]
    fn params_validation_and_defaults() {
        let p = CloseEvalParams::new(10, 4.0, 130, Side::Interior);
        assert_eq!(p.n_boxes, 26);
        assert!((p.alpha0 - 0.5 * p.alpha_bad).abs() < 1e-16);
        assert_eq!(p.fine_count(130), 520);
        assert_eq!(CloseEvalParams::new(10, 4.5, 130, Side::Interior).fine_count(130), 585);
        assert!((p.delta(130) - 2.5).abs() < 1e-12);
        assert!(CloseEvalParams::new(0, 4.0, 130, Side::Interior).validate().is_err());
        assert!(CloseEvalParams::new(31, 4.0, 130, Side::Interior).validate().is_err());
        assert!(CloseEvalParams::new(10, 0.5, 130, Side::Interior).validate().is_err());
        assert!(CloseEvalParams::new(10, 17.0, 130, Side::Interior).validate().is_err());
        assert_eq!(CloseEvalParams::with_divisor(10, 4.0, 340, 4, Side::Exterior).n_boxes, 85);
    }

    #[test]
    fn constant_density_taylor_coefficients() {
        let d = Density::from_fn(kite(), 130, |_| Complex64::new(1.0, 0.0)).unwrap();
        let k = Kernel::laplace(Layer::Double).unwrap();
        let params = CloseEvalParams::new(10, 4.0, 130, Side::Interior);
        for b in [0, 7, 13, 20] {
            let e = form_expansion(&k, &d, &params, b).unwrap();
            assert!((e.coeffs[0] + 1.0).norm() < 1e-12, "{}", e.coeffs[0]);
            // Higher coefficients vanish on the scale of the box.
            for (m, c) in e.coeffs.iter().enumerate().skip(1) {
                assert!(c.norm() * e.radius.powi(m as i32) < 1e-12, "box {b}, m={m}: {c}");
            }
        }
    }

    #[test]
    fn expansion_evaluation_basics() {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 5];
        coeffs[0] = (-1.0).into();
        let lap = LocalExpansion { center: Complex64::new(0.2, 0.1), kind: ExpansionKind::LaplaceTaylor, omega: 0.0, p: 5, coeffs, radius: 0.1 };
        assert_eq!(lap.eval(Complex64::new(0.25, 0.12)), Complex64::new(-1.0, 0.0));
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 9];
        coeffs[4] = Complex64::new(1.0, 0.0);
        let fb = LocalExpansion { center: Complex64::new(0.0, 0.0), kind: ExpansionKind::HelmholtzFb, omega: 3.0, p: 5, coeffs, radius: 1.0 };
        let v = fb.eval(Complex64::new(0.3, 0.4));
        assert!((v - bessel_j(0, 1.5).unwrap()).norm() < 1e-15);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 9];
        coeffs[4] = Complex64::new(0.7, 0.2);
        coeffs[2] = Complex64::new(0.5, 0.0);
        let fb = LocalExpansion { coeffs, ..fb };
        assert_eq!(fb.eval(Complex64::new(0.0, 0.0)), Complex64::new(0.7, 0.2));
        assert_eq!(fb.coeff(-2), Complex64::new(0.5, 0.0));
        // c_{-2} e^{-2 i theta} J_{-2}(omega r) = c_{-2} e^{-2 i theta} J_2.
        let z = Complex64::new(0.3, 0.4);
        let expect = Complex64::new(0.7, 0.2) * bessel_j(0, 1.5).unwrap()
            + 0.5 * Complex64::from_polar(1.0, -2.0 * z.arg()) * bessel_j(2, 1.5).unwrap();
        assert!((fb.eval(z) - expect).norm() < 1e-15);
        let out = eval_expansion(&fb, &[z, Complex64::new(5.0, 0.0)]);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn degenerate_center_is_rejected() {
        let d = Density::from_fn(kite(), 60, |_| Complex64::new(1.0, 0.0)).unwrap();
        let k = Kernel::laplace(Layer::Double).unwrap();
        let fine = FineGrid::new(&d, 240).unwrap();
        let z = fine.nodes.nodes[3].z + 1e-9;
        assert!(matches!(form_expansion_at(&k, &fine, 10, z, 0.1), Err(Error::DegenerateGeometry { .. })));
    }

    fn smooth_density(n: usize) -> Density {
        Density::from_fn(kite(), n, |s| Complex64::new((s.cos() + 0.3 * (2.0 * s).sin()).exp(), 0.0)).unwrap()
    }

    /// Complex density `e^{Z(s)}`, whose Cauchy integral is `-e^z` inside.
    fn cauchy_density(n: usize) -> Density {
        let c = kite();
        let cc = c.clone();
        Density::from_fn(c, n, move |s| cc.point(s).exp()).unwrap()
    }

    #[test]
    fn taylor_coefficient_converges_in_m() {
        let n = 60;
        let d = smooth_density(n);
        let params = CloseEvalParams::new(10, 4.0, n, Side::Interior);
        let cover = BoxCover::build(d.curve(), params.cover_spec()).unwrap();
        for b in [3, 6] {
            let center = cover.boxes[b].center;
            for layer in [Layer::Double, Layer::Single] {
                let k = Kernel::laplace(layer).unwrap();
                let reference = form_expansion_at(&k, &FineGrid::new(&d, 16 * n).unwrap(), 10, center, 0.1).unwrap();
                let err = |m: usize| {
                    let e = form_expansion_at(&k, &FineGrid::new(&d, m).unwrap(), 10, center, 0.1).unwrap();
                    (e.coeffs[0].re - reference.coeffs[0].re).abs()
                };
                // Empirical rate between M = 40 and M = 80 against e^{-alpha0 M}.
                let rate = (err(40) / err(80)).ln() / 40.0;
                if layer == Layer::Double {
                    assert!((rate / params.alpha0 - 1.0).abs() < 0.2, "box {b}: rate {rate}");
                } else {
                    assert!(rate > 0.5 * params.alpha0, "box {b}: rate {rate}");
                }
                assert!(err(140) < 1e-12);
            }
        }
    }

    #[test]
    fn helmholtz_expansion_matches_fine_native() {
        let n = 80;
        let omega = 2.0;
        let src = Complex64::new(0.1, 0.2);
        let field = Field::PointSource { omega, center: [src.re, src.im] };
        let c = kite();
        let nodes = c.nodes(n);
        let d = Density::new(c.clone(), nodes.nodes.iter().map(|g| field.value(g.z)).collect()).unwrap();
        let params = CloseEvalParams::new(12, 4.0, n, Side::Exterior);
        for layer in [Layer::Single, Layer::Double, Layer::Combined] {
            let k = Kernel::helmholtz(omega, layer).unwrap();
            let s = Surrogate::new(&k, &d, &params).unwrap();
            for b in [0, 5, 11] {
                let e = &s.expansions[b];
                let reference = fine_native(&k, &d, 16, &[e.center]).unwrap()[0];
                assert!((e.eval(e.center) - reference).norm() < 1e-12, "{layer:?} box {b}");
            }
        }
    }

    #[test]
    fn constant_density_close_to_boundary() {
        let n = 130;
        let d = Density::from_fn(kite(), n, |_| Complex64::new(1.0, 0.0)).unwrap();
        let k = Kernel::laplace(Layer::Double).unwrap();
        let params = CloseEvalParams::new(10, 4.0, n, Side::Interior);
        let c = d.curve().clone();
        let mut targets = Vec::new();
        for j in 0..200 {
            let t = TAU * (j as f64 + 0.37) / 200.0;
            for dist in [1e-8, 1e-4, 0.01, 0.05, 0.3] {
                targets.push(c.point(t) - dist * c.normal(t));
            }
        }
        let out = close_evaluate(&k, &d, &params, &targets).unwrap();
        assert!(out.surrogate_count() > 600);
        for (v, z) in out.values.iter().zip(&targets) {
            assert!((v.re + 1.0).abs() < 1e-11, "{z}: {v}");
        }
    }

    fn collar_targets(c: &Curve, count: usize, dists: &[f64]) -> Vec<Complex64> {
        let mut targets = Vec::new();
        for j in 0..count {
            let t = TAU * (j as f64 + 0.5) / count as f64;
            for d in dists {
                targets.push(c.point(t) - *d * c.normal(t));
            }
        }
        targets
    }

    #[test]
    fn cauchy_density_reproduces_entire_function() {
        let n = 130;
        let d = cauchy_density(n);
        let k = Kernel::laplace(Layer::Double).unwrap();
        let targets = collar_targets(d.curve(), 100, &[1e-8, 1e-3, 0.02, 0.08]);
        let out = close_evaluate(&k, &d, &CloseEvalParams::new(10, 4.0, n, Side::Interior), &targets).unwrap();
        for (v, z) in out.values.iter().zip(&targets) {
            assert!((v.re + z.exp().re).abs() < 1e-12, "{z}: {v}");
        }
    }

    #[test]
    fn laplace_single_layer_neumann_field() {
        use crate::solver::{assemble, solve, BvpSpec, SolveMethod};
        let n = 130;
        let spec = BvpSpec::laplace_neumann(kite(), Field::ExpCos, n);
        let (sigma, _) = solve(&assemble(&spec).unwrap(), SolveMethod::DenseLu, 1e-14).unwrap();
        let k = Kernel::laplace(Layer::Single).unwrap();
        let targets = collar_targets(sigma.curve(), 100, &[1e-8, 1e-3, 0.02, 0.08]);
        let out = close_evaluate(&k, &sigma, &CloseEvalParams::new(10, 4.0, n, Side::Interior), &targets).unwrap();
        let diff: Vec<f64> = out.values.iter().zip(&targets).map(|(v, z)| v.re - Field::ExpCos.value(*z).re).collect();
        let mean = diff.iter().sum::<f64>() / diff.len() as f64;
        for (e, z) in diff.iter().zip(&targets) {
            assert!((e - mean).abs() < 1e-11, "{z}: {}", e - mean);
        }
    }

    #[test]
    fn sweep_shape_and_errors() {
        let n = 130;
        let d = cauchy_density(n);
        let k = Kernel::laplace(Layer::Double).unwrap();
        let base = CloseEvalParams::new(10, 4.0, n, Side::Interior);
        let targets = collar_targets(d.curve(), 40, &[1e-3, 0.03]);
        let reference: Vec<Complex64> = targets.iter().map(|z| Complex64::new(-z.exp().re, 0.0)).collect();
        let rows = convergence_sweep(&k, &d, &base, &[2, 10], &[1.0, 4.0], &targets, &reference).unwrap();
        assert_eq!(rows.len(), 4);
        let get = |p, b| rows.iter().find(|r| r.p == p && r.beta == b).unwrap().max_rel_err;
        assert!(get(10, 4.0) < 1e-12);
        assert!(get(2, 4.0) > 1e-6);
        assert!(get(10, 1.0) > 1e-6);
        assert!(convergence_sweep(&k, &d, &base, &[], &[4.0], &targets, &reference).is_err());
    }
}
