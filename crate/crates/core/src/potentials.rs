//! Layer-potential kernels, densities on trapezoid nodes, and native
//! (same-node) trapezoid evaluation.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::Field;
use crate::geometry::{Curve, CurveRecord, NodeGeometry, NodeSet, Side};
use crate::special::{hankel01_unchecked, X_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pde {
    Laplace,
    Helmholtz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Single,
    Double,
    /// `D - i omega S`, Helmholtz only.
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub pde: Pde,
    pub omega: f64,
    pub layer: Layer,
}

impl Kernel {
    pub fn new(pde: Pde, omega: f64, layer: Layer) -> Result<Self> {
        match pde {
            Pde::Laplace if omega != 0.0 => {
                Err(Error::InvalidParameter("Laplace kernels take omega = 0".into()))
            }
            Pde::Laplace if layer == Layer::Combined => {
                Err(Error::Unsupported("combined layer is Helmholtz only".into()))
            }
            Pde::Helmholtz if !(omega > 0.0 && omega.is_finite()) => {
                Err(Error::InvalidParameter(format!("Helmholtz needs omega > 0, got {omega}")))
            }
            _ => Ok(Self { pde, omega, layer }),
        }
    }

    pub fn laplace(layer: Layer) -> Result<Self> {
        Self::new(Pde::Laplace, 0.0, layer)
    }

    pub fn helmholtz(omega: f64, layer: Layer) -> Result<Self> {
        Self::new(Pde::Helmholtz, omega, layer)
    }
}

/// How a density is evaluated between its nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolant {
    Trig,
    Nystrom,
}

/// Second-kind boundary integral equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Equation {
    /// `(D - I/2) tau = f`, interior Dirichlet.
    LaplaceDirichlet,
    /// `(D* + K + I/2) sigma = f`, interior Neumann.
    LaplaceNeumann,
    /// `(D - i omega S + I/2) tau = f`, exterior Dirichlet.
    HelmholtzCfie { omega: f64 },
}

impl Equation {
    /// Kernel whose layer potential represents the solution.
    pub fn representation(&self) -> Kernel {
        match *self {
            Equation::LaplaceDirichlet => Kernel { pde: Pde::Laplace, omega: 0.0, layer: Layer::Double },
            Equation::LaplaceNeumann => Kernel { pde: Pde::Laplace, omega: 0.0, layer: Layer::Single },
            Equation::HelmholtzCfie { omega } => Kernel { pde: Pde::Helmholtz, omega, layer: Layer::Combined },
        }
    }

    pub fn side(&self) -> Side {
        match self {
            Equation::HelmholtzCfie { .. } => Side::Exterior,
            _ => Side::Interior,
        }
    }

    /// Boundary data of `field` at a boundary node.
    pub fn data(&self, field: &Field, g: &NodeGeometry) -> Complex64 {
        match self {
            Equation::LaplaceNeumann => field.normal_derivative(g.z, g.normal()),
            _ => field.value(g.z),
        }
    }
}

/// What the Nyström interpolant needs beyond the node values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NystromContext {
    pub equation: Equation,
    pub data: Field,
}

/// Layer density sampled at `s_j = 2 pi j / N`.
#[derive(Debug, Clone)]
pub struct Density {
    curve: Arc<Curve>,
    nodes: Arc<NodeSet>,
    values: Vec<Complex64>,
    interpolant: Interpolant,
    context: Option<NystromContext>,
}

/// Limit of the double-layer kernel at `x = y`: `-kappa |Z'| / (4 pi)`.
pub(crate) fn laplace_dlp_diagonal(g: &NodeGeometry) -> f64 {
    -(g.dz.conj() * g.d2z).im / (2.0 * TAU * g.dz.norm_sqr())
}

/// Below this parameter gap, boundary separations come from `Curve::chord`.
const CLOSE_PAIR: f64 = 0.1;

/// `x - y` for two boundary points, accurate when they are close.
pub(crate) fn boundary_separation(curve: &Curve, x: &NodeGeometry, y: &NodeGeometry) -> Complex64 {
    let gap = (x.s - y.s + PI).rem_euclid(TAU) - PI;
    if gap.abs() < CLOSE_PAIR {
        curve.chord(y.s + gap, y.s)
    } else {
        x.z - y.z
    }
}

/// Double-layer kernel between boundary points, diagonal limit included.
pub(crate) fn laplace_dlp_pair(curve: &Curve, x: &NodeGeometry, y: &NodeGeometry) -> f64 {
    let d = boundary_separation(curve, x, y);
    if d.norm() == 0.0 {
        return laplace_dlp_diagonal(y);
    }
    (y.dz / d).im / TAU
}

/// Adjoint double-layer kernel `-(1/2pi) (x - y).n_x / |x - y|^2 |Z'(s_y)|`
/// between boundary points.
pub(crate) fn laplace_adjoint_pair(curve: &Curve, x: &NodeGeometry, y: &NodeGeometry) -> f64 {
    let d = boundary_separation(curve, x, y);
    if d.norm() == 0.0 {
        return laplace_dlp_diagonal(y);
    }
    let n = x.normal();
    -(d.re * n.re + d.im * n.im) / d.norm_sqr() * y.speed() / TAU
}

/// `H0(omega r), H1(omega r)` with the argument clamped to the supported range.
fn hankel01(x: f64) -> (Complex64, Complex64) {
    hankel01_unchecked(x.min(X_MAX))
}

/// Weighted contribution of one source node to the potential at `z`, without
/// the quadrature weight. Laplace values are the complex `v`.
#[inline]
pub(crate) fn point_kernel(kernel: &Kernel, g: &NodeGeometry, z: Complex64) -> Complex64 {
    match kernel.pde {
        Pde::Laplace => match kernel.layer {
            // (i / 2pi) Z' / (Z - z)
            Layer::Double => Complex64::new(0.0, 1.0 / TAU) * g.dz / (g.z - z),
            // -(1/2pi) log(y - z) |Z'|
            Layer::Single => -(g.z - z).ln() * (g.speed() / TAU),
            Layer::Combined => unreachable!("rejected by Kernel::new"),
        },
        Pde::Helmholtz => {
            let omega = kernel.omega;
            let d = z - g.z;
            let r = d.norm();
            let (h0, h1) = hankel01(omega * r);
            let speed = g.speed();
            let n = g.normal();
            let dlp = || {
                let cos = (d.re * n.re + d.im * n.im) / r;
                Complex64::new(0.0, 0.25 * omega) * h1 * cos * speed
            };
            let slp = || Complex64::new(0.0, 0.25) * h0 * speed;
            match kernel.layer {
                Layer::Single => slp(),
                Layer::Double => dlp(),
                Layer::Combined => dlp() - Complex64::new(0.0, omega) * slp(),
            }
        }
    }
}

/// Trapezoid sum `w sum_j k(z, y_j) rho_j` over arbitrary equispaced source nodes.
pub(crate) fn trapezoid_sum(
    kernel: &Kernel,
    nodes: &[NodeGeometry],
    values: &[Complex64],
    weight: f64,
    z: Complex64,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (g, v) in nodes.iter().zip(values) {
        acc += point_kernel(kernel, g, z) * v;
    }
    acc * weight
}

impl Density {
    pub fn new(curve: Arc<Curve>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter("a density needs at least two nodes".into()));
        }
        let nodes = Arc::new(curve.nodes(values.len()));
        Ok(Self { curve, nodes, values, interpolant: Interpolant::Trig, context: None })
    }

    /// Samples `f(s)` at the `n` nodes.
    pub fn from_fn(curve: Arc<Curve>, n: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = (0..n).map(|j| f(TAU * j as f64 / n as f64)).collect();
        Self::new(curve, values)
    }

    /// Attaches the equation and data needed by the Nyström interpolant.
    pub fn with_context(mut self, context: NystromContext) -> Self {
        self.context = Some(context);
        self
    }

    pub fn with_interpolant(mut self, interpolant: Interpolant) -> Result<Self> {
        if interpolant == Interpolant::Nystrom && self.context.is_none() {
            return Err(Error::MissingNystromContext);
        }
        self.interpolant = interpolant;
        Ok(self)
    }

    pub fn curve(&self) -> &Arc<Curve> {
        &self.curve
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn interpolant(&self) -> Interpolant {
        self.interpolant
    }

    pub fn context(&self) -> Option<&NystromContext> {
        self.context.as_ref()
    }

    /// Largest node magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Balanced trigonometric coefficients `c_k`, `k = -N/2..=N/2`, with the
    /// Nyquist coefficient split evenly between `+-N/2` for even `N`.
    pub fn trig_coefficients(&self) -> Vec<(i64, Complex64)> {
        let n = self.values.len();
        let mut buf = self.values.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        let half = (n / 2) as i64;
        let mut out = Vec::with_capacity(n + 1);
        for k in -half..=half {
            let c = buf[k.rem_euclid(n as i64) as usize] * scale;
            if n % 2 == 0 && k.abs() == half {
                out.push((k, 0.5 * c));
            } else {
                out.push((k, c));
            }
        }
        out
    }

    /// Values of the density between nodes, using the configured interpolant.
    pub fn interpolate(&self, fine_s: &[f64]) -> Result<Vec<Complex64>> {
        match self.interpolant {
            Interpolant::Trig => Ok(self.trig_interpolate(fine_s)),
            Interpolant::Nystrom => self.nystrom_interpolate(fine_s),
        }
    }

    /// Values at the `m` equispaced parameters `2 pi k / m`.
    pub fn upsample(&self, m: usize) -> Result<Vec<Complex64>> {
        match self.interpolant {
            Interpolant::Trig if m >= self.len() => Ok(self.trig_upsample(m)),
            _ => self.interpolate(&(0..m).map(|k| TAU * k as f64 / m as f64).collect::<Vec<_>>()),
        }
    }

    pub fn trig_interpolate(&self, fine_s: &[f64]) -> Vec<Complex64> {
        let coeffs = self.trig_coefficients();
        fine_s
            .par_iter()
            .map(|&t| {
                // Recurrence on e^{ikt} keeps this O(N) without repeated trig calls.
                let step = Complex64::from_polar(1.0, t);
                let (k0, _) = coeffs[0];
                let mut w = Complex64::from_polar(1.0, k0 as f64 * t);
                let mut acc = Complex64::new(0.0, 0.0);
                for (_, c) in &coeffs {
                    acc += c * w;
                    w *= step;
                }
                acc
            })
            .collect()
    }

    /// Zero-padded spectral upsampling to `m >= N` equispaced points.
    fn trig_upsample(&self, m: usize) -> Vec<Complex64> {
        let mut spec = vec![Complex64::new(0.0, 0.0); m];
        for (k, c) in self.trig_coefficients() {
            spec[k.rem_euclid(m as i64) as usize] += c;
        }
        FftPlanner::new().plan_fft_inverse(m).process(&mut spec);
        spec
    }

    fn nystrom_interpolate(&self, fine_s: &[f64]) -> Result<Vec<Complex64>> {
        let ctx = self.context.ok_or(Error::MissingNystromContext)?;
        let w = self.nodes.weight();
        let nodes = &self.nodes.nodes;
        let n = nodes.len();
        let curve = &self.curve;
        let tau = &self.values;
        let coincident = |t: f64| {
            let u = t.rem_euclid(TAU) * n as f64 / TAU;
            let j = u.round();
            ((u - j).abs() < 1e-10).then_some(j as usize % n)
        };
        match ctx.equation {
            Equation::LaplaceDirichlet => Ok(fine_s
                .par_iter()
                .map(|&t| {
                    if let Some(j) = coincident(t) {
                        return tau[j];
                    }
                    let x = curve.node(t);
                    let d: f64 =
                        nodes.iter().zip(tau).map(|(g, v)| laplace_dlp_pair(curve, &x, g) * v.re).sum();
                    let f = ctx.equation.data(&ctx.data, &x).re;
                    Complex64::new(2.0 * (w * d - f), 0.0)
                })
                .collect()),
            Equation::LaplaceNeumann => {
                let pinned = tau[0].re;
                Ok(fine_s
                    .par_iter()
                    .map(|&t| {
                        if let Some(j) = coincident(t) {
                            return tau[j];
                        }
                        let x = curve.node(t);
                        let d: f64 =
                            nodes.iter().zip(tau).map(|(g, v)| laplace_adjoint_pair(curve, &x, g) * v.re).sum();
                        let f = ctx.equation.data(&ctx.data, &x).re;
                        Complex64::new(2.0 * (f - w * d - pinned), 0.0)
                    })
                    .collect())
            }
            Equation::HelmholtzCfie { .. } => {
                Err(Error::Unsupported("Nyström interpolation for the combined-field equation".into()))
            }
        }
    }

    pub fn to_record(&self) -> DensityRecord {
        DensityRecord {
            curve: self.curve.to_record(),
            n: self.len(),
            values: self.values.iter().map(|v| [v.re, v.im]).collect(),
            interpolant: self.interpolant,
            context: self.context,
        }
    }

    pub fn from_record(record: &DensityRecord) -> Result<Self> {
        if record.values.len() != record.n {
            return Err(Error::InvalidParameter(format!(
                "density has {} values, expected {}",
                record.values.len(),
                record.n
            )));
        }
        let curve = Arc::new(Curve::from_record(&record.curve)?);
        let values = record.values.iter().map(|v| Complex64::new(v[0], v[1])).collect();
        let mut d = Self::new(curve, values)?;
        d.context = record.context;
        d.with_interpolant(record.interpolant)
    }
}

/// On-disk form of a density.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityRecord {
    pub curve: CurveRecord,
    #[serde(rename = "N")]
    pub n: usize,
    pub values: Vec<[f64; 2]>,
    pub interpolant: Interpolant,
    pub context: Option<NystromContext>,
}

/// Same-node trapezoid evaluation of the layer potential at each target.
/// Laplace results are the complex `v`; the physical field is `Re v`.
pub fn native_eval(kernel: &Kernel, density: &Density, targets: &[Complex64]) -> Result<Vec<Complex64>> {
    let nodes = &density.nodes().nodes;
    let tol = 1e-14 * density.curve().diameter();
    for (index, z) in targets.iter().enumerate() {
        if nodes.iter().any(|g| (g.z - z).norm() < tol) {
            return Err(Error::NodeCoincidence { index });
        }
    }
    let w = density.nodes().weight();
    Ok(targets.par_iter().map(|&z| trapezoid_sum(kernel, nodes, density.values(), w, z)).collect())
}

/// Physical value of a potential: `Re v` for Laplace, `u` for Helmholtz.
pub fn physical(kernel: &Kernel, v: Complex64) -> Complex64 {
    match kernel.pde {
        Pde::Laplace => Complex64::new(v.re, 0.0),
        Pde::Helmholtz => v,
    }
}

/// `S[du/dn] - D[u]` minus `u` inside (or minus 0 outside) for the point
/// source `u = Phi(., source)` placed outside the curve.
pub fn grf_residual(
    omega: f64,
    curve: Arc<Curve>,
    source: Complex64,
    n: usize,
    targets: &[Complex64],
) -> Result<Vec<Complex64>> {
    if curve.side_of(source) == Side::Interior {
        return Err(Error::SourceInside);
    }
    let field = Field::PointSource { omega, center: [source.re, source.im] };
    let pde = if omega == 0.0 { Pde::Laplace } else { Pde::Helmholtz };
    let single = Kernel::new(pde, omega, Layer::Single)?;
    let double = Kernel::new(pde, omega, Layer::Double)?;
    let nodes = curve.nodes(n);
    let u_vals = nodes.nodes.iter().map(|g| field.value(g.z)).collect();
    let un_vals = nodes.nodes.iter().map(|g| field.normal_derivative(g.z, g.normal())).collect();
    let u = Density::new(curve.clone(), u_vals)?;
    let un = Density::new(curve.clone(), un_vals)?;
    let s = native_eval(&single, &un, targets)?;
    let d = native_eval(&double, &u, targets)?;
    Ok(targets
        .iter()
        .zip(s.iter().zip(&d))
        .map(|(&z, (s, d))| {
            let grf = physical(&single, *s) - physical(&double, *d);
            match curve.side_of(z) {
                Side::Interior => grf - field.value(z),
                Side::Exterior => grf,
            }
        })
        .collect())
}
