//! Error bounds for the periodic trapezoid rule and predictions for native
//! layer-potential evaluation.

use std::f64::consts::{E, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Curve;
use crate::potentials::Density;

/// Predictions with `alpha_min * N` below this are flagged unreliable.
pub const RELIABILITY_THRESHOLD: f64 = 3.0;
/// Tolerance on `|Im s| = alpha` used when trimming contour loops.
pub const TRIM_TOL: f64 = 1e-6;

fn check_strip(alpha: f64, n: usize) -> Result<()> {
    if !(alpha > 0.0) || n == 0 {
        return Err(Error::InvalidParameter(format!("need alpha > 0 and N >= 1, got alpha={alpha}, N={n}")));
    }
    Ok(())
}

/// `4 pi F / (e^{alpha N} - 1)`.
pub fn davis_bound(f_sup: f64, alpha: f64, n: usize) -> Result<f64> {
    check_strip(alpha, n)?;
    Ok(4.0 * PI * f_sup / (alpha * n as f64).exp_m1())
}

/// Trapezoid error bound with one simple pole `s0` (residue `r0`) in the strip.
pub fn pole_bound(r0: Complex64, s0: Complex64, f_sup: f64, alpha: f64, n: usize) -> Result<f64> {
    check_strip(alpha, n)?;
    let a = s0.im.abs();
    if !(a > 0.0 && a < alpha) {
        return Err(Error::InvalidParameter(format!("pole |Im s0| = {a} must lie in (0, {alpha})")));
    }
    Ok(TAU * r0.norm() / (a * n as f64).exp_m1() + davis_bound(f_sup, alpha, n)?)
}

/// Trapezoid error bound with several simple poles `(r0, s0)` in the strip,
/// summing the single-pole terms.
pub fn poles_bound(poles: &[(Complex64, Complex64)], f_sup: f64, alpha: f64, n: usize) -> Result<f64> {
    let mut total = davis_bound(f_sup, alpha, n)?;
    for &(r0, s0) in poles {
        total += pole_bound(r0, s0, 0.0, alpha, n)?;
    }
    Ok(total)
}

/// Diagnostic bound with one branch point `s0` in the strip; `jump_integral`
/// is the user-supplied value of the jump across the cut, integrated in arc length.
pub fn branch_bound(jump_integral: f64, im_s0: f64, f_sup: f64, alpha: f64, n: usize) -> Result<f64> {
    check_strip(alpha, n)?;
    let a = im_s0.abs();
    if !(a > 0.0 && a < alpha) || jump_integral < 0.0 {
        return Err(Error::InvalidParameter(format!("branch point |Im s0| = {a} must lie in (0, {alpha})")));
    }
    Ok(jump_integral / (a * n as f64).exp_m1() + davis_bound(f_sup, alpha, n)?)
}

/// Prediction for a single target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetPrediction {
    pub z: Complex64,
    /// Smallest `|Im s|` over preimages within the strip limit.
    pub alpha_min: Option<f64>,
    /// `C e^{-alpha_min N}`; `None` outside the theory.
    pub bound: Option<f64>,
    pub outside_theory: bool,
    /// `alpha_min * N >= 3`.
    pub reliable: bool,
}

/// Predicted native-evaluation errors at a set of targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPrediction {
    pub c: f64,
    pub n: usize,
    pub targets: Vec<TargetPrediction>,
}

/// Default amplitude constant: `max |tau|` over `8N` interpolated samples.
pub fn density_bound(density: &Density) -> Result<f64> {
    let m = 8 * density.len();
    let s: Vec<f64> = (0..m).map(|j| TAU * j as f64 / m as f64).collect();
    Ok(density.interpolate(&s)?.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// `C e^{-alpha_min N}` at `z`.
pub fn predict_error(curve: &Curve, c: f64, n: usize, z: Complex64) -> TargetPrediction {
    let alpha_min = curve.preimages(z, curve.strip_limit()).first().map(|s| s.im.abs());
    let bound = alpha_min.map(|a| c * (-a * n as f64).exp());
    TargetPrediction {
        z,
        alpha_min,
        bound,
        outside_theory: alpha_min.is_none(),
        reliable: alpha_min.is_some_and(|a| a * n as f64 >= RELIABILITY_THRESHOLD),
    }
}

/// Predictions at many targets, in parallel.
pub fn predict_errors(curve: &Curve, c: f64, n: usize, targets: &[Complex64]) -> ErrorPrediction {
    use rayon::prelude::*;
    let targets = targets.par_iter().map(|&z| predict_error(curve, c, n, z)).collect();
    ErrorPrediction { c, n, targets }
}

/// One vertex of a predicted contour; `alpha` is signed (positive inside).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourPoint {
    pub z: Complex64,
    pub t: f64,
    pub alpha: f64,
}

/// Level set `C e^{-|Im s| N} = epsilon`, with loops trimmed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedContour {
    pub epsilon: f64,
    pub alpha: f64,
    /// `alpha` exceeds the strip limit; `points` is then empty.
    pub beyond_strip: bool,
    pub points: Vec<ContourPoint>,
}

impl PredictedContour {
    /// Points on one side, in parameter order.
    pub fn branch(&self, sign: f64) -> Vec<ContourPoint> {
        self.points.iter().copied().filter(|p| p.alpha * sign > 0.0).collect()
    }
}

/// Untrimmed samples of `Z(t + i a)` for `a = +-alpha`.
pub fn contour_samples(curve: &Curve, alpha: f64, n_points: usize) -> Vec<ContourPoint> {
    let mut pts = Vec::with_capacity(2 * n_points);
    for sign in [1.0, -1.0] {
        for j in 0..n_points {
            let t = TAU * j as f64 / n_points as f64;
            let a = sign * alpha;
            pts.push(ContourPoint { z: curve.eval(Complex64::new(t, a)), t, alpha: a });
        }
    }
    pts
}

/// Predicted error contour at level `epsilon`.
pub fn predicted_contour(curve: &Curve, epsilon: f64, c: f64, n: usize, n_points: usize) -> Result<PredictedContour> {
    if !(epsilon > 0.0 && epsilon < c) || n == 0 || n_points == 0 {
        return Err(Error::InvalidParameter(format!("need 0 < epsilon < C, N >= 1, got epsilon={epsilon}, C={c}")));
    }
    let alpha = -(epsilon / c).ln() / n as f64;
    if alpha >= curve.strip_limit() {
        return Ok(PredictedContour { epsilon, alpha, beyond_strip: true, points: Vec::new() });
    }
    let raw = contour_samples(curve, alpha, n_points);
    let keep: Vec<bool> = {
        use rayon::prelude::*;
        raw.par_iter()
            .map(|p| curve.min_preimage(p.z, alpha - TRIM_TOL).is_none())
            .collect()
    };
    let points = raw.into_iter().zip(keep).filter_map(|(p, k)| k.then_some(p)).collect();
    Ok(PredictedContour { epsilon, alpha, beyond_strip: false, points })
}

fn beta_residual(beta: f64, p: f64, delta: f64, gamma: f64, ln_eps: f64) -> f64 {
    let x = TAU * delta * beta;
    -x + p * (x * gamma * E / p).ln() - ln_eps
}

/// Smallest upsampling ratio on `[1, 100]` whose predicted coefficient error
/// `exp(-2 pi delta beta + p log(2 pi delta beta gamma e / p))` reaches `target_eps`.
pub fn required_beta(p: usize, delta: f64, gamma: f64, target_eps: f64) -> Result<f64> {
    if p == 0 || !(delta > 0.0) || !(gamma >= 1.0) || !(target_eps > 0.0 && target_eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need p >= 1, delta > 0, gamma >= 1, 0 < eps < 1; got p={p}, delta={delta}, gamma={gamma}, eps={target_eps}"
        )));
    }
    let pf = p as f64;
    let ln_eps = target_eps.ln();
    let f = |b: f64| beta_residual(b, pf, delta, gamma, ln_eps);
    // The residual is concave in beta with its maximum at p / (2 pi delta).
    let mut lo = (pf / (TAU * delta)).max(1.0);
    let mut hi = 100.0;
    if f(lo) <= 0.0 {
        return Ok(lo);
    }
    if f(hi) > 0.0 {
        return Err(Error::NoRoot(format!("beta > 100 needed for p={p}, eps={target_eps}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Default Taylor analyticity radius for a box of radius `r`.
pub fn default_rho(r: f64) -> f64 {
    std::f64::consts::SQRT_2 * r
}
