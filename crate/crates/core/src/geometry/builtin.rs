use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::Curve;
use crate::error::{Error, Result};

/// Names of the built-in test boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveId {
    /// Polar curve `r = 1 + 0.3 cos(3(theta + 0.3 sin theta))`.
    Kite,
    /// The kite with a narrow Gaussian bump in `r` at `theta = 3 pi / 4`.
    KiteBump,
    /// Polar Fourier series with 40 random modes of amplitude at most 0.04.
    Random40,
}

impl std::str::FromStr for CurveId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kite" => Ok(CurveId::Kite),
            "kite_bump" => Ok(CurveId::KiteBump),
            "random40" => Ok(CurveId::Random40),
            other => Err(Error::UnknownCurve(other.to_string())),
        }
    }
}

impl CurveId {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveId::Kite => "kite",
            CurveId::KiteBump => "kite_bump",
            CurveId::Random40 => "random40",
        }
    }
}

const TRUNCATION: f64 = 1e-15;

const BUMP_AMPLITUDE: f64 = 0.1;
const BUMP_WIDTH: f64 = 0.05;
const BUMP_CENTER: f64 = 3.0 * PI / 4.0;

fn kite_radius(theta: f64) -> f64 {
    1.0 + 0.3 * (3.0 * (theta + 0.3 * theta.sin())).cos()
}

fn bump(theta: f64) -> f64 {
    let d = (theta - BUMP_CENTER + PI).rem_euclid(TAU) - PI;
    BUMP_AMPLITUDE * (-d * d / (2.0 * BUMP_WIDTH * BUMP_WIDTH)).exp()
}

/// Fourier coefficients `c_{-K}..c_K` of the periodic function `z`, with `K`
/// grown until everything beyond it is below `1e-15` of the largest coefficient.
pub fn fourier_coefficients(z: impl Fn(f64) -> Complex64) -> Result<Vec<Complex64>> {
    let mut planner = FftPlanner::<f64>::new();
    let mut m = 64usize;
    while m <= 1 << 15 {
        let mut buf: Vec<Complex64> = (0..m).map(|j| z(TAU * j as f64 / m as f64)).collect();
        planner.plan_fft_forward(m).process(&mut buf);
        let scale = 1.0 / m as f64;
        let coeff = |k: i64| buf[k.rem_euclid(m as i64) as usize] * scale;
        let half = (m / 2) as i64;
        let largest = (-half + 1..half).map(|k| coeff(k).norm()).fold(0.0, f64::max);
        let tail = (-half + 1..half)
            .filter(|k| k.unsigned_abs() as i64 > half / 2)
            .map(|k| coeff(k).norm())
            .fold(0.0, f64::max);
        if tail <= TRUNCATION * largest {
            let order = (1..half)
                .filter(|&k| coeff(k).norm().max(coeff(-k).norm()) > TRUNCATION * largest)
                .max()
                .unwrap_or(1)
                .max(1);
            let order = order as i64;
            return Ok((-order..=order).map(coeff).collect());
        }
        m *= 2;
    }
    Err(Error::InvalidCurve("Fourier series did not converge".into()))
}

/// Builds one of the built-in curves. `seed` is required for `random40`.
pub fn builtin_curve(id: CurveId, seed: Option<u64>) -> Result<Curve> {
    let coeffs = match id {
        CurveId::Kite => fourier_coefficients(|t| kite_radius(t) * Complex64::from_polar(1.0, t))?,
        CurveId::KiteBump => {
            fourier_coefficients(|t| (kite_radius(t) + bump(t)) * Complex64::from_polar(1.0, t))?
        }
        CurveId::Random40 => {
            let seed = seed.ok_or_else(|| Error::MissingSeed(id.as_str().into()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let modes: Vec<(f64, f64)> =
                (0..40).map(|_| (rng.gen_range(-0.04..=0.04), rng.gen_range(-0.04..=0.04))).collect();
            let radius = move |t: f64| {
                1.0 + modes
                    .iter()
                    .enumerate()
                    .map(|(i, (a, b))| {
                        let n = (i + 1) as f64;
                        a * (n * t).cos() + b * (n * t).sin()
                    })
                    .sum::<f64>()
            };
            fourier_coefficients(move |t| radius(t) * Complex64::from_polar(1.0, t))?
        }
    };
    let curve = Curve::from_coefficients(id.as_str(), coeffs)?;
    curve.validate()?;
    Ok(curve)
}

/// Builds a curve by name (`kite`, `kite_bump`, `random40`).
pub fn builtin_curve_by_name(name: &str, seed: Option<u64>) -> Result<Curve> {
    builtin_curve(name.parse()?, seed)
}

/// Circle of radius `r` about the origin.
pub fn circle(r: f64) -> Curve {
    Curve::from_coefficients("circle", vec![0.0.into(), 0.0.into(), r.into()])
        .expect("three coefficients")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kite_reference_points() {
        let kite = builtin_curve(CurveId::Kite, None).unwrap();
        assert!((kite.point(0.0) - Complex64::new(1.3, 0.0)).norm() < 1e-14);
        assert!((kite.point(PI) - Complex64::new(-0.7, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn kite_truncation_is_tight() {
        let kite = builtin_curve(CurveId::Kite, None).unwrap();
        let k = kite.order() as i64;
        let largest = (-k..=k).map(|i| kite.coefficient(i).norm()).fold(0.0, f64::max);
        let edge = kite.coefficient(k).norm().max(kite.coefficient(-k).norm());
        assert!(edge > TRUNCATION * largest && edge < 1e-12 * largest);
        // Off-grid check against the polar formula.
        for &t in &[0.123, 1.7, 4.4] {
            let exact = kite_radius(t) * Complex64::from_polar(1.0, t);
            assert!((kite.point(t) - exact).norm() < 1e-14);
        }
    }

    #[test]
    fn random40_requires_seed_and_is_valid() {
        assert!(matches!(builtin_curve(CurveId::Random40, None), Err(Error::MissingSeed(_))));
        let c = builtin_curve(CurveId::Random40, Some(7)).unwrap();
        c.validate().unwrap();
        assert!(c.order() <= 41);
    }

    #[test]
    fn kite_bump_has_bump() {
        let c = builtin_curve(CurveId::KiteBump, None).unwrap();
        let t = BUMP_CENTER;
        let expected = (kite_radius(t) + BUMP_AMPLITUDE) * Complex64::from_polar(1.0, t);
        assert!((c.point(t) - expected).norm() < 1e-13);
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(builtin_curve_by_name("star", None), Err(Error::UnknownCurve(_))));
    }
}
