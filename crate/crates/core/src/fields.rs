//! Manufactured solutions used as boundary data and as analytic references.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::special::{hankel01_unchecked, X_MAX};

/// A closed-form field on the plane. Points are complex numbers `x + iy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Field {
    /// `u = c`.
    Constant { value: f64 },
    /// `u = xy`.
    Xy,
    /// `u = e^y cos x`.
    ExpCos,
    /// `u = log |z - center|`.
    LogPoint { center: [f64; 2] },
    /// Laplace or Helmholtz fundamental solution centered at `center`:
    /// `(1/2pi) log(1/r)` for `omega = 0`, `(i/4) H0(omega r)` otherwise.
    PointSource { omega: f64, center: [f64; 2] },
    /// `u = exp(i omega d.x)` with `d = (cos angle, sin angle)`.
    PlaneWave { omega: f64, angle: f64 },
}

fn point(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl Field {
    pub fn value(&self, z: Complex64) -> Complex64 {
        match *self {
            Field::Constant { value } => value.into(),
            Field::Xy => (z.re * z.im).into(),
            Field::ExpCos => (z.im.exp() * z.re.cos()).into(),
            Field::LogPoint { center } => (z - point(center)).norm().ln().into(),
            Field::PointSource { omega, center } => {
                let r = (z - point(center)).norm();
                if omega == 0.0 {
                    (-r.ln() / (2.0 * PI)).into()
                } else {
                    Complex64::new(0.0, 0.25) * hankel01_unchecked((omega * r).min(X_MAX)).0
                }
            }
            Field::PlaneWave { omega, angle } => {
                let phase = omega * (angle.cos() * z.re + angle.sin() * z.im);
                Complex64::from_polar(1.0, phase)
            }
        }
    }

    /// `(du/dx, du/dy)`.
    pub fn gradient(&self, z: Complex64) -> [Complex64; 2] {
        let c = |v: f64| Complex64::new(v, 0.0);
        match *self {
            Field::Constant { .. } => [c(0.0), c(0.0)],
            Field::Xy => [c(z.im), c(z.re)],
            Field::ExpCos => {
                let e = z.im.exp();
                [c(-e * z.re.sin()), c(e * z.re.cos())]
            }
            Field::LogPoint { center } => {
                let d = z - point(center);
                let r2 = d.norm_sqr();
                [c(d.re / r2), c(d.im / r2)]
            }
            Field::PointSource { omega, center } => {
                let d = z - point(center);
                let r = d.norm();
                let radial = if omega == 0.0 {
                    c(-1.0 / (2.0 * PI * r))
                } else {
                    // d/dr (i/4) H0(omega r) = -(i omega / 4) H1(omega r)
                    Complex64::new(0.0, -0.25 * omega) * hankel01_unchecked((omega * r).min(X_MAX)).1
                };
                [radial * d.re / r, radial * d.im / r]
            }
            Field::PlaneWave { omega, angle } => {
                let u = self.value(z);
                let ik = Complex64::new(0.0, omega);
                [ik * angle.cos() * u, ik * angle.sin() * u]
            }
        }
    }

    /// Derivative along the unit vector `n` (as a complex number).
    pub fn normal_derivative(&self, z: Complex64, n: Complex64) -> Complex64 {
        let [gx, gy] = self.gradient(z);
        gx * n.re + gy * n.im
    }

    /// Singular point of the field, if any.
    pub fn singularity(&self) -> Option<Complex64> {
        match *self {
            Field::LogPoint { center } | Field::PointSource { center, .. } => Some(point(center)),
            _ => None,
        }
    }

    /// Whether the field solves the homogeneous PDE with wavenumber `omega`.
    pub fn solves(&self, omega: f64) -> bool {
        match *self {
            Field::Constant { .. } | Field::Xy | Field::ExpCos | Field::LogPoint { .. } => omega == 0.0,
            Field::PointSource { omega: w, .. } | Field::PlaneWave { omega: w, .. } => w == omega,
        }
    }
}
