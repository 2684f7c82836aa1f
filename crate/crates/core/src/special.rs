//! Integer-order Bessel and Hankel functions of real positive argument.
//!
//! `J_m` comes from Miller's downward recurrence normalized by
//! `J_0 + 2 sum J_2k = 1`. `Y_0` and `Y_1` are accumulated in the same
//! downward pass through their Neumann series for moderate arguments and
//! switch to the Hankel asymptotic expansion for large arguments. Higher
//! orders of `Y` (and hence `H^(1)`) use upward recurrence, which is stable
//! for `Y`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported integer order.
pub const M_MAX: usize = 64;
/// Largest supported argument.
pub const X_MAX: f64 = 1.0e4;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Beyond this argument `Y_0`, `Y_1` come from the asymptotic expansion,
/// whose smallest term is roughly `exp(-2x)`.
const ASYMPTOTIC_SWITCH: f64 = 25.0;

const RESCALE_ABOVE: f64 = 1.0e250;
const OVERFLOW_LIMIT: f64 = 1.0e300;

/// Supported order/argument window for the Bessel routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselOrderRange {
    pub m_max: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for BesselOrderRange {
    fn default() -> Self {
        Self { m_max: M_MAX, x_min: f64::MIN_POSITIVE, x_max: X_MAX }
    }
}

impl BesselOrderRange {
    pub fn check(&self, m: usize, x: f64) -> Result<()> {
        if m > self.m_max {
            return Err(Error::OutOfRange(format!("order {m} exceeds m_max = {}", self.m_max)));
        }
        if !(x >= self.x_min && x <= self.x_max) {
            return Err(Error::OutOfRange(format!(
                "argument {x} outside [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        Ok(())
    }
}

fn miller_start(m_max: usize, x: f64) -> usize {
    let base = (m_max as f64).max(x);
    let start = (base + 25.0 + 10.0 * base.cbrt()).ceil() as usize;
    start + (start & 1)
}

/// Output of one downward Miller pass.
struct MillerPass {
    j: Vec<f64>,
    /// Neumann series for `Y_0`, `Y_1`; only accumulated when requested.
    y01: Option<(f64, f64)>,
}

fn miller(m_max: usize, x: f64, want_y: bool) -> MillerPass {
    let start = miller_start(m_max, x);
    let mut j = vec![0.0; m_max + 1];
    let mut f_next = 0.0_f64;
    let mut f = 1.0e-300_f64;
    let mut norm = 0.0_f64;
    // Neumann-series accumulators (scaled along with f).
    let mut su = 0.0_f64;
    let mut sv = 0.0_f64;
    // f currently holds the (unnormalized) value at order `start`.
    let mut k = start;
    loop {
        if k <= m_max {
            j[k] = f;
        }
        if k % 2 == 0 {
            if k != 0 {
                norm += 2.0 * f;
                if want_y {
                    let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    su += sign * f / k as f64;
                }
            } else {
                norm += f;
            }
        } else if want_y && k > 1 {
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let kf = k as f64;
            sv += sign * kf / (kf * kf - 1.0) * f;
        }
        if k == 0 {
            break;
        }
        let f_prev = 2.0 * k as f64 / x * f - f_next;
        f_next = f;
        f = f_prev;
        k -= 1;
        if f.abs() > RESCALE_ABOVE {
            let s = 1.0 / RESCALE_ABOVE;
            f *= s;
            f_next *= s;
            norm *= s;
            su *= s;
            sv *= s;
            for v in j.iter_mut() {
                *v *= s;
            }
        }
    }
    for v in j.iter_mut() {
        *v /= norm;
    }
    let y01 = if want_y {
        let two_over_pi = 2.0 / std::f64::consts::PI;
        let ec = (0.5 * x).ln() + EULER_GAMMA;
        let (j0, j1) = (j[0], j[1]);
        let y0 = two_over_pi * (ec * j0 - 4.0 * su / norm);
        let y1 = two_over_pi * ((ec - 1.0) * j1 - j0 / x - 4.0 * sv / norm);
        Some((y0, y1))
    } else {
        None
    };
    MillerPass { j, y01 }
}

/// Hankel asymptotic expansion of `H^(1)_nu(x)` for integer `nu` and large `x`.
fn hankel_asymptotic(nu: u32, x: f64) -> Complex64 {
    let mu = 4.0 * (nu as f64).powi(2);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut last = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let factor = (mu - odd * odd) / (8.0 * k as f64 * x);
        term *= Complex64::new(0.0, factor);
        let mag = term.norm();
        if mag > last {
            break;
        }
        sum += term;
        last = mag;
        if mag < 1.0e-17 {
            break;
        }
    }
    let phase = x - (nu as f64) * std::f64::consts::FRAC_PI_2 - std::f64::consts::FRAC_PI_4;
    let amp = (2.0 / (std::f64::consts::PI * x)).sqrt();
    amp * Complex64::from_polar(1.0, phase) * sum
}

/// `(H^(1)_0(x), H^(1)_1(x))` without range checks; `x > 0`.
pub(crate) fn hankel01_unchecked(x: f64) -> (Complex64, Complex64) {
    if x > ASYMPTOTIC_SWITCH {
        (hankel_asymptotic(0, x), hankel_asymptotic(1, x))
    } else {
        let pass = miller(1, x, true);
        let (y0, y1) = pass.y01.expect("requested");
        (Complex64::new(pass.j[0], y0), Complex64::new(pass.j[1], y1))
    }
}

/// `J_0 .. J_{m_max}` at `x >= 0` without range checks.
pub(crate) fn bessel_j_array_unchecked(m_max: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; m_max + 1];
        out[0] = 1.0;
        return out;
    }
    miller(m_max.max(1), x, false).j.into_iter().take(m_max + 1).collect()
}

/// `H^(1)_0 .. H^(1)_{m_max}` at `x > 0` by upward recurrence, without range checks.
/// Orders whose `Y` part overflows come back non-finite.
pub(crate) fn hankel1_array_unchecked(m_max: usize, x: f64) -> Vec<Complex64> {
    let (h0, h1) = hankel01_unchecked(x);
    let mut out = Vec::with_capacity(m_max + 1);
    out.push(h0);
    if m_max >= 1 {
        out.push(h1);
    }
    for m in 1..m_max {
        let next = (2.0 * m as f64 / x) * out[m] - out[m - 1];
        out.push(next);
    }
    out
}

/// Bessel function of the first kind `J_m(x)`. Negative orders use
/// `J_{-m} = (-1)^m J_m`.
pub fn bessel_j(m: i32, x: f64) -> Result<f64> {
    let order = m.unsigned_abs() as usize;
    BesselOrderRange::default().check(order, x)?;
    let j = miller(order.max(1), x, false).j[order];
    Ok(if m < 0 && order % 2 == 1 { -j } else { j })
}

/// `J_0(x) .. J_{m_max}(x)`.
pub fn bessel_j_array(m_max: usize, x: f64) -> Result<Vec<f64>> {
    BesselOrderRange::default().check(m_max, x)?;
    Ok(bessel_j_array_unchecked(m_max, x))
}

/// Bessel function of the second kind `Y_m(x)`, `m >= 0`.
pub fn bessel_y(m: u32, x: f64) -> Result<f64> {
    Ok(hankel1(m as i32, x)?.im)
}

/// Hankel function of the first kind `H^(1)_m(x) = J_m(x) + i Y_m(x)`.
///
/// `J_m` is taken from Miller's recurrence so it stays accurate for `m > x`;
/// `Y_m` uses upward recurrence from `Y_0`, `Y_1`.
pub fn hankel1(m: i32, x: f64) -> Result<Complex64> {
    let order = m.unsigned_abs() as usize;
    BesselOrderRange::default().check(order, x)?;
    let y = hankel1_array_unchecked(order, x)[order].im;
    if !y.is_finite() || y.abs() > OVERFLOW_LIMIT {
        return Err(Error::Overflow(format!("|Y_{order}({x})| exceeds representable range")));
    }
    let j = miller(order.max(1), x, false).j[order];
    let h = Complex64::new(j, y);
    Ok(if m < 0 && order % 2 == 1 { -h } else { h })
}

/// `H^(1)_0(x) .. H^(1)_{m_max}(x)` with accurate `J` parts.
pub fn hankel1_array(m_max: usize, x: f64) -> Result<Vec<Complex64>> {
    BesselOrderRange::default().check(m_max, x)?;
    let h = hankel1_array_unchecked(m_max, x);
    if let Some(bad) = h.iter().position(|v| !v.im.is_finite() || v.im.abs() > OVERFLOW_LIMIT) {
        return Err(Error::Overflow(format!("|Y_{bad}({x})| exceeds representable range")));
    }
    let j = bessel_j_array_unchecked(m_max, x);
    Ok(h.into_iter().zip(j).map(|(h, j)| Complex64::new(j, h.im)).collect())
}
