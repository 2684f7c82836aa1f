use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Curve, Side};
use crate::error::{Error, Result};

/// Half-width of the parameter strip in which native evaluation is deemed
/// inaccurate: about five node spacings on each side.
pub fn default_alpha_bad(n: usize) -> f64 {
    10.0 * PI / n as f64
}

/// Strip half-width `alpha > 0` of an annular neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    pub alpha: f64,
}

impl AnnulusSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha.is_finite() {
            Ok(Self { alpha })
        } else {
            Err(Error::InvalidParameter(format!("strip half-width must be positive, got {alpha}")))
        }
    }
}

/// Parameters of a box cover of the bad collar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverSpec {
    pub n_boxes: usize,
    pub alpha_bad: f64,
    pub alpha0: f64,
    pub side: Side,
}

impl CoverSpec {
    /// `ceil(n / 5)` boxes, `alpha_bad = 10 pi / n`, centers at `alpha_bad / 2`.
    pub fn defaults(n: usize, side: Side) -> Self {
        Self::with_divisor(n, 5, side)
    }

    /// `ceil(n / divisor)` boxes with the default strip widths.
    pub fn with_divisor(n: usize, divisor: usize, side: Side) -> Self {
        let alpha_bad = default_alpha_bad(n);
        Self { n_boxes: n.div_ceil(divisor), alpha_bad, alpha0: 0.5 * alpha_bad, side }
    }
}

/// One box: the image of `[t_lo, t_hi) x (0, alpha_bad]` (sign-flipped on the exterior).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverBox {
    pub index: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    /// Parameter preimage of the center.
    pub center_param: Complex64,
    pub center: Complex64,
    pub radius: f64,
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BoxCover {
    pub spec: CoverSpec,
    pub boxes: Vec<CoverBox>,
}

const RADIUS_GRID: usize = 20;

/// Left edge of box `k`: `pi (2k - 1) / n_boxes`. Adjacent boxes share the
/// identical floating-point edge value.
fn box_edge(k: usize, n_boxes: usize) -> f64 {
    PI * (2.0 * k as f64 - 1.0) / n_boxes as f64
}

impl BoxCover {
    pub fn build(curve: &Curve, spec: CoverSpec) -> Result<Self> {
        if spec.n_boxes == 0 {
            return Err(Error::InvalidParameter("n_boxes must be at least 1".into()));
        }
        AnnulusSpec::new(spec.alpha_bad)?;
        if !(spec.alpha0 > 0.0 && spec.alpha0 <= spec.alpha_bad) {
            return Err(Error::InvalidParameter("alpha0 must lie in (0, alpha_bad]".into()));
        }
        if spec.alpha_bad > curve.strip_limit() {
            return Err(Error::StripLimitExceeded { im: spec.alpha_bad, limit: curve.strip_limit() });
        }
        let sign = spec.side.sign();
        let boxes = (0..spec.n_boxes)
            .map(|b| {
                let t_lo = box_edge(b, spec.n_boxes);
                let t_hi = box_edge(b + 1, spec.n_boxes);
                let center_param = Complex64::new(TAU * b as f64 / spec.n_boxes as f64, sign * spec.alpha0);
                let center = curve.eval(center_param);
                let mut radius: f64 = 0.0;
                for i in 0..RADIUS_GRID {
                    let t = t_lo + (t_hi - t_lo) * i as f64 / (RADIUS_GRID - 1) as f64;
                    for k in 0..RADIUS_GRID {
                        let a = sign * spec.alpha_bad * k as f64 / (RADIUS_GRID - 1) as f64;
                        radius = radius.max((curve.eval(Complex64::new(t, a)) - center).norm());
                    }
                }
                CoverBox { index: b, t_lo, t_hi, center_param, center, radius, gamma: None }
            })
            .collect();
        Ok(Self { spec, boxes })
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Fills in the distortion estimate of every box.
    pub fn with_gammas(mut self, curve: &Curve) -> Self {
        let (alpha0, side) = (self.spec.alpha0, self.spec.side);
        for b in &mut self.boxes {
            b.gamma = Some(distortion_gamma(curve, b.center, alpha0, b.radius, side));
        }
        self
    }

    /// Box containing the parameter `s`, if `s` lies in the covered strip.
    pub fn box_of_param(&self, s: Complex64) -> Option<usize> {
        let a = self.spec.side.sign() * s.im;
        if !(a > 0.0 && a <= self.spec.alpha_bad) {
            return None;
        }
        let n = self.spec.n_boxes;
        let t = s.re.rem_euclid(TAU);
        let b = ((t * n as f64 / TAU) + 0.5).floor() as usize % n;
        Some(b)
    }

    /// Box containing the target `z`, determined through its preimage.
    pub fn locate(&self, curve: &Curve, z: Complex64) -> Option<(usize, Complex64)> {
        let s = curve.bad_region_param(z, self.spec.alpha_bad)?;
        self.box_of_param(s).map(|b| (b, s))
    }

    /// Parameter rectangle of box `b` as `(t_lo, t_hi, a_lo, a_hi)`.
    pub fn rectangle(&self, b: usize) -> (f64, f64, f64, f64) {
        let bx = &self.boxes[b];
        match self.spec.side {
            Side::Interior => (bx.t_lo, bx.t_hi, 0.0, self.spec.alpha_bad),
            Side::Exterior => (bx.t_lo, bx.t_hi, -self.spec.alpha_bad, 0.0),
        }
    }
}

/// Distortion of the map near a center `z0 = Z(t0 + i alpha0)`:
/// `sup_{0 < a < alpha0} R / d(Gamma_a, z0) * (alpha0 - a) / alpha0`,
/// sampled with 20 values of `a` and 1000 points per translated curve.
pub fn distortion_gamma(curve: &Curve, z0: Complex64, alpha0: f64, radius: f64, side: Side) -> f64 {
    distortion_gamma_sampled(curve, z0, alpha0, radius, side, 20, 1000)
}

pub fn distortion_gamma_sampled(
    curve: &Curve,
    z0: Complex64,
    alpha0: f64,
    radius: f64,
    side: Side,
    n_alpha: usize,
    n_points: usize,
) -> f64 {
    let sign = side.sign();
    (0..n_alpha)
        .map(|k| {
            let a = alpha0 * k as f64 / n_alpha as f64;
            let d = (0..n_points)
                .map(|j| {
                    let t = TAU * j as f64 / n_points as f64;
                    (curve.eval(Complex64::new(t, sign * a)) - z0).norm()
                })
                .fold(f64::MAX, f64::min);
            radius / d * (alpha0 - a) / alpha0
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{builtin_curve, circle, CurveId};

    #[test]
    fn kite_default_box_count() {
        let kite = builtin_curve(CurveId::Kite, None).unwrap();
        let cover = BoxCover::build(&kite, CoverSpec::defaults(130, Side::Interior)).unwrap();
        assert_eq!(cover.len(), 26);
    }

    #[test]
    fn circle_boxes_are_congruent() {
        let c = circle(1.0);
        let cover = BoxCover::build(&c, CoverSpec::defaults(100, Side::Interior)).unwrap();
        let r0 = cover.boxes[0].radius;
        for b in &cover.boxes {
            assert!((b.radius - r0).abs() < 1e-12);
        }
    }

    #[test]
    fn edges_tile_exactly() {
        let c = circle(1.0);
        for n_boxes in [1usize, 7, 26, 85] {
            let spec = CoverSpec { n_boxes, ..CoverSpec::defaults(130, Side::Interior) };
            let cover = BoxCover::build(&c, spec).unwrap();
            for b in 0..n_boxes {
                let next = (b + 1) % n_boxes;
                let hi = cover.boxes[b].t_hi;
                let lo_next = cover.boxes[next].t_lo + if next == 0 { TAU } else { 0.0 };
                assert!(hi == lo_next || (next == 0 && (hi - lo_next).abs() < 1e-15));
            }
            let total: f64 = cover.boxes.iter().map(|b| b.t_hi - b.t_lo).sum();
            assert!((total - TAU).abs() < 1e-12);
        }
    }

    #[test]
    fn centers_sit_on_the_translated_curve() {
        let kite = builtin_curve(CurveId::Kite, None).unwrap();
        let spec = CoverSpec::defaults(130, Side::Exterior);
        let cover = BoxCover::build(&kite, spec).unwrap();
        for (b, bx) in cover.boxes.iter().enumerate() {
            let s = Complex64::new(TAU * b as f64 / 26.0, -spec.alpha0);
            assert!((bx.center - kite.eval(s)).norm() < 1e-15);
            assert_eq!(cover.box_of_param(bx.center_param), Some(b));
        }
    }

    #[test]
    fn kite_distortion() {
        let kite = builtin_curve(CurveId::Kite, None).unwrap();
        let cover = BoxCover::build(&kite, CoverSpec::defaults(130, Side::Interior)).unwrap().with_gammas(&kite);
        let mut g: Vec<(f64, usize)> = cover.boxes.iter().map(|b| (b.gamma.unwrap(), b.index)).collect();
        g.sort_by(|a, b| a.0.total_cmp(&b.0));
        let median = 0.5 * (g[12].0 + g[13].0);
        assert!((median - 1.7).abs() <= 0.2, "median {median}");
        // Largest distortion next to the nearest interior Schwarz point (s = 0.27i).
        assert_eq!(g[25].1, 0);
        assert!(g.iter().all(|(v, _)| *v > 1.2));
    }

    #[test]
    fn invalid_specs() {
        let c = circle(1.0);
        let mut spec = CoverSpec::defaults(100, Side::Interior);
        spec.n_boxes = 0;
        assert!(BoxCover::build(&c, spec).is_err());
        assert!(AnnulusSpec::new(-1.0).is_err());
    }
}
