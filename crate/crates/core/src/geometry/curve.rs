use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on `|Im s|` for complex-parameter evaluation.
pub const DEFAULT_STRIP_LIMIT: f64 = 1.5;

const SAMPLE_FLOOR: usize = 1024;

/// Which side of the boundary a complex parameter (or point) belongs to.
/// With the counter-clockwise parametrization, `Im s > 0` is the interior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Interior,
    Exterior,
}

impl Side {
    /// Sign of `Im s` on this side.
    pub fn sign(self) -> f64 {
        match self {
            Side::Interior => 1.0,
            Side::Exterior => -1.0,
        }
    }

    pub fn of_param(s: Complex64) -> Side {
        if s.im >= 0.0 {
            Side::Interior
        } else {
            Side::Exterior
        }
    }
}

/// Geometry of one node `s` on the real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGeometry {
    pub s: f64,
    pub z: Complex64,
    pub dz: Complex64,
    pub d2z: Complex64,
}

impl NodeGeometry {
    pub fn speed(&self) -> f64 {
        self.dz.norm()
    }

    /// Outward unit normal.
    pub fn normal(&self) -> Complex64 {
        -Complex64::i() * self.dz / self.dz.norm()
    }

    /// Signed curvature (positive where the curve is locally convex).
    pub fn curvature(&self) -> f64 {
        (self.dz.conj() * self.d2z).im / self.dz.norm().powi(3)
    }
}

/// Equispaced periodic trapezoid nodes `s_j = 2 pi j / n`, `j = 0..n`, with
/// their geometry. Node `j = 0` is the same point as the node `j = n` of a
/// one-based numbering.
#[derive(Debug, Clone)]
pub struct NodeSet {
    pub nodes: Vec<NodeGeometry>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trapezoid weight `2 pi / n`.
    pub fn weight(&self) -> f64 {
        TAU / self.nodes.len() as f64
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.nodes.iter().map(|g| g.z).collect()
    }
}

/// Analytic closed curve `Z(s) = sum_{k=-K..K} c_k e^{iks}`, stored with a
/// counter-clockwise orientation.
#[derive(Debug, Clone)]
pub struct Curve {
    name: String,
    order: usize,
    /// `coeffs[k + K] = c_k`.
    coeffs: Vec<Complex64>,
    d1: Vec<Complex64>,
    d2: Vec<Complex64>,
    strip_limit: f64,
    diameter: f64,
    samples: Vec<(f64, Complex64)>,
}

/// On-disk form of a curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveRecord {
    pub name: String,
    #[serde(rename = "K")]
    pub order: usize,
    pub coeffs: Vec<[f64; 2]>,
    pub orientation: String,
}

impl Curve {
    /// Builds a curve from coefficients `c_{-K} .. c_K` (length `2K + 1`).
    /// A clockwise parametrization is reversed.
    pub fn from_coefficients(name: impl Into<String>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() % 2 != 1 || coeffs.len() < 3 {
            return Err(Error::InvalidCurve("coefficient count must be 2K+1 with K >= 1".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidCurve("non-finite coefficient".into()));
        }
        let order = coeffs.len() / 2;
        // Signed area = pi * sum k |c_k|^2.
        let area: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (i as f64 - order as f64) * c.norm_sqr())
            .sum::<f64>()
            * PI;
        let coeffs = if area < 0.0 { coeffs.into_iter().rev().collect() } else { coeffs };
        let d1: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| Complex64::new(0.0, i as f64 - order as f64) * c)
            .collect();
        let d2: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| -(i as f64 - order as f64).powi(2) * c)
            .collect();
        let mut curve = Curve {
            name: name.into(),
            order,
            coeffs,
            d1,
            d2,
            strip_limit: DEFAULT_STRIP_LIMIT,
            diameter: 0.0,
            samples: Vec::new(),
        };
        let n_samples = SAMPLE_FLOOR.max(16 * order);
        curve.samples = (0..n_samples)
            .map(|j| {
                let t = TAU * j as f64 / n_samples as f64;
                (t, curve.eval(Complex64::new(t, 0.0)))
            })
            .collect();
        let (mut lo, mut hi) = (Complex64::new(f64::MAX, f64::MAX), Complex64::new(f64::MIN, f64::MIN));
        for (_, z) in &curve.samples {
            lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        curve.diameter = (hi - lo).norm();
        Ok(curve)
    }

    pub fn from_record(record: &CurveRecord) -> Result<Self> {
        if record.coeffs.len() != 2 * record.order + 1 {
            return Err(Error::InvalidCurve("coefficient count does not match K".into()));
        }
        let mut coeffs: Vec<Complex64> =
            record.coeffs.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        match record.orientation.as_str() {
            "ccw" => {}
            "cw" => coeffs.reverse(),
            other => return Err(Error::InvalidCurve(format!("unknown orientation `{other}`"))),
        }
        Self::from_coefficients(record.name.clone(), coeffs)
    }

    pub fn to_record(&self) -> CurveRecord {
        CurveRecord {
            name: self.name.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
            orientation: "ccw".into(),
        }
    }

    pub fn with_strip_limit(mut self, limit: f64) -> Self {
        self.strip_limit = limit;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Truncation order `K`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient `c_k`, zero outside `-K..=K`.
    pub fn coefficient(&self, k: i64) -> Complex64 {
        let idx = k + self.order as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[idx as usize]
        }
    }

    pub fn strip_limit(&self) -> f64 {
        self.strip_limit
    }

    /// Diagonal of the bounding box of the curve.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Dense real-axis samples `(t, Z(t))`.
    pub fn samples(&self) -> &[(f64, Complex64)] {
        &self.samples
    }

    fn series(&self, coeffs: &[Complex64], s: Complex64) -> Complex64 {
        let k = self.order;
        let w = (Complex64::i() * s).exp();
        let winv = w.inv();
        // Non-negative powers by Horner in w.
        let mut pos = Complex64::new(0.0, 0.0);
        for c in coeffs[k..].iter().rev() {
            pos = pos * w + c;
        }
        let mut neg = Complex64::new(0.0, 0.0);
        for c in coeffs[..k].iter() {
            neg = (neg + c) * winv;
        }
        pos + neg
    }

    /// `Z(s)` with no strip check.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.series(&self.coeffs, s)
    }

    /// `Z'(s)` with no strip check.
    pub fn eval_d1(&self, s: Complex64) -> Complex64 {
        self.series(&self.d1, s)
    }

    /// `Z''(s)` with no strip check.
    pub fn eval_d2(&self, s: Complex64) -> Complex64 {
        self.series(&self.d2, s)
    }

    fn check_strip(&self, s: Complex64) -> Result<()> {
        if s.im.abs() > self.strip_limit {
            Err(Error::StripLimitExceeded { im: s.im.abs(), limit: self.strip_limit })
        } else {
            Ok(())
        }
    }

    /// `Z(s)` for complex `s` inside the strip limit.
    pub fn eval_z(&self, s: Complex64) -> Result<Complex64> {
        self.check_strip(s)?;
        Ok(self.eval(s))
    }

    pub fn eval_dz(&self, s: Complex64) -> Result<Complex64> {
        self.check_strip(s)?;
        Ok(self.eval_d1(s))
    }

    pub fn eval_d2z(&self, s: Complex64) -> Result<Complex64> {
        self.check_strip(s)?;
        Ok(self.eval_d2(s))
    }

    /// `Z(t) - Z(s)` for real parameters, summed term by term as
    /// `c_k e^{iks} 2i sin(k d/2) e^{ik d/2}` with `d = t - s`, so that close
    /// pairs keep full relative accuracy.
    pub fn chord(&self, t: f64, s: f64) -> Complex64 {
        let d = t - s;
        let k0 = self.order as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let k = idx as i64 - k0;
            if k == 0 {
                continue;
            }
            let kf = k as f64;
            let phase = Complex64::from_polar(1.0, kf * (s + 0.5 * d));
            acc += c * phase * Complex64::new(0.0, 2.0 * (0.5 * kf * d).sin());
        }
        acc
    }

    pub fn point(&self, t: f64) -> Complex64 {
        self.eval(Complex64::new(t, 0.0))
    }

    pub fn node(&self, t: f64) -> NodeGeometry {
        let s = Complex64::new(t, 0.0);
        NodeGeometry { s: t, z: self.eval(s), dz: self.eval_d1(s), d2z: self.eval_d2(s) }
    }

    pub fn speed(&self, t: f64) -> f64 {
        self.node(t).speed()
    }

    pub fn normal(&self, t: f64) -> Complex64 {
        self.node(t).normal()
    }

    pub fn curvature(&self, t: f64) -> f64 {
        self.node(t).curvature()
    }

    /// `n` equispaced trapezoid nodes.
    pub fn nodes(&self, n: usize) -> NodeSet {
        NodeSet { nodes: (0..n).map(|j| self.node(TAU * j as f64 / n as f64)).collect() }
    }

    /// Samples of the translated curve `Gamma_alpha = Z(t + i alpha)`.
    pub fn gamma_curve(&self, alpha: f64, n_points: usize) -> Result<Vec<Complex64>> {
        self.check_strip(Complex64::new(0.0, alpha))?;
        Ok((0..n_points)
            .map(|j| self.eval(Complex64::new(TAU * j as f64 / n_points as f64, alpha)))
            .collect())
    }

    /// Checks positivity of the speed and simplicity on a dense sample.
    pub fn validate(&self) -> Result<()> {
        let n = 2048;
        let mut min_speed = f64::MAX;
        let mut pts = Vec::with_capacity(n);
        for j in 0..n {
            let g = self.node(TAU * j as f64 / n as f64);
            min_speed = min_speed.min(g.speed());
            pts.push(g.z);
        }
        if min_speed <= 0.0 || !min_speed.is_finite() {
            return Err(Error::InvalidCurve(format!("speed vanishes (min |Z'| = {min_speed:e})")));
        }
        if polyline_self_intersects(&pts, true) {
            return Err(Error::InvalidCurve("curve self-intersects".into()));
        }
        Ok(())
    }

    /// Winding-number test against the dense sample polyline.
    pub fn polyline_contains(&self, z: Complex64) -> bool {
        let pts = &self.samples;
        let n = pts.len();
        let mut inside = false;
        for i in 0..n {
            let a = pts[i].1;
            let b = pts[(i + 1) % n].1;
            if (a.im > z.im) != (b.im > z.im) {
                let x = a.re + (z.im - a.im) / (b.im - a.im) * (b.re - a.re);
                if z.re < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn segments_intersect(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    fn cross(a: Complex64, b: Complex64) -> f64 {
        a.re * b.im - a.im * b.re
    }
    let d1 = cross(q2 - q1, p1 - q1);
    let d2 = cross(q2 - q1, p2 - q1);
    let d3 = cross(p2 - p1, q1 - p1);
    let d4 = cross(p2 - p1, q2 - p1);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0)
}

/// Brute-force test for crossings between non-adjacent segments.
pub fn polyline_self_intersects(pts: &[Complex64], closed: bool) -> bool {
    let n = pts.len();
    if n < 4 {
        return false;
    }
    let n_seg = if closed { n } else { n - 1 };
    let seg = |i: usize| (pts[i], pts[(i + 1) % n]);
    let bbox = |i: usize| {
        let (a, b) = seg(i);
        (a.re.min(b.re), a.re.max(b.re), a.im.min(b.im), a.im.max(b.im))
    };
    let boxes: Vec<_> = (0..n_seg).map(bbox).collect();
    for i in 0..n_seg {
        for j in (i + 2)..n_seg {
            if closed && i == 0 && j == n_seg - 1 {
                continue;
            }
            let (a, b) = (boxes[i], boxes[j]);
            if a.1 < b.0 || b.1 < a.0 || a.3 < b.2 || b.3 < a.2 {
                continue;
            }
            let (p1, p2) = seg(i);
            let (q1, q2) = seg(j);
            if segments_intersect(p1, p2, q1, q2) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(r: f64) -> Curve {
        Curve::from_coefficients("circle", vec![0.0.into(), 0.0.into(), r.into()]).unwrap()
    }

    #[test]
    fn circle_normal_is_radial() {
        let c = circle(2.0);
        for &t in &[0.0, 0.7, 2.5, 4.0] {
            let n = c.normal(t);
            let radial = c.point(t) / c.point(t).norm();
            assert!((n - radial).norm() < 1e-15);
            assert!((c.curvature(t) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn clockwise_input_is_reversed() {
        let cw = Curve::from_coefficients("cw", vec![1.0.into(), 0.0.into(), 0.0.into()]).unwrap();
        assert!((cw.coefficient(1) - 1.0).norm() < 1e-16);
        assert!(cw.coefficient(-1).norm() < 1e-16);
    }

    #[test]
    fn unit_circle_gamma_radius() {
        let c = circle(1.0);
        for z in c.gamma_curve(0.1, 64).unwrap() {
            assert!((z.norm() - (-0.1f64).exp()).abs() < 1e-13);
        }
        assert!(matches!(c.gamma_curve(2.0, 8), Err(Error::StripLimitExceeded { .. })));
    }

    #[test]
    fn record_round_trip() {
        let c = circle(1.5);
        let back = Curve::from_record(&c.to_record()).unwrap();
        assert_eq!(back.to_record().coeffs, c.to_record().coeffs);
    }

    #[test]
    fn figure_eight_is_rejected() {
        // Z = e^{is} + 1.2 e^{-2is} crosses itself.
        let coeffs = vec![
            Complex64::new(1.2, 0.0),
            0.0.into(),
            0.0.into(),
            Complex64::new(1.0, 0.0),
            0.0.into(),
        ];
        let c = Curve::from_coefficients("loop", coeffs).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn polyline_inside_test() {
        let c = circle(1.0);
        assert!(c.polyline_contains(Complex64::new(0.3, -0.2)));
        assert!(!c.polyline_contains(Complex64::new(1.3, 0.0)));
    }
}
