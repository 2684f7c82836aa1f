//! Rectangular target grids with side, collar and exclusion masks.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Curve, Side};

/// Grid geometry: `nx * ny` cell centers starting at `(x0, y0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Grid covering `[x0, x1] x [y0, y1]` with spacing `h`.
    pub fn covering(x0: f64, x1: f64, y0: f64, y1: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && x1 >= x0 && y1 >= y0) {
            return Err(Error::InvalidParameter(format!("bad grid bounds [{x0}, {x1}] x [{y0}, {y1}] spacing {h}")));
        }
        let nx = ((x1 - x0) / h + 1e-9).floor() as usize + 1;
        let ny = ((y1 - y0) / h + 1e-9).floor() as usize + 1;
        Ok(Self { x0, y0, dx: h, dy: h, nx, ny })
    }

    /// Bounding box of the curve enlarged by `margin`.
    pub fn around(curve: &Curve, margin: f64, h: f64) -> Result<Self> {
        let pts = curve.samples();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for (_, z) in pts {
            x0 = x0.min(z.re);
            x1 = x1.max(z.re);
            y0 = y0.min(z.im);
            y1 = y1.max(z.im);
        }
        Self::covering(x0 - margin, x1 + margin, y0 - margin, y1 + margin, h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || !(self.dx > 0.0 && self.dy > 0.0) {
            return Err(Error::InvalidParameter("grid needs positive size and spacing".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell center of the row-major index `k = iy * nx + ix`.
    pub fn point(&self, k: usize) -> Complex64 {
        let (ix, iy) = (k % self.nx, k / self.nx);
        Complex64::new(self.x0 + ix as f64 * self.dx, self.y0 + iy as f64 * self.dy)
    }

    pub fn points(&self) -> Vec<Complex64> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellMask {
    Inside,
    Outside,
    OnCollar,
    Excluded,
}

impl CellMask {
    pub fn as_str(self) -> &'static str {
        match self {
            CellMask::Inside => "inside",
            CellMask::Outside => "outside",
            CellMask::OnCollar => "on-collar",
            CellMask::Excluded => "excluded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodTag {
    Native,
    Surrogate,
    Split,
}

impl MethodTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodTag::Native => "native",
            MethodTag::Surrogate => "surrogate",
            MethodTag::Split => "split",
        }
    }
}

/// Distance from `z` to the curve, by Newton refinement of the nearest sample.
pub fn boundary_distance(curve: &Curve, z: Complex64) -> f64 {
    let (mut t, mut best) = curve
        .samples()
        .iter()
        .map(|(t, p)| (*t, (p - z).norm()))
        .fold((0.0, f64::MAX), |a, b| if b.1 < a.1 { b } else { a });
    for _ in 0..20 {
        let d = curve.point(t) - z;
        let d1 = curve.eval_d1(t.into());
        let d2 = curve.eval_d2(t.into());
        let g = (d.conj() * d1).re;
        let h = d1.norm_sqr() + (d.conj() * d2).re;
        if h <= 0.0 {
            break;
        }
        let step = g / h;
        t -= step;
        best = best.min((curve.point(t) - z).norm());
        if step.abs() < 1e-14 {
            break;
        }
    }
    best
}

/// Masks for a domain of interest on `side`: cells on the other side are
/// excluded, cells in the collar `|Im s| < alpha_bad` are on-collar, and
/// cells closer than `exclude_within` to the curve are excluded.
pub fn classify(curve: &Curve, side: Side, alpha_bad: f64, exclude_within: f64, points: &[Complex64]) -> Vec<CellMask> {
    points
        .par_iter()
        .map(|&z| {
            if curve.side_of(z) != side {
                return CellMask::Excluded;
            }
            if exclude_within > 0.0 && boundary_distance(curve, z) < exclude_within {
                return CellMask::Excluded;
            }
            if curve.in_bad_region(z, alpha_bad, &[side]) {
                CellMask::OnCollar
            } else if side == Side::Interior {
                CellMask::Inside
            } else {
                CellMask::Outside
            }
        })
        .collect()
}

/// Evaluated field on a grid. Excluded cells carry no value.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub spec: GridSpec,
    pub values: Vec<Option<Complex64>>,
    pub mask: Vec<CellMask>,
    pub method: Vec<Option<MethodTag>>,
    pub log10_err: Option<Vec<Option<f64>>>,
}

impl FieldGrid {
    /// Grid with masks and no values yet.
    pub fn new(spec: GridSpec, mask: Vec<CellMask>) -> Result<Self> {
        spec.validate()?;
        if mask.len() != spec.len() {
            return Err(Error::InvalidParameter(format!("mask has {} cells, grid {}", mask.len(), spec.len())));
        }
        let n = spec.len();
        Ok(Self { spec, values: vec![None; n], mask, method: vec![None; n], log10_err: None })
    }

    /// Row-major indices of cells that carry values.
    pub fn active(&self) -> Vec<usize> {
        (0..self.spec.len()).filter(|&k| self.mask[k] != CellMask::Excluded).collect()
    }

    pub fn active_points(&self) -> Vec<Complex64> {
        self.active().into_iter().map(|k| self.spec.point(k)).collect()
    }

    /// Stores values for the cells listed by `active()`, in that order.
    pub fn fill(&mut self, values: &[Complex64], methods: &[MethodTag]) -> Result<()> {
        let active = self.active();
        if values.len() != active.len() || methods.len() != active.len() {
            return Err(Error::InvalidParameter(format!("{} values for {} active cells", values.len(), active.len())));
        }
        for ((k, v), m) in active.into_iter().zip(values).zip(methods) {
            self.values[k] = Some(*v);
            self.method[k] = Some(*m);
        }
        Ok(())
    }

    /// Sets `log10(|u_hat - u| / max |u|)` per active cell from reference values
    /// in `active()` order; returns the maximum relative error.
    pub fn set_errors(&mut self, reference: &[Complex64]) -> Result<f64> {
        let active = self.active();
        if reference.len() != active.len() {
            return Err(Error::InvalidParameter(format!("{} reference values for {} active cells", reference.len(), active.len())));
        }
        let scale = reference.iter().map(|r| r.norm()).fold(0.0, f64::max);
        let mut errs = vec![None; self.spec.len()];
        let mut max = 0.0f64;
        for (k, r) in active.into_iter().zip(reference) {
            if let Some(v) = self.values[k] {
                let e = (v - r).norm() / scale;
                max = max.max(e);
                errs[k] = Some(e.max(1e-300).log10());
            }
        }
        self.log10_err = Some(errs);
        Ok(max)
    }

    /// CSV with header `ix,iy,x,y,re,im,mask,method,log10err`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["ix", "iy", "x", "y", "re", "im", "mask", "method", "log10err"]).map_err(io)?;
        for k in 0..self.spec.len() {
            let z = self.spec.point(k);
            let (re, im) = self.values[k].map_or((String::new(), String::new()), |v| (v.re.to_string(), v.im.to_string()));
            let err = self.log10_err.as_ref().and_then(|e| e[k]).map_or(String::new(), |e| e.to_string());
            w.write_record([
                (k % self.spec.nx).to_string(),
                (k / self.spec.nx).to_string(),
                z.re.to_string(),
                z.im.to_string(),
                re,
                im,
                self.mask[k].as_str().to_string(),
                self.method[k].map_or("", MethodTag::as_str).to_string(),
                err,
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }
}
