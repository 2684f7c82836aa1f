//! Shared scenes for the benchmarks.

use std::f64::consts::TAU;
use std::sync::Arc;

use layerclose::geometry::default_alpha_bad;
use layerclose::{builtin_curve, Complex64, Curve, CurveId, Density};

pub fn kite() -> Arc<Curve> {
    Arc::new(builtin_curve(CurveId::Kite, None).expect("kite"))
}

/// Density `e^{Z(s)}` on `n` nodes.
pub fn exp_density(curve: &Arc<Curve>, n: usize) -> Density {
    let c = curve.clone();
    Density::from_fn(curve.clone(), n, move |s| c.point(s).exp()).expect("density")
}

/// `count` interior collar targets on a low-discrepancy sequence.
pub fn collar_targets(curve: &Curve, n: usize, count: usize) -> Vec<Complex64> {
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let depth = default_alpha_bad(n);
    (0..count)
        .map(|k| {
            let t = TAU * (k as f64 * golden).fract();
            let a = depth * ((k as f64 * 2f64.sqrt()).fract() * 0.98 + 0.01);
            curve.eval(Complex64::new(t, a))
        })
        .collect()
}
