//! Nyström discretization of the second-kind boundary integral equations
//! and their dense or iterative solution.

mod gmres;
mod kress;

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use gmres::{gmres, GmresOutcome};
pub use kress::{kress_log_weights, kress_row};

use crate::error::{Error, Result};
use crate::fields::Field;
use crate::geometry::{Curve, NodeSet, Side};
use crate::potentials::{
    boundary_separation, laplace_adjoint_pair, laplace_dlp_diagonal, laplace_dlp_pair, Density, Equation,
    Interpolant, NystromContext, Pde,
};
use crate::special::{hankel01_unchecked, EULER_GAMMA, X_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// A boundary-value problem with manufactured data.
#[derive(Debug, Clone)]
pub struct BvpSpec {
    pub pde: Pde,
    pub omega: f64,
    pub side: Side,
    pub bc: BoundaryCondition,
    pub data: Field,
    pub curve: Arc<Curve>,
    pub n: usize,
}

impl BvpSpec {
    pub fn laplace_dirichlet(curve: Arc<Curve>, data: Field, n: usize) -> Self {
        Self { pde: Pde::Laplace, omega: 0.0, side: Side::Interior, bc: BoundaryCondition::Dirichlet, data, curve, n }
    }

    pub fn laplace_neumann(curve: Arc<Curve>, data: Field, n: usize) -> Self {
        Self { pde: Pde::Laplace, omega: 0.0, side: Side::Interior, bc: BoundaryCondition::Neumann, data, curve, n }
    }

    pub fn helmholtz_exterior(curve: Arc<Curve>, omega: f64, data: Field, n: usize) -> Self {
        Self { pde: Pde::Helmholtz, omega, side: Side::Exterior, bc: BoundaryCondition::Dirichlet, data, curve, n }
    }

    /// The integral equation used for this problem.
    pub fn equation(&self) -> Result<Equation> {
        match (self.pde, self.side, self.bc) {
            (Pde::Laplace, Side::Interior, BoundaryCondition::Dirichlet) => Ok(Equation::LaplaceDirichlet),
            (Pde::Laplace, Side::Interior, BoundaryCondition::Neumann) => Ok(Equation::LaplaceNeumann),
            (Pde::Helmholtz, Side::Exterior, BoundaryCondition::Dirichlet) if self.omega > 0.0 => {
                Ok(Equation::HelmholtzCfie { omega: self.omega })
            }
            (pde, side, bc) => Err(Error::Unsupported(format!("{pde:?} {side:?} {bc:?} problem"))),
        }
    }
}

/// Dense Nyström system `A tau = f`.
#[derive(Debug, Clone)]
pub struct NystromSystem {
    pub matrix: DMatrix<Complex64>,
    pub rhs: DVector<Complex64>,
    pub nodes: Arc<NodeSet>,
    pub equation: Equation,
    pub curve: Arc<Curve>,
    pub data: Field,
}

fn rows_to_matrix(n: usize, rows: Vec<Vec<Complex64>>) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

pub fn assemble(spec: &BvpSpec) -> Result<NystromSystem> {
    let equation = spec.equation()?;
    let n = spec.n;
    if n < 16 {
        return Err(Error::InvalidParameter(format!("N must be at least 16, got {n}")));
    }
    if matches!(equation, Equation::HelmholtzCfie { .. }) && n % 2 != 0 {
        return Err(Error::InvalidParameter(format!("the combined-field rule needs even N, got {n}")));
    }
    let nodes = Arc::new(spec.curve.nodes(n));
    let g = &nodes.nodes;
    let w = TAU / n as f64;
    let curve = spec.curve.as_ref();
    let rows: Vec<Vec<Complex64>> = match equation {
        Equation::LaplaceDirichlet => (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let k = laplace_dlp_pair(curve, &g[i], &g[j]);
                        Complex64::new(w * k - if i == j { 0.5 } else { 0.0 }, 0.0)
                    })
                    .collect()
            })
            .collect(),
        Equation::LaplaceNeumann => (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let k = laplace_adjoint_pair(curve, &g[i], &g[j]);
                        // Node 0 carries the rank-one term that pins the constant.
                        let pin = if j == 0 { 1.0 } else { 0.0 };
                        Complex64::new(w * k + pin + if i == j { 0.5 } else { 0.0 }, 0.0)
                    })
                    .collect()
            })
            .collect(),
        Equation::HelmholtzCfie { omega } => helmholtz_cfie_rows(curve, &nodes, omega)?,
    };
    let matrix = rows_to_matrix(n, rows);
    let rhs = DVector::from_iterator(n, g.iter().map(|gi| equation.data(&spec.data, gi)));
    Ok(NystromSystem { matrix, rhs, nodes, equation, curve: spec.curve.clone(), data: spec.data })
}

/// Rows of `D - i omega S + I/2` with the logarithmic parts of both kernels
/// integrated by the Kress product rule.
fn helmholtz_cfie_rows(curve: &Curve, nodes: &NodeSet, omega: f64) -> Result<Vec<Vec<Complex64>>> {
    let g = &nodes.nodes;
    let n = g.len();
    let w = TAU / n as f64;
    let r_row = kress_row(n)?;
    let i_omega = Complex64::new(0.0, omega);
    let inv4pi = 1.0 / (2.0 * TAU);
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let x = &g[i];
            (0..n)
                .map(|j| {
                    let y = &g[j];
                    let speed = y.speed();
                    let rij = r_row[(i + n - j) % n];
                    let (k1, k2) = if i == j {
                        let l2 = Complex64::new(laplace_dlp_diagonal(y), 0.0);
                        let m1 = -inv4pi * speed;
                        let m2 = (Complex64::new(0.0, 0.25)
                            - ((0.5 * omega * speed).ln() + EULER_GAMMA) / TAU)
                            * speed;
                        (-i_omega * m1, l2 - i_omega * m2)
                    } else {
                        let d = boundary_separation(curve, x, y);
                        let r = d.norm();
                        let (h0, h1) = hankel01_unchecked((omega * r).min(X_MAX));
                        let (j0, j1) = (h0.re, h1.re);
                        let ny = y.normal();
                        let cos = (d.re * ny.re + d.im * ny.im) / r;
                        let l = Complex64::new(0.0, 0.25 * omega) * h1 * cos * speed;
                        let l1 = -omega * inv4pi * cos * j1 * speed;
                        let m = Complex64::new(0.0, 0.25) * h0 * speed;
                        let m1 = -inv4pi * j0 * speed;
                        let half = 0.5 * (x.s - y.s);
                        let log = (4.0 * half.sin().powi(2)).ln();
                        let l2 = l - l1 * log;
                        let m2 = m - m1 * log;
                        (l1 - i_omega * m1, l2 - i_omega * m2)
                    };
                    let diag = if i == j { 0.5 } else { 0.0 };
                    rij * k1 + w * k2 + diag
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    DenseLu,
    Gmres,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: SolveMethod,
    pub iterations: usize,
    /// Relative residual `|A tau - f| / |f|`.
    pub residual: f64,
}

impl NystromSystem {
    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, xj) in x.iter().enumerate() {
                    acc += self.matrix[(i, j)] * xj;
                }
                acc
            })
            .collect()
    }

    fn relative_residual(&self, x: &[Complex64]) -> f64 {
        let ax = self.apply(x);
        let num: f64 = ax.iter().zip(self.rhs.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = self.rhs.iter().map(|b| b.norm_sqr()).sum();
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }

    /// 2-norm condition number.
    pub fn condition_number(&self) -> f64 {
        let sv = self.matrix.clone().singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }

    /// Wraps node values as a density carrying this system's context.
    pub fn density(&self, values: Vec<Complex64>) -> Result<Density> {
        let d = Density::new(self.curve.clone(), values)?;
        let ctx = NystromContext { equation: self.equation, data: self.data };
        let d = d.with_context(ctx);
        Ok(match self.equation {
            Equation::HelmholtzCfie { .. } => d,
            _ => d.with_interpolant(Interpolant::Nystrom)?,
        })
    }
}

/// Maximum GMRES iterations.
pub const GMRES_MAX_ITER: usize = 500;

/// Solves the system. Laplace densities default to the Nyström interpolant,
/// Helmholtz densities to the trigonometric one.
pub fn solve(system: &NystromSystem, method: SolveMethod, tol: f64) -> Result<(Density, SolveReport)> {
    let (values, iterations) = match method {
        SolveMethod::DenseLu => {
            let lu = system.matrix.clone().lu();
            let x = lu.solve(&system.rhs).ok_or(Error::SingularMatrix)?;
            if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::SingularMatrix);
            }
            (x.iter().copied().collect::<Vec<_>>(), 0)
        }
        SolveMethod::Gmres => {
            if !(tol >= 1e-14) {
                return Err(Error::InvalidParameter(format!("GMRES tolerance must be at least 1e-14, got {tol}")));
            }
            let rhs: Vec<Complex64> = system.rhs.iter().copied().collect();
            let (x, out) = gmres(|v| system.apply(v), &rhs, tol, GMRES_MAX_ITER)?;
            (x, out.iterations)
        }
    };
    let residual = system.relative_residual(&values);
    let density = system.density(values)?;
    Ok((density, SolveReport { method, iterations, residual }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{builtin_curve, circle, CurveId};
    use crate::potentials::{native_eval, physical};

    fn kite() -> Arc<Curve> {
        Arc::new(builtin_curve(CurveId::Kite, None).unwrap())
    }

    #[test]
    fn circle_dirichlet_row_sums() {
        let sys = assemble(&BvpSpec::laplace_dirichlet(Arc::new(circle(1.0)), Field::Xy, 32)).unwrap();
        let w = TAU / 32.0;
        for i in 0..32 {
            assert!((sys.matrix[(i, (i + 3) % 32)].re + w / (2.0 * TAU)).abs() < 1e-15);
            let sum: f64 = sys.matrix.row(i).iter().map(|v| v.re).sum();
            assert!((sum + 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn kite_dirichlet_xy() {
        let sys = assemble(&BvpSpec::laplace_dirichlet(kite(), Field::Xy, 130)).unwrap();
        let (tau, report) = solve(&sys, SolveMethod::DenseLu, 0.0).unwrap();
        assert!(report.residual < 1e-13);
        let k = sys.equation.representation();
        let v = native_eval(&k, &tau, &[Complex64::new(0.2, 0.1)]).unwrap();
        assert!((physical(&k, v[0]).re - 0.02).abs() < 1e-12);
    }

    #[test]
    fn boundary_residual_through_nystrom_interpolant() {
        let c = kite();
        let sys = assemble(&BvpSpec::laplace_dirichlet(c.clone(), Field::ExpCos, 130)).unwrap();
        let (tau, _) = solve(&sys, SolveMethod::DenseLu, 0.0).unwrap();
        // (D - I/2) tau = f at off-node boundary points, with D applied by a
        // 4N-node rule on the interpolated density.
        let m = 520;
        let fine = tau.upsample(m).unwrap();
        let fine_nodes = c.nodes(m);
        let s: Vec<f64> = (0..256).map(|k| TAU * (k as f64 + 0.37) / 256.0).collect();
        let at_s = tau.interpolate(&s).unwrap();
        for (t, tau_t) in s.iter().zip(&at_s) {
            let x = c.point(*t);
            let d: f64 = fine_nodes
                .nodes
                .iter()
                .zip(&fine)
                .map(|(g, v)| laplace_dlp_pair(&c, &c.node(*t), g) * v.re)
                .sum::<f64>()
                * TAU
                / m as f64;
            let res = d - 0.5 * tau_t.re - Field::ExpCos.value(x).re;
            assert!(res.abs() < 1e-12, "t={t}: {res}");
        }
    }

    #[test]
    fn gmres_matches_lu() {
        let sys = assemble(&BvpSpec::laplace_dirichlet(kite(), Field::ExpCos, 130)).unwrap();
        let (a, _) = solve(&sys, SolveMethod::DenseLu, 0.0).unwrap();
        let (b, rep) = solve(&sys, SolveMethod::Gmres, 1e-12).unwrap();
        let diff = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-11, "{diff}");
        assert!(rep.iterations > 0 && rep.iterations < 60);
        assert!(matches!(solve(&sys, SolveMethod::Gmres, 1e-15), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn dirichlet_condition_number() {
        let sys = assemble(&BvpSpec::laplace_dirichlet(kite(), Field::Xy, 130)).unwrap();
        assert!(sys.condition_number() < 1e3);
    }

    #[test]
    fn neumann_recovers_solution_up_to_a_constant() {
        let c = kite();
        let sys = assemble(&BvpSpec::laplace_neumann(c, Field::ExpCos, 130)).unwrap();
        let (sigma, _) = solve(&sys, SolveMethod::DenseLu, 0.0).unwrap();
        let k = sys.equation.representation();
        let pts = [Complex64::new(0.0, 0.0), Complex64::new(0.2, 0.3), Complex64::new(-0.3, -0.1)];
        let v = native_eval(&k, &sigma, &pts).unwrap();
        let shift = v[0].re - Field::ExpCos.value(pts[0]).re;
        for (z, vz) in pts.iter().zip(&v) {
            assert!((vz.re - shift - Field::ExpCos.value(*z).re).abs() < 1e-12);
        }
    }

    #[test]
    fn neumann_tolerates_incompatible_data() {
        // Nonzero-mean data still yields a finite solve.
        let sys = assemble(&BvpSpec::laplace_neumann(kite(), Field::Constant { value: 1.0 }, 64)).unwrap();
        let mut s = sys.clone();
        for v in s.rhs.iter_mut() {
            *v = 1.0.into();
        }
        let (sigma, _) = solve(&s, SolveMethod::DenseLu, 0.0).unwrap();
        assert!(sigma.values().iter().all(|v| v.re.is_finite()));
    }

    #[test]
    fn helmholtz_cfie_point_source() {
        let c = kite();
        let data = Field::PointSource { omega: 2.0, center: [0.1, 0.2] };
        let sys = assemble(&BvpSpec::helmholtz_exterior(c.clone(), 2.0, data, 60)).unwrap();
        let (tau, _) = solve(&sys, SolveMethod::DenseLu, 0.0).unwrap();
        let h = TAU / 60.0;
        let targets: Vec<Complex64> =
            [0.3, 2.0, 3.5, 5.0].iter().map(|&t| c.point(t) + 10.0 * h * c.speed(t) * c.normal(t)).collect();
        let k = sys.equation.representation();
        let u = native_eval(&k, &tau, &targets).unwrap();
        for (z, uz) in targets.iter().zip(&u) {
            let err = (uz - data.value(*z)).norm();
            assert!(err < 1e-11, "{err}");
        }
    }

    #[test]
    fn unsupported_combinations() {
        let mut spec = BvpSpec::laplace_dirichlet(kite(), Field::Xy, 32);
        spec.side = Side::Exterior;
        assert!(matches!(assemble(&spec), Err(Error::Unsupported(_))));
        let spec = BvpSpec::helmholtz_exterior(kite(), 2.0, Field::Xy, 33);
        assert!(assemble(&spec).is_err());
    }
}
