use num_complex::Complex64;

use crate::error::{Error, Result};

/// Outcome of a GMRES run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    /// Final relative residual `|b - Ax| / |b|`.
    pub residual: f64,
}

const STAGNATION_WINDOW: usize = 50;

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Unrestarted GMRES from a zero initial guess.
pub fn gmres(
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<Complex64>, GmresOutcome)> {
    let n = b.len();
    let beta = norm(b);
    if beta == 0.0 {
        return Ok((vec![Complex64::new(0.0, 0.0); n], GmresOutcome { iterations: 0, residual: 0.0 }));
    }
    let max_iter = max_iter.min(n);
    let mut basis: Vec<Vec<Complex64>> = vec![b.iter().map(|x| x / beta).collect()];
    // Columns of the Hessenberg matrix after Givens rotations (upper triangular).
    let mut h: Vec<Vec<Complex64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<Complex64> = Vec::new();
    let mut g = vec![Complex64::new(beta, 0.0)];
    let mut history = vec![1.0];
    let mut residual = 1.0;
    let mut k = 0;
    while k < max_iter {
        let mut w = apply(&basis[k]);
        let mut col = Vec::with_capacity(k + 2);
        for v in &basis {
            let c = dot(v, &w);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= c * vi;
            }
            col.push(c);
        }
        let hn = norm(&w);
        col.push(Complex64::new(hn, 0.0));
        for i in 0..k {
            let (a, bb) = (col[i], col[i + 1]);
            col[i] = cs[i] * a + sn[i] * bb;
            col[i + 1] = -sn[i].conj() * a + cs[i] * bb;
        }
        let (a, bb) = (col[k], col[k + 1]);
        let r = (a.norm_sqr() + bb.norm_sqr()).sqrt();
        let (c, s) = if r == 0.0 {
            (1.0, Complex64::new(0.0, 0.0))
        } else if a.norm() == 0.0 {
            (0.0, bb.conj() / bb.norm())
        } else {
            let phase = a / a.norm();
            (a.norm() / r, phase * bb.conj() / r)
        };
        col[k] = c * a + s * bb;
        col[k + 1] = Complex64::new(0.0, 0.0);
        cs.push(c);
        sn.push(s);
        let gk = g[k];
        g[k] = c * gk;
        g.push(-s.conj() * gk);
        col.truncate(k + 1);
        h.push(col);
        k += 1;
        residual = g[k].norm() / beta;
        history.push(residual);
        if residual <= tol || hn == 0.0 {
            break;
        }
        if k >= STAGNATION_WINDOW && residual >= history[k - STAGNATION_WINDOW] {
            return Err(Error::Stagnation { iterations: k, residual });
        }
        basis.push(w.iter().map(|x| x / hn).collect());
    }
    if residual > tol {
        return Err(Error::NotConverged { iterations: k, residual });
    }
    // Back substitution on the triangular system.
    let mut y = vec![Complex64::new(0.0, 0.0); k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for j in i + 1..k {
            acc -= h[j][i] * y[j];
        }
        y[i] = acc / h[i][i];
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for (yi, v) in y.iter().zip(&basis) {
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi += yi * vi;
        }
    }
    Ok((x, GmresOutcome { iterations: k, residual }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_complex_system() {
        let a = [
            [Complex64::new(4.0, 1.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5)],
            [Complex64::new(0.5, 0.0), Complex64::new(3.0, -1.0), Complex64::new(1.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 1.0), Complex64::new(5.0, 0.0)],
        ];
        let apply = |x: &[Complex64]| -> Vec<Complex64> {
            a.iter().map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum()).collect()
        };
        let b = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), Complex64::new(-1.0, 1.0)];
        let (x, out) = gmres(apply, &b, 1e-14, 10).unwrap();
        let r = apply(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).norm() < 1e-13);
        }
        assert!(out.iterations <= 3);
    }

    #[test]
    fn reports_non_convergence() {
        // A cyclic shift needs n iterations; capping at 3 must fail.
        let n = 8;
        let apply = |x: &[Complex64]| -> Vec<Complex64> { (0..n).map(|i| x[(i + 1) % n]).collect() };
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        b[0] = 1.0.into();
        assert!(matches!(gmres(apply, &b, 1e-12, 3), Err(Error::NotConverged { .. })));
    }
}
