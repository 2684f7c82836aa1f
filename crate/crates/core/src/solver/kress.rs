use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// First row of the circulant log-singular quadrature: `R(s_k)` with
/// `R(d) = -(2pi/n) sum_{m=1}^{n-1} cos(m d)/m - (pi/n^2) cos(n d)`, `n = N/2`.
pub fn kress_row(n_nodes: usize) -> Result<Vec<f64>> {
    if n_nodes % 2 != 0 || n_nodes == 0 {
        return Err(Error::InvalidParameter(format!("Kress weights need even N, got {n_nodes}")));
    }
    let n = n_nodes / 2;
    let nf = n as f64;
    Ok((0..n_nodes)
        .map(|k| {
            // cos(m s_k) depends only on (m k) mod N.
            let mut acc = 0.0;
            for m in 1..n {
                let phase = 2.0 * PI * ((m * k) % n_nodes) as f64 / n_nodes as f64;
                acc += phase.cos() / m as f64;
            }
            let nyquist = if k % 2 == 0 { 1.0 } else { -1.0 };
            -2.0 * PI / nf * acc - PI / (nf * nf) * nyquist
        })
        .collect())
}

/// Weights `R_ij` with `sum_j R_ij g(s_j) ~ int_0^{2pi} log(4 sin^2((s_i - s)/2)) g(s) ds`.
pub fn kress_log_weights(n_nodes: usize) -> Result<DMatrix<f64>> {
    let row = kress_row(n_nodes)?;
    Ok(DMatrix::from_fn(n_nodes, n_nodes, |i, j| row[(i + n_nodes - j) % n_nodes]))
}
