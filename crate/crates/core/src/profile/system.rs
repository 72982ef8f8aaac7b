//! Residual and analytic Jacobian of the collocated profile system.
//!
//! Row layout for `n` grid nodes (unknowns `[P_0..P_{n-1}, W_0..W_{n-1}, a]`):
//!
//! ```text
//! row 0          P_xi(0) = 0
//! rows 1..n-2    real ODE at interior nodes
//! row n-1        P/sigma - W/a + K P_xi = 0      at xi = K
//! row n          W(0) = 0
//! rows n+1..2n-2 imaginary ODE at interior nodes
//! row 2n-1       P/a + W/sigma + K W_xi = 0      at xi = K
//! row 2n         W_xi(0) = 0
//! ```
//!
//! The two ODE rows at each interior node `i` read
//! `\Delta P - P - a (W/\sigma + \xi W_\xi) + (P^2+W^2)^\sigma P` and
//! `\Delta W - W + a (P/\sigma + \xi P_\xi) + (P^2+W^2)^\sigma W` with
//! `\Delta = d^2/d\xi^2 + (d-1)/\xi \, d/d\xi` (no singularity: `\xi > 0`
//! at interior nodes).

use super::ProblemParams;
use crate::numerics::chebyshev::{ChebyshevGrid, DiffMatrices};
use nalgebra::{DMatrix, DVector};

/// `rho^sigma` with a fast path for the integer exponents used in practice.
#[inline]
pub(crate) fn nonlinear_power(rho: f64, sigma: f64) -> f64 {
    let k = sigma.round();
    if (sigma - k).abs() < 1e-14 && (1.0..=8.0).contains(&k) {
        rho.powi(k as i32)
    } else {
        rho.powf(sigma)
    }
}

pub fn assemble_residual(
    x: &DVector<f64>,
    params: &ProblemParams,
    grid: &ChebyshevGrid,
    mats: &DiffMatrices,
) -> DVector<f64> {
    let n = grid.n_points;
    assert_eq!(x.len(), 2 * n + 1, "unknown vector must pack [P; W; a]");
    let p = x.rows(0, n);
    let w = x.rows(n, n);
    let a = x[2 * n];
    let (d, sigma) = (params.d, params.sigma);
    let big_k = grid.domain_length;

    let dp = &mats.d1 * &p;
    let dw = &mats.d1 * &w;
    let d2p = &mats.d2 * &p;
    let d2w = &mats.d2 * &w;

    let mut r = DVector::zeros(2 * n + 1);
    r[0] = dp[0];
    r[n] = w[0];
    r[2 * n] = dw[0];
    for i in 1..n - 1 {
        let xi = grid.nodes[i];
        let lap_p = d2p[i] + (d - 1.0) / xi * dp[i];
        let lap_w = d2w[i] + (d - 1.0) / xi * dw[i];
        let nl = nonlinear_power(p[i] * p[i] + w[i] * w[i], sigma);
        r[i] = lap_p - p[i] - a * (w[i] / sigma + xi * dw[i]) + nl * p[i];
        r[n + i] = lap_w - w[i] + a * (p[i] / sigma + xi * dp[i]) + nl * w[i];
    }
    let last = n - 1;
    r[last] = p[last] / sigma - w[last] / a + big_k * dp[last];
    r[2 * n - 1] = p[last] / a + w[last] / sigma + big_k * dw[last];
    r
}

pub fn assemble_jacobian(
    x: &DVector<f64>,
    params: &ProblemParams,
    grid: &ChebyshevGrid,
    mats: &DiffMatrices,
) -> DMatrix<f64> {
    let n = grid.n_points;
    assert_eq!(x.len(), 2 * n + 1);
    let p = x.rows(0, n);
    let w = x.rows(n, n);
    let a = x[2 * n];
    let (d, sigma) = (params.d, params.sigma);
    let big_k = grid.domain_length;

    let dp = &mats.d1 * &p;
    let dw = &mats.d1 * &w;

    let size = 2 * n + 1;
    let mut jac = DMatrix::zeros(size, size);

    // boundary rows at the origin
    for j in 0..n {
        jac[(0, j)] = mats.d1[(0, j)];
        jac[(2 * n, n + j)] = mats.d1[(0, j)];
    }
    jac[(n, n)] = 1.0;

    // interior collocation rows
    for i in 1..n - 1 {
        let xi = grid.nodes[i];
        let rho = p[i] * p[i] + w[i] * w[i];
        let nl = nonlinear_power(rho, sigma);
        // d(rho^sigma)/d(rho) * 2 P and * 2 W, finite for rho -> 0
        let (dnl_p, dnl_w) = if rho == 0.0 {
            (0.0, 0.0)
        } else {
            let nl_m1 = nl / rho;
            (2.0 * sigma * nl_m1 * p[i], 2.0 * sigma * nl_m1 * w[i])
        };
        let over_xi = (d - 1.0) / xi;
        for j in 0..n {
            let lap = mats.d2[(i, j)] + over_xi * mats.d1[(i, j)];
            jac[(i, j)] = lap;
            jac[(i, n + j)] = -a * xi * mats.d1[(i, j)];
            jac[(n + i, j)] = a * xi * mats.d1[(i, j)];
            jac[(n + i, n + j)] = lap;
        }
        jac[(i, i)] += -1.0 + nl + dnl_p * p[i];
        jac[(i, n + i)] += -a / sigma + dnl_w * p[i];
        jac[(n + i, i)] += a / sigma + dnl_p * w[i];
        jac[(n + i, n + i)] += -1.0 + nl + dnl_w * w[i];
        jac[(i, 2 * n)] = -(w[i] / sigma + xi * dw[i]);
        jac[(n + i, 2 * n)] = p[i] / sigma + xi * dp[i];
    }

    // far-field rows
    let last = n - 1;
    for j in 0..n {
        jac[(last, j)] = big_k * mats.d1[(last, j)];
        jac[(2 * n - 1, n + j)] = big_k * mats.d1[(last, j)];
    }
    jac[(last, last)] += 1.0 / sigma;
    jac[(last, n + last)] = -1.0 / a;
    jac[(last, 2 * n)] = w[last] / (a * a);
    jac[(2 * n - 1, last)] = 1.0 / a;
    jac[(2 * n - 1, n + last)] += 1.0 / sigma;
    jac[(2 * n - 1, 2 * n)] = -p[last] / (a * a);

    jac
}
