//! Clenshaw-Curtis quadrature on the collocation grid, plus panelwise
//! Gauss-Legendre integration for kernels that are not sampled on a grid.

use super::chebyshev::ChebyshevGrid;

/// Clenshaw-Curtis weights for the grid's nodes (ascending order), scaled so
/// that `sum_k w_k f(x_k)` approximates the integral over `[0, L]`.
pub fn clenshaw_curtis_weights(grid: &ChebyshevGrid) -> Vec<f64> {
    let n = grid.n_points;
    let m = n - 1; // polynomial degree
    let mf = m as f64;
    let mut w = vec![0.0; n];

    let endpoint = if m % 2 == 0 {
        1.0 / (mf * mf - 1.0)
    } else {
        1.0 / (mf * mf)
    };
    w[0] = endpoint;
    w[m] = endpoint;

    for k in 1..m {
        let theta = k as f64 * std::f64::consts::PI / mf;
        let mut v = 1.0;
        if m % 2 == 0 {
            for j in 1..(m / 2) {
                v -= 2.0 * (2.0 * j as f64 * theta).cos() / (4.0 * (j * j) as f64 - 1.0);
            }
            v -= (mf * theta).cos() / (mf * mf - 1.0);
        } else {
            for j in 1..=((m - 1) / 2) {
                v -= 2.0 * (2.0 * j as f64 * theta).cos() / (4.0 * (j * j) as f64 - 1.0);
            }
        }
        w[k] = 2.0 * v / mf;
    }

    // Map [-1, 1] -> [0, L]; weights are symmetric, so node order is moot.
    let half = grid.domain_length / 2.0;
    for wk in &mut w {
        *wk *= half;
    }
    w
}

/// `\int_0^L f(xi) xi^{d-1} dxi` with `f` sampled on the grid nodes.
pub fn integrate_radial(f: &[f64], grid: &ChebyshevGrid, d: f64) -> f64 {
    assert_eq!(f.len(), grid.n_points, "sample count must match the grid");
    let w = clenshaw_curtis_weights(grid);
    let mut acc = 0.0;
    for k in 0..grid.n_points {
        acc += w[k] * f[k] * grid.nodes[k].powf(d - 1.0);
    }
    acc
}

// 8-point Gauss-Legendre rule on [-1, 1].
const GL8_NODES: [f64; 8] = [
    -0.9602898564975363,
    -0.7966664774136267,
    -0.5255324099163290,
    -0.1834346424956498,
    0.1834346424956498,
    0.5255324099163290,
    0.7966664774136267,
    0.9602898564975363,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.1012285362903763,
    0.2223810344533745,
    0.3137066458778873,
    0.3626837833783620,
    0.3626837833783620,
    0.3137066458778873,
    0.2223810344533745,
    0.1012285362903763,
];

/// Integrate `f` over consecutive panels `[knots[i], knots[i+1]]` with the
/// 8-point Gauss-Legendre rule per panel. `f` may return any additive value.
pub fn integrate_panels<T, F>(f: F, knots: &[f64]) -> T
where
    T: Default + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
    F: Fn(f64) -> T,
{
    let mut acc = T::default();
    for seg in knots.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for q in 0..8 {
            acc += f(mid + half * GL8_NODES[q]) * (half * GL8_WEIGHTS[q]);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::chebyshev::build_grid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_in_one_dimension() {
        let g = build_grid(65, 2.0).unwrap();
        let f = vec![1.0; 65];
        assert_abs_diff_eq!(integrate_radial(&f, &g, 1.0), 2.0, epsilon = 1e-10);
    }

    #[test]
    fn constant_in_three_dimensions() {
        let g = build_grid(65, 1.0).unwrap();
        let f = vec![1.0; 65];
        assert_abs_diff_eq!(integrate_radial(&f, &g, 3.0), 1.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn truncated_gamma_against_closed_form() {
        // \int_0^20 e^{-x} x dx = 1 - 21 e^{-20}
        let g = build_grid(257, 20.0).unwrap();
        let f: Vec<f64> = g.nodes.iter().map(|x| (-x).exp()).collect();
        let exact = 1.0 - 21.0 * (-20.0f64).exp();
        assert_abs_diff_eq!(integrate_radial(&f, &g, 2.0), exact, epsilon = 1e-12);
    }

    #[test]
    fn halving_resolution_changes_smooth_result_below_1e8() {
        let f = |x: f64| (x * 0.7).cos() * (-0.1 * x).exp();
        let g_fine = build_grid(257, 50.0).unwrap();
        let g_coarse = build_grid(129, 50.0).unwrap();
        let samples_fine: Vec<f64> = g_fine.nodes.iter().map(|&x| f(x)).collect();
        let samples_coarse: Vec<f64> = g_coarse.nodes.iter().map(|&x| f(x)).collect();
        let i_fine = integrate_radial(&samples_fine, &g_fine, 2.0);
        let i_coarse = integrate_radial(&samples_coarse, &g_coarse, 2.0);
        assert!((i_fine - i_coarse).abs() < 1e-8);
    }

    #[test]
    fn odd_point_count_weights_still_integrate() {
        // even polynomial degree m is the common case (n odd); exercise n even
        let g = build_grid(64, 3.0).unwrap();
        let f: Vec<f64> = g.nodes.iter().map(|x| x * x).collect();
        assert_abs_diff_eq!(integrate_radial(&f, &g, 1.0), 9.0, epsilon = 1e-10);
    }

    #[test]
    fn panel_rule_matches_analytic_log_moment() {
        // \int_0^1 s ln s ds = -1/4, kernel has a mild endpoint singularity
        let knots: Vec<f64> = (0..=32).map(|i| i as f64 / 32.0).collect();
        let val: f64 = integrate_panels(|s: f64| if s > 0.0 { s * s.ln() } else { 0.0 }, &knots);
        // the ln-singular first panel limits the rule to ~5e-8 here
        assert_abs_diff_eq!(val, -0.25, epsilon = 1e-7);
    }
}
