//! Chebyshev-Gauss-Lobatto grids on `[0, L]` and the associated spectral
//! differentiation matrices.
//!
//! Nodes are stored ascending from 0, so the radial variable reads left to
//! right. Entries of the first-derivative matrix are built from the
//! trigonometric form of the node differences (stable for neighbouring
//! nodes) and the diagonal uses the negative-sum trick; the second
//! derivative is the matrix square of the first.

use nalgebra::DMatrix;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid needs at least 8 points, got {0}")]
    TooFewPoints(usize),
    #[error("domain length must be positive, got {0}")]
    InvalidDomain(f64),
}

/// Chebyshev-Gauss-Lobatto collocation grid mapped linearly onto
/// `[0, domain_length]`, nodes ascending with `nodes[0] = 0` and
/// `nodes[n-1] = domain_length` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevGrid {
    pub n_points: usize,
    pub domain_length: f64,
    pub nodes: Vec<f64>,
}

impl ChebyshevGrid {
    pub fn n(&self) -> usize {
        self.n_points
    }
}

/// Node `k` of the `n`-point grid: `L * sin^2(k pi / (2(n-1)))`, which equals
/// `L (1 - cos(k pi/(n-1)))/2` but stays accurate near zero.
pub(crate) fn lobatto_nodes(n: usize, domain_length: f64) -> Vec<f64> {
    let m = (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n)
        .map(|k| {
            let s = (k as f64 * PI / (2.0 * m)).sin();
            domain_length * s * s
        })
        .collect();
    nodes[0] = 0.0;
    nodes[n - 1] = domain_length;
    nodes
}

pub fn build_grid(n: usize, domain_length: f64) -> Result<ChebyshevGrid, GridError> {
    if n < 8 {
        return Err(GridError::TooFewPoints(n));
    }
    if !(domain_length > 0.0) || !domain_length.is_finite() {
        return Err(GridError::InvalidDomain(domain_length));
    }
    Ok(ChebyshevGrid {
        n_points: n,
        domain_length,
        nodes: lobatto_nodes(n, domain_length),
    })
}

/// Dense differentiation matrices acting on grid samples.
#[derive(Debug, Clone)]
pub struct DiffMatrices {
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
}

/// Barycentric weight of node `j` on an `n`-point Lobatto grid, up to a
/// common scale.
#[inline]
fn bary_weight(j: usize, n: usize) -> f64 {
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    if j == 0 || j == n - 1 {
        0.5 * sign
    } else {
        sign
    }
}

/// Evaluates the collocation interpolant through `(nodes, values)` at `x`
/// with the barycentric formula; exact at the nodes and spectrally accurate
/// in between, unlike piecewise interpolation of the same samples.
pub fn barycentric_eval<T>(grid: &ChebyshevGrid, values: &[T], x: f64) -> T
where
    T: Copy + Default + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
{
    let n = grid.n_points;
    assert_eq!(values.len(), n);
    let mut num = T::default();
    let mut den = 0.0;
    for j in 0..n {
        let dx = x - grid.nodes[j];
        if dx.abs() < 1e-300 {
            return values[j];
        }
        let w = bary_weight(j, n) / dx;
        num += values[j] * w;
        den += w;
    }
    num * (1.0 / den)
}

pub fn build_diff_matrices(grid: &ChebyshevGrid) -> DiffMatrices {
    let n = grid.n_points;
    let m = (n - 1) as f64;
    let len = grid.domain_length;

    // Barycentric weights of the mapped Lobatto nodes, up to a common scale.
    let w = |j: usize| -> f64 {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n - 1 {
            0.5 * sign
        } else {
            sign
        }
    };

    // xi_i - xi_j = L sin((i+j) pi / (2m)) sin((i-j) pi / (2m))
    let node_diff = |i: usize, j: usize| -> f64 {
        let sum = ((i + j) as f64) * PI / (2.0 * m);
        let dif = (i as f64 - j as f64) * PI / (2.0 * m);
        len * sum.sin() * dif.sin()
    };

    let mut d1 = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let entry = (w(j) / w(i)) / node_diff(i, j);
                d1[(i, j)] = entry;
                row_sum += entry;
            }
        }
        d1[(i, i)] = -row_sum;
    }

    let d2 = &d1 * &d1;
    DiffMatrices { d1, d2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn node_formula_matches_trivial_three_point_case() {
        // Not constructible through build_grid (n >= 8); the formula itself
        // gives the midpoint exactly.
        let nodes = lobatto_nodes(3, 2.0);
        assert_eq!(nodes[0], 0.0);
        assert_eq!(nodes[2], 2.0);
        assert_abs_diff_eq!(nodes[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_grid(3, 2.0).is_err());
        assert!(build_grid(257, 0.0).is_err());
        assert!(build_grid(257, -1.0).is_err());
    }

    #[test]
    fn paper_grid_has_exact_endpoints() {
        let g = build_grid(257, 200.0).unwrap();
        assert_eq!(g.nodes.len(), 257);
        assert_eq!(g.nodes[0], 0.0);
        assert_eq!(g.nodes[256], 200.0);
        for k in 1..257 {
            assert!(g.nodes[k] > g.nodes[k - 1]);
        }
    }

    #[test]
    fn node_matches_direct_trigonometric_evaluation() {
        let g = build_grid(9, 1.0).unwrap();
        let expected = 0.5 * (1.0 - (PI / 8.0).cos());
        assert_abs_diff_eq!(g.nodes[1], expected, epsilon = 1e-15);
        assert_abs_diff_eq!(g.nodes[1], 0.038060233744356624, epsilon = 1e-15);
    }

    #[test]
    fn d1_annihilates_constants() {
        let g = build_grid(65, 10.0).unwrap();
        let mats = build_diff_matrices(&g);
        let ones = nalgebra::DVector::from_element(65, 1.0);
        let out = &mats.d1 * &ones;
        let scale = mats.d1.amax();
        assert!(out.amax() / scale < 1e-10);
    }

    #[test]
    fn d1_differentiates_identity_map() {
        let g = build_grid(65, 10.0).unwrap();
        let mats = build_diff_matrices(&g);
        let x = nalgebra::DVector::from_vec(g.nodes.clone());
        let out = &mats.d1 * &x;
        for i in 0..65 {
            assert_abs_diff_eq!(out[i], 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn d1_differentiates_sine() {
        let g = build_grid(65, 10.0).unwrap();
        let mats = build_diff_matrices(&g);
        let v = nalgebra::DVector::from_iterator(65, g.nodes.iter().map(|x| x.sin()));
        let out = &mats.d1 * &v;
        for i in 0..65 {
            assert_abs_diff_eq!(out[i], g.nodes[i].cos(), epsilon = 1e-8);
        }
    }

    #[test]
    fn d2_differentiates_sine_twice() {
        let g = build_grid(65, 10.0).unwrap();
        let mats = build_diff_matrices(&g);
        let v = nalgebra::DVector::from_iterator(65, g.nodes.iter().map(|x| x.sin()));
        let out = &mats.d2 * &v;
        for i in 0..65 {
            assert_abs_diff_eq!(out[i], -g.nodes[i].sin(), epsilon = 1e-6);
        }
    }

    #[test]
    fn monomial_exactness_up_to_degree_ten() {
        for &len in &[1.0, 10.0] {
            let g = build_grid(65, len).unwrap();
            let mats = build_diff_matrices(&g);
            for k in 1..=10u32 {
                let v = nalgebra::DVector::from_iterator(65, g.nodes.iter().map(|x| x.powi(k as i32)));
                let out = &mats.d1 * &v;
                let bound = 1e-8 * len.powi(k as i32).max(1.0);
                for i in 0..65 {
                    let exact = k as f64 * g.nodes[i].powi(k as i32 - 1);
                    assert!(
                        (out[i] - exact).abs() <= bound,
                        "k={k} len={len} i={i}: {} vs {exact}",
                        out[i]
                    );
                }
            }
        }
    }
}
