//! Sixth-order central differences on the uniform radial grid, closed with
//! even-symmetry fictitious points on the left and degree-7 polynomial
//! extrapolation on the right:
//!
//! `v_k = 8v_{k-1} - 28v_{k-2} + 56v_{k-3} - 70v_{k-4} + 56v_{k-5} - 28v_{k-6} + 8v_{k-7} - v_{k-8}`.
//!
//! The singular `(d-1)/xi` factor of the radial Laplacian is removed at the
//! origin by L'Hospital: `lim (d-1)/xi v_xi = (d-1) v_xixi`.

use num_complex::Complex64;

pub const D1_WEIGHTS: [f64; 7] = [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]; // / (60 h)
pub const D2_WEIGHTS: [f64; 7] = [2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]; // / (180 h^2)
const EXTRAP: [f64; 8] = [8.0, -28.0, 56.0, -70.0, 56.0, -28.0, 8.0, -1.0];

#[derive(Debug, Clone)]
pub struct UniformStencil {
    pub h: f64,
    /// Number of grid nodes (`N + 1` for nodes `0..=N`).
    pub n_nodes: usize,
}

impl UniformStencil {
    pub fn new(h: f64, n_nodes: usize) -> Self {
        assert!(n_nodes >= 12, "stencil closures need at least 12 nodes");
        UniformStencil { h, n_nodes }
    }

    /// Ghost values `v_{N+1} .. v_{N+extra}` by repeated extrapolation.
    pub fn extend_right(&self, v: &[Complex64], extra: usize) -> Vec<Complex64> {
        let n = v.len();
        let mut ghosts: Vec<Complex64> = Vec::with_capacity(extra);
        for g in 0..extra {
            let mut acc = Complex64::default();
            for (j, &w) in EXTRAP.iter().enumerate() {
                let idx = n + g - 1 - j; // absolute index of v_{k-1-j}
                let val = if idx < n { v[idx] } else { ghosts[idx - n] };
                acc += val * w;
            }
            ghosts.push(acc);
        }
        ghosts
    }

    #[inline]
    fn fetch(v: &[Complex64], ghosts: &[Complex64], j: isize) -> Complex64 {
        if j < 0 {
            v[(-j) as usize]
        } else if (j as usize) < v.len() {
            v[j as usize]
        } else {
            ghosts[j as usize - v.len()]
        }
    }

    #[inline]
    pub fn d1_at(&self, v: &[Complex64], ghosts: &[Complex64], j: usize) -> Complex64 {
        let mut acc = Complex64::default();
        for (k, &w) in D1_WEIGHTS.iter().enumerate() {
            if w != 0.0 {
                acc += Self::fetch(v, ghosts, j as isize - 3 + k as isize) * w;
            }
        }
        acc / (60.0 * self.h)
    }

    #[inline]
    pub fn d2_at(&self, v: &[Complex64], ghosts: &[Complex64], j: usize) -> Complex64 {
        let mut acc = Complex64::default();
        for (k, &w) in D2_WEIGHTS.iter().enumerate() {
            acc += Self::fetch(v, ghosts, j as isize - 3 + k as isize) * w;
        }
        acc / (180.0 * self.h * self.h)
    }

    /// Radial Laplacian at node `j` (`d` the dimension).
    #[inline]
    pub fn laplacian_at(&self, v: &[Complex64], ghosts: &[Complex64], j: usize, d: f64) -> Complex64 {
        if j == 0 {
            self.d2_at(v, ghosts, 0) * d
        } else {
            self.d2_at(v, ghosts, j) + self.d1_at(v, ghosts, j) * ((d - 1.0) / (j as f64 * self.h))
        }
    }

    /// Dense coefficient row of the radial Laplacian at node `j` over the
    /// real nodes `0..n_nodes`, with both closures folded in.
    pub fn laplacian_row(&self, j: usize, d: f64) -> Vec<f64> {
        let n = self.n_nodes;
        let mut row = vec![0.0; n];
        // ghost m (absolute index n+m) expressed over the last 8 real nodes
        let mut ghost_rows: Vec<[f64; 8]> = Vec::new();
        for m in 0..3 {
            let mut r = [0.0; 8];
            for (jj, &w) in EXTRAP.iter().enumerate() {
                // absolute index n + m - 1 - jj
                if m >= jj + 1 {
                    let prev = ghost_rows[m - jj - 1];
                    for k in 0..8 {
                        r[k] += w * prev[k];
                    }
                } else {
                    let idx = n + m - 1 - jj; // real node
                    r[idx - (n - 8)] += w;
                }
            }
            ghost_rows.push(r);
        }

        let mut add = |idx: isize, w: f64| {
            if idx < 0 {
                row[(-idx) as usize] += w;
            } else if (idx as usize) < n {
                row[idx as usize] += w;
            } else {
                let m = idx as usize - n;
                for k in 0..8 {
                    row[n - 8 + k] += w * ghost_rows[m][k];
                }
            }
        };

        let h2 = 180.0 * self.h * self.h;
        if j == 0 {
            for (k, &w) in D2_WEIGHTS.iter().enumerate() {
                add(k as isize - 3, d * w / h2);
            }
        } else {
            let c1 = (d - 1.0) / (j as f64 * self.h) / (60.0 * self.h);
            for k in 0..7 {
                let idx = j as isize - 3 + k as isize;
                add(idx, D2_WEIGHTS[k] / h2 + c1 * D1_WEIGHTS[k]);
            }
        }
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample(n: usize, h: f64, f: impl Fn(f64) -> f64) -> Vec<Complex64> {
        (0..n).map(|j| Complex64::new(f(j as f64 * h), 0.0)).collect()
    }

    #[test]
    fn interior_sixth_order_on_cosine() {
        let (n, h) = (101usize, 0.1);
        let st = UniformStencil::new(h, n);
        let v = sample(n, h, |x| x.cos());
        let ghosts = st.extend_right(&v, 3);
        for j in [10usize, 50, 90] {
            let x = j as f64 * h;
            // truncation constants: h^6 f^(7)/140 and h^6 f^(8)/560
            assert_abs_diff_eq!(st.d1_at(&v, &ghosts, j).re, -x.sin(), epsilon = 2e-8);
            assert_abs_diff_eq!(st.d2_at(&v, &ghosts, j).re, -x.cos(), epsilon = 1e-8);
        }
    }

    #[test]
    fn left_closure_exact_for_even_functions() {
        let (n, h) = (101usize, 0.1);
        let st = UniformStencil::new(h, n);
        let v = sample(n, h, |x| (2.0 * x).cos());
        let ghosts = st.extend_right(&v, 3);
        // coefficients cancel pairwise; only summation rounding remains
        assert_abs_diff_eq!(st.d1_at(&v, &ghosts, 0).re, 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(st.d2_at(&v, &ghosts, 0).re, -4.0, epsilon = 1e-6);
        assert_abs_diff_eq!(st.d1_at(&v, &ghosts, 1).re, -2.0 * (0.2f64).sin(), epsilon = 1e-6);
    }

    #[test]
    fn right_closure_exact_for_degree_seven() {
        let (n, h) = (64usize, 0.05);
        let st = UniformStencil::new(h, n);
        let f = |x: f64| 1.0 + x - 0.5 * x.powi(3) + 0.01 * x.powi(7);
        let df = |x: f64| 1.0 - 1.5 * x.powi(2) + 0.07 * x.powi(6);
        let d2f = |x: f64| -3.0 * x + 0.42 * x.powi(5);
        let v = sample(n, h, f);
        let ghosts = st.extend_right(&v, 3);
        for j in [n - 3, n - 2, n - 1] {
            let x = j as f64 * h;
            assert_abs_diff_eq!(st.d1_at(&v, &ghosts, j).re, df(x), epsilon = 1e-7);
            assert_abs_diff_eq!(st.d2_at(&v, &ghosts, j).re, d2f(x), epsilon = 1e-5);
        }
    }

    #[test]
    fn laplacian_row_matches_pointwise_evaluation() {
        let (n, h) = (48usize, 0.1);
        let st = UniformStencil::new(h, n);
        let v = sample(n, h, |x| (x * 0.7).cos() * (1.0 + 0.3 * x));
        let ghosts = st.extend_right(&v, 3);
        for d in [2.0, 3.0, 4.5] {
            for j in 0..n {
                let row = st.laplacian_row(j, d);
                let direct = st.laplacian_at(&v, &ghosts, j, d);
                let via_row: f64 = row.iter().zip(v.iter()).map(|(w, val)| w * val.re).sum();
                assert_abs_diff_eq!(via_row, direct.re, epsilon = 1e-8 * direct.re.abs().max(1.0));
            }
        }
    }

    #[test]
    fn origin_uses_lhospital_regularization() {
        let (n, h) = (64usize, 0.1);
        let st = UniformStencil::new(h, n);
        // v = exp(-x^2): Delta v(0) = d * v''(0) = -2 d
        let v = sample(n, h, |x| (-x * x).exp());
        let ghosts = st.extend_right(&v, 3);
        for d in [2.0f64, 3.0, 5.0] {
            assert_abs_diff_eq!(st.laplacian_at(&v, &ghosts, 0, d).re, -2.0 * d, epsilon = 2e-5);
        }
    }
}
