//! Diagnostics on converged (or trial) profiles: pseudo-phase plane,
//! oscillation classification, Hamiltonian truncation study, far-field
//! coefficient check, the two integral identities of the profile equation,
//! a Volterra-form consistency oracle that never touches the
//! differentiation matrices, and the rescaled profile family.

use super::system::nonlinear_power;
use super::{PhasePath, PhasePoint, ProfileSolution};
use crate::numerics::chebyshev::{barycentric_eval, build_diff_matrices, build_grid, ChebyshevGrid};
use crate::numerics::ode::Trajectory;
use crate::numerics::quadrature::{integrate_panels, integrate_radial};
use crate::numerics::spline::CubicSpline;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("not energy-critical: s_c = {s_c} (the far-field coefficient identity needs s_c = 1)")]
    NotEnergyCritical { s_c: f64 },
    #[error("evaluation point {xi} outside (0, {max}]")]
    XiOutOfRange { xi: f64, max: f64 },
}

// ---------------------------------------------------------------------------
// pseudo-phase plane

/// Amplitude floor below which a node is skipped as degenerate.
const PHASE_C_FLOOR: f64 = 1e-30;

/// `(C, D) = (|Q|, Re(Q_xi/Q))` along the grid, with `psi = Im(Q_xi/Q)`,
/// derivatives from collocation.
pub fn phase_path(sol: &ProfileSolution) -> PhasePath {
    let mats = build_diff_matrices(&sol.grid);
    let dp = &mats.d1 * &sol.p_real;
    let dw = &mats.d1 * &sol.w_imag;
    let mut points = Vec::with_capacity(sol.grid.n_points);
    for i in 0..sol.grid.n_points {
        let (p, w) = (sol.p_real[i], sol.w_imag[i]);
        let c2 = p * p + w * w;
        let c = c2.sqrt();
        if c <= PHASE_C_FLOOR {
            continue;
        }
        points.push(PhasePoint {
            xi: sol.grid.nodes[i],
            c,
            d_log: (p * dp[i] + w * dw[i]) / c2,
            psi: (p * dw[i] - w * dp[i]) / c2,
        });
    }
    PhasePath { points }
}

/// Phase path of an initial-value trajectory `(Q, Q')`; the derivative comes
/// from the integrator state, so fast tail oscillations stay resolved.
pub fn phase_path_from_trajectory(traj: &Trajectory) -> PhasePath {
    let mut points = Vec::with_capacity(traj.ts.len());
    for (t, y) in traj.ts.iter().zip(traj.ys.iter()) {
        let (q, qp) = (y[0], y[1]);
        let c = q.norm();
        if c <= PHASE_C_FLOOR {
            continue;
        }
        let ratio = qp / q;
        points.push(PhasePoint {
            xi: *t,
            c,
            d_log: ratio.re,
            psi: ratio.im,
        });
    }
    PhasePath { points }
}

// ---------------------------------------------------------------------------
// oscillation classification

#[derive(Debug, Clone)]
pub struct OscillationSettings {
    /// Amplitude threshold opening the terminal sub-path; `None` derives it
    /// as half the last prominent local maximum of `C`.
    pub c_threshold: Option<f64>,
    /// Sign changes of `D` needed to call the tail oscillating.
    pub min_sign_changes: usize,
}

impl Default for OscillationSettings {
    fn default() -> Self {
        OscillationSettings {
            c_threshold: None,
            min_sign_changes: 3,
        }
    }
}

/// Local maxima of `C` above this fraction of the global maximum count as
/// bumps; tail ripples far below the peak do not.
const MAXIMUM_FLOOR_FRAC: f64 = 0.05;

fn prominent_maxima(c: &[f64]) -> Vec<usize> {
    let c_max = c.iter().cloned().fold(0.0f64, f64::max);
    let floor = MAXIMUM_FLOOR_FRAC * c_max;
    let mut out = Vec::new();
    for i in 0..c.len() {
        let left_ok = i == 0 || c[i] >= c[i - 1];
        let right_ok = i + 1 == c.len() || c[i] >= c[i + 1];
        // an endpoint only counts on the left (a decaying tail end is not a bump)
        let is_max = left_ok && right_ok && (i + 1 != c.len());
        if is_max && c[i] >= floor {
            out.push(i);
        }
    }
    out
}

/// Number of bumps of `|Q|` (descriptive branch labelling only).
pub fn count_maxima(abs_q: &[f64]) -> usize {
    prominent_maxima(abs_q).len()
}

/// Counts sign changes of `D` over the terminal sub-path where `C` has
/// dropped below the threshold for good.
pub fn detect_oscillation(path: &PhasePath, settings: &OscillationSettings) -> (bool, usize) {
    if path.points.is_empty() {
        return (false, 0);
    }
    let c: Vec<f64> = path.points.iter().map(|p| p.c).collect();
    let threshold = settings.c_threshold.unwrap_or_else(|| {
        let maxima = prominent_maxima(&c);
        match maxima.last() {
            Some(&i) => 0.5 * c[i],
            None => 0.5 * c[0],
        }
    });

    // suffix after the last point at or above the threshold
    let start = c
        .iter()
        .rposition(|&v| v >= threshold)
        .map_or(0, |i| i + 1);
    let mut sign_changes = 0usize;
    let mut last_sign = 0i8;
    for p in &path.points[start..] {
        let s = if p.d_log > 0.0 {
            1i8
        } else if p.d_log < 0.0 {
            -1i8
        } else {
            0i8
        };
        if s != 0 {
            if last_sign != 0 && s != last_sign {
                sign_changes += 1;
            }
            last_sign = s;
        }
    }
    (sign_changes >= settings.min_sign_changes, sign_changes)
}

// ---------------------------------------------------------------------------
// Hamiltonian truncation study

/// `(k, H(k))` pairs with
/// `H(k) = \int_0^k (|Q_xi|^2 - |Q|^{2sigma+2}/(sigma+1)) xi^{d-1} dxi`.
#[derive(Debug, Clone)]
pub struct HamiltonianStudy {
    pub entries: Vec<(f64, f64)>,
}

/// Number of collocation points of the truncated quadrature sub-grids.
const SUBGRID_POINTS: usize = 257;

pub fn hamiltonian_study(sol: &ProfileSolution, k_values: &[f64]) -> HamiltonianStudy {
    let mats = build_diff_matrices(&sol.grid);
    let dp = &mats.d1 * &sol.p_real;
    let dw = &mats.d1 * &sol.w_imag;
    let sigma = sol.params.sigma;
    let density: Vec<f64> = (0..sol.grid.n_points)
        .map(|i| {
            let grad2 = dp[i] * dp[i] + dw[i] * dw[i];
            let rho = sol.p_real[i] * sol.p_real[i] + sol.w_imag[i] * sol.w_imag[i];
            grad2 - nonlinear_power(rho, sigma + 1.0) / (sigma + 1.0)
        })
        .collect();

    let entries = k_values
        .iter()
        .map(|&k| {
            assert!(
                k <= sol.grid.domain_length,
                "truncation {k} beyond the grid"
            );
            let sub = build_grid(SUBGRID_POINTS, k).expect("valid sub-grid");
            let samples: Vec<f64> = sub
                .nodes
                .iter()
                .map(|&x| barycentric_eval(&sol.grid, &density, x))
                .collect();
            (k, integrate_radial(&samples, &sub, sol.params.d))
        })
        .collect();
    HamiltonianStudy { entries }
}

// ---------------------------------------------------------------------------
// far-field coefficient at energy criticality

#[derive(Debug, Clone, Copy)]
pub struct C0Check {
    pub xi_star: f64,
    pub c_num: f64,
    pub c_pred: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

/// Fraction of the domain at which the far-field amplitude is read off;
/// the last node is a constraint row, not an ODE row.
const C0_NODE_FRAC: f64 = 0.9;

pub fn c0_check(sol: &ProfileSolution) -> Result<C0Check, DiagnosticsError> {
    let s_c = sol.params.s_c();
    if (s_c - 1.0).abs() > 1e-12 {
        return Err(DiagnosticsError::NotEnergyCritical { s_c });
    }
    let sigma = sol.params.sigma;
    let cutoff = C0_NODE_FRAC * sol.grid.domain_length;
    let idx = sol
        .grid
        .nodes
        .iter()
        .rposition(|&x| x <= cutoff)
        .expect("cutoff above the first node");
    let xi_star = sol.grid.nodes[idx];
    let c_num = sol.p_real[idx].hypot(sol.w_imag[idx]) * xi_star.powf(1.0 / sigma);
    let c_pred = ((sigma + 1.0) * (1.0 / (sigma * sigma) + 1.0 / (sol.a * sol.a)))
        .powf(1.0 / (2.0 * sigma));
    let abs_err = (c_num - c_pred).abs();
    Ok(C0Check {
        xi_star,
        c_num,
        c_pred,
        abs_err,
        rel_err: abs_err / c_pred,
    })
}

/// Empirical far-field amplitude: mean of `|Q| xi^{1/sigma}` over the outer
/// part of the grid (clear of the constraint row).
pub fn fit_far_field_amplitude(sol: &ProfileSolution) -> f64 {
    let sigma = sol.params.sigma;
    let lo = 0.6 * sol.grid.domain_length;
    let hi = 0.9 * sol.grid.domain_length;
    let mut acc = 0.0;
    let mut count = 0usize;
    for i in 0..sol.grid.n_points {
        let xi = sol.grid.nodes[i];
        if xi >= lo && xi <= hi {
            acc += sol.p_real[i].hypot(sol.w_imag[i]) * xi.powf(1.0 / sigma);
            count += 1;
        }
    }
    acc / count as f64
}

// ---------------------------------------------------------------------------
// integral identities

/// Sampled helper: the solution, its collocation derivative, and the
/// identity integrands on the grid, evaluated off-grid barycentrically.
struct SampledProfile {
    grid: ChebyshevGrid,
    q: Vec<Complex64>,
    dq: Vec<Complex64>,
    /// s |Q_s|^2, s |Q|^2, s |Q|^{2sigma+2}, Im(Q_s conj Q) on the grid
    s_grad2: Vec<f64>,
    s_mod2: Vec<f64>,
    s_pow: Vec<f64>,
    im_cross: Vec<f64>,
}

impl SampledProfile {
    fn build(sol: &ProfileSolution) -> Self {
        let mats = build_diff_matrices(&sol.grid);
        let dp = &mats.d1 * &sol.p_real;
        let dw = &mats.d1 * &sol.w_imag;
        let nodes = &sol.grid.nodes;
        let n = sol.grid.n_points;
        let sigma = sol.params.sigma;

        let q: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(sol.p_real[i], sol.w_imag[i]))
            .collect();
        let dq: Vec<Complex64> = (0..n).map(|i| Complex64::new(dp[i], dw[i])).collect();
        let s_grad2: Vec<f64> = (0..n).map(|i| nodes[i] * dq[i].norm_sqr()).collect();
        let s_mod2: Vec<f64> = (0..n).map(|i| nodes[i] * q[i].norm_sqr()).collect();
        let s_pow: Vec<f64> = (0..n)
            .map(|i| nodes[i] * nonlinear_power(q[i].norm_sqr(), sigma + 1.0))
            .collect();
        let im_cross: Vec<f64> = (0..n).map(|i| (dq[i] * q[i].conj()).im).collect();

        SampledProfile {
            grid: sol.grid.clone(),
            q,
            dq,
            s_grad2,
            s_mod2,
            s_pow,
            im_cross,
        }
    }
}

/// Clenshaw-Curtis integral over `[0, hi]` of a grid-sampled density,
/// resampled barycentrically onto the truncated sub-grid.
fn cc_integral(grid: &ChebyshevGrid, density: &[f64], hi: f64) -> f64 {
    if hi <= 0.0 {
        return 0.0;
    }
    let sub = build_grid(SUBGRID_POINTS, hi).expect("valid sub-grid");
    let samples: Vec<f64> = sub
        .nodes
        .iter()
        .map(|&x| barycentric_eval(grid, density, x))
        .collect();
    integrate_radial(&samples, &sub, 1.0)
}

/// Absolute residuals of the two integral identities the profile equation
/// implies, evaluated at `xi`. Exact solutions satisfy both identically.
pub fn identity_residuals(
    sol: &ProfileSolution,
    xi: f64,
) -> Result<(f64, f64), DiagnosticsError> {
    let max = sol.grid.domain_length;
    if !(xi > 0.0 && xi <= max) {
        return Err(DiagnosticsError::XiOutOfRange { xi, max });
    }
    let sp = SampledProfile::build(sol);
    let (d, sigma, a) = (sol.params.d, sol.params.sigma, sol.a);

    let q = barycentric_eval(&sp.grid, &sp.q, xi);
    let dq = barycentric_eval(&sp.grid, &sp.dq, xi);
    let q0_sq = sol.q0() * sol.q0();
    let mod2 = q.norm_sqr();
    let pow = nonlinear_power(mod2, sigma + 1.0);

    let int_s_grad2 = cc_integral(&sp.grid, &sp.s_grad2, xi);
    let int_s_mod2 = cc_integral(&sp.grid, &sp.s_mod2, xi);
    let int_s_pow = cc_integral(&sp.grid, &sp.s_pow, xi);
    let int_im_cross = cc_integral(&sp.grid, &sp.im_cross, xi);

    let res1 = (xi * dq + q / sigma).norm_sqr()
        + 2.0 * (d - 2.0 - 1.0 / sigma) * int_s_grad2
        + (2.0 - 2.0 / sigma) * int_s_mod2
        - (d - 2.0) / sigma * q0_sq
        - xi * xi * mod2
        + ((d - 2.0) / sigma - 1.0 / (sigma * sigma)) * mod2
        + xi * xi * pow / (sigma + 1.0)
        + 2.0 / (sigma * (sigma + 1.0)) * int_s_pow;

    let res2 = 2.0 * xi * (dq * q.conj()).im
        + 2.0 * (d - 2.0) * int_im_cross
        + 2.0 * a * (1.0 / sigma - 1.0) * int_s_mod2
        + a * xi * xi * mod2;

    Ok((res1.abs(), res2.abs()))
}

// ---------------------------------------------------------------------------
// Volterra consistency oracle

/// Sup over grid nodes `xi <= xi_max` of `|Q(xi) - RHS(xi)|`, where `RHS`
/// is the Volterra integral form of the profile equation evaluated purely
/// by quadrature on splined samples - no differentiation matrices anywhere.
pub fn volterra_residual(sol: &ProfileSolution, xi_max: f64) -> f64 {
    let (d, sigma, a) = (sol.params.d, sol.params.sigma, sol.a);
    let n = sol.grid.n_points;
    let nodes = &sol.grid.nodes;
    let q_samples: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(sol.p_real[i], sol.w_imag[i]))
        .collect();
    let q_at = |x: f64| barycentric_eval(&sol.grid, &q_samples, x);
    let q0 = Complex64::new(sol.q0(), 0.0);
    let ia = Complex64::new(0.0, a);
    let log_form = (d - 2.0).abs() < 1e-9;
    let g_coef = if log_form {
        Complex64::new(1.0, a * (2.0 - 1.0 / sigma))
    } else {
        Complex64::new(1.0, a * (d - 1.0 / sigma))
    };

    let mut worst = 0.0f64;
    for (k, &xi) in nodes.iter().enumerate() {
        if xi > xi_max {
            break;
        }
        if xi == 0.0 {
            continue;
        }
        let mut panels: Vec<f64> = nodes.iter().cloned().take_while(|&s| s < xi).collect();
        panels.push(xi);

        let moment: Complex64 = integrate_panels(|s| q_at(s) * s, &panels);
        let kernel_part: Complex64 = integrate_panels(
            |s| {
                if s <= 0.0 {
                    return Complex64::default();
                }
                let qs = q_at(s);
                let g = g_coef - nonlinear_power(qs.norm_sqr(), sigma);
                let kernel = if log_form {
                    s * (xi.ln() - s.ln())
                } else {
                    (s - s.powf(d - 1.0) / xi.powf(d - 2.0)) / (d - 2.0)
                };
                g * qs * kernel
            },
            &panels,
        );

        let rhs = q0 - ia * moment + kernel_part;
        let q_here = q_samples[k];
        worst = worst.max((q_here - rhs).norm());
    }
    worst
}

// ---------------------------------------------------------------------------
// the rescaled profile family

/// Profile rescaled to a prescribed sup norm: `Q~(eta) = lam Q(eta lam^sigma)`
/// with `lam = target_sup / Q(0)`, sampled exactly at `eta_k = xi_k lam^{-sigma}`,
/// and the matching rescaled rate `a~ = a lam^{2 sigma}`.
#[derive(Debug, Clone)]
pub struct RescaledProfile {
    pub eta: Vec<f64>,
    pub q: Vec<Complex64>,
    pub a_tilde: f64,
    pub sup: f64,
}

impl RescaledProfile {
    /// Spectral evaluation of the rescaled profile: the eta points are a
    /// scaled collocation grid, so the barycentric interpolant through the
    /// samples is the exact rescaled collocation polynomial.
    pub fn sample(&self, eta: f64) -> Complex64 {
        let grid = ChebyshevGrid {
            n_points: self.eta.len(),
            domain_length: *self.eta.last().unwrap(),
            nodes: self.eta.clone(),
        };
        barycentric_eval(&grid, &self.q, eta)
    }

    /// Complex samples on the uniform grid `j h`, truncated to the overlap,
    /// evaluated spectrally.
    pub fn on_uniform(&self, h: f64, n_nodes: usize) -> Vec<Complex64> {
        let grid = ChebyshevGrid {
            n_points: self.eta.len(),
            domain_length: *self.eta.last().unwrap(),
            nodes: self.eta.clone(),
        };
        let eta_max = *self.eta.last().unwrap();
        (0..n_nodes)
            .map(|j| j as f64 * h)
            .take_while(|&x| x <= eta_max)
            .map(|x| barycentric_eval(&grid, &self.q, x))
            .collect()
    }

    /// `|Q~|` resampled by spline onto `j * h, j = 0..=n_nodes-1`, truncated
    /// to the overlap with the profile's own domain.
    pub fn abs_on_uniform(&self, h: f64, n_nodes: usize) -> Vec<f64> {
        let abs: Vec<f64> = self.q.iter().map(|v| v.norm()).collect();
        let spline = CubicSpline::natural_real(&self.eta, &abs).expect("eta grid increasing");
        let eta_max = *self.eta.last().unwrap();
        let mut out = Vec::with_capacity(n_nodes);
        for j in 0..n_nodes {
            let x = j as f64 * h;
            if x > eta_max {
                break;
            }
            out.push(spline.eval_real(x).unwrap());
        }
        out
    }
}

pub fn rescale_family(sol: &ProfileSolution, target_sup: f64) -> RescaledProfile {
    assert!(target_sup > 0.0, "target sup norm must be positive");
    let sigma = sol.params.sigma;
    let lam = target_sup / sol.q0();
    let stretch = lam.powf(-sigma);
    let eta: Vec<f64> = sol.grid.nodes.iter().map(|&xi| xi * stretch).collect();
    let q: Vec<Complex64> = (0..sol.grid.n_points)
        .map(|i| Complex64::new(sol.p_real[i], sol.w_imag[i]) * lam)
        .collect();
    RescaledProfile {
        eta,
        q,
        a_tilde: sol.a * lam.powf(2.0 * sigma),
        sup: target_sup,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::ProblemParams;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn synthetic_solution(
        d: f64,
        sigma: f64,
        a: f64,
        f: impl Fn(f64) -> (f64, f64),
    ) -> ProfileSolution {
        let grid = build_grid(129, 30.0).unwrap();
        let p = DVector::from_iterator(129, grid.nodes.iter().map(|&x| f(x).0));
        let w = DVector::from_iterator(129, grid.nodes.iter().map(|&x| f(x).1));
        ProfileSolution {
            params: ProblemParams::new(d, sigma).unwrap(),
            grid,
            p_real: p,
            w_imag: w,
            a,
            residual_norm: f64::NAN,
            newton_iterations: 0,
        }
    }

    #[test]
    fn monotone_real_profile_has_negative_d() {
        let sol = synthetic_solution(3.0, 1.0, 0.9, |x| ((-0.3 * x).exp(), 0.0));
        let path = phase_path(&sol);
        assert!(path.points.iter().all(|p| p.d_log < 0.0));
        let (osc, changes) = detect_oscillation(&path, &OscillationSettings::default());
        assert!(!osc);
        assert_eq!(changes, 0);
    }

    #[test]
    fn zero_profile_has_zero_identities_and_volterra() {
        let sol = synthetic_solution(3.0, 1.0, 0.9, |_| (0.0, 0.0));
        // phase path is empty (all nodes degenerate)
        assert!(phase_path(&sol).points.is_empty());
        let h = hamiltonian_study(&sol, &[5.0, 10.0, 20.0]);
        for (_, v) in h.entries {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
        }
        assert_eq!(volterra_residual(&sol, 30.0), 0.0);
    }

    #[test]
    fn identity_residuals_vanish_for_zero_profile() {
        let mut sol = synthetic_solution(3.0, 1.0, 0.9, |_| (0.0, 0.0));
        sol.p_real[0] = 0.0;
        let (r1, r2) = identity_residuals(&sol, 10.0).unwrap();
        assert_abs_diff_eq!(r1, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r2, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn c0_prediction_limit_matches_sqrt_two() {
        // sigma = 1, a -> infinity: C0 -> sqrt(2)
        let sol = synthetic_solution(4.0, 1.0, 1e12, |x| ((-0.3 * x).exp(), 0.0));
        let check = c0_check(&sol).unwrap();
        assert_abs_diff_eq!(check.c_pred, (2.0f64).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn c0_rejects_non_energy_critical_parameters() {
        let sol = synthetic_solution(3.0, 1.0, 0.9, |x| ((-0.3 * x).exp(), 0.0));
        assert!(matches!(
            c0_check(&sol),
            Err(DiagnosticsError::NotEnergyCritical { .. })
        ));
    }

    #[test]
    fn rescale_identity_and_homogeneity() {
        let sol = synthetic_solution(3.0, 1.0, 0.9, |x| (1.885 * (-0.1 * x * x).exp(), 0.0));
        let same = rescale_family(&sol, sol.q0());
        assert_abs_diff_eq!(same.a_tilde, sol.a, epsilon = 1e-14);
        assert_abs_diff_eq!(same.eta[10], sol.grid.nodes[10], epsilon = 1e-12);

        let one = rescale_family(&sol, 1.0);
        let two = rescale_family(&sol, 2.0);
        let sigma = sol.params.sigma;
        assert_abs_diff_eq!(
            two.a_tilde / one.a_tilde,
            (2.0f64).powf(2.0 * sigma),
            epsilon = 1e-12
        );
    }

    #[test]
    fn bump_counting_sees_through_tail_ripples() {
        let grid = build_grid(257, 60.0).unwrap();
        let abs_q: Vec<f64> = grid
            .nodes
            .iter()
            .map(|&x| {
                let core = (-0.5 * x * x).exp() + 0.4 * (-(x - 6.0) * (x - 6.0)).exp();
                core + 1e-4 * (3.0 * x).sin().abs()
            })
            .collect();
        assert_eq!(count_maxima(&abs_q), 2);
    }
}
