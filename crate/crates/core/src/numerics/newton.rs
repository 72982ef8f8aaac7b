//! Damped Newton iteration with a backtracking line search on the sup norm
//! of the residual. Replaces the black-box nonlinear solver of typical
//! collocation workflows with a deterministic, reproducible driver.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct NewtonSettings {
    /// Sup-norm residual target.
    pub residual_tol: f64,
    pub max_iterations: usize,
    /// Backtracking factor in (0, 1).
    pub damping: f64,
    /// Smallest admissible fraction of the full Newton step.
    pub min_step_fraction: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            residual_tol: 1e-15,
            max_iterations: 100,
            damping: 0.5,
            min_step_fraction: (2.0f64).powi(-20),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub solution: DVector<f64>,
    pub final_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Error)]
pub enum NewtonError {
    #[error("jacobian is singular at iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("no convergence ({reason}): residual {final_residual:e} after {iterations} iterations")]
    NoConvergence {
        reason: &'static str,
        final_residual: f64,
        iterations: usize,
        /// Best iterate seen; callers may still accept it against their own
        /// residual floor.
        best: DVector<f64>,
    },
    #[error("residual or iterate became non-finite at iteration {iteration}")]
    NonFinite { iteration: usize },
}

fn sup_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

pub fn newton_solve<R, J>(
    residual_fn: R,
    jacobian_fn: J,
    x0: DVector<f64>,
    settings: &NewtonSettings,
) -> Result<NewtonOutcome, NewtonError>
where
    R: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let mut x = x0;
    let mut r = residual_fn(&x);
    let mut r_norm = sup_norm(&r);
    if !r_norm.is_finite() {
        return Err(NewtonError::NonFinite { iteration: 0 });
    }
    let mut best_x = x.clone();
    let mut best_norm = r_norm;
    let mut flat_steps = 0usize;

    for iter in 0..settings.max_iterations {
        if r_norm <= settings.residual_tol {
            return Ok(NewtonOutcome {
                solution: x,
                final_residual: r_norm,
                iterations: iter,
            });
        }

        let jac = jacobian_fn(&x);
        let lu = jac.lu();
        let minus_r = -&r;
        let delta = match lu.solve(&minus_r) {
            Some(d) if d.iter().all(|v| v.is_finite()) => d,
            _ => return Err(NewtonError::SingularJacobian { iteration: iter }),
        };

        // Backtrack until the sup-norm residual decreases. Deep in the
        // rounding floor a full step may wander flat instead of descending;
        // allow a couple of those before declaring stagnation, and keep the
        // best iterate seen.
        let mut t = 1.0;
        loop {
            let x_trial = &x + &delta * t;
            let r_trial = residual_fn(&x_trial);
            let r_trial_norm = sup_norm(&r_trial);
            let strict = r_trial_norm.is_finite() && r_trial_norm < r_norm;
            let flat_ok = r_trial_norm.is_finite()
                && t == 1.0
                && r_norm <= 1e-9
                && r_trial_norm <= 1.5 * r_norm
                && flat_steps < 2;
            if strict || flat_ok {
                if strict {
                    flat_steps = 0;
                } else {
                    flat_steps += 1;
                }
                if r_trial_norm < best_norm {
                    best_norm = r_trial_norm;
                    best_x = x_trial.clone();
                }
                x = x_trial;
                r = r_trial;
                r_norm = r_trial_norm;
                break;
            }
            t *= settings.damping;
            if t < settings.min_step_fraction {
                // Stagnated: the step no longer improves the residual, which
                // near the rounding floor is the normal exit.
                return Err(NewtonError::NoConvergence {
                    reason: "stagnated",
                    final_residual: best_norm,
                    iterations: iter,
                    best: best_x,
                });
            }
        }

        if r_norm <= settings.residual_tol {
            return Ok(NewtonOutcome {
                solution: x,
                final_residual: r_norm,
                iterations: iter + 1,
            });
        }
    }

    Err(NewtonError::NoConvergence {
        reason: "max iterations",
        final_residual: best_norm,
        iterations: settings.max_iterations,
        best: best_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn scalar_quadratic() {
        let res = |x: &DVector<f64>| DVector::from_vec(vec![x[0] * x[0] - 4.0]);
        let jac = |x: &DVector<f64>| DMatrix::from_vec(1, 1, vec![2.0 * x[0]]);
        let out = newton_solve(res, jac, DVector::from_vec(vec![3.0]), &NewtonSettings::default())
            .unwrap();
        assert_abs_diff_eq!(out.solution[0], 2.0, epsilon = 1e-12);
        assert!(out.final_residual <= 1e-15);
    }

    #[test]
    fn linear_system_converges_in_one_iteration() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, -1.0, 3.0]);
        let b = DVector::from_vec(vec![5.0, 4.0]);
        let a2 = a.clone();
        let res = move |x: &DVector<f64>| &a * x - &b;
        let jac = move |_: &DVector<f64>| a2.clone();
        let settings = NewtonSettings {
            residual_tol: 1e-12,
            ..NewtonSettings::default()
        };
        let out = newton_solve(res, jac, DVector::from_vec(vec![10.0, -7.0]), &settings).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.final_residual <= 1e-12);
    }

    fn circle_line_res(x: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![x[0] * x[0] + x[1] * x[1] - 1.0, x[0] - x[1]])
    }

    fn circle_line_jac(x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[2.0 * x[0], 2.0 * x[1], 1.0, -1.0])
    }

    #[test]
    fn circle_line_intersection() {
        let out = newton_solve(
            circle_line_res,
            circle_line_jac,
            DVector::from_vec(vec![1.0, 0.5]),
            &NewtonSettings::default(),
        )
        .unwrap();
        let s = (2.0f64).sqrt() / 2.0;
        assert_abs_diff_eq!(out.solution[0], s, epsilon = 1e-12);
        assert_abs_diff_eq!(out.solution[1], s, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_convergence_once_close() {
        // Rerun with growing iteration caps and watch the residual sequence.
        let mut residuals = Vec::new();
        for cap in 1..=8 {
            let settings = NewtonSettings {
                max_iterations: cap,
                residual_tol: 0.0,
                ..NewtonSettings::default()
            };
            let r = match newton_solve(
                circle_line_res,
                circle_line_jac,
                DVector::from_vec(vec![1.0, 0.5]),
                &settings,
            ) {
                Ok(out) => out.final_residual,
                Err(NewtonError::NoConvergence { final_residual, .. }) => final_residual,
                Err(e) => panic!("unexpected {e}"),
            };
            residuals.push(r);
        }
        let mut checked = 0;
        for w in residuals.windows(2) {
            if w[0] < 1e-3 && w[0] > 1e-14 {
                // quadratic contraction down to the rounding floor
                assert!(
                    w[1] <= 10.0 * w[0] * w[0] + 1e-15,
                    "not quadratic: {} -> {}",
                    w[0],
                    w[1]
                );
                checked += 1;
            }
        }
        assert!(checked >= 1, "residual path never entered the test window: {residuals:?}");
    }

    #[test]
    fn singular_jacobian_is_detected() {
        let res = |x: &DVector<f64>| DVector::from_vec(vec![x[0] * x[0] + 1.0]);
        let jac = |_: &DVector<f64>| DMatrix::from_vec(1, 1, vec![0.0]);
        assert!(matches!(
            newton_solve(res, jac, DVector::from_vec(vec![1.0]), &NewtonSettings::default()),
            Err(NewtonError::SingularJacobian { .. })
        ));
    }
}
