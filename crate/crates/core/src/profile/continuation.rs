//! Continuous parameter search: walk the dimension and/or the nonlinearity
//! in small increments, warm-starting each Newton solve from the previous
//! solution and extrapolating `(a, Q(0))` through the last three converged
//! points. On failure the step halves, down to a floor of 1e-3.

use super::solver::{solve_profile, ProfileError};
use super::{ProblemParams, ProfileSolution};
use crate::numerics::newton::NewtonSettings;
use thiserror::Error;

pub const MIN_STEP: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ContinuationError {
    #[error("continuation stalled at d = {d}, sigma = {sigma} (step {step:e} below floor)")]
    Stalled {
        d: f64,
        sigma: f64,
        step: f64,
        record: ContinuationRecord,
    },
    #[error("invalid continuation target: {0}")]
    BadTarget(String),
}

#[derive(Debug, Clone)]
pub struct ContinuationEntry {
    pub params: ProblemParams,
    pub a: f64,
    pub q0: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ContinuationRecord {
    pub entries: Vec<ContinuationEntry>,
    pub step_history: Vec<f64>,
}

/// Record plus the converged solutions themselves, in walk order.
#[derive(Debug)]
pub struct Continuation {
    pub record: ContinuationRecord,
    pub solutions: Vec<ProfileSolution>,
}

impl Continuation {
    /// Converged solution closest to the given parameters, if any.
    pub fn solution_at(&self, d: f64, sigma: f64, tol: f64) -> Option<&ProfileSolution> {
        self.solutions
            .iter()
            .find(|s| (s.params.d - d).abs() <= tol && (s.params.sigma - sigma).abs() <= tol)
    }
}

/// Quadratic extrapolation through the last three (t, y) samples; for
/// uniformly spaced t this reduces to `3 y_k - 3 y_{k-1} + y_{k-2}`.
fn extrapolate(history: &[(f64, f64)], t_new: f64) -> f64 {
    match history.len() {
        0 => panic!("empty extrapolation history"),
        1 => history[0].1,
        2 => {
            let (t0, y0) = history[0];
            let (t1, y1) = history[1];
            y1 + (y1 - y0) / (t1 - t0) * (t_new - t1)
        }
        _ => {
            let tail = &history[history.len() - 3..];
            let mut acc = 0.0;
            for i in 0..3 {
                let (ti, yi) = tail[i];
                let mut l = yi;
                for j in 0..3 {
                    if j != i {
                        l *= (t_new - tail[j].0) / (ti - tail[j].0);
                    }
                }
                acc += l;
            }
            acc
        }
    }
}

fn warm_guess(base: &ProfileSolution, a_pred: f64, q0_pred: f64) -> nalgebra::DVector<f64> {
    let mut x = base.pack();
    let n = base.grid.n_points;
    let scale = if base.q0().abs() > 0.0 {
        q0_pred / base.q0()
    } else {
        1.0
    };
    for i in 0..2 * n {
        x[i] *= scale;
    }
    x[2 * n] = a_pred;
    x
}

pub fn continue_in_parameter(
    start: &ProfileSolution,
    target: &ProblemParams,
    step: f64,
    settings: &NewtonSettings,
) -> Result<Continuation, ContinuationError> {
    if !(step > 0.0) {
        return Err(ContinuationError::BadTarget(format!(
            "step must be positive, got {step}"
        )));
    }

    let mut record = ContinuationRecord::default();
    let mut solutions: Vec<ProfileSolution> = Vec::new();
    record.entries.push(ContinuationEntry {
        params: start.params,
        a: start.a,
        q0: start.q0(),
        converged: true,
        iterations: start.newton_iterations,
    });
    solutions.push(start.clone());

    // Walk the dimension first, then the nonlinearity.
    let legs: [(fn(&ProblemParams) -> f64, fn(&mut ProblemParams, f64)); 2] = [
        (|p| p.d, |p, v| p.d = v),
        (|p| p.sigma, |p, v| p.sigma = v),
    ];
    let targets = [target.d, target.sigma];

    for (leg, (get, set)) in legs.iter().enumerate() {
        let t_target = targets[leg];
        let mut history: Vec<(f64, f64, f64)> = Vec::new(); // (t, a, q0)
        {
            let last = solutions.last().unwrap();
            history.push((get(&last.params), last.a, last.q0()));
        }

        let mut step_cur = step;
        loop {
            let current = solutions.last().unwrap().clone();
            let t_cur = get(&current.params);
            let remaining = t_target - t_cur;
            if remaining.abs() <= 1e-12 {
                break;
            }
            let dt = remaining.abs().min(step_cur) * remaining.signum();
            let t_next = if remaining.abs() <= step_cur {
                t_target
            } else {
                t_cur + dt
            };

            let mut params_next = current.params;
            set(&mut params_next, t_next);
            ProblemParams::new(params_next.d, params_next.sigma)
                .map_err(|e| ContinuationError::BadTarget(e.to_string()))?;

            let ha: Vec<(f64, f64)> = history.iter().map(|&(t, a, _)| (t, a)).collect();
            let hq: Vec<(f64, f64)> = history.iter().map(|&(t, _, q)| (t, q)).collect();
            let a_pred = extrapolate(&ha, t_next);
            let q0_pred = extrapolate(&hq, t_next);

            let guess = warm_guess(&current, a_pred, q0_pred);
            match solve_profile(&params_next, &current.grid, guess, settings) {
                Ok(sol) => {
                    record.step_history.push(dt);
                    record.entries.push(ContinuationEntry {
                        params: params_next,
                        a: sol.a,
                        q0: sol.q0(),
                        converged: true,
                        iterations: sol.newton_iterations,
                    });
                    history.push((t_next, sol.a, sol.q0()));
                    solutions.push(sol);
                    step_cur = (step_cur * 2.0).min(step);
                }
                Err(
                    ProfileError::NoConvergence { .. }
                    | ProfileError::TrivialSolution { .. }
                    | ProfileError::SingularJacobian,
                ) => {
                    record.entries.push(ContinuationEntry {
                        params: params_next,
                        a: a_pred,
                        q0: q0_pred,
                        converged: false,
                        iterations: 0,
                    });
                    step_cur *= 0.5;
                    if step_cur < MIN_STEP {
                        return Err(ContinuationError::Stalled {
                            d: params_next.d,
                            sigma: params_next.sigma,
                            step: step_cur,
                            record,
                        });
                    }
                }
                Err(e) => {
                    return Err(ContinuationError::BadTarget(format!(
                        "solve failed fatally at d = {}, sigma = {}: {e}",
                        params_next.d, params_next.sigma
                    )))
                }
            }
        }
    }

    Ok(Continuation { record, solutions })
}
