//! Adaptive Dormand-Prince 5(4) integration of complex ODE systems.
//!
//! Used to manufacture initial guesses for the profile Newton solve by
//! integrating the profile equation as an initial value problem, so the
//! interface keeps every accepted step for later interpolation.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (stiffness or blow-up)")]
    StepUnderflow { t: f64 },
    #[error("state amplitude exceeded {cap} at t = {t}")]
    AmplitudeExceeded { t: f64, cap: f64 },
    #[error("step budget of {0} accepted steps exhausted")]
    TooManySteps(usize),
}

#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: Option<f64>,
    /// Abort as soon as any component magnitude passes this bound.
    pub amplitude_cap: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: None,
            amplitude_cap: None,
            max_steps: 2_000_000,
        }
    }
}

/// Accepted integration states, `ys[k]` at `ts[k]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<Complex64>>,
}

impl Trajectory {
    pub fn last(&self) -> (&f64, &Vec<Complex64>) {
        (self.ts.last().unwrap(), self.ys.last().unwrap())
    }
}

const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// b - b_hat, embedded 4th-order error weights (k7 term included)
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub fn rk45_integrate<F>(
    rhs: F,
    y0: Vec<Complex64>,
    span: (f64, f64),
    opts: &OdeOptions,
) -> Result<Trajectory, OdeError>
where
    F: Fn(f64, &[Complex64], &mut [Complex64]),
{
    let (t0, t_end) = span;
    assert!(t_end > t0, "span must be increasing");
    let dim = y0.len();
    let mut t = t0;
    let mut y = y0;

    let mut k: Vec<Vec<Complex64>> = (0..7).map(|_| vec![Complex64::default(); dim]).collect();
    let mut y_stage = vec![Complex64::default(); dim];
    let mut y_new = vec![Complex64::default(); dim];

    let hmax = opts.max_step.unwrap_or((t_end - t0) / 10.0);
    let mut h = ((t_end - t0) / 100.0).min(hmax);
    let h_floor = (t_end - t0) * 1e-14;

    let mut traj = Trajectory {
        ts: vec![t],
        ys: vec![y.clone()],
    };

    let stage = |k: &[Vec<Complex64>], coeffs: &[f64], y: &[Complex64], h: f64, out: &mut [Complex64]| {
        for i in 0..y.len() {
            let mut acc = Complex64::default();
            for (s, &c) in coeffs.iter().enumerate() {
                acc += k[s][i] * c;
            }
            out[i] = y[i] + acc * h;
        }
    };

    // FSAL: k1 of the next step is k7 of the accepted one.
    rhs(t, &y, &mut k[0]);

    let mut accepted = 0usize;
    while t_end - t > h_floor {
        if accepted >= opts.max_steps {
            return Err(OdeError::TooManySteps(opts.max_steps));
        }
        if h < h_floor {
            return Err(OdeError::StepUnderflow { t });
        }
        h = h.min(t_end - t).min(hmax);

        stage(&k, &A2, &y, h, &mut y_stage);
        rhs(t + C[0] * h, &y_stage, &mut k[1]);
        stage(&k, &A3, &y, h, &mut y_stage);
        rhs(t + C[1] * h, &y_stage, &mut k[2]);
        stage(&k, &A4, &y, h, &mut y_stage);
        rhs(t + C[2] * h, &y_stage, &mut k[3]);
        stage(&k, &A5, &y, h, &mut y_stage);
        rhs(t + C[3] * h, &y_stage, &mut k[4]);
        stage(&k, &A6, &y, h, &mut y_stage);
        rhs(t + C[4] * h, &y_stage, &mut k[5]);
        stage(&k, &B, &y, h, &mut y_new);
        rhs(t + h, &y_new, &mut k[6]);

        // embedded error estimate
        let mut err: f64 = 0.0;
        for i in 0..dim {
            let mut e = Complex64::default();
            for (s, &c) in E.iter().enumerate() {
                e += k[s][i] * c;
            }
            let scale = opts.abs_tol + opts.rel_tol * y[i].norm().max(y_new[i].norm());
            err = err.max((e * h).norm() / scale);
        }

        if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6); // FSAL
            traj.ts.push(t);
            traj.ys.push(y.clone());
            accepted += 1;
            if let Some(cap) = opts.amplitude_cap {
                if y.iter().any(|v| v.norm() > cap) {
                    return Err(OdeError::AmplitudeExceeded { t, cap });
                }
            }
            if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(OdeError::StepUnderflow { t });
            }
        }

        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
    }

    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_rhs_keeps_state() {
        let traj = rk45_integrate(
            |_, _, dy| dy.fill(Complex64::default()),
            vec![c(1.5, -0.5)],
            (0.0, 2.0),
            &OdeOptions::default(),
        )
        .unwrap();
        let (_, y_end) = traj.last();
        assert_eq!(y_end[0], c(1.5, -0.5));
    }

    #[test]
    fn exponential_growth_matches_e() {
        let opts = OdeOptions {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            ..OdeOptions::default()
        };
        let traj = rk45_integrate(
            |_, y, dy| dy[0] = y[0],
            vec![c(1.0, 0.0)],
            (0.0, 1.0),
            &opts,
        )
        .unwrap();
        let (_, y_end) = traj.last();
        assert_abs_diff_eq!(y_end[0].re, std::f64::consts::E, epsilon = 1e-8);
    }

    #[test]
    fn rotating_phase_stays_on_unit_circle() {
        let traj = rk45_integrate(
            |_, y, dy| dy[0] = c(0.0, 1.0) * y[0],
            vec![c(1.0, 0.0)],
            (0.0, 10.0),
            &OdeOptions::default(),
        )
        .unwrap();
        let (_, y_end) = traj.last();
        assert_abs_diff_eq!(y_end[0].norm(), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(y_end[0].re, (10.0f64).cos(), epsilon = 1e-7);
    }

    #[test]
    fn amplitude_cap_aborts() {
        let r = rk45_integrate(
            |_, y, dy| dy[0] = y[0] * 5.0,
            vec![c(1.0, 0.0)],
            (0.0, 10.0),
            &OdeOptions {
                amplitude_cap: Some(1e3),
                ..OdeOptions::default()
            },
        );
        assert!(matches!(r, Err(OdeError::AmplitudeExceeded { .. })));
    }
}
