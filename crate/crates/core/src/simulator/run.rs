//! Full simulation runs: initialize from physical data, iterate the stepper
//! to the stopping level, and record the trace.

use super::stepper::{compute_a, StepOutcome, Stepper};
use super::{
    Completion, RescaledState, SimConfig, SimError, SimulationTrace, TraceRecord,
    AMPLITUDE_DRIFT, DEFOCUS_STEP_LIMIT,
};
use crate::numerics::kahan::KahanSum;
use crate::profile::RescaledProfile;
use num_complex::Complex64;

/// Rescale physical initial data `u0(r)` onto the computational grid:
/// `L0 = ||u0||_inf^{-sigma}`, `v0(xi) = L0^{1/sigma} u0(xi L0)`, so that
/// `||v0||_inf = 1`; the initial rate comes from the same `a[v]` functional
/// that runs the evolution.
pub fn init_from_physical(
    u0: impl Fn(f64) -> f64,
    config: &SimConfig,
) -> Result<RescaledState, SimError> {
    let n = config.n_intervals()?;
    let peak = u0(0.0);
    if !peak.is_finite() || peak <= 0.0 {
        return Err(SimError::NonFiniteInitial);
    }
    let sigma = config.params.sigma;
    let l0 = peak.powf(-sigma);

    // Peak-at-origin check on a probe grid fine enough to see bumps the
    // rescaled grid might skip; features narrower than the probe spacing
    // are the caller's responsibility.
    let probe_end = (config.domain_length * l0).min(100.0).max(10.0);
    for k in 1..=4096 {
        let r = probe_end * k as f64 / 4096.0;
        if u0(r) > peak * (1.0 + 1e-12) {
            return Err(SimError::SupNotAtOrigin { at: r });
        }
    }

    let mut v = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let r = j as f64 * config.h * l0;
        let val = u0(r) / peak;
        if !val.is_finite() {
            return Err(SimError::NonFiniteInitial);
        }
        if val.abs() > 1.0 + 1e-12 {
            return Err(SimError::SupNotAtOrigin { at: r });
        }
        v.push(Complex64::new(val, 0.0));
    }

    let a = compute_a(&v, &config.params, config.h);
    Ok(RescaledState {
        v_prev: v.clone(),
        v,
        tau: 0.0,
        ln_l: l0.ln(),
        a,
        a_prev: a,
        step_index: 0,
    })
}

/// Distance monitor against a reference profile resampled once onto the
/// simulation grid.
struct DistanceMonitor {
    reference_abs: Vec<f64>,
}

impl DistanceMonitor {
    fn new(reference: &RescaledProfile, h: f64, n_nodes: usize) -> Self {
        DistanceMonitor {
            reference_abs: reference.abs_on_uniform(h, n_nodes),
        }
    }

    fn distance(&self, v: &[Complex64]) -> f64 {
        self.reference_abs
            .iter()
            .zip(v.iter())
            .map(|(&q, val)| (val.norm() - q).abs())
            .fold(0.0, f64::max)
    }
}

/// Runs the dynamic rescaling evolution until `L < stop_l` (or the safety
/// cap), recording every `record_every` steps. Errors carry the partial
/// trace gathered so far.
pub fn run(
    u0: impl Fn(f64) -> f64,
    config: &SimConfig,
    q_reference: Option<&RescaledProfile>,
) -> Result<SimulationTrace, SimError> {
    let state = init_from_physical(u0, config)?;
    run_from_state(state, config, q_reference)
}

/// Same as [`run`] but starting from an explicitly prepared state (used to
/// seed the evolution with a rescaled profile).
pub fn run_from_state(
    mut state: RescaledState,
    config: &SimConfig,
    q_reference: Option<&RescaledProfile>,
) -> Result<SimulationTrace, SimError> {
    let mut stepper = Stepper::new(config.clone())?;
    let monitor =
        q_reference.map(|q| DistanceMonitor::new(q, config.h, stepper.n_intervals() + 1));

    let ln_stop = config.stop_l.ln();
    let mut records: Vec<TraceRecord> = Vec::new();
    let mut t_total = KahanSum::new();
    let mut dt_interval = KahanSum::new();
    let mut defocus_run = 0usize;

    let make_trace = |records: &Vec<TraceRecord>,
                      t_total: &KahanSum,
                      state: &RescaledState,
                      completion: Completion| SimulationTrace {
        config: config.clone(),
        records: records.clone(),
        t_total: t_total.value(),
        a_end: state.a,
        tau_end: state.tau,
        completion,
    };

    loop {
        let outcome: StepOutcome = if state.step_index == 0 {
            stepper.bootstrap(&mut state)?
        } else {
            stepper.step(&mut state)?
        };

        // physical time advanced by this step: dt = dtau L(tau_{m+1})^2
        let dt = config.dtau * (2.0 * state.ln_l).exp();
        t_total.add(dt);
        dt_interval.add(dt);

        if !outcome.finite {
            return Err(SimError::Instability {
                step_index: state.step_index,
                trace: Box::new(make_trace(&records, &t_total, &state, Completion::ReachedTauMax)),
            });
        }
        if (outcome.sup_v - 1.0).abs() > AMPLITUDE_DRIFT {
            return Err(SimError::AmplitudeDrift {
                sup_v: outcome.sup_v,
                step_index: state.step_index,
                trace: Box::new(make_trace(&records, &t_total, &state, Completion::ReachedTauMax)),
            });
        }
        if outcome.l_ratio >= 1.0 {
            defocus_run += 1;
            if defocus_run >= DEFOCUS_STEP_LIMIT {
                return Err(SimError::NotBlowingUp {
                    trace: Box::new(make_trace(&records, &t_total, &state, Completion::ReachedTauMax)),
                });
            }
        } else {
            defocus_run = 0;
        }

        let stopping = state.ln_l < ln_stop || state.tau >= config.tau_max;
        if state.step_index % config.record_every == 0 || stopping {
            records.push(TraceRecord {
                step_index: state.step_index,
                tau: state.tau,
                delta_t: dt_interval.value(),
                ln_l: state.ln_l,
                a: state.a,
                sup_v: outcome.sup_v,
                dist_to_q: monitor.as_ref().map(|m| m.distance(&state.v)),
            });
            dt_interval.reset();
        }
        if stopping {
            let completion = if state.ln_l < ln_stop {
                Completion::ReachedStopL
            } else {
                Completion::ReachedTauMax
            };
            return Ok(make_trace(&records, &t_total, &state, completion));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::ProblemParams;

    fn small_config() -> SimConfig {
        let params = ProblemParams::new(3.0, 1.0).unwrap();
        SimConfig {
            domain_length: 20.0,
            ..SimConfig::defaults(params)
        }
    }

    #[test]
    fn gaussian_initial_data_is_normalized() {
        let config = small_config();
        let state = init_from_physical(|r| 5.0 * (-r * r).exp(), &config).unwrap();
        assert_eq!(state.v[0], Complex64::new(1.0, 0.0));
        // L0 = 1/5, ln L0 = -ln 5
        approx::assert_abs_diff_eq!(state.ln_l, -(5.0f64).ln(), epsilon = 1e-15);
        // real data: initial rate vanishes
        assert_eq!(state.a, 0.0);
        let sup = state.v.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        approx::assert_abs_diff_eq!(sup, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn unit_peak_keeps_samples() {
        let config = small_config();
        let state = init_from_physical(|r| (-r * r).exp(), &config).unwrap();
        approx::assert_abs_diff_eq!(state.ln_l, 0.0, epsilon = 1e-15);
        let expected = (-(3.0f64 * config.h).powi(2)).exp();
        approx::assert_abs_diff_eq!(state.v[3].re, expected, epsilon = 1e-15);
    }

    #[test]
    fn off_origin_peak_is_rejected() {
        let config = small_config();
        let r = init_from_physical(|r| ((r - 3.0) * (3.0 - r)).exp(), &config);
        assert!(matches!(r, Err(SimError::SupNotAtOrigin { .. })));
    }

    #[test]
    fn zero_field_stays_zero() {
        let config = small_config();
        let n = config.n_intervals().unwrap();
        let zero = vec![Complex64::default(); n + 1];
        let mut state = RescaledState {
            v: zero.clone(),
            v_prev: zero,
            tau: 0.0,
            ln_l: 0.0,
            a: 0.0,
            a_prev: 0.0,
            step_index: 1, // skip the bootstrap
        };
        let mut stepper = Stepper::new(config).unwrap();
        for _ in 0..5 {
            stepper.step(&mut state).unwrap();
        }
        assert!(state.v.iter().all(|v| v.norm() == 0.0));
        assert_eq!(state.ln_l, 0.0);
        assert_eq!(state.a, 0.0);
    }
}
