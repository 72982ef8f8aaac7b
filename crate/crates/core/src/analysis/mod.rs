//! Post-processing of simulation traces: blow-up time reconstruction by
//! compensated suffix sums, rate fits against `L = (2a(T-t))^{1/2}`, the
//! relative-error series evaluated in log space, cross-validation of the
//! rescaling rate against the profile family, and report emission.

mod report;

pub use report::{analyze, write_report, AnalysisReport, ONSET_FACTOR, STABILIZED_WINDOW_TOP};

use crate::numerics::kahan::KahanSum;
use crate::numerics::spline::CubicSpline;
use crate::profile::{rescale_family, ProfileSolution, RescaledProfile};
use crate::simulator::SimulationTrace;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("trace has no records")]
    EmptyTrace,
    #[error("fit window holds {found} records, needs at least {needed}")]
    InsufficientRecords { found: usize, needed: usize },
    #[error("trace parameters (d = {trace_d}, sigma = {trace_sigma}) do not match the profile (d = {profile_d}, sigma = {profile_sigma})")]
    ParameterMismatch {
        trace_d: f64,
        trace_sigma: f64,
        profile_d: f64,
        profile_sigma: f64,
    },
    #[error("no overlap between field grid and reference profile")]
    EmptyOverlap,
}

/// Window bounds for rate fits and stabilized-error statistics: drop the
/// transient (`ln L > transient_ln_l`) and the terminal region where the
/// blow-up time estimate degrades (`L < terminal_l`).
#[derive(Debug, Clone)]
pub struct AnalysisSettings {
    pub transient_ln_l: f64,
    pub terminal_l: f64,
    pub min_fit_records: usize,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            transient_ln_l: -2.0,
            terminal_l: 1e-20,
            min_fit_records: 20,
        }
    }
}

/// Blow-up time `T` and the suffix sums `T - t`.
///
/// `t_minus[k] = sum of delta_t[k..]`, so `t_minus[0] = T` (the whole run
/// lies ahead of the start) and `t_minus[records.len()] = 0`; the state
/// recorded at index `k` pairs with `t_minus[k + 1]`. Suffix sums are
/// accumulated from the tail with compensation, never by subtracting
/// cumulative times.
pub fn reconstruct_times(trace: &SimulationTrace) -> Result<(f64, Vec<f64>), AnalysisError> {
    if trace.records.is_empty() {
        return Err(AnalysisError::EmptyTrace);
    }
    let m = trace.records.len();
    let mut t_minus = vec![0.0; m + 1];
    let mut acc = KahanSum::new();
    for k in (0..m).rev() {
        acc.add(trace.records[k].delta_t);
        t_minus[k] = acc.value();
    }
    Ok((acc.value(), t_minus))
}

#[derive(Debug, Clone)]
pub struct RateFit {
    /// Slope of `ln L` against `ln (T - t)`; 1/2 for the square-root law.
    pub slope: f64,
    pub intercept: f64,
    /// `ln L` range actually used.
    pub fit_window: (f64, f64),
    pub residual_rms: f64,
    pub n_records: usize,
}

fn windowed_indices(trace: &SimulationTrace, settings: &AnalysisSettings) -> Vec<usize> {
    let terminal_ln_l = settings.terminal_l.ln();
    (0..trace.records.len())
        .filter(|&k| {
            let ln_l = trace.records[k].ln_l;
            ln_l <= settings.transient_ln_l && ln_l >= terminal_ln_l
        })
        .collect()
}

pub fn fit_rate(
    trace: &SimulationTrace,
    settings: &AnalysisSettings,
) -> Result<RateFit, AnalysisError> {
    let (_, t_minus) = reconstruct_times(trace)?;
    let idx = windowed_indices(trace, settings);
    let pts: Vec<(f64, f64)> = idx
        .iter()
        .filter(|&&k| t_minus[k + 1] > 0.0)
        .map(|&k| (t_minus[k + 1].ln(), trace.records[k].ln_l))
        .collect();
    if pts.len() < settings.min_fit_records {
        return Err(AnalysisError::InsufficientRecords {
            found: pts.len(),
            needed: settings.min_fit_records,
        });
    }

    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (slope * p.0 + intercept);
            r * r
        })
        .sum();

    let lo = pts.iter().map(|p| p.1).fold(f64::MAX, f64::min);
    let hi = pts.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    Ok(RateFit {
        slope,
        intercept,
        fit_window: (lo, hi),
        residual_rms: (ss_res / n).sqrt(),
        n_records: pts.len(),
    })
}

/// `(ln L, E_rel)` with `a~` pinned to `a(tau_end)`, truncated at the
/// terminal cut. The error is evaluated entirely in log space:
/// `E_rel = |exp((2 ln L - ln(T-t) - ln 2 - ln a~)/(2 sigma)) - 1|`.
#[derive(Debug, Clone)]
pub struct RelativeErrorSeries {
    pub a_tilde: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn relative_error_series(
    trace: &SimulationTrace,
    settings: &AnalysisSettings,
) -> Result<RelativeErrorSeries, AnalysisError> {
    let (_, t_minus) = reconstruct_times(trace)?;
    let a_tilde = trace.a_end;
    let sigma = trace.config.params.sigma;
    let terminal_ln_l = settings.terminal_l.ln();
    let mut points = Vec::new();
    for (k, rec) in trace.records.iter().enumerate() {
        if rec.ln_l < terminal_ln_l || t_minus[k + 1] <= 0.0 {
            continue;
        }
        let arg =
            (2.0 * rec.ln_l - t_minus[k + 1].ln() - (2.0f64).ln() - a_tilde.ln()) / (2.0 * sigma);
        points.push((rec.ln_l, (arg.exp() - 1.0).abs()));
    }
    Ok(RelativeErrorSeries { a_tilde, points })
}

/// Median of `E_rel` over the stabilized window `terminal_l <= L <= lo_cut`.
pub fn stabilized_median(series: &RelativeErrorSeries, lo_cut: f64) -> Option<f64> {
    let mut vals: Vec<f64> = series
        .points
        .iter()
        .filter(|(ln_l, _)| *ln_l <= lo_cut.ln())
        .map(|(_, e)| *e)
        .collect();
    if vals.is_empty() {
        return None;
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(vals[vals.len() / 2])
}

/// Largest `L` from which `E_rel` stays within `factor` times the
/// stabilized median for the rest of the series: the stabilization onset.
pub fn stabilization_onset(series: &RelativeErrorSeries, lo_cut: f64, factor: f64) -> Option<f64> {
    let median = stabilized_median(series, lo_cut)?;
    let bound = factor * median;
    let mut onset = None;
    for (ln_l, e) in series.points.iter().rev() {
        if *e <= bound {
            onset = Some(ln_l.exp());
        } else {
            break;
        }
    }
    onset
}

/// Rescaling rate of the run against the profile-family prediction
/// `a~ = a (1/Q(0))^{2 sigma}` at unit sup norm.
pub fn compare_a(
    trace: &SimulationTrace,
    profile: &ProfileSolution,
) -> Result<(f64, f64, f64), AnalysisError> {
    let tp = trace.config.params;
    let pp = profile.params;
    if (tp.d - pp.d).abs() > 1e-9 || (tp.sigma - pp.sigma).abs() > 1e-9 {
        return Err(AnalysisError::ParameterMismatch {
            trace_d: tp.d,
            trace_sigma: tp.sigma,
            profile_d: pp.d,
            profile_sigma: pp.sigma,
        });
    }
    let a_sim = trace.a_end;
    let a_tilde = rescale_family(profile, 1.0).a_tilde;
    Ok((a_sim, a_tilde, (a_sim - a_tilde).abs()))
}

/// `sup over the grid overlap of | |v| - |Q~| |`, the reference resampled
/// by spline onto the uniform grid.
pub fn profile_distance(
    v: &[Complex64],
    h: f64,
    q_tilde: &RescaledProfile,
) -> Result<f64, AnalysisError> {
    let abs: Vec<f64> = q_tilde.q.iter().map(|q| q.norm()).collect();
    let spline = CubicSpline::natural_real(&q_tilde.eta, &abs).expect("eta grid increasing");
    let eta_max = *q_tilde.eta.last().unwrap();
    let mut worst = f64::NAN;
    let mut any = false;
    for (j, val) in v.iter().enumerate() {
        let x = j as f64 * h;
        if x > eta_max {
            break;
        }
        let d = (val.norm() - spline.eval_real(x).unwrap()).abs();
        if !any || d > worst {
            worst = d;
            any = true;
        }
    }
    if any {
        Ok(worst)
    } else {
        Err(AnalysisError::EmptyOverlap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::ProblemParams;
    use crate::simulator::{BoundaryKind, Completion, SimConfig, TraceRecord};
    use approx::assert_abs_diff_eq;

    fn synthetic_trace(a_tilde: f64, sigma: f64) -> SimulationTrace {
        // exact law: L = sqrt(2 a~ (T - t)); choose ln L levels, derive dt
        let params = ProblemParams::new(3.0, sigma).unwrap();
        let mut config = SimConfig::defaults(params);
        config.record_every = 1;
        let levels: Vec<f64> = (0..240).map(|i| -0.2 * i as f64).collect();
        // T - t_k = L_k^2 / (2 a~); delta_t_k = (T - t_{k-1}) - (T - t_k)
        let t_minus: Vec<f64> = levels.iter().map(|l| (2.0 * l).exp() / (2.0 * a_tilde)).collect();
        let mut records = Vec::new();
        for k in 0..levels.len() {
            let prev = if k == 0 {
                // a virtual start just above the first record
                (2.0f64 * 0.2).exp() * t_minus[0]
            } else {
                t_minus[k - 1]
            };
            records.push(TraceRecord {
                step_index: (k + 1) * 100,
                tau: 0.01 * (k + 1) as f64,
                delta_t: prev - t_minus[k],
                ln_l: levels[k],
                a: a_tilde,
                sup_v: 1.0,
                dist_to_q: None,
            });
        }
        // closing record carrying the remaining time, so T - t_k is exact
        records.push(TraceRecord {
            step_index: (levels.len() + 1) * 100,
            tau: 0.01 * (levels.len() + 1) as f64,
            delta_t: *t_minus.last().unwrap(),
            ln_l: levels.last().unwrap() - 0.2,
            a: a_tilde,
            sup_v: 1.0,
            dist_to_q: None,
        });
        SimulationTrace {
            config,
            records,
            t_total: 0.0,
            a_end: a_tilde,
            tau_end: 2.4,
            completion: Completion::ReachedStopL,
        }
    }

    #[test]
    fn trivial_suffix_sums() {
        let mut trace = synthetic_trace(0.5, 1.0);
        trace.records.truncate(1);
        trace.records[0].delta_t = 1.0;
        let (t, t_minus) = reconstruct_times(&trace).unwrap();
        assert_eq!(t, 1.0);
        assert_eq!(t_minus, vec![1.0, 0.0]);

        trace.records = vec![
            TraceRecord { delta_t: 0.5, ..trace.records[0] },
            TraceRecord { delta_t: 0.25, ..trace.records[0] },
            TraceRecord { delta_t: 0.125, ..trace.records[0] },
        ];
        let (t, t_minus) = reconstruct_times(&trace).unwrap();
        assert_abs_diff_eq!(t, 0.875, epsilon = 1e-15);
        assert_abs_diff_eq!(t_minus[1], 0.375, epsilon = 1e-15);
    }

    #[test]
    fn geometric_suffix_sums_keep_full_precision() {
        // scale by pi so partial sums are not binary-exact
        let scale = std::f64::consts::PI;
        let mut trace = synthetic_trace(0.5, 1.0);
        trace.records.truncate(60);
        for (j, rec) in trace.records.iter_mut().enumerate() {
            rec.delta_t = scale * (2.0f64).powi(-(j as i32 + 1));
        }
        let (_, t_minus) = reconstruct_times(&trace).unwrap();
        for i in 0..60 {
            let exact = scale * ((2.0f64).powi(-(i as i32)) - (2.0f64).powi(-60));
            assert!(
                (t_minus[i] - exact).abs() <= 1e-15 * exact,
                "suffix {i}: {} vs {exact}",
                t_minus[i]
            );
        }
        // naive cumulative subtraction loses the tail to cancellation
        let t: f64 = trace.records.iter().map(|r| r.delta_t).sum();
        let mut prefix = 0.0f64;
        for rec in &trace.records[..40] {
            prefix += rec.delta_t;
        }
        let naive = t - prefix;
        let exact = scale * ((2.0f64).powi(-40) - (2.0f64).powi(-60));
        assert!((naive - exact).abs() > 1e-6 * exact.abs());
    }

    #[test]
    fn suffix_prefix_identity() {
        let trace = synthetic_trace(0.4587, 1.0);
        let (t, t_minus) = reconstruct_times(&trace).unwrap();
        let mut prefix = KahanSum::new();
        for (k, rec) in trace.records.iter().enumerate() {
            prefix.add(rec.delta_t);
            let sum = prefix.value() + t_minus[k + 1];
            assert!((sum - t).abs() <= 1e-12 * t, "record {k}: {sum} vs {t}");
        }
    }

    #[test]
    fn exact_law_fits_slope_half_with_zero_error() {
        let trace = synthetic_trace(0.2579, 1.0);
        let fit = fit_rate(&trace, &AnalysisSettings::default()).unwrap();
        assert_abs_diff_eq!(fit.slope, 0.5, epsilon = 1e-12);
        assert!(fit.residual_rms < 1e-12);
        assert!(fit.n_records >= 20);

        let series = relative_error_series(&trace, &AnalysisSettings::default()).unwrap();
        for (_, e) in &series.points {
            assert!(*e <= 1e-12, "e_rel {e}");
        }
    }

    #[test]
    fn slope_invariant_under_time_shift() {
        let trace = synthetic_trace(0.31, 2.0);
        let fit = fit_rate(&trace, &AnalysisSettings::default()).unwrap();
        let mut shifted = trace.clone();
        // prepend a long transient interval; window excludes it (ln L > -2)
        shifted.records.insert(
            0,
            TraceRecord {
                step_index: 1,
                tau: 0.001,
                delta_t: 5.0,
                ln_l: -0.1,
                a: 0.31,
                sup_v: 1.0,
                dist_to_q: None,
            },
        );
        let fit2 = fit_rate(&shifted, &AnalysisSettings::default()).unwrap();
        assert_abs_diff_eq!(fit.slope, fit2.slope, epsilon = 1e-9);
    }

    #[test]
    fn insufficient_records_is_reported() {
        let mut trace = synthetic_trace(0.5, 1.0);
        trace.records.truncate(5);
        assert!(matches!(
            fit_rate(&trace, &AnalysisSettings::default()),
            Err(AnalysisError::InsufficientRecords { .. })
        ));
    }

    #[test]
    fn compare_a_agrees_on_synthetic_seed() {
        use crate::numerics::chebyshev::build_grid;
        use nalgebra::DVector;
        let params = ProblemParams::new(3.0, 1.0).unwrap();
        let grid = build_grid(33, 20.0).unwrap();
        let q0 = 1.8856569903;
        let a = 0.9173561446;
        let profile = ProfileSolution {
            params,
            grid: grid.clone(),
            p_real: DVector::from_iterator(33, grid.nodes.iter().map(|x| q0 / (1.0 + x * x))),
            w_imag: DVector::zeros(33),
            a,
            residual_norm: 0.0,
            newton_iterations: 0,
        };
        let a_tilde = a / (q0 * q0);
        let trace = synthetic_trace(a_tilde, 1.0);
        let (a_sim, a_pred, diff) = compare_a(&trace, &profile).unwrap();
        assert_eq!(a_sim, a_tilde);
        assert_abs_diff_eq!(a_pred, a_tilde, epsilon = 1e-15);
        assert!(diff < 1e-15);
    }

    #[test]
    fn compare_a_rejects_mismatched_parameters() {
        use crate::numerics::chebyshev::build_grid;
        use nalgebra::DVector;
        let profile = ProfileSolution {
            params: ProblemParams::new(2.0, 2.0).unwrap(),
            grid: build_grid(33, 20.0).unwrap(),
            p_real: DVector::from_element(33, 1.0),
            w_imag: DVector::zeros(33),
            a: 1.5,
            residual_norm: 0.0,
            newton_iterations: 0,
        };
        let trace = synthetic_trace(0.5, 1.0);
        assert!(matches!(
            compare_a(&trace, &profile),
            Err(AnalysisError::ParameterMismatch { .. })
        ));
    }

    #[test]
    fn distance_zero_on_itself_and_exact_on_bump() {
        use crate::numerics::chebyshev::build_grid;
        use crate::profile::rescale_family;
        use nalgebra::DVector;
        let params = ProblemParams::new(3.0, 1.0).unwrap();
        let grid = build_grid(129, 50.0).unwrap();
        let profile = ProfileSolution {
            params,
            grid: grid.clone(),
            p_real: DVector::from_iterator(129, grid.nodes.iter().map(|x| 2.0 / (1.0 + x * x))),
            w_imag: DVector::zeros(129),
            a: 0.9,
            residual_norm: 0.0,
            newton_iterations: 0,
        };
        let q_tilde = rescale_family(&profile, 1.0);
        let h = 0.1;
        let abs: Vec<f64> = q_tilde.q.iter().map(|q| q.norm()).collect();
        let resampler = CubicSpline::natural_real(&q_tilde.eta, &abs).unwrap();
        let v: Vec<Complex64> = (0..=400)
            .map(|j| Complex64::new(resampler.eval_real(j as f64 * h).unwrap(), 0.0))
            .collect();
        let d0 = profile_distance(&v, h, &q_tilde).unwrap();
        assert!(d0 < 1e-13, "self distance {d0}");

        // a localized bump of 1e-3 shows up exactly
        let mut v_bump = v.clone();
        v_bump[120] += Complex64::new(1e-3, 0.0);
        let d1 = profile_distance(&v_bump, h, &q_tilde).unwrap();
        assert_abs_diff_eq!(d1, 1e-3, epsilon = 1e-12);
    }
}
