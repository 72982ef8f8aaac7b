//! Analysis reports: a machine-readable key-value section followed by
//! plot-ready two-column blocks, one per tracked quantity.

use super::{
    compare_a, fit_rate, relative_error_series, reconstruct_times, stabilization_onset,
    stabilized_median, AnalysisError, AnalysisSettings, RateFit, RelativeErrorSeries,
};
use crate::profile::format::fmt_f64;
use crate::profile::ProfileSolution;
use crate::simulator::SimulationTrace;
use std::io::Write;

#[derive(Debug)]
pub struct AnalysisReport {
    pub t_total: f64,
    pub a_end: f64,
    pub rate: RateFit,
    pub erel: RelativeErrorSeries,
    pub erel_median_stabilized: Option<f64>,
    pub erel_onset_l: Option<f64>,
    /// `(a_sim, a_tilde, |difference|)` when a profile is supplied.
    pub a_comparison: Option<(f64, f64, f64)>,
    /// `(ln(T-t), ln L)` pairs for the rate panel.
    pub rate_panel: Vec<(f64, f64)>,
    /// `(tau, a)` pairs.
    pub a_panel: Vec<(f64, f64)>,
    /// `(tau, distance)` pairs, when the trace tracked a reference.
    pub dist_panel: Vec<(f64, f64)>,
}

/// Stabilized statistics are taken over `L` at or below this level.
pub const STABILIZED_WINDOW_TOP: f64 = 1e-10;

/// A record counts as stabilized once its error is within this factor of
/// the stabilized median.
pub const ONSET_FACTOR: f64 = 3.0;

pub fn analyze(
    trace: &SimulationTrace,
    profile: Option<&ProfileSolution>,
    settings: &AnalysisSettings,
) -> Result<AnalysisReport, AnalysisError> {
    let (t_total, t_minus) = reconstruct_times(trace)?;
    let rate = fit_rate(trace, settings)?;
    let erel = relative_error_series(trace, settings)?;
    let erel_median_stabilized = stabilized_median(&erel, STABILIZED_WINDOW_TOP);
    let erel_onset_l = stabilization_onset(&erel, STABILIZED_WINDOW_TOP, ONSET_FACTOR);
    let a_comparison = match profile {
        Some(p) => Some(compare_a(trace, p)?),
        None => None,
    };

    let rate_panel = trace
        .records
        .iter()
        .enumerate()
        .filter(|(k, _)| t_minus[k + 1] > 0.0)
        .map(|(k, r)| (t_minus[k + 1].ln(), r.ln_l))
        .collect();
    let a_panel = trace.records.iter().map(|r| (r.tau, r.a)).collect();
    let dist_panel = trace
        .records
        .iter()
        .filter_map(|r| r.dist_to_q.map(|d| (r.tau, d)))
        .collect();

    Ok(AnalysisReport {
        t_total,
        a_end: trace.a_end,
        rate,
        erel,
        erel_median_stabilized,
        erel_onset_l,
        a_comparison,
        rate_panel,
        a_panel,
        dist_panel,
    })
}

pub fn write_report(
    report: &AnalysisReport,
    mut out: impl Write,
    manifest: Option<&str>,
) -> std::io::Result<()> {
    writeln!(out, "# analysis-report")?;
    if let Some(m) = manifest {
        writeln!(out, "# manifest = {m}")?;
    }
    writeln!(out, "T = {}", fmt_f64(report.t_total))?;
    writeln!(out, "a_end = {}", fmt_f64(report.a_end))?;
    writeln!(out, "slope = {}", fmt_f64(report.rate.slope))?;
    writeln!(out, "intercept = {}", fmt_f64(report.rate.intercept))?;
    writeln!(out, "residual_rms = {}", fmt_f64(report.rate.residual_rms))?;
    writeln!(out, "fit_lnl_min = {}", fmt_f64(report.rate.fit_window.0))?;
    writeln!(out, "fit_lnl_max = {}", fmt_f64(report.rate.fit_window.1))?;
    writeln!(out, "fit_records = {}", report.rate.n_records)?;
    writeln!(out, "a_tilde_from_trace = {}", fmt_f64(report.erel.a_tilde))?;
    if let Some(m) = report.erel_median_stabilized {
        writeln!(out, "erel_median_stabilized = {}", fmt_f64(m))?;
    }
    if let Some(l) = report.erel_onset_l {
        writeln!(out, "erel_onset_L = {}", fmt_f64(l))?;
    }
    if let Some((a_sim, a_tilde, diff)) = report.a_comparison {
        writeln!(out, "a_sim = {}", fmt_f64(a_sim))?;
        writeln!(out, "a_tilde_from_profile = {}", fmt_f64(a_tilde))?;
        writeln!(out, "a_abs_diff = {}", fmt_f64(diff))?;
    }

    let block = |out: &mut dyn Write, name: &str, pts: &[(f64, f64)]| -> std::io::Result<()> {
        writeln!(out, "\n[{name}]")?;
        for (x, y) in pts {
            writeln!(out, "{}\t{}", fmt_f64(*x), fmt_f64(*y))?;
        }
        Ok(())
    };
    block(&mut out, "lnL_vs_lnTmt", &report.rate_panel)?;
    block(&mut out, "a_vs_tau", &report.a_panel)?;
    if !report.dist_panel.is_empty() {
        block(&mut out, "dist_vs_tau", &report.dist_panel)?;
    }
    let erel_pts: Vec<(f64, f64)> = report.erel.points.clone();
    block(&mut out, "erel_vs_lnL", &erel_pts)?;
    Ok(())
}
