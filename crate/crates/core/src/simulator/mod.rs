//! Dynamic rescaling evolution of
//! `i v_tau + i a(tau) (xi v_xi + v/sigma) + \Delta v + |v|^{2 sigma} v = 0`
//! on a uniform grid: the rescaled field stays O(1) for all rescaled time
//! while the physical solution focuses by dozens of orders of magnitude.

mod format;
mod run;
mod stencil;
mod stepper;

pub use format::{read_trace, write_trace};
pub use run::{init_from_physical, run, run_from_state};
pub use stencil::UniformStencil;
pub use stepper::{compute_a, Stepper};

use crate::profile::ProblemParams;
use num_complex::Complex64;
use thiserror::Error;

/// Tolerated drift of `sup |v|` away from the pinned value 1; the rescaling
/// never renormalizes, so drift beyond this is a scheme failure.
pub const AMPLITUDE_DRIFT: f64 = 1e-2;

/// Consecutive non-focusing steps before a run is declared not to blow up.
pub const DEFOCUS_STEP_LIMIT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Evaluate the exactly-solved far-field transport at a rescaled point
    /// by cubic spline and amplitude factor.
    ExactInterpolation,
    /// Advance the far-field transport equation at `xi = L_D` with a
    /// two-step Adams-Bashforth update.
    AdamsBashforthOde,
}

impl BoundaryKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryKind::ExactInterpolation => "exact-interpolation",
            BoundaryKind::AdamsBashforthOde => "adams-bashforth-ode",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact-interpolation" => Some(BoundaryKind::ExactInterpolation),
            "adams-bashforth-ode" => Some(BoundaryKind::AdamsBashforthOde),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: ProblemParams,
    pub h: f64,
    pub dtau: f64,
    pub domain_length: f64,
    pub stop_l: f64,
    pub tau_max: f64,
    pub bc_kind: BoundaryKind,
    pub record_every: usize,
}

impl SimConfig {
    /// Reference configuration: `h = 0.1`, `dtau = 1e-4 / 2^{sigma-2}`,
    /// domain 100 for `d <= 3` and 200 above, stop at `L < 1e-24`.
    pub fn defaults(params: ProblemParams) -> Self {
        SimConfig {
            params,
            h: 0.1,
            dtau: 1e-4 * (2.0f64).powf(2.0 - params.sigma),
            domain_length: if params.d <= 3.0 { 100.0 } else { 200.0 },
            stop_l: 1e-24,
            tau_max: 200.0,
            bc_kind: BoundaryKind::ExactInterpolation,
            record_every: 100,
        }
    }

    /// Number of grid intervals `N`; `domain_length / h` must be integral.
    pub fn n_intervals(&self) -> Result<usize, SimError> {
        if !(self.h > 0.0) || !(self.dtau > 0.0) || !(self.stop_l > 0.0) {
            return Err(SimError::Config(format!(
                "h, dtau, stop_l must be positive (h = {}, dtau = {}, stop_l = {})",
                self.h, self.dtau, self.stop_l
            )));
        }
        let ratio = self.domain_length / self.h;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 12.0 {
            return Err(SimError::Config(format!(
                "domain_length / h = {ratio} is not an integral grid size"
            )));
        }
        Ok(n as usize)
    }
}

/// Evolution state: the field on `xi_j = j h`, the previous step for the
/// two-step scheme, and the reconstructed scaling quantities.
#[derive(Debug, Clone)]
pub struct RescaledState {
    pub v: Vec<Complex64>,
    pub tau: f64,
    pub ln_l: f64,
    pub a: f64,
    pub step_index: usize,
    pub v_prev: Vec<Complex64>,
    pub a_prev: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct TraceRecord {
    pub step_index: usize,
    pub tau: f64,
    /// Physical time elapsed since the previous record.
    pub delta_t: f64,
    pub ln_l: f64,
    pub a: f64,
    pub sup_v: f64,
    pub dist_to_q: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    ReachedStopL,
    ReachedTauMax,
}

impl Completion {
    pub fn name(&self) -> &'static str {
        match self {
            Completion::ReachedStopL => "stop-l",
            Completion::ReachedTauMax => "tau-max",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stop-l" => Some(Completion::ReachedStopL),
            "tau-max" => Some(Completion::ReachedTauMax),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationTrace {
    pub config: SimConfig,
    pub records: Vec<TraceRecord>,
    /// Total physical time `T = sum of all dt`, the blow-up time estimate.
    pub t_total: f64,
    pub a_end: f64,
    pub tau_end: f64,
    pub completion: Completion,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("bad simulator configuration: {0}")]
    Config(String),
    #[error("initial data does not attain its maximum at the origin (sup at r = {at})")]
    SupNotAtOrigin { at: f64 },
    #[error("initial data produced non-finite samples")]
    NonFiniteInitial,
    #[error("implicit operator factorization failed: {0}")]
    LinearSolveFailure(String),
    #[error("field became non-finite at step {step_index} (instability)")]
    Instability {
        step_index: usize,
        trace: Box<SimulationTrace>,
    },
    #[error("amplitude drifted to sup|v| = {sup_v} at step {step_index}")]
    AmplitudeDrift {
        sup_v: f64,
        step_index: usize,
        trace: Box<SimulationTrace>,
    },
    #[error("run is not blowing up ({DEFOCUS_STEP_LIMIT} consecutive defocusing steps)")]
    NotBlowingUp { trace: Box<SimulationTrace> },
    #[error("far-field rescaling point zeta = {zeta} left the domain (defocusing step)")]
    ZetaOutOfRange { zeta: f64 },
}
