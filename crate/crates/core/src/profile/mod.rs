//! The complex blow-up profile boundary-value problem.
//!
//! Splitting `Q = P + i W`, the profile equation
//! `\Delta Q - Q + i a (Q/\sigma + \xi Q_\xi) + |Q|^{2\sigma} Q = 0`
//! with `P_\xi(0) = W(0) = W_\xi(0) = 0` and the far-field closure
//! `(1/\sigma + i/a) Q(K) + K Q_\xi(K) = 0` becomes a square nonlinear
//! system in the `2n + 1` unknowns `[P; W; a]` once the two ordinary
//! differential equations are collocated at the interior nodes.

mod continuation;
mod diagnostics;
pub mod format;
mod shooting;
mod solver;
mod system;

pub use continuation::{
    continue_in_parameter, Continuation, ContinuationEntry, ContinuationError, ContinuationRecord,
};
pub use diagnostics::{
    c0_check, count_maxima, detect_oscillation, fit_far_field_amplitude, hamiltonian_study,
    identity_residuals, phase_path, phase_path_from_trajectory, rescale_family, volterra_residual,
    C0Check, HamiltonianStudy, OscillationSettings, RescaledProfile,
};
pub use format::{read_profile, write_profile, FormatError};
pub use shooting::{initial_guess_by_shooting, profile_ivp_rhs, shoot_trajectory, ShootingError};
pub use solver::{solve_profile, ProfileError, RESIDUAL_ACCEPT};
pub use system::{assemble_jacobian, assemble_residual};
pub(crate) use system::nonlinear_power;

use crate::numerics::chebyshev::ChebyshevGrid;
use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("dimension must satisfy d >= 2, got {0}")]
    DimensionTooSmall(f64),
    #[error("nonlinearity exponent must be positive, got {0}")]
    SigmaNotPositive(f64),
    #[error("parameters are not mass-supercritical: s_c = {0} <= 0")]
    NotSupercritical(f64),
}

/// Dimension and nonlinearity of the equation; both vary continuously during
/// parameter continuation. `p = 2 sigma + 1` is the nonlinearity power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub d: f64,
    pub sigma: f64,
}

impl ProblemParams {
    pub fn new(d: f64, sigma: f64) -> Result<Self, ParamsError> {
        if !(d >= 2.0) {
            return Err(ParamsError::DimensionTooSmall(d));
        }
        if !(sigma > 0.0) {
            return Err(ParamsError::SigmaNotPositive(sigma));
        }
        let params = ProblemParams { d, sigma };
        if !(params.s_c() > 0.0) {
            return Err(ParamsError::NotSupercritical(params.s_c()));
        }
        Ok(params)
    }

    /// Criticality index `s_c = d/2 - 1/sigma`; `s_c = 1` is energy-critical.
    pub fn s_c(&self) -> f64 {
        self.d / 2.0 - 1.0 / self.sigma
    }

    pub fn p_power(&self) -> f64 {
        2.0 * self.sigma + 1.0
    }
}

/// Converged collocation solution of the profile problem.
#[derive(Debug, Clone)]
pub struct ProfileSolution {
    pub params: ProblemParams,
    pub grid: ChebyshevGrid,
    pub p_real: DVector<f64>,
    pub w_imag: DVector<f64>,
    /// The eigen-parameter, the limit of the rescaling rate `a(tau)`.
    pub a: f64,
    pub residual_norm: f64,
    /// Newton iterations spent on this solve (0 when loaded from file).
    pub newton_iterations: usize,
}

impl ProfileSolution {
    pub fn q0(&self) -> f64 {
        self.p_real[0]
    }

    pub fn q(&self) -> Vec<Complex64> {
        self.p_real
            .iter()
            .zip(self.w_imag.iter())
            .map(|(&p, &w)| Complex64::new(p, w))
            .collect()
    }

    pub fn abs_q(&self) -> Vec<f64> {
        self.p_real
            .iter()
            .zip(self.w_imag.iter())
            .map(|(&p, &w)| p.hypot(w))
            .collect()
    }

    /// Packs `[P; W; a]` for the nonlinear system.
    pub fn pack(&self) -> DVector<f64> {
        let n = self.grid.n_points;
        let mut x = DVector::zeros(2 * n + 1);
        x.rows_mut(0, n).copy_from(&self.p_real);
        x.rows_mut(n, n).copy_from(&self.w_imag);
        x[2 * n] = self.a;
        x
    }
}

/// Pseudo-phase-plane path `(C, D) = (|Q|, Re(Q_xi / Q))` with the phase
/// gradient `psi = Im(Q_xi / Q)`, ordered by increasing `xi`.
#[derive(Debug, Clone)]
pub struct PhasePath {
    pub points: Vec<PhasePoint>,
}

#[derive(Debug, Clone, Copy)]
pub struct PhasePoint {
    pub xi: f64,
    pub c: f64,
    pub d_log: f64,
    pub psi: f64,
}
