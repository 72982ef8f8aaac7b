//! Numerical laboratory for stable self-similar blow-up in the radial
//! L2-supercritical nonlinear Schrodinger equation
//! `i u_t + \Delta u + |u|^{2\sigma} u = 0`.
//!
//! The crate has four layers:
//!
//! * [`numerics`] - shared kernels: Chebyshev collocation grids and
//!   differentiation matrices, Clenshaw-Curtis quadrature, a damped Newton
//!   driver, an adaptive Dormand-Prince integrator, natural cubic splines,
//!   banded complex LU, compensated summation.
//! * [`profile`] - the complex profile boundary-value problem
//!   `\Delta Q - Q + i a (Q/\sigma + \xi Q_\xi) + |Q|^{2\sigma} Q = 0`
//!   solved by collocation plus Newton, with parameter continuation in the
//!   dimension and the nonlinearity, and the full diagnostic toolbox
//!   (pseudo-phase plane, Hamiltonian truncation study, far-field
//!   coefficient check, integral identities, Volterra consistency oracle,
//!   profile rescaling).
//! * [`simulator`] - dynamic rescaling evolution of the rescaled equation
//!   on a uniform grid: sixth-order differences, Crank-Nicolson /
//!   Adams-Bashforth stepping with a predictor-corrector pass, artificial
//!   far-field boundary conditions, and on-the-fly reconstruction of the
//!   scaling factor `L`, physical time, and the rescaling rate `a`.
//! * [`analysis`] - post-processing of simulation traces: blow-up time
//!   reconstruction, rate fits against `L = (2a(T-t))^{1/2}`, relative
//!   error series, profile distances, and report emission.

pub mod analysis;
pub mod numerics;
pub mod profile;
pub mod simulator;

pub use numerics::chebyshev::{build_diff_matrices, build_grid, ChebyshevGrid, DiffMatrices};
pub use numerics::newton::{newton_solve, NewtonError, NewtonOutcome, NewtonSettings};
pub use profile::{ProblemParams, ProfileSolution};
pub use simulator::{RescaledState, SimConfig, SimulationTrace};
