//! Language-agnostic numerical kernels shared by the profile solver and the
//! dynamic rescaling simulator. Everything in here is a pure function of its
//! inputs; no kernel keeps shared mutable state.

pub mod banded;
pub mod chebyshev;
pub mod kahan;
pub mod newton;
pub mod ode;
pub mod quadrature;
pub mod spline;

pub use banded::{BandedLu, BandedMatrix};
pub use chebyshev::{build_diff_matrices, build_grid, ChebyshevGrid, DiffMatrices};
pub use kahan::KahanSum;
pub use newton::{newton_solve, NewtonError, NewtonOutcome, NewtonSettings};
pub use ode::{rk45_integrate, OdeError, OdeOptions, Trajectory};
pub use quadrature::{clenshaw_curtis_weights, integrate_panels, integrate_radial};
pub use spline::{cubic_spline_eval, CubicSpline, SplineError};
