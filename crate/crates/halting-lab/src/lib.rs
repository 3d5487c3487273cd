//! Average-case gradient-norm rates and halting times of first-order methods
//! on random least-squares problems.
//!
//! The numerical core (spectral law, residual polynomials, closed-form and
//! quadrature rates, adversarial bounds, optimizers) is generic over the
//! scalar type through [`Real`], implemented for `f32` and `f64`. The
//! experiment harness runs in `f64`; the aliases below name the `f64`
//! instantiations.
//!
//! Modules:
//! - [`generators`]: data matrices, vectors and problem instances.
//! - [`spectrum`]: Marčenko–Pastur law, empirical spectra, power iteration.
//! - [`polynomials`]: residual and iteration polynomials of each method.
//! - [`average_case`]: limiting `E‖∇f(x_k)‖²` curves and predicted halting times.
//! - [`bounds`]: adversarial and worst-case guarantees.
//! - [`optimizers`]: gradient descent, Nesterov, Polyak and mini-batch SGD.
//! - [`harness`]: reproducible Monte Carlo experiments with CSV output.

pub mod average_case;
pub mod bounds;
pub mod error;
pub mod generators;
pub mod harness;
pub mod linalg;
pub mod optimizers;
pub mod polynomials;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod spectrum;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` problem instance.
pub type Problem = generators::ProblemInstance<f64>;
/// `f64` dense matrix.
pub type Mat = linalg::Matrix<f64>;
/// `f64` method specification.
pub type Method = polynomials::MethodSpec<f64>;
/// `f64` Marčenko–Pastur law.
pub type MpLaw = spectrum::SpectralModel<f64>;
/// `f64` rate parameters.
pub type Rates = average_case::RateParams<f64>;
/// `f64` predicted curve.
pub type Curve = average_case::RateCurve<f64>;
/// `f64` optimizer trajectory.
pub type Run = optimizers::Trajectory<f64>;
