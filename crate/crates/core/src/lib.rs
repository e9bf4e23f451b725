//! Stochastic Volterra equations with two-time kernels `Gamma(t, s)`.
//!
//! The crate provides, over a generic scalar type (`f32` or `f64`):
//!
//! * kernel families (time-changed convolution, exponential-product,
//!   completely monotone mixtures) with smoothing, time reversal, and
//!   empirical regularity estimation;
//! * exact grid certificates for kernels that preserve nonnegativity;
//! * domain-preserving path simulation schemes for the associated stochastic
//!   Volterra equations in closed convex state spaces;
//! * Riccati-Volterra and linear Volterra solvers by product integration, and
//!   the exponential-affine Laplace transform they induce;
//! * a Monte Carlo validation harness comparing simulated Laplace transforms
//!   against the solver values.
//!
//! ```
//! use volterra::domains::{AffineParams, ConvexDomain, CoefficientModel};
//! use volterra::kernels::Kernel;
//! use volterra::linalg::Mat;
//! use volterra::riccati::{laplace_transform, RiccatiConfig};
//! use volterra::scheme::{simulate_hat, SchemeConfig};
//!
//! // a square-root model pulled toward 0.6 at speed 0.5
//! let params = AffineParams {
//!     b0: vec![0.3],
//!     mat_b: Mat::from_rows(&[&[-0.5]]),
//!     sigmas: vec![0.4],
//! };
//! let model = CoefficientModel::affine_square_root(
//!     params.b0.clone(), params.mat_b.clone(), params.sigmas.clone(),
//! ).unwrap();
//!
//! // one nonnegative path under the flat kernel
//! let kernel = Kernel::constant(1.0f64);
//! let domain = ConvexDomain::orthant(1);
//! let config = SchemeConfig::new(100, 1.0).seed(7);
//! let path = simulate_hat(&kernel, &model, &domain, &[0.2], &config, 0).unwrap();
//! assert!(path.values.iter().all(|&v| v >= 0.0));
//!
//! // E[exp(-int_0^1 X_s ds)] from the Riccati side
//! let rc = RiccatiConfig::uniform(400, 1.0);
//! let sol = laplace_transform(&kernel, &params, &[0.2], |_s, out| out[0] = -1.0, 1.0, &rc)
//!     .unwrap();
//! let value = sol.laplace_value.unwrap();
//! assert!(value > 0.0 && value < 1.0);
//! ```

pub mod config;
pub mod domains;
pub mod error;
pub mod fractional;
pub mod harness;
pub mod kernels;
pub mod linalg;
pub mod numeric;
pub mod positivity;
pub mod riccati;
pub mod rng;
pub mod scalar;
pub mod scheme;

pub use scalar::Scalar;

/// Concrete double-precision aliases for the common entry points.
pub type Kernel64 = kernels::Kernel<f64>;
pub type Domain64 = domains::ConvexDomain<f64>;
pub type Model64 = domains::CoefficientModel<f64>;
pub type SchemeConfig64 = scheme::SchemeConfig<f64>;
pub type RiccatiConfig64 = riccati::RiccatiConfig<f64>;

/// Single-precision kernel alias; the numerical core is width-agnostic.
pub type Kernel32 = kernels::Kernel<f32>;
