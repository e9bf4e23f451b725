//! Closed-form building blocks for kernel families: convolution profiles,
//! cumulative time changes, and cumulative measures.

use crate::error::KernelError;
use crate::numeric::gamma_fn;
use crate::scalar::Scalar;

/// Fractional convolution profile `G(x) = x^(alpha-1) / Gamma(alpha)` with
/// `alpha` in (1/2, 1]; identically one when `alpha = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalG<T> {
    pub alpha: T,
    /// Cached `Gamma(alpha)`.
    pub gamma_alpha: T,
}

impl<T: Scalar> FractionalG<T> {
    pub fn new(alpha: T) -> Result<Self, KernelError> {
        if alpha <= T::of(0.5) || alpha > T::one() {
            return Err(KernelError::Invalid(format!(
                "fractional exponent alpha must lie in (1/2, 1], got {alpha}"
            )));
        }
        Ok(FractionalG { alpha, gamma_alpha: gamma_fn(alpha) })
    }

    /// `G(x)` for `x > 0`; returns infinity at `x = 0` when `alpha < 1`.
    pub fn eval(&self, x: T) -> T {
        if self.alpha == T::one() {
            return T::one();
        }
        if x <= T::zero() {
            return T::infinity();
        }
        x.powf(self.alpha - T::one()) / self.gamma_alpha
    }
}

/// Convolution profile `G` of a time-changed kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum GFunction<T> {
    Fractional(FractionalG<T>),
    /// `sum_i w_i exp(-r_i x)` with nonnegative weights.
    ExpMixture(Vec<(T, T)>),
    /// `a + b x`; finite on the diagonal, used for flat and drifting kernels.
    Affine { intercept: T, slope: T },
}

impl<T: Scalar> GFunction<T> {
    pub fn constant(c: T) -> Self {
        GFunction::Affine { intercept: c, slope: T::zero() }
    }

    pub fn eval(&self, x: T) -> T {
        match self {
            GFunction::Fractional(f) => f.eval(x),
            GFunction::ExpMixture(terms) => {
                terms.iter().map(|&(w, r)| w * (-r * x).exp()).sum()
            }
            GFunction::Affine { intercept, slope } => *intercept + *slope * x,
        }
    }

    /// `G(0+)`; `None` when the profile diverges at the origin.
    pub fn value_at_zero(&self) -> Option<T> {
        match self {
            GFunction::Fractional(f) => {
                (f.alpha == T::one()).then_some(T::one())
            }
            GFunction::ExpMixture(terms) => Some(terms.iter().map(|&(w, _)| w).sum()),
            GFunction::Affine { intercept, .. } => Some(*intercept),
        }
    }

    pub fn singular_at_zero(&self) -> bool {
        matches!(self, GFunction::Fractional(f) if f.alpha < T::one())
    }
}

/// Cumulative time change `H(t) = int_0^t h(u) du` with a strictly positive
/// density `h`, supplied in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeChange<T> {
    /// `h = 1`.
    Identity,
    /// `h(u) = e^u`, `H(t) = e^t - 1`.
    Exponential,
    /// `h(u) = u^(beta-1)` with `beta` in (0, 1]; `H(t) = t^beta / beta`.
    Power { beta: T },
    /// `h(u) = u^beta + c` with `beta >= 0`, `c > 0`.
    PowerPlus { beta: T, c: T },
}

impl<T: Scalar> TimeChange<T> {
    pub fn is_identity(&self) -> bool {
        matches!(self, TimeChange::Identity)
    }

    pub fn cumulative(&self, t: T) -> T {
        match *self {
            TimeChange::Identity => t,
            TimeChange::Exponential => t.exp() - T::one(),
            TimeChange::Power { beta } => t.powf(beta) / beta,
            TimeChange::PowerPlus { beta, c } => {
                t.powf(beta + T::one()) / (beta + T::one()) + c * t
            }
        }
    }

    pub fn density(&self, u: T) -> T {
        match *self {
            TimeChange::Identity => T::one(),
            TimeChange::Exponential => u.exp(),
            TimeChange::Power { beta } => u.powf(beta - T::one()),
            TimeChange::PowerPlus { beta, c } => u.powf(beta) + c,
        }
    }

    /// Infimum of `h` over `(0, horizon]`.
    pub fn density_lower_bound(&self, horizon: T) -> T {
        match *self {
            TimeChange::Identity => T::one(),
            TimeChange::Exponential => T::one(),
            TimeChange::Power { beta } => {
                if beta == T::one() {
                    T::one()
                } else {
                    horizon.powf(beta - T::one())
                }
            }
            TimeChange::PowerPlus { c, .. } => c,
        }
    }

    /// Hoelder exponent of `H` on compact intervals.
    pub fn holder_beta(&self) -> T {
        match *self {
            TimeChange::Power { beta } => beta,
            _ => T::one(),
        }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        match *self {
            TimeChange::Power { beta } => {
                if beta <= T::zero() || beta > T::one() {
                    return Err(KernelError::Invalid(format!(
                        "power time change needs beta in (0, 1], got {beta}"
                    )));
                }
            }
            TimeChange::PowerPlus { beta, c }
                if (beta < T::zero() || c <= T::zero()) => {
                    return Err(KernelError::Invalid(format!(
                        "power-plus time change needs beta >= 0 and c > 0, got beta={beta}, c={c}"
                    )));
                }
            _ => {}
        }
        Ok(())
    }
}

/// Cumulative of a nonnegative Borel measure on the half-line,
/// `R(t) = rho([0, t])`, given by a closed-form tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CumulativeMeasure<T> {
    /// `c t`.
    Linear { c: T },
    /// Density `a + b u`, i.e. `a t + b t^2 / 2`.
    AffineDensity { a: T, b: T },
    /// `t^beta`, `beta > 0`.
    Power { beta: T },
    /// `e^t - 1`.
    Exp,
}

impl<T: Scalar> CumulativeMeasure<T> {
    pub fn eval(&self, t: T) -> T {
        match *self {
            CumulativeMeasure::Linear { c } => c * t,
            CumulativeMeasure::AffineDensity { a, b } => a * t + T::of(0.5) * b * t * t,
            CumulativeMeasure::Power { beta } => t.powf(beta),
            CumulativeMeasure::Exp => t.exp() - T::one(),
        }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let ok = match *self {
            CumulativeMeasure::Linear { c } => c >= T::zero(),
            CumulativeMeasure::AffineDensity { a, b } => a >= T::zero() && b >= T::zero(),
            CumulativeMeasure::Power { beta } => beta > T::zero(),
            CumulativeMeasure::Exp => true,
        };
        if ok {
            Ok(())
        } else {
            Err(KernelError::Invalid("cumulative measure must be nondecreasing from 0".into()))
        }
    }
}

/// Affine scalar profile `a + b t` for the multiplicative kernel factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineProfile<T> {
    pub intercept: T,
    pub slope: T,
}

impl<T: Scalar> AffineProfile<T> {
    pub fn constant(c: T) -> Self {
        AffineProfile { intercept: c, slope: T::zero() }
    }

    pub fn eval(&self, t: T) -> T {
        self.intercept + self.slope * t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractional_is_one_when_alpha_is_one() {
        let g = FractionalG::new(1.0f64).unwrap();
        assert_eq!(g.eval(0.0), 1.0);
        assert_eq!(g.eval(2.3), 1.0);
    }

    #[test]
    fn fractional_rejects_bad_alpha() {
        assert!(FractionalG::new(0.5f64).is_err());
        assert!(FractionalG::new(1.01f64).is_err());
    }

    #[test]
    fn exponential_time_change_cumulative() {
        let tc = TimeChange::<f64>::Exponential;
        assert!((tc.cumulative(1.0) - (1.0f64.exp() - 1.0)).abs() < 1e-15);
        assert_eq!(tc.cumulative(0.0), 0.0);
    }

    #[test]
    fn power_time_change_density_diverges_at_origin_but_h_is_holder() {
        let tc = TimeChange::Power { beta: 0.5f64 };
        assert!(tc.density(1e-12) > 1e5);
        assert_eq!(tc.holder_beta(), 0.5);
        assert!((tc.cumulative(4.0) - 4.0).abs() < 1e-15); // 4^0.5 / 0.5
    }
}
