//! Two-time Volterra kernels `Gamma(t, s)` on the triangle `0 <= s <= t`.
//!
//! All kernels here are nonnegative-valued. Families are closed under time
//! reversal and dyadic smoothing, and expose exact first moments in either
//! argument where a closed form exists so that product-integration rules can
//! absorb diagonal singularities.

mod holder;
mod profiles;
mod smooth;

pub use holder::{holder_check, holder_d, holder_grid, HolderCheck};
pub use profiles::{AffineProfile, CumulativeMeasure, FractionalG, GFunction, TimeChange};
pub use smooth::SmoothedKernel;

use std::sync::Arc;

use crate::error::KernelError;
use crate::numeric::{integrate, integrate_graded};
use crate::scalar::Scalar;

/// Square-integrability constants: `D(t,s) <= eta * (t-s)^(2 gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderParams<T> {
    pub eta: T,
    pub gamma: T,
}

/// Convolution profile composed with a cumulative time change:
/// `Gamma(t,s) = G(H(t) - H(s))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChangedKernel<T> {
    pub g: GFunction<T>,
    pub change: TimeChange<T>,
}

/// `Gamma(t,s) = b(s) c(t) exp(-(R(t) - R(s)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpProductKernel<T> {
    pub b_profile: AffineProfile<T>,
    pub c_profile: AffineProfile<T>,
    pub rate: CumulativeMeasure<T>,
}

/// One atom of a completely monotone mixture: weight `w`, index `alpha`, and
/// cumulative rate `P(t) = scale * measure(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CmAtom<T> {
    pub alpha: T,
    pub weight: T,
    pub scale: T,
    pub measure: CumulativeMeasure<T>,
}

impl<T: Scalar> CmAtom<T> {
    pub fn cumulative(&self, t: T) -> T {
        self.scale * self.measure.eval(t)
    }
}

/// Finite mixture of decaying exponentials of alpha-indexed cumulative
/// measures: `Gamma(t,s) = sum_i w_i exp(-(P_i(t) - P_i(s)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CmKernel<T> {
    pub atoms: Vec<CmAtom<T>>,
}

impl<T: Scalar> CmKernel<T> {
    /// Atoms are sorted by index, weights must be nonnegative with positive
    /// total mass, and `P_j - P_i` must be nondecreasing for `i < j` (checked
    /// numerically on a probe grid).
    pub fn new(mut atoms: Vec<CmAtom<T>>) -> Result<Self, KernelError> {
        if atoms.is_empty() {
            return Err(KernelError::Invalid("mixture needs at least one atom".into()));
        }
        for a in &atoms {
            a.measure.validate()?;
            if a.weight < T::zero() || a.scale < T::zero() {
                return Err(KernelError::Invalid(
                    "atom weights and rate scales must be nonnegative".into(),
                ));
            }
        }
        let total: T = atoms.iter().map(|a| a.weight).sum();
        if !(total > T::zero() && total.is_finite()) {
            return Err(KernelError::Invalid("total mixture mass must be positive and finite".into()));
        }
        atoms.sort_by(|x, y| x.alpha.partial_cmp(&y.alpha).expect("atom index not comparable"));

        // alpha-monotonicity: increments of P must be ordered with alpha
        let probe = 64;
        let top = T::of(4.0);
        for w in atoms.windows(2) {
            let (lo, hi) = (&w[0], &w[1]);
            let mut prev = T::zero();
            for k in 1..=probe {
                let t = top * T::of_usize(k) / T::of_usize(probe);
                let diff = hi.cumulative(t) - lo.cumulative(t);
                if diff < prev - T::of(1e-12) {
                    return Err(KernelError::Invalid(format!(
                        "rate difference P({}) - P({}) decreases near t={}",
                        hi.alpha, lo.alpha, t
                    )));
                }
                prev = diff;
            }
        }
        Ok(CmKernel { atoms })
    }

    pub fn total_mass(&self) -> T {
        self.atoms.iter().map(|a| a.weight).sum()
    }
}

/// Time reversal on `[0, horizon]`: `eval(t,s) = inner(T - s, T - t)`.
#[derive(Debug, Clone)]
pub struct ReversedKernel<T: Scalar> {
    pub inner: Arc<Kernel<T>>,
    pub horizon: T,
}

/// A nonnegative two-time kernel.
#[derive(Debug, Clone)]
pub enum Kernel<T: Scalar> {
    TimeChanged(TimeChangedKernel<T>),
    ExpProduct(ExpProductKernel<T>),
    CompletelyMonotone(CmKernel<T>),
    Smoothed(SmoothedKernel<T>),
    Reversed(ReversedKernel<T>),
}

impl<T: Scalar> Kernel<T> {
    /// The constant kernel `Gamma = c`.
    pub fn constant(c: T) -> Self {
        Kernel::TimeChanged(TimeChangedKernel {
            g: GFunction::constant(c),
            change: TimeChange::Identity,
        })
    }

    /// Fractional convolution kernel `(t-s)^(alpha-1) / Gamma(alpha)`.
    pub fn fractional(alpha: T) -> Result<Self, KernelError> {
        Ok(Kernel::TimeChanged(TimeChangedKernel {
            g: GFunction::Fractional(FractionalG::new(alpha)?),
            change: TimeChange::Identity,
        }))
    }

    /// Time-changed convolution kernel `G(H(t) - H(s))`.
    pub fn time_changed(g: GFunction<T>, change: TimeChange<T>) -> Result<Self, KernelError> {
        change.validate()?;
        if let GFunction::ExpMixture(terms) = &g {
            if terms.iter().any(|&(w, _)| w < T::zero()) {
                return Err(KernelError::Invalid("mixture weights must be nonnegative".into()));
            }
        }
        Ok(Kernel::TimeChanged(TimeChangedKernel { g, change }))
    }

    pub fn exp_product(
        b_profile: AffineProfile<T>,
        c_profile: AffineProfile<T>,
        rate: CumulativeMeasure<T>,
    ) -> Result<Self, KernelError> {
        rate.validate()?;
        if b_profile.intercept < T::zero() || b_profile.slope < T::zero() {
            return Err(KernelError::Invalid("b(s) must be nonnegative".into()));
        }
        if c_profile.intercept <= T::zero() || c_profile.slope < T::zero() {
            return Err(KernelError::Invalid("c(t) must be positive".into()));
        }
        Ok(Kernel::ExpProduct(ExpProductKernel { b_profile, c_profile, rate }))
    }

    pub fn completely_monotone(atoms: Vec<CmAtom<T>>) -> Result<Self, KernelError> {
        Ok(Kernel::CompletelyMonotone(CmKernel::new(atoms)?))
    }

    /// Kernel value for `0 <= s <= t`. No domain checks; may return infinity
    /// on the diagonal of a singular kernel. Use [`eval_kernel`] for the
    /// checked entry point.
    pub fn eval_unchecked(&self, t: T, s: T) -> T {
        match self {
            Kernel::TimeChanged(k) => {
                let x = (k.change.cumulative(t) - k.change.cumulative(s)).max(T::zero());
                k.g.eval(x)
            }
            Kernel::ExpProduct(k) => {
                k.b_profile.eval(s)
                    * k.c_profile.eval(t)
                    * (-(k.rate.eval(t) - k.rate.eval(s))).exp()
            }
            Kernel::CompletelyMonotone(k) => k
                .atoms
                .iter()
                .map(|a| a.weight * (-(a.cumulative(t) - a.cumulative(s))).exp())
                .sum(),
            Kernel::Smoothed(k) => k.eval(t, s),
            Kernel::Reversed(k) => k.inner.eval_unchecked(k.horizon - s, k.horizon - t),
        }
    }

    /// Diagonal value `Gamma(s, s)`; `None` when the kernel diverges there.
    pub fn diagonal(&self, s: T) -> Option<T> {
        match self {
            Kernel::TimeChanged(k) => k.g.value_at_zero(),
            Kernel::ExpProduct(k) => Some(k.b_profile.eval(s) * k.c_profile.eval(s)),
            Kernel::CompletelyMonotone(k) => Some(k.total_mass()),
            Kernel::Smoothed(k) => Some(k.eval(s, s)),
            Kernel::Reversed(k) => k.inner.diagonal(k.horizon - s),
        }
    }

    pub fn is_convolution(&self) -> bool {
        match self {
            Kernel::TimeChanged(k) => k.change.is_identity(),
            Kernel::ExpProduct(k) => {
                k.b_profile.slope == T::zero()
                    && k.c_profile.slope == T::zero()
                    && matches!(k.rate, CumulativeMeasure::Linear { .. })
            }
            Kernel::CompletelyMonotone(k) => k
                .atoms
                .iter()
                .all(|a| matches!(a.measure, CumulativeMeasure::Linear { .. })),
            Kernel::Smoothed(_) => false,
            Kernel::Reversed(k) => k.inner.is_convolution(),
        }
    }

    pub fn singular_on_diagonal(&self) -> bool {
        match self {
            Kernel::TimeChanged(k) => k.g.singular_at_zero(),
            Kernel::Smoothed(_) => false,
            Kernel::Reversed(k) => k.inner.singular_on_diagonal(),
            _ => false,
        }
    }

    /// Declared square-integrability constants, where known in closed form.
    ///
    /// Only the identity-time-change fractional family carries analytic
    /// constants; smoothing doubles the inherited `eta`. Everything else
    /// returns `None` and is estimated empirically via [`holder_check`].
    pub fn holder_params(&self) -> Option<HolderParams<T>> {
        match self {
            Kernel::TimeChanged(k) => {
                if let (GFunction::Fractional(f), true) = (&k.g, k.change.is_identity()) {
                    if f.alpha == T::one() {
                        return None;
                    }
                    let alpha = f.alpha;
                    let gamma = alpha - T::of(0.5);
                    let c_shift = fractional_shift_constant(alpha);
                    let eta = (T::one() / (T::of(2.0) * gamma) + c_shift)
                        / (f.gamma_alpha * f.gamma_alpha);
                    Some(HolderParams { eta, gamma })
                } else {
                    None
                }
            }
            Kernel::Smoothed(k) => k
                .inner
                .holder_params()
                .map(|p| HolderParams { eta: T::of(2.0) * p.eta, gamma: p.gamma }),
            _ => None,
        }
    }

    /// Short human-readable descriptor (for provenance records).
    pub fn describe(&self) -> String {
        match self {
            Kernel::TimeChanged(k) => {
                let g = match &k.g {
                    GFunction::Fractional(f) => format!("fractional(alpha={})", f.alpha),
                    GFunction::ExpMixture(terms) => format!("exp_mixture({} terms)", terms.len()),
                    GFunction::Affine { intercept, slope } => {
                        format!("affine({intercept}+{slope}x)")
                    }
                };
                if k.change.is_identity() {
                    g
                } else {
                    format!("{g} o time_change")
                }
            }
            Kernel::ExpProduct(_) => "exp_product".into(),
            Kernel::CompletelyMonotone(k) => {
                format!("completely_monotone({} atoms)", k.atoms.len())
            }
            Kernel::Smoothed(k) => format!("smoothed(level={}, {})", k.level, k.inner.describe()),
            Kernel::Reversed(k) => format!("reversed(T={}, {})", k.horizon, k.inner.describe()),
        }
    }

    pub fn horizon_hint(&self) -> Option<T> {
        match self {
            Kernel::Smoothed(k) => Some(k.horizon),
            Kernel::Reversed(k) => Some(k.horizon),
            _ => None,
        }
    }

    /// Closed-form `(int_a^b Gamma(t,s) ds, int_a^b s Gamma(t,s) ds)` with
    /// `a <= b <= t`, when available for the family.
    pub fn moments_in_s(&self, t: T, a: T, b: T) -> Option<(T, T)> {
        match self {
            Kernel::TimeChanged(k) if k.change.is_identity() => match &k.g {
                GFunction::Fractional(f) => {
                    let alpha = f.alpha;
                    let p0 = ((t - a).powf(alpha) - (t - b).powf(alpha)) / alpha;
                    let p1 = ((t - a).powf(alpha + T::one()) - (t - b).powf(alpha + T::one()))
                        / (alpha + T::one());
                    Some((p0 / f.gamma_alpha, (t * p0 - p1) / f.gamma_alpha))
                }
                GFunction::ExpMixture(terms) => {
                    let mut m0 = T::zero();
                    let mut m1 = T::zero();
                    for &(w, r) in terms {
                        let (e0, e1) = exp_moments_in_s(r, t, a, b);
                        m0 += w * e0;
                        m1 += w * e1;
                    }
                    Some((m0, m1))
                }
                GFunction::Affine { intercept, slope } => {
                    let len = b - a;
                    let s2 = T::of(0.5) * (b * b - a * a);
                    let s3 = (b * b * b - a * a * a) / T::of(3.0);
                    let m0 = *intercept * len + *slope * (t * len - s2);
                    let m1 = (*intercept + *slope * t) * s2 - *slope * s3;
                    Some((m0, m1))
                }
            },
            Kernel::CompletelyMonotone(k) => {
                let mut m0 = T::zero();
                let mut m1 = T::zero();
                for atom in &k.atoms {
                    let CumulativeMeasure::Linear { c } = atom.measure else {
                        return None;
                    };
                    let (e0, e1) = exp_moments_in_s(atom.scale * c, t, a, b);
                    m0 += atom.weight * e0;
                    m1 += atom.weight * e1;
                }
                Some((m0, m1))
            }
            Kernel::Reversed(k) => {
                let horizon = k.horizon;
                let (m0, m1t) = k.inner.moments_in_t(horizon - t, horizon - b, horizon - a)?;
                Some((m0, horizon * m0 - m1t))
            }
            _ => None,
        }
    }

    /// Closed-form `(int_c^d Gamma(v,s) dv, int_c^d v Gamma(v,s) dv)` with
    /// `s <= c <= d`, when available for the family.
    pub fn moments_in_t(&self, s: T, c: T, d: T) -> Option<(T, T)> {
        match self {
            Kernel::TimeChanged(k) if k.change.is_identity() => match &k.g {
                GFunction::Fractional(f) => {
                    let alpha = f.alpha;
                    let q0 = ((d - s).powf(alpha) - (c - s).powf(alpha)) / alpha;
                    let q1 = ((d - s).powf(alpha + T::one()) - (c - s).powf(alpha + T::one()))
                        / (alpha + T::one());
                    Some((q0 / f.gamma_alpha, (s * q0 + q1) / f.gamma_alpha))
                }
                GFunction::ExpMixture(terms) => {
                    let mut m0 = T::zero();
                    let mut m1 = T::zero();
                    for &(w, r) in terms {
                        let (e0, e1) = exp_moments_in_t(r, s, c, d);
                        m0 += w * e0;
                        m1 += w * e1;
                    }
                    Some((m0, m1))
                }
                GFunction::Affine { intercept, slope } => {
                    let len = d - c;
                    let t2 = T::of(0.5) * (d * d - c * c);
                    let t3 = (d * d * d - c * c * c) / T::of(3.0);
                    let m0 = *intercept * len + *slope * (t2 - s * len);
                    let m1 = (*intercept - *slope * s) * t2 + *slope * t3;
                    Some((m0, m1))
                }
            },
            Kernel::CompletelyMonotone(k) => {
                let mut m0 = T::zero();
                let mut m1 = T::zero();
                for atom in &k.atoms {
                    let CumulativeMeasure::Linear { c: rate } = atom.measure else {
                        return None;
                    };
                    let (e0, e1) = exp_moments_in_t(atom.scale * rate, s, c, d);
                    m0 += atom.weight * e0;
                    m1 += atom.weight * e1;
                }
                Some((m0, m1))
            }
            Kernel::Reversed(k) => {
                let horizon = k.horizon;
                let (m0, m1s) = k.inner.moments_in_s(horizon - s, horizon - d, horizon - c)?;
                Some((m0, horizon * m0 - m1s))
            }
            _ => None,
        }
    }
}

/// `(int_a^b e^{-r(t-s)} ds, int_a^b s e^{-r(t-s)} ds)` for `a <= b <= t`.
fn exp_moments_in_s<T: Scalar>(r: T, t: T, a: T, b: T) -> (T, T) {
    if r == T::zero() {
        return (b - a, T::of(0.5) * (b * b - a * a));
    }
    let ea = (-r * (t - a)).exp();
    let eb = (-r * (t - b)).exp();
    let m0 = (eb - ea) / r;
    let m1 = (b * eb - a * ea) / r - m0 / r;
    (m0, m1)
}

/// `(int_c^d e^{-r(v-s)} dv, int_c^d v e^{-r(v-s)} dv)` for `s <= c <= d`.
fn exp_moments_in_t<T: Scalar>(r: T, s: T, c: T, d: T) -> (T, T) {
    if r == T::zero() {
        return (d - c, T::of(0.5) * (d * d - c * c));
    }
    let ec = (-r * (c - s)).exp();
    let ed = (-r * (d - s)).exp();
    let m0 = (ec - ed) / r;
    let m1 = (c * ec - d * ed) / r + m0 / r;
    (m0, m1)
}

/// `int_0^infty ((1+y)^(alpha-1) - y^(alpha-1))^2 dy`, the shift term of the
/// fractional kernel's square-integrability constant.
fn fractional_shift_constant<T: Scalar>(alpha: T) -> T {
    let am1 = alpha - T::one();
    let body_f = |y: T| {
        let d = (T::one() + y).powf(am1) - y.powf(am1);
        d * d
    };
    let tail_f = |u: T| {
        let y = T::one() / u;
        let d = (T::one() + y).powf(am1) - y.powf(am1);
        d * d / (u * u)
    };
    // body is singular at y = 0; flip so the graded fallback clusters there
    let body = integrate(body_f, T::zero(), T::one(), T::of(1e-11))
        .unwrap_or_else(|_| integrate_graded(|u| body_f(T::one() - u), T::zero(), T::one(), 512, 6));
    // tail via y = 1/u
    let tail = integrate(tail_f, T::zero(), T::one(), T::of(1e-11))
        .unwrap_or_else(|_| integrate_graded(tail_f, T::zero(), T::one(), 512, 3));
    body + tail
}

/// Checked kernel evaluation.
pub fn eval_kernel<T: Scalar>(kernel: &Kernel<T>, t: T, s: T) -> Result<T, KernelError> {
    if s < T::zero() || s > t {
        return Err(KernelError::Domain {
            t: t.as_f64(),
            s: s.as_f64(),
            detail: "need 0 <= s <= t",
        });
    }
    if let Some(h) = kernel.horizon_hint() {
        if t > h * (T::one() + T::of(1e-12)) {
            return Err(KernelError::Domain {
                t: t.as_f64(),
                s: s.as_f64(),
                detail: "t exceeds declared horizon",
            });
        }
    }
    if s == t {
        return kernel
            .diagonal(s)
            .ok_or(KernelError::SingularDiagonal { at: s.as_f64() });
    }
    Ok(kernel.eval_unchecked(t, s))
}

/// Time reversal `Gamma~(t,s) = Gamma(T-s, T-t)` on `[0, T]`.
///
/// Reversing a reversal with the same horizon returns the original kernel, so
/// the operation is an exact involution.
pub fn reverse_kernel<T: Scalar>(kernel: &Kernel<T>, horizon: T) -> Kernel<T> {
    if let Kernel::Reversed(r) = kernel {
        if r.horizon == horizon {
            return (*r.inner).clone();
        }
    }
    Kernel::Reversed(ReversedKernel { inner: Arc::new(kernel.clone()), horizon })
}

/// Sub-mixture with `|alpha_i| <= level`.
pub fn cm_truncate<T: Scalar>(kernel: &CmKernel<T>, level: T) -> Result<CmKernel<T>, KernelError> {
    let atoms: Vec<CmAtom<T>> =
        kernel.atoms.iter().filter(|a| a.alpha.abs() <= level).cloned().collect();
    if atoms.is_empty() || !(atoms.iter().map(|a| a.weight).sum::<T>() > T::zero()) {
        return Err(KernelError::EmptyTruncation { level: level.as_f64() });
    }
    CmKernel::new(atoms)
}

/// Continuous dyadic-cell smoothing with `2^level` cells on `[0, horizon]`.
pub fn smooth_kernel<T: Scalar>(kernel: &Kernel<T>, level: u32, horizon: T) -> Kernel<T> {
    Kernel::Smoothed(SmoothedKernel::new(Arc::new(kernel.clone()), level, horizon))
}

/// `int_0^t (a(t,s) - b(t,s))^2 ds` by graded composite quadrature with
/// `resolution` panels clustered at the (possibly singular) diagonal.
pub fn l2_distance<T: Scalar>(
    a: &Kernel<T>,
    b: &Kernel<T>,
    t: T,
    resolution: usize,
) -> Result<T, KernelError> {
    let f = |s: T| {
        let d = a.eval_unchecked(t, s) - b.eval_unchecked(t, s);
        d * d
    };
    let v = integrate_graded(f, T::zero(), t, resolution.max(8), 3);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(KernelError::Quadrature("squared difference is not integrable".into()))
    }
}

/// `int_a^min(b,t) Gamma(t,s) ds`, exact where the family has closed moments,
/// adaptive quadrature otherwise.
pub fn integral_in_s<T: Scalar>(
    kernel: &Kernel<T>,
    t: T,
    a: T,
    b: T,
    tol: T,
) -> Result<T, KernelError> {
    let b = b.min(t);
    if b <= a {
        return Ok(T::zero());
    }
    if let Some((m0, _)) = kernel.moments_in_s(t, a, b) {
        return Ok(m0);
    }
    integrate(|s| kernel.eval_unchecked(t, s), a, b, tol)
}
