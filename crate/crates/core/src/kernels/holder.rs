//! Empirical estimation of the square-integrability modulus
//! `D(t,s) = int_s^t Gamma(t,u)^2 du + int_0^s (Gamma(t,u) - Gamma(s,u))^2 du`
//! and its power-law fit `D ~ eta (t-s)^(2 gamma)`.

use super::{HolderParams, Kernel};
use crate::error::KernelError;
use crate::numeric::{fit_line, integrate_graded};
use crate::scalar::Scalar;

/// Result of a log-log fit of the modulus over a pair grid.
#[derive(Debug, Clone)]
pub struct HolderCheck<T> {
    /// `(eta_hat, gamma_hat)`; `None` when the grid is underdetermined.
    pub fit: Option<HolderParams<T>>,
    /// Pair maximizing `D(t,s) / (t-s)^(2 gamma_hat)` (max `D` when no fit).
    pub worst_pair: (T, T),
    /// The maximized ratio itself.
    pub worst_ratio: T,
    pub pairs_used: usize,
}

/// Quadrature value of the modulus `D(t, s)`.
///
/// Both integrals are computed on meshes graded toward their singular
/// endpoint, so diagonally singular kernels are handled without special
/// casing.
pub fn holder_d<T: Scalar>(kernel: &Kernel<T>, t: T, s: T, resolution: usize) -> T {
    let panels = resolution.max(64);
    let sq = |x: T| x * x;
    let term1 = integrate_graded(|u| sq(kernel.eval_unchecked(t, u)), s, t, panels, 3);
    let term2 = if s > T::zero() {
        integrate_graded(
            |u| sq(kernel.eval_unchecked(t, u) - kernel.eval_unchecked(s, u)),
            T::zero(),
            s,
            panels,
            3,
        )
    } else {
        T::zero()
    };
    term1 + term2
}

/// Least-squares fit of `log D` against `2 gamma log(t-s)` over the supplied
/// pairs. `gamma_hat` is clamped to `(0, 1/2]`.
pub fn holder_check<T: Scalar>(
    kernel: &Kernel<T>,
    horizon: T,
    grid: &[(T, T)],
    quad_resolution: usize,
) -> Result<HolderCheck<T>, KernelError> {
    let mut gaps = Vec::new();
    let mut ds = Vec::new();
    let mut pairs = Vec::new();
    for &(t, s) in grid {
        if !(T::zero() <= s && s < t && t <= horizon) {
            continue;
        }
        let d = holder_d(kernel, t, s, quad_resolution);
        if !d.is_finite() {
            return Err(KernelError::Quadrature(format!(
                "modulus diverges at (t, s) = ({}, {})",
                t.as_f64(),
                s.as_f64()
            )));
        }
        if d > T::zero() {
            gaps.push((t - s).ln());
            ds.push(d.ln());
            pairs.push((t, s, d));
        }
    }
    if pairs.is_empty() {
        return Err(KernelError::Quadrature("no admissible pairs in the grid".into()));
    }

    let fit = fit_line(&gaps, &ds).map(|(intercept, slope)| {
        let gamma = (T::of(0.5) * slope).min(T::of(0.5)).max(T::of(1e-6));
        HolderParams { eta: intercept.exp(), gamma }
    });

    let two_gamma = fit.as_ref().map(|p| T::of(2.0) * p.gamma);
    let mut worst = (pairs[0].0, pairs[0].1);
    let mut worst_ratio = T::neg_infinity();
    for &(t, s, d) in &pairs {
        let ratio = match two_gamma {
            Some(tg) => d / (t - s).powf(tg),
            None => d,
        };
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst = (t, s);
        }
    }
    Ok(HolderCheck { fit, worst_pair: worst, worst_ratio, pairs_used: pairs.len() })
}

/// Default pair grid: geometric gaps crossed with a spread of base points.
pub fn holder_grid<T: Scalar>(horizon: T, gaps: usize, bases: usize) -> Vec<(T, T)> {
    let mut out = Vec::new();
    for i in 0..gaps {
        // gap from horizon/128 up to horizon/2, geometrically
        let frac = T::of(1.0 / 128.0)
            * (T::of(64.0)).powf(T::of_usize(i) / T::of_usize(gaps.max(2) - 1));
        let gap = horizon * frac;
        for j in 0..bases {
            let s = horizon * T::of(0.05)
                + (horizon * T::of(0.85) - gap) * T::of_usize(j) / T::of_usize(bases.max(2) - 1);
            if s >= T::zero() && s + gap <= horizon {
                out.push((s + gap, s));
            }
        }
    }
    out
}
