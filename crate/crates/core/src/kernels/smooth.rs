//! Continuous smoothing of a kernel by dyadic-cell averages in the second
//! argument, multiplied by a tent profile that vanishes at cell endpoints.

use std::sync::Arc;

use super::Kernel;
use crate::numeric::{integrate, integrate_graded};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct SmoothedKernel<T: Scalar> {
    pub inner: Arc<Kernel<T>>,
    pub level: u32,
    pub horizon: T,
    width: T,
    cells: usize,
}

impl<T: Scalar> SmoothedKernel<T> {
    pub fn new(inner: Arc<Kernel<T>>, level: u32, horizon: T) -> Self {
        let cells = 1usize << level;
        let width = horizon / T::of_usize(cells);
        SmoothedKernel { inner, level, horizon, width, cells }
    }

    /// Tent profile on the unit interval: rises linearly over the first
    /// `1/(level+2)` fraction, flat at one in the middle, falls over the last.
    fn tent(&self, u: T) -> T {
        if u <= T::zero() || u >= T::one() {
            return T::zero();
        }
        let edge = T::one() / T::of_usize(self.level as usize + 2);
        if u < edge {
            u / edge
        } else if u > T::one() - edge {
            (T::one() - u) / edge
        } else {
            T::one()
        }
    }

    /// Mean of `Gamma(t, .)` over cell `idx`, with the integrand cut off
    /// above `t`.
    fn cell_average(&self, t: T, idx: usize) -> T {
        let a = self.width * T::of_usize(idx);
        let b = (a + self.width).min(t);
        if b <= a {
            return T::zero();
        }
        let integral = if let Some((m0, _)) = self.inner.moments_in_s(t, a, b) {
            m0
        } else {
            let f = |s: T| self.inner.eval_unchecked(t, s);
            integrate(f, a, b, T::of(1e-10))
                .unwrap_or_else(|_| integrate_graded(f, a, b, 256, 3))
        };
        integral / self.width
    }

    pub fn eval(&self, t: T, s: T) -> T {
        if s < T::zero() || s >= self.horizon || self.width <= T::zero() {
            return T::zero();
        }
        let mut idx = (s / self.width).to_usize().unwrap_or(0);
        if idx >= self.cells {
            idx = self.cells - 1;
        }
        let u = (s - self.width * T::of_usize(idx)) / self.width;
        let tent = self.tent(u);
        if tent == T::zero() {
            return T::zero();
        }
        tent * self.cell_average(t, idx)
    }
}
