//! Fractional Riccati solver used as an independent cross-check of the
//! product-integration route.
//!
//! For the time-changed fractional kernel, the forward Riccati-Volterra
//! solution composed with the inverse time change solves
//! `D^alpha phi = F(T - xi(x), phi) / h(T - xi(x))` with vanishing memory at
//! zero. The equation is integrated by the Adams-Bashforth-Moulton
//! predictor-corrector with Riemann-Liouville weights, and the Laplace
//! transform follows from the memory integral `I^{1-alpha} phi` plus the
//! drift functional.

use crate::domains::AffineParams;
use crate::error::RiccatiError;
use crate::kernels::TimeChange;
use crate::numeric::gamma_fn;
use crate::scalar::Scalar;

type Inverse<T> = Box<dyn Fn(T) -> T>;

/// Inverse `xi` of `t -> int_0^t h(T - u) du`, together with the total clock
/// `V = int_0^T h(u) du`. Only time changes with a closed-form inverse are
/// supported.
pub(crate) fn xi_inverse<T: Scalar>(
    change: &TimeChange<T>,
    horizon: T,
) -> Result<(Inverse<T>, T), RiccatiError> {
    match change {
        TimeChange::Identity => Ok((Box::new(|y: T| y), horizon)),
        TimeChange::Exponential => {
            // tau(t) = int_0^t e^{T-u} du = e^T - e^{T-t}, so
            // xi(y) = T - ln(e^T - y) and V = e^T - 1
            let et = horizon.exp();
            Ok((Box::new(move |y: T| horizon - (et - y).ln()), et - T::one()))
        }
        TimeChange::Power { .. } => Err(RiccatiError::UnsupportedTimeChange("power")),
        TimeChange::PowerPlus { .. } => Err(RiccatiError::UnsupportedTimeChange("power_plus")),
    }
}

fn affine_rhs<T: Scalar>(params: &AffineParams<T>, f_val: &[T], phi: &[T], out: &mut [T]) {
    let d = params.b0.len();
    for i in 0..d {
        let mut bt = T::zero();
        for j in 0..d {
            bt += params.mat_b.get(j, i) * phi[j];
        }
        out[i] = f_val[i] + bt + T::of(0.5) * params.sigmas[i] * params.sigmas[i] * phi[i] * phi[i];
    }
}

/// Solve `D^alpha phi = F~(T - xi(x), phi)` on `[0, V]` by the Adams
/// predictor-corrector and return the flattened path `(n+1) x d` plus the
/// Laplace value `exp(phi_T + x0^T I^{1-alpha} phi(V))`.
pub(crate) fn solve_and_transform<T: Scalar>(
    alpha: T,
    change: &TimeChange<T>,
    params: &AffineParams<T>,
    x0: &[T],
    f: impl Fn(T, &mut [T]),
    horizon: T,
    grid_steps: usize,
) -> Result<(Vec<T>, T), RiccatiError> {
    if alpha <= T::of(0.5) || alpha > T::one() {
        return Err(RiccatiError::Invalid(format!("alpha must lie in (1/2, 1], got {alpha}")));
    }
    if grid_steps < 2 {
        return Err(RiccatiError::Invalid("need at least two grid steps".into()));
    }
    let d = params.b0.len();
    if x0.len() != d {
        return Err(RiccatiError::Invalid("initial state dimension mismatch".into()));
    }
    let n = grid_steps;
    let (xi, clock) = xi_inverse(change, horizon)?;
    let h = clock / T::of_usize(n);

    // backward times, source values, and time-change density per node
    let mut f_values = vec![T::zero(); (n + 1) * d];
    let mut h_density = vec![T::zero(); n + 1];
    let mut buf = vec![T::zero(); d];
    for j in 0..=n {
        let x = h * T::of_usize(j);
        let s = horizon - xi(x);
        f(s, &mut buf);
        for (c, &v) in buf.iter().enumerate() {
            if v > T::zero() {
                return Err(RiccatiError::PositiveF { index: j, value: v.as_f64() });
            }
            f_values[j * d + c] = v;
        }
        h_density[j] = change.density(s.max(T::of(1e-300)));
    }

    let gamma_a = gamma_fn(alpha);
    let pred_scale = h.powf(alpha) / (alpha * gamma_a);
    let corr_scale = h.powf(alpha) / (gamma_a * alpha * (alpha + T::one()));

    let mut phi = vec![T::zero(); (n + 1) * d];
    let mut rhs = vec![T::zero(); (n + 1) * d];
    let mut scratch = vec![T::zero(); d];
    affine_rhs(params, &f_values[0..d], &phi[0..d], &mut scratch);
    for c in 0..d {
        rhs[c] = scratch[c] / h_density[0];
    }

    let mut pred = vec![T::zero(); d];
    let mut corr = vec![T::zero(); d];
    for step in 0..n {
        let next = step + 1;
        // predictor: rectangle weights (next-j)^a - (next-1-j)^a
        pred.iter_mut().for_each(|v| *v = T::zero());
        for j in 0..=step {
            let w = (T::of_usize(next - j)).powf(alpha) - (T::of_usize(next - 1 - j)).powf(alpha);
            for c in 0..d {
                pred[c] += w * rhs[j * d + c];
            }
        }
        for c in 0..d {
            pred[c] *= pred_scale;
        }

        // corrector: trapezoid-type fractional weights
        corr.iter_mut().for_each(|v| *v = T::zero());
        for j in 0..=step {
            let w = if j == 0 {
                let nn = T::of_usize(step);
                nn.powf(alpha + T::one()) - (nn - alpha) * (T::of_usize(next)).powf(alpha)
            } else {
                let m = T::of_usize(step - j);
                (m + T::of(2.0)).powf(alpha + T::one()) + m.powf(alpha + T::one())
                    - T::of(2.0) * (m + T::one()).powf(alpha + T::one())
            };
            for c in 0..d {
                corr[c] += w * rhs[j * d + c];
            }
        }
        affine_rhs(params, &f_values[next * d..(next + 1) * d], &pred, &mut scratch);
        for c in 0..d {
            phi[next * d + c] = corr_scale * (corr[c] + scratch[c] / h_density[next]);
        }
        affine_rhs(
            params,
            &f_values[next * d..(next + 1) * d],
            &phi[next * d..(next + 1) * d],
            &mut scratch,
        );
        for c in 0..d {
            rhs[next * d + c] = scratch[c] / h_density[next];
        }
        if phi[next * d..(next + 1) * d].iter().any(|v| !v.is_finite()) {
            return Err(RiccatiError::NoConvergence { iters: next, residual: f64::INFINITY });
        }
    }

    // drift functional phi_T = int_0^V phi(s)^T b0 / h(T - xi(s)) ds
    let mut phi_t = T::zero();
    for j in 0..n {
        let mut a = T::zero();
        let mut b = T::zero();
        for c in 0..d {
            a += phi[j * d + c] * params.b0[c] / h_density[j];
            b += phi[(j + 1) * d + c] * params.b0[c] / h_density[j + 1];
        }
        phi_t += T::of(0.5) * h * (a + b);
    }

    // memory term I^{1-alpha} phi(V): product integration of the singular
    // weight (V - s)^{-alpha} against piecewise-linear phi; the identity
    // operator at alpha = 1
    let clock_v = h * T::of_usize(n);
    let mut mem = vec![T::zero(); d];
    if alpha == T::one() {
        mem.copy_from_slice(&phi[n * d..(n + 1) * d]);
    } else {
        let one_minus = T::one() - alpha;
        let two_minus = T::of(2.0) - alpha;
        let gamma_om = gamma_fn(one_minus);
        for j in 0..n {
            let (a, b) = (h * T::of_usize(j), h * T::of_usize(j + 1));
            let m0 = ((clock_v - a).powf(one_minus) - (clock_v - b).powf(one_minus)) / one_minus;
            let m1 = clock_v * m0
                - ((clock_v - a).powf(two_minus) - (clock_v - b).powf(two_minus)) / two_minus;
            let wa = (b * m0 - m1) / h;
            let wb = (m1 - a * m0) / h;
            for c in 0..d {
                mem[c] += (wa * phi[j * d + c] + wb * phi[(j + 1) * d + c]) / gamma_om;
            }
        }
    }

    let mut exponent = phi_t;
    for c in 0..d {
        exponent += x0[c] * mem[c];
    }
    Ok((phi, exponent.exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;

    #[test]
    fn zero_source_gives_unit_transform() {
        let params = AffineParams {
            b0: vec![0.3f64],
            mat_b: Mat::from_rows(&[&[-0.5]]),
            sigmas: vec![0.4],
        };
        let (phi, value) = solve_and_transform(
            0.75,
            &TimeChange::Identity,
            &params,
            &[0.2],
            |_s, out| out[0] = 0.0,
            1.0,
            64,
        )
        .unwrap();
        assert!(phi.iter().all(|&p| p == 0.0));
        assert_eq!(value, 1.0);
    }

    #[test]
    fn unsupported_time_change_is_reported() {
        let params = AffineParams {
            b0: vec![0.3f64],
            mat_b: Mat::from_rows(&[&[-0.5]]),
            sigmas: vec![0.4],
        };
        let err = solve_and_transform(
            0.75,
            &TimeChange::Power { beta: 0.5 },
            &params,
            &[0.2],
            |_s, out| out[0] = -1.0,
            1.0,
            32,
        )
        .unwrap_err();
        assert!(matches!(err, RiccatiError::UnsupportedTimeChange("power")));
    }
}
