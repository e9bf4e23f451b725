//! Grid certificates for kernels that preserve nonnegativity.
//!
//! A kernel preserves nonnegativity when discrete combinations
//! `sum_k x_k Gamma(t_k, t_k')` that are nonnegative at the grid points stay
//! nonnegative at every later time. This is equivalent to nonnegativity of
//! the recursive family `Gamma_l` over ordered tuples; a single negative
//! `Gamma_l` is an exact falsification certificate, while a clean sweep over
//! sampled tuples is evidence only.

use rayon::prelude::*;

use crate::error::PositivityError;
use crate::kernels::Kernel;
use crate::rng::Stream;
use crate::scalar::Scalar;

/// Default relative tolerance: values in `(-tol, 0)` count as zero so that
/// exactly-degenerate families (the exponential-product kernel) do not flap.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Hard cap for the alternating-sum expansion (`2^(l-2)` terms).
pub const MAX_EXPANSION_ORDER: usize = 12;

/// Strictly increasing times `0 <= s_1 < ... < s_l`, length at least two.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedTuple<T> {
    times: Vec<T>,
}

impl<T: Scalar> OrderedTuple<T> {
    pub fn new(times: Vec<T>) -> Result<Self, PositivityError> {
        if times.len() < 2 {
            return Err(PositivityError::BadTuple);
        }
        Self::grid(times)
    }

    /// Strictly increasing grid of length at least one (for the triangular
    /// systems, which are defined from a single point up).
    pub fn grid(times: Vec<T>) -> Result<Self, PositivityError> {
        if times.is_empty() || times[0] < T::zero() {
            return Err(PositivityError::BadTuple);
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PositivityError::BadTuple);
        }
        Ok(OrderedTuple { times })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn order(&self) -> usize {
        self.times.len()
    }
}

/// Falsification report for [`check_preserves_nonnegativity`].
#[derive(Debug, Clone)]
pub struct PositivityReport<T> {
    pub passed: bool,
    pub max_order_tested: usize,
    pub tuples_tested: usize,
    /// Smallest sampled `Gamma_l`, scaled by the magnitude of the terms that
    /// produced it.
    pub min_value: T,
    /// Present exactly when the check failed.
    pub witness: Option<OrderedTuple<T>>,
    /// Raw `Gamma_l` at the witness tuple.
    pub witness_value: T,
    pub tolerance: T,
}

fn diagonal_at<T: Scalar>(kernel: &Kernel<T>, s: T) -> Result<T, PositivityError> {
    match kernel.diagonal(s) {
        Some(d) if d > T::zero() && d.is_finite() => Ok(d),
        _ => Err(PositivityError::SingularDiagonal { at: s.as_f64() }),
    }
}

/// `Gamma_l` together with the magnitude of the two terms combined at the
/// top level of the recursion (the natural scale for a zero test).
fn gamma_l_scaled<T: Scalar>(
    kernel: &Kernel<T>,
    tuple: &OrderedTuple<T>,
) -> Result<(T, T), PositivityError> {
    let s = tuple.times();
    let n = s.len();
    let mut diag = Vec::with_capacity(n);
    for &si in s {
        diag.push(diagonal_at(kernel, si)?);
    }
    let ratio = |j: usize, i: usize| kernel.eval_unchecked(s[j], s[i]) / diag[i];

    if n == 2 {
        let v = ratio(1, 0);
        return Ok((v, v.abs().max(T::one())));
    }

    // V(i, j) = Gamma_m over the tuple {s_i} + {s_j, ..., s_{n-1}}, i < j.
    // Recursion: V(i, j) = V(i, j+1) - ratio(j, i) * V(j, j+1),
    // base V(i, n-1) = ratio(n-1, i). Memoizing this table makes the call
    // O(n^2) instead of exponential. The companion table A accumulates the
    // same recursion with absolute values, which equals the sum of |term|
    // over the explicit subset expansion: the natural scale for deciding
    // that a tiny value is an exact zero rather than a violation.
    let mut table = vec![T::zero(); n * n];
    let mut abs_table = vec![T::zero(); n * n];
    for i in 0..n - 1 {
        let base = ratio(n - 1, i);
        table[i * n + (n - 1)] = base;
        abs_table[i * n + (n - 1)] = base.abs();
    }
    for j in (1..n - 1).rev() {
        for i in 0..j {
            let r = ratio(j, i);
            table[i * n + j] = table[i * n + j + 1] - r * table[j * n + j + 1];
            abs_table[i * n + j] = abs_table[i * n + j + 1] + r.abs() * abs_table[j * n + j + 1];
        }
    }
    Ok((table[1], abs_table[1]))
}

/// `Gamma_l` over the tuple, evaluated by the memoized recursion
/// `Gamma_{l+1}(s_{l+1},...,s_1) = Gamma_l(s_{l+1},...,s_3,s_1)
///  - Gamma_2(s_2,s_1) Gamma_l(s_{l+1},...,s_2)`.
pub fn gamma_l<T: Scalar>(
    kernel: &Kernel<T>,
    tuple: &OrderedTuple<T>,
) -> Result<T, PositivityError> {
    gamma_l_scaled(kernel, tuple).map(|(v, _)| v)
}

/// `Gamma_l` by the explicit alternating sum over index subsets; exponential
/// in `l` and therefore guarded, but independent of the recursion above.
pub fn gamma_l_nonrecursive<T: Scalar>(
    kernel: &Kernel<T>,
    tuple: &OrderedTuple<T>,
) -> Result<T, PositivityError> {
    let s = tuple.times();
    let n = s.len();
    if n > MAX_EXPANSION_ORDER {
        return Err(PositivityError::OrderTooLarge { l: n, max: MAX_EXPANSION_ORDER });
    }
    let mut diag = Vec::with_capacity(n);
    for &si in s {
        diag.push(diagonal_at(kernel, si)?);
    }
    let ratio = |j: usize, i: usize| kernel.eval_unchecked(s[j], s[i]) / diag[i];

    if n == 2 {
        return Ok(ratio(1, 0));
    }
    // chains through subsets of the interior indices {1, ..., n-2}
    let interior = n - 2;
    let mut total = T::zero();
    for mask in 0u64..(1u64 << interior) {
        let mut product = T::one();
        let mut prev = 0usize;
        let mut sign_flips = 0u32;
        for bit in 0..interior {
            if mask & (1 << bit) != 0 {
                let idx = bit + 1;
                product *= ratio(idx, prev);
                prev = idx;
                sign_flips += 1;
            }
        }
        product *= ratio(n - 1, prev);
        if sign_flips % 2 == 1 {
            total -= product;
        } else {
            total += product;
        }
    }
    Ok(total)
}

/// Coefficients `beta` of the triangular system
/// `sum_{k >= k'} beta_k Gamma(t_k, t_{k'}) = Gamma(t, t_{k'})`.
///
/// The kernel preserves nonnegativity at `(grid, t)` exactly when every
/// `beta_k` is nonnegative; by Gauss elimination the coefficients coincide
/// with suffix values of `Gamma_l`.
pub fn beta_coefficients<T: Scalar>(
    kernel: &Kernel<T>,
    grid: &OrderedTuple<T>,
    t: T,
) -> Result<Vec<T>, PositivityError> {
    let times = grid.times();
    let k_len = times.len();
    if t <= times[k_len - 1] {
        return Err(PositivityError::PreconditionViolated(
            "evaluation time must exceed the last grid time".into(),
        ));
    }
    let mut diag = Vec::with_capacity(k_len);
    for &ti in times {
        diag.push(diagonal_at(kernel, ti)?);
    }
    let max_diag = diag.iter().copied().fold(T::zero(), T::max);
    let mut beta = vec![T::zero(); k_len];
    for kp in (0..k_len).rev() {
        let pivot = diag[kp];
        if pivot < max_diag * T::of(1e-13) {
            return Err(PositivityError::IllConditioned { index: kp });
        }
        let mut rhs = kernel.eval_unchecked(t, times[kp]);
        for k in kp + 1..k_len {
            rhs -= beta[k] * kernel.eval_unchecked(times[k], times[kp]);
        }
        beta[kp] = rhs / pivot;
    }
    Ok(beta)
}

/// Weights `x` with `x_1 = 1` whose partial sums
/// `sum_{k' <= k} x_{k'} Gamma(t_k, t_{k'})` vanish at every grid point.
pub fn extremal_weights<T: Scalar>(
    kernel: &Kernel<T>,
    grid: &OrderedTuple<T>,
) -> Result<Vec<T>, PositivityError> {
    let times = grid.times();
    let mut x = Vec::with_capacity(times.len());
    x.push(T::one());
    for k in 1..times.len() {
        let d = diagonal_at(kernel, times[k])?;
        let mut acc = T::zero();
        for kp in 0..k {
            acc += x[kp] * kernel.eval_unchecked(times[k], times[kp]);
        }
        x.push(-acc / d);
    }
    Ok(x)
}

fn corner_tuples<T: Scalar>(horizon: T, order: usize) -> Vec<OrderedTuple<T>> {
    let mut out = Vec::new();
    // equispaced interior points
    let equi: Vec<T> = (1..=order)
        .map(|i| horizon * T::of_usize(i) / T::of_usize(order + 1))
        .collect();
    out.push(OrderedTuple::new(equi).expect("equispaced tuple"));
    // geometric clustering toward zero
    for ratio in [0.45f64, 0.8] {
        let r = T::of(ratio);
        let pts: Vec<T> =
            (0..order).map(|i| horizon * T::of(0.95) * r.powi((order - 1 - i) as i32)).collect();
        if let Ok(t) = OrderedTuple::new(pts) {
            out.push(t);
        }
    }
    // near-diagonal clusters
    for base in [0.1f64, 0.5, 0.9] {
        let b = horizon * T::of(base);
        let step = horizon * T::of(7.3e-4);
        let pts: Vec<T> = (0..order).map(|i| b + step * T::of_usize(i)).collect();
        if pts.last().copied().unwrap_or(b) < horizon {
            if let Ok(t) = OrderedTuple::new(pts) {
                out.push(t);
            }
        }
    }
    out
}

fn random_tuple<T: Scalar>(stream: &mut Stream, horizon: T, order: usize) -> OrderedTuple<T> {
    loop {
        let mut pts: Vec<T> = (0..order)
            .map(|_| stream.range(horizon * T::of(1e-4), horizon * T::of(0.9999)))
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        if let Ok(t) = OrderedTuple::new(pts) {
            return t;
        }
    }
}

/// Sample `Gamma_l` over random and structured tuples for each order
/// `2..=max_l` and report the most negative scaled value.
///
/// A failure is exact (the certificate tuple has a genuinely negative
/// `Gamma_l`); a pass is sampling evidence, not a proof.
pub fn check_preserves_nonnegativity<T: Scalar>(
    kernel: &Kernel<T>,
    horizon: T,
    max_l: usize,
    n_samples: usize,
    rng_seed: u64,
    tolerance: T,
) -> Result<PositivityReport<T>, PositivityError> {
    if kernel.singular_on_diagonal() {
        return Err(PositivityError::SingularDiagonal { at: 0.0 });
    }
    let max_l = max_l.max(2);
    let root = Stream::new(rng_seed);

    let mut tuples: Vec<OrderedTuple<T>> = Vec::new();
    for order in 2..=max_l {
        tuples.extend(corner_tuples(horizon, order));
        for i in 0..n_samples {
            let mut stream = root.substream((order as u64) << 32 | i as u64);
            tuples.push(random_tuple(&mut stream, horizon, order));
        }
    }

    let evaluated: Result<Vec<(T, T)>, PositivityError> = tuples
        .par_iter()
        .map(|tuple| gamma_l_scaled(kernel, tuple))
        .collect();
    let evaluated = evaluated?;

    let mut min_scaled = T::infinity();
    let mut witness_idx = None;
    for (i, &(value, scale)) in evaluated.iter().enumerate() {
        let scaled = value / scale.max(T::of(1e-300));
        if scaled < min_scaled {
            min_scaled = scaled;
            witness_idx = Some(i);
        }
    }
    if min_scaled == T::infinity() {
        min_scaled = T::zero();
        witness_idx = None;
    }

    let passed = min_scaled >= -tolerance;
    let (witness, witness_value) = match witness_idx {
        Some(i) if !passed => (Some(tuples[i].clone()), evaluated[i].0),
        _ => (None, T::zero()),
    };
    Ok(PositivityReport {
        passed,
        max_order_tested: max_l,
        tuples_tested: tuples.len(),
        min_value: min_scaled,
        witness,
        witness_value,
        tolerance,
    })
}

/// Nonnegativity of `x_0 + sum_{t_k <= t} x_k Gamma(t, t_k)` at the
/// evaluation times, given a nonnegative offset and nonnegative partial sums
/// at the grid points.
///
/// Requires the kernel to be nonincreasing in its first argument (asserted on
/// a sample of triples) and the partial-sum hypothesis to hold; violations of
/// either are reported as errors rather than `false`.
pub fn check_with_offset<T: Scalar>(
    kernel: &Kernel<T>,
    x0: T,
    weights: &[T],
    grid: &OrderedTuple<T>,
    t_eval: &[T],
    tolerance: T,
) -> Result<bool, PositivityError> {
    if x0 < T::zero() {
        return Err(PositivityError::PreconditionViolated("offset x0 must be nonnegative".into()));
    }
    let times = grid.times();
    if weights.len() != times.len() {
        return Err(PositivityError::PreconditionViolated(
            "one weight per grid time required".into(),
        ));
    }
    let top = t_eval.iter().copied().fold(times[times.len() - 1], T::max);

    // sampled monotonicity of t -> Gamma(t, s)
    let probes = 24usize;
    for i in 0..probes {
        let s = top * T::of_usize(i) / T::of_usize(probes + 1);
        let mut prev = T::infinity();
        for j in 1..=probes {
            let t = s + (top - s) * T::of_usize(j) / T::of_usize(probes);
            let v = kernel.eval_unchecked(t, s);
            if v > prev * (T::one() + T::of(1e-12)) + tolerance {
                return Err(PositivityError::PreconditionViolated(format!(
                    "kernel increases in t at (t, s) = ({}, {})",
                    t.as_f64(),
                    s.as_f64()
                )));
            }
            prev = v;
        }
    }

    // partial sums at the grid points
    let mut scale = x0.abs();
    for k in 0..times.len() {
        let mut acc = x0;
        for kp in 0..=k {
            let term = weights[kp] * kernel.eval_unchecked(times[k], times[kp]);
            acc += term;
            scale = scale.max(term.abs());
        }
        if acc < -tolerance * scale.max(T::one()) {
            return Err(PositivityError::PreconditionViolated(format!(
                "partial sum {} at grid time {} is negative",
                acc.as_f64(),
                times[k].as_f64()
            )));
        }
    }

    for &t in t_eval {
        let mut acc = x0;
        for (k, &tk) in times.iter().enumerate() {
            if tk <= t {
                acc += weights[k] * kernel.eval_unchecked(t, tk);
            }
        }
        if acc < -tolerance * scale.max(T::one()) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{
        reverse_kernel, AffineProfile, CmAtom, CumulativeMeasure, GFunction, TimeChange,
    };

    fn exp_product(lambda: f64) -> Kernel<f64> {
        Kernel::exp_product(
            AffineProfile::constant(1.0),
            AffineProfile::constant(1.0),
            CumulativeMeasure::Linear { c: lambda },
        )
        .unwrap()
    }

    fn affine_drift() -> Kernel<f64> {
        // Gamma(t,s) = 1 + (t - s): increases in t, fails preservation at l=3
        Kernel::time_changed(
            GFunction::Affine { intercept: 1.0, slope: 1.0 },
            TimeChange::Identity,
        )
        .unwrap()
    }

    fn cm_mixture() -> Kernel<f64> {
        Kernel::completely_monotone(vec![
            CmAtom { alpha: 0.0, weight: 0.4, scale: 0.5, measure: CumulativeMeasure::Linear { c: 1.0 } },
            CmAtom { alpha: 1.0, weight: 0.6, scale: 2.0, measure: CumulativeMeasure::Linear { c: 1.0 } },
        ])
        .unwrap()
    }

    fn tuple(v: &[f64]) -> OrderedTuple<f64> {
        OrderedTuple::new(v.to_vec()).unwrap()
    }

    #[test]
    fn exponential_product_collapses_to_zero_at_order_three() {
        let k = exp_product(1.3);
        let v = gamma_l(&k, &tuple(&[0.2, 0.55, 1.4])).unwrap();
        assert!(v.abs() < 1e-14, "got {v}");
    }

    #[test]
    fn order_two_is_the_normalized_kernel() {
        let k = cm_mixture();
        let s1 = 0.4;
        let eps = 1e-3;
        let expect = k.eval_unchecked(s1 + eps, s1) / k.diagonal(s1).unwrap();
        let got = gamma_l(&k, &tuple(&[s1, s1 + eps])).unwrap();
        assert!((got - expect).abs() < 1e-15);
    }

    #[test]
    fn affine_kernel_order_three_hand_value() {
        // (1 + s3 - s1) - (1 + s2 - s1)(1 + s3 - s2) = -(s2 - s1)(s3 - s2)
        let k = affine_drift();
        let v = gamma_l(&k, &tuple(&[0.0, 0.5, 1.0])).unwrap();
        assert!((v + 0.25).abs() < 1e-14, "got {v}");
    }

    #[test]
    fn expansion_reduces_to_single_terms_at_low_order() {
        let k = cm_mixture();
        let t2 = tuple(&[0.3, 0.9]);
        let a = gamma_l(&k, &t2).unwrap();
        let b = gamma_l_nonrecursive(&k, &t2).unwrap();
        assert_eq!(a, b);

        // l = 3: Gamma_2(s3,s1) - Gamma_2(s3,s2) Gamma_2(s2,s1)
        let t3 = tuple(&[0.2, 0.5, 1.1]);
        let d = |s: f64| k.diagonal(s).unwrap();
        let g2 = |t: f64, s: f64| k.eval_unchecked(t, s) / d(s);
        let expect = g2(1.1, 0.2) - g2(1.1, 0.5) * g2(0.5, 0.2);
        let got = gamma_l_nonrecursive(&k, &t3).unwrap();
        assert!((got - expect).abs() < 1e-15);
    }

    #[test]
    fn recursion_matches_expansion_on_random_tuples() {
        let kernels = [exp_product(0.8), affine_drift(), cm_mixture()];
        let root = Stream::new(1234);
        for (ki, k) in kernels.iter().enumerate() {
            for i in 0..200u64 {
                let mut s = root.substream((ki as u64) << 32 | i);
                let order = 2 + (s.next_u64() % 5) as usize;
                let t = random_tuple(&mut s, 2.0, order);
                let a = gamma_l(k, &t).unwrap();
                let b = gamma_l_nonrecursive(k, &t).unwrap();
                assert!((a - b).abs() < 1e-10, "kernel {ki}, tuple {:?}: {a} vs {b}", t.times());
            }
        }
    }

    #[test]
    fn expansion_guard_rejects_large_orders() {
        let k = cm_mixture();
        let times: Vec<f64> = (0..13).map(|i| 0.1 + 0.1 * i as f64).collect();
        let err = gamma_l_nonrecursive(&k, &tuple(&times)).unwrap_err();
        assert!(matches!(err, PositivityError::OrderTooLarge { .. }));
    }

    #[test]
    fn beta_single_point_is_normalized_kernel() {
        let k = cm_mixture();
        let grid = OrderedTuple::grid(vec![0.4]).unwrap();
        let beta = beta_coefficients(&k, &grid, 1.0).unwrap();
        assert_eq!(beta.len(), 1);
        let expect = k.eval_unchecked(1.0, 0.4) / k.diagonal(0.4).unwrap();
        assert!((beta[0] - expect).abs() < 1e-14);
    }

    #[test]
    fn beta_hand_elimination_for_affine_kernel() {
        let k = affine_drift();
        let grid = tuple(&[0.0, 0.5]);
        let beta = beta_coefficients(&k, &grid, 1.0).unwrap();
        assert!((beta[1] - 1.5).abs() < 1e-13, "beta2 = {}", beta[1]);
        assert!((beta[0] + 0.25).abs() < 1e-13, "beta1 = {}", beta[0]);
        assert!(beta[0] < 0.0); // failure certificate
    }

    #[test]
    fn beta_suffix_identity_matches_gamma_l() {
        let k = cm_mixture();
        let root = Stream::new(77);
        for trial in 0..50u64 {
            let mut s = root.substream(trial);
            let klen = 2 + (s.next_u64() % 5) as usize;
            let grid = random_tuple(&mut s, 1.0, klen);
            let t = 1.0 + s.uniform::<f64>();
            let beta = beta_coefficients(&k, &grid, t).unwrap();
            for i in 1..=klen {
                // beta_{K+1-i} = Gamma_{i+1}(t, t_K, ..., t_{K+1-i})
                let mut times: Vec<f64> = grid.times()[klen - i..].to_vec();
                times.push(t);
                let suffix = OrderedTuple::new(times).unwrap();
                let g = gamma_l(&k, &suffix).unwrap();
                assert!(
                    (beta[klen - i] - g).abs() < 1e-10,
                    "trial {trial}, i={i}: {} vs {g}",
                    beta[klen - i]
                );
            }
        }
    }

    #[test]
    fn extremal_weights_constant_kernel_telescopes() {
        let k = Kernel::constant(1.0);
        let grid = tuple(&[0.1, 0.4, 0.7, 0.9]);
        let x = extremal_weights(&k, &grid).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15);
        assert!((x[1] + 1.0).abs() < 1e-15);
        assert!(x[2].abs() < 1e-15 && x[3].abs() < 1e-15);
    }

    #[test]
    fn extremal_weights_exponential_kernel_hand_values() {
        let lambda = 0.7;
        let k = exp_product(lambda);
        let grid = tuple(&[0.2, 0.6, 1.1]);
        let x = extremal_weights(&k, &grid).unwrap();
        assert!((x[1] + (-lambda * 0.4f64).exp()).abs() < 1e-14, "x2 = {}", x[1]);
        assert!(x[2].abs() < 1e-14, "x3 = {}", x[2]);
        // partial sums vanish
        for k_idx in 1..3 {
            let mut acc = 0.0;
            for kp in 0..=k_idx {
                acc += x[kp] * k.eval_unchecked(grid.times()[k_idx], grid.times()[kp]);
            }
            assert!(acc.abs() < 1e-12);
        }
    }

    #[test]
    fn extremal_weights_match_gamma_l_identity() {
        let k = cm_mixture();
        let root = Stream::new(31);
        for trial in 0..50u64 {
            let mut s = root.substream(trial);
            let klen = 2 + (s.next_u64() % 5) as usize;
            let grid = random_tuple(&mut s, 1.5, klen);
            let x = extremal_weights(&k, &grid).unwrap();
            let d = |t: f64| k.diagonal(t).unwrap();
            for kk in 1..klen {
                let sub = OrderedTuple::new(grid.times()[..=kk].to_vec()).unwrap();
                let g = gamma_l(&k, &sub).unwrap();
                let expect = -d(grid.times()[0]) / d(grid.times()[kk]) * g;
                assert!(
                    (x[kk] - expect).abs() < 1e-10,
                    "trial {trial}, k={kk}: {} vs {expect}",
                    x[kk]
                );
            }
        }
    }

    #[test]
    fn cm_mixture_passes_the_check() {
        let k = cm_mixture();
        let report = check_preserves_nonnegativity(&k, 1.0, 5, 120, 9, 1e-10).unwrap();
        assert!(report.passed, "min value {}", report.min_value);
        assert!(report.witness.is_none());
    }

    #[test]
    fn affine_kernel_fails_with_length_three_witness() {
        let k = affine_drift();
        let report = check_preserves_nonnegativity(&k, 1.0, 3, 100, 42, 1e-10).unwrap();
        assert!(!report.passed);
        let w = report.witness.expect("witness");
        assert_eq!(w.order(), 3);
        let s = w.times();
        let predicted = -(s[1] - s[0]) * (s[2] - s[1]);
        assert!(
            (report.witness_value - predicted).abs() < 1e-10,
            "witness value {} vs formula {predicted}",
            report.witness_value
        );
    }

    #[test]
    fn composed_convolution_mixture_passes() {
        // G(x) = e^{-x} + e^{-2x} composed with rho of density 1 + u
        let k = Kernel::completely_monotone(vec![
            CmAtom { alpha: 1.0, weight: 1.0, scale: 1.0, measure: CumulativeMeasure::AffineDensity { a: 1.0, b: 1.0 } },
            CmAtom { alpha: 2.0, weight: 1.0, scale: 2.0, measure: CumulativeMeasure::AffineDensity { a: 1.0, b: 1.0 } },
        ])
        .unwrap();
        let report = check_preserves_nonnegativity(&k, 1.0, 5, 120, 5, 1e-10).unwrap();
        assert!(report.passed, "min value {}", report.min_value);
    }

    #[test]
    fn scale_invariance_of_gamma_l() {
        let base = cm_mixture();
        let scaled = Kernel::completely_monotone(vec![
            CmAtom { alpha: 0.0, weight: 1.2, scale: 0.5, measure: CumulativeMeasure::Linear { c: 1.0 } },
            CmAtom { alpha: 1.0, weight: 1.8, scale: 2.0, measure: CumulativeMeasure::Linear { c: 1.0 } },
        ])
        .unwrap();
        let root = Stream::new(8);
        for trial in 0..40u64 {
            let mut s = root.substream(trial);
            let order = 2 + (s.next_u64() % 4) as usize;
            let t = random_tuple(&mut s, 1.0, order);
            let a = gamma_l(&base, &t).unwrap();
            let b = gamma_l(&scaled, &t).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn constant_diagonal_reversal_identity() {
        // Gamma(s,s) = 1 is constant, so the reversed kernel's Gamma_l equals
        // the original's over the reflected tuple.
        let k = Kernel::exp_product(
            AffineProfile::constant(1.0),
            AffineProfile::constant(1.0),
            CumulativeMeasure::AffineDensity { a: 1.0, b: 0.5 },
        )
        .unwrap();
        let horizon = 2.0;
        let rev = reverse_kernel(&k, horizon);
        let root = Stream::new(19);
        for trial in 0..40u64 {
            let mut s = root.substream(trial);
            let order = 2 + (s.next_u64() % 4) as usize;
            let t = random_tuple(&mut s, horizon, order);
            let mut reflected: Vec<f64> = t.times().iter().map(|&x| horizon - x).collect();
            reflected.reverse();
            let rt = OrderedTuple::new(reflected).unwrap();
            let a = gamma_l(&rev, &t).unwrap();
            let b = gamma_l(&k, &rt).unwrap();
            assert!((a - b).abs() < 1e-10, "trial {trial}: {a} vs {b}");
        }
    }

    #[test]
    fn offset_check_trivial_and_constructed_cases() {
        let k = exp_product(1.0);
        let grid = tuple(&[0.3, 0.7]);
        // all weights zero
        assert!(check_with_offset(&k, 1.0, &[0.0, 0.0], &grid, &[0.5, 0.9, 1.5], 1e-10).unwrap());

        // x1 = -1 / Gamma(t1, t1) hits zero at t1 and stays nonnegative after
        let single = tuple(&[0.3, 2.0]);
        let d = k.diagonal(0.3).unwrap();
        let evals: Vec<f64> = (0..40).map(|i| 0.3 + 0.05 * i as f64).collect();
        assert!(check_with_offset(&k, 1.0, &[-1.0 / d, 0.0], &single, &evals, 1e-10).unwrap());
    }

    #[test]
    fn offset_check_rejects_increasing_kernel() {
        let k = affine_drift();
        let grid = tuple(&[0.0, 0.5]);
        let err = check_with_offset(&k, 0.0, &[1.0, -1.2], &grid, &[0.8, 1.0], 1e-10);
        assert!(matches!(err, Err(PositivityError::PreconditionViolated(_))));
    }

    #[test]
    fn offset_check_negative_x0_is_a_precondition_violation() {
        let k = exp_product(1.0);
        let grid = tuple(&[0.3, 0.7]);
        let err = check_with_offset(&k, -0.1, &[0.0, 0.0], &grid, &[1.0], 1e-10);
        assert!(matches!(err, Err(PositivityError::PreconditionViolated(_))));
    }
}
