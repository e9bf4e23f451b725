//! Closed convex state spaces and the boundary conditions that make them
//! invariant for the auxiliary diffusions of the simulation scheme.

use std::sync::Arc;

use crate::error::DomainError;
use crate::linalg::{min_eigenvalue, norm2, psd_sqrt, symmetric_eigen, Mat};
use crate::rng::Stream;
use crate::scalar::Scalar;

/// Supported closed convex domains. Matrix states are vectorized row-major,
/// so the PSD cone of `k x k` matrices has dimension `k^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvexDomain<T> {
    Orthant { dim: usize },
    UnitIntervalBox { dim: usize },
    UnitBall { dim: usize },
    PsdCone { size: usize },
    #[doc(hidden)]
    _Marker(std::marker::PhantomData<T>),
}

impl<T: Scalar> ConvexDomain<T> {
    pub fn orthant(dim: usize) -> Self {
        ConvexDomain::Orthant { dim }
    }

    pub fn unit_interval_box(dim: usize) -> Self {
        ConvexDomain::UnitIntervalBox { dim }
    }

    pub fn unit_ball(dim: usize) -> Self {
        ConvexDomain::UnitBall { dim }
    }

    pub fn psd_cone(size: usize) -> Self {
        ConvexDomain::PsdCone { size }
    }

    pub fn dimension(&self) -> usize {
        match *self {
            ConvexDomain::Orthant { dim } => dim,
            ConvexDomain::UnitIntervalBox { dim } => dim,
            ConvexDomain::UnitBall { dim } => dim,
            ConvexDomain::PsdCone { size } => size * size,
            ConvexDomain::_Marker(_) => unreachable!(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match *self {
            ConvexDomain::Orthant { .. } => "orthant",
            ConvexDomain::UnitIntervalBox { .. } => "unit_interval_box",
            ConvexDomain::UnitBall { .. } => "unit_ball",
            ConvexDomain::PsdCone { .. } => "psd_cone",
            ConvexDomain::_Marker(_) => unreachable!(),
        }
    }

    /// Signed distance-like membership test: true when `x` is within `tol`
    /// of the domain.
    pub fn contains(&self, x: &[T], tol: T) -> bool {
        match *self {
            ConvexDomain::Orthant { .. } => x.iter().all(|&v| v >= -tol),
            ConvexDomain::UnitIntervalBox { .. } => {
                x.iter().all(|&v| v >= -tol && v <= T::one() + tol)
            }
            ConvexDomain::UnitBall { .. } => norm2(x) <= T::one() + tol,
            ConvexDomain::PsdCone { size } => {
                let m = mat_from_vec(x, size);
                let sym = m.symmetrize();
                let asym = m.sub(&sym).frobenius_norm();
                asym <= tol && min_eigenvalue(&sym) >= -tol
            }
            ConvexDomain::_Marker(_) => unreachable!(),
        }
    }

    /// Euclidean projection onto the domain. For the PSD cone the point is
    /// symmetrized first and negative eigenvalues are clipped to zero.
    pub fn project(&self, x: &[T]) -> Vec<T> {
        let mut out = x.to_vec();
        self.project_in_place(&mut out);
        out
    }

    pub fn project_in_place(&self, x: &mut [T]) {
        match *self {
            ConvexDomain::Orthant { .. } => {
                for v in x.iter_mut() {
                    *v = v.max(T::zero());
                }
            }
            ConvexDomain::UnitIntervalBox { .. } => {
                for v in x.iter_mut() {
                    *v = v.max(T::zero()).min(T::one());
                }
            }
            ConvexDomain::UnitBall { .. } => {
                let n = norm2(x);
                if n > T::one() {
                    for v in x.iter_mut() {
                        *v /= n;
                    }
                }
            }
            ConvexDomain::PsdCone { size } => {
                let sym = mat_from_vec(x, size).symmetrize();
                let (lambda, v) = symmetric_eigen(&sym);
                let mut rec = Mat::zeros(size, size);
                for k in 0..size {
                    let l = lambda[k].max(T::zero());
                    if l == T::zero() {
                        continue;
                    }
                    for i in 0..size {
                        for j in 0..size {
                            rec[(i, j)] += l * v.get(i, k) * v.get(j, k);
                        }
                    }
                }
                x.copy_from_slice(&rec.data);
            }
            ConvexDomain::_Marker(_) => unreachable!(),
        }
    }

    /// Random points on (or numerically at) the boundary. Orthant faces draw
    /// the off-face coordinates log-uniformly in `[1e-3, 10]` to cover both
    /// near-origin and large-state behavior.
    pub fn boundary_sample(&self, stream: &mut Stream, count: usize) -> Vec<Vec<T>> {
        let mut out = Vec::with_capacity(count);
        for k in 0..count {
            out.push(self.boundary_point(stream, k));
        }
        out
    }

    fn boundary_point(&self, stream: &mut Stream, index: usize) -> Vec<T> {
        match *self {
            ConvexDomain::Orthant { dim } => {
                let face = index % dim;
                let mut x = vec![T::zero(); dim];
                for (i, v) in x.iter_mut().enumerate() {
                    if i != face {
                        *v = stream.log_range(T::of(1e-3), T::of(10.0));
                    }
                }
                x
            }
            ConvexDomain::UnitIntervalBox { dim } => {
                let face = index % dim;
                let side = (index / dim) % 2;
                let mut x = vec![T::zero(); dim];
                for (i, v) in x.iter_mut().enumerate() {
                    *v = if i == face {
                        if side == 0 {
                            T::zero()
                        } else {
                            T::one()
                        }
                    } else {
                        stream.uniform()
                    };
                }
                x
            }
            ConvexDomain::UnitBall { dim } => {
                let mut x: Vec<T> = (0..dim).map(|_| stream.normal()).collect();
                let n = norm2(&x).max(T::of(1e-12));
                for v in x.iter_mut() {
                    *v /= n;
                }
                x
            }
            ConvexDomain::PsdCone { size } => {
                let mut m = Mat::zeros(size, size);
                for i in 0..size {
                    for j in 0..size {
                        m[(i, j)] = stream.normal();
                    }
                }
                let a = m.matmul(&m.transpose());
                let shift = min_eigenvalue(&a);
                let mut out = a.data;
                for i in 0..size {
                    out[i * size + i] -= shift;
                }
                out
            }
            ConvexDomain::_Marker(_) => unreachable!(),
        }
    }
}

fn mat_from_vec<T: Scalar>(x: &[T], size: usize) -> Mat<T> {
    assert_eq!(x.len(), size * size, "psd state must be a vectorized square matrix");
    Mat { rows: size, cols: size, data: x.to_vec() }
}

/// Affine square-root specialization: drift `b0 + B x`, diffusion
/// `diag(sigma_i sqrt(x_i^+))`.
#[derive(Debug, Clone)]
pub struct AffineParams<T> {
    pub b0: Vec<T>,
    pub mat_b: Mat<T>,
    pub sigmas: Vec<T>,
}

/// Matrix-valued affine parameters for states on the PSD cone: drift
/// `alpha + M X + X M^T`, diffusion `sqrt(X) dB Q + Q^T dB^T sqrt(X)`.
#[derive(Debug, Clone)]
pub struct WishartParams<T> {
    pub alpha: Mat<T>,
    pub m: Mat<T>,
    pub q: Mat<T>,
}

type DriftFn<T> = dyn Fn(&[T], &mut [T]) + Send + Sync;
type DiffusionFn<T> = dyn Fn(&[T], &mut Mat<T>) + Send + Sync;

/// Drift/diffusion pair with a linear-growth constant and optional affine
/// metadata used by the validators and the Riccati solvers.
#[derive(Clone)]
pub struct CoefficientModel<T: Scalar> {
    dim: usize,
    drift: Arc<DriftFn<T>>,
    diffusion: Arc<DiffusionFn<T>>,
    pub growth_constant: T,
    pub affine: Option<AffineParams<T>>,
    pub wishart: Option<WishartParams<T>>,
}

impl<T: Scalar> std::fmt::Debug for CoefficientModel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoefficientModel")
            .field("dim", &self.dim)
            .field("growth_constant", &self.growth_constant)
            .field("affine", &self.affine.is_some())
            .field("wishart", &self.wishart.is_some())
            .finish()
    }
}

impl<T: Scalar> CoefficientModel<T> {
    pub fn custom(
        dim: usize,
        drift: impl Fn(&[T], &mut [T]) + Send + Sync + 'static,
        diffusion: impl Fn(&[T], &mut Mat<T>) + Send + Sync + 'static,
        growth_constant: T,
    ) -> Self {
        CoefficientModel {
            dim,
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            growth_constant,
            affine: None,
            wishart: None,
        }
    }

    /// Volterra square-root family on the orthant, with full truncation
    /// `sqrt(x^+)` so the diffusion is defined for all states.
    pub fn affine_square_root(
        b0: Vec<T>,
        mat_b: Mat<T>,
        sigmas: Vec<T>,
    ) -> Result<Self, DomainError> {
        let d = b0.len();
        if mat_b.rows != d || mat_b.cols != d || sigmas.len() != d {
            return Err(DomainError::Dimension { expected: d, got: mat_b.rows });
        }
        let row_norm = (0..d)
            .map(|i| (0..d).map(|j| mat_b.get(i, j).abs()).sum::<T>())
            .fold(T::zero(), T::max);
        let growth = norm2(&b0) + row_norm + sigmas.iter().copied().fold(T::zero(), T::max);
        let params = AffineParams { b0: b0.clone(), mat_b: mat_b.clone(), sigmas: sigmas.clone() };
        let b0c = b0;
        let bc = mat_b;
        let sc = sigmas;
        let mut model = CoefficientModel::custom(
            d,
            move |x, out| {
                bc.matvec(x, out);
                for i in 0..d {
                    out[i] += b0c[i];
                }
            },
            move |x, out| {
                for v in out.data.iter_mut() {
                    *v = T::zero();
                }
                for i in 0..d {
                    out[(i, i)] = sc[i] * x[i].max(T::zero()).sqrt();
                }
            },
            growth,
        );
        model.affine = Some(params);
        Ok(model)
    }

    /// Scalar model on `[0, 1]` with drift `a + b x` and diffusion
    /// `sigma sqrt((x (1 - x))^+)`.
    pub fn wright_fisher(a: T, b: T, sigma: T) -> Self {
        let growth = a.abs() + b.abs() + sigma;
        let mut model = CoefficientModel::custom(
            1,
            move |x, out| out[0] = a + b * x[0],
            move |x, out| {
                out[(0, 0)] = sigma * (x[0] * (T::one() - x[0])).max(T::zero()).sqrt();
            },
            growth,
        );
        // endpoint conditions are checked by the box validator from the raw
        // closures; no affine metadata applies
        model.affine = None;
        model
    }

    /// Additive-noise model: drift zero, diffusion `sigma I`.
    pub fn brownian(dim: usize, sigma: T) -> Self {
        CoefficientModel::custom(
            dim,
            move |_x, out| {
                for v in out.iter_mut() {
                    *v = T::zero();
                }
            },
            move |_x, out| {
                for v in out.data.iter_mut() {
                    *v = T::zero();
                }
                for i in 0..dim {
                    out[(i, i)] = sigma;
                }
            },
            sigma,
        )
    }

    /// Matrix-valued affine model on the PSD cone (state vectorized
    /// row-major to dimension `k^2`).
    pub fn wishart(alpha: Mat<T>, m: Mat<T>, q: Mat<T>) -> Result<Self, DomainError> {
        let k = alpha.rows;
        if alpha.cols != k || m.rows != k || m.cols != k || q.rows != k || q.cols != k {
            return Err(DomainError::Invalid("wishart matrices must be square of equal size".into()));
        }
        let growth = alpha.frobenius_norm()
            + T::of(2.0) * m.frobenius_norm()
            + T::of(2.0) * q.frobenius_norm();
        let params = WishartParams { alpha: alpha.clone(), m: m.clone(), q: q.clone() };
        let (ac, mc, qc) = (alpha, m, q);
        let mut model = CoefficientModel::custom(
            k * k,
            move |x, out| {
                let xm = Mat { rows: k, cols: k, data: x.to_vec() };
                let mx = mc.matmul(&xm);
                for i in 0..k {
                    for j in 0..k {
                        out[i * k + j] = ac.get(i, j) + mx.get(i, j) + mx.get(j, i);
                    }
                }
            },
            move |x, out| {
                let xm = Mat { rows: k, cols: k, data: x.to_vec() };
                let root = psd_sqrt(&xm.symmetrize());
                // coefficient of noise entry (a, b) in state entry (i, j)
                for i in 0..k {
                    for j in 0..k {
                        for a in 0..k {
                            for b in 0..k {
                                out[(i * k + j, a * k + b)] =
                                    root.get(i, a) * qc.get(b, j) + qc.get(b, i) * root.get(a, j);
                            }
                        }
                    }
                }
            },
            growth,
        );
        model.wishart = Some(params);
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn drift_into(&self, x: &[T], out: &mut [T]) {
        (self.drift)(x, out)
    }

    pub fn diffusion_into(&self, x: &[T], out: &mut Mat<T>) {
        (self.diffusion)(x, out)
    }
}

/// One validated boundary condition.
#[derive(Debug, Clone)]
pub struct ConditionReport<T> {
    pub name: String,
    pub passed: bool,
    pub worst_violation: T,
    pub witness: Option<Vec<T>>,
}

/// Outcome of [`validate_invariance_conditions`].
#[derive(Debug, Clone)]
pub struct InvarianceReport<T> {
    pub domain_kind: &'static str,
    pub passed: bool,
    pub conditions: Vec<ConditionReport<T>>,
}

const VALIDATOR_TOL: f64 = 1e-10;

/// Check the concrete boundary conditions that make the domain invariant for
/// `dX = lambda b dt + lambda sigma dB`:
///
/// * orthant: `x_i = 0` implies `b_i(x) >= 0` and the i-th diffusion row
///   vanishes (lambda-free);
/// * unit interval box: the same at `x_i = 0`, with `b_i(x) <= 0` and a
///   vanishing row at `x_i = 1`;
/// * PSD cone with affine (Wishart) parameters: `alpha - lambda (k-1) Q Q^T`
///   must be positive semidefinite for every supplied `lambda`.
pub fn validate_invariance_conditions<T: Scalar>(
    domain: &ConvexDomain<T>,
    model: &CoefficientModel<T>,
    lambda_set: &[T],
    n_boundary_samples: usize,
    rng_seed: u64,
) -> Result<InvarianceReport<T>, DomainError> {
    if model.dim() != domain.dimension() {
        return Err(DomainError::Dimension { expected: domain.dimension(), got: model.dim() });
    }
    let tol = T::of(VALIDATOR_TOL);
    let mut stream = Stream::new(rng_seed);
    let mut conditions: Vec<ConditionReport<T>> = Vec::new();

    match *domain {
        ConvexDomain::Orthant { dim } => {
            let samples = domain.boundary_sample(&mut stream, n_boundary_samples.max(dim));
            orthant_face_conditions(model, &samples, dim, false, tol, &mut conditions);
        }
        ConvexDomain::UnitIntervalBox { dim } => {
            let samples = domain.boundary_sample(&mut stream, n_boundary_samples.max(2 * dim));
            orthant_face_conditions(model, &samples, dim, true, tol, &mut conditions);
        }
        ConvexDomain::PsdCone { size } => {
            let Some(w) = &model.wishart else {
                return Err(DomainError::UnsupportedDomain("psd_cone without affine parameters"));
            };
            // alpha - lambda (k-1) Q Q^T must stay PSD
            let qqt = w.q.matmul(&w.q.transpose());
            let k1 = T::of_usize(size.saturating_sub(1));
            for &lambda in lambda_set {
                let shifted = w.alpha.sub(&qqt.scale(lambda * k1));
                let min_eig = min_eigenvalue(&shifted.symmetrize());
                conditions.push(ConditionReport {
                    name: format!("wishart_drift_dominates_lambda_{}", lambda.as_f64()),
                    passed: min_eig >= -tol,
                    worst_violation: (-min_eig).max(T::zero()),
                    witness: None,
                });
            }
        }
        ConvexDomain::UnitBall { .. } => {
            return Err(DomainError::UnsupportedDomain("unit_ball"));
        }
        ConvexDomain::_Marker(_) => unreachable!(),
    }

    let passed = conditions.iter().all(|c| c.passed);
    Ok(InvarianceReport { domain_kind: domain.kind_name(), passed, conditions })
}

fn orthant_face_conditions<T: Scalar>(
    model: &CoefficientModel<T>,
    samples: &[Vec<T>],
    dim: usize,
    upper_faces: bool,
    tol: T,
    conditions: &mut Vec<ConditionReport<T>>,
) {
    let mut drift = vec![T::zero(); dim];
    let mut diffusion = Mat::zeros(dim, dim);
    let mut worst_drift = vec![(T::zero(), None::<Vec<T>>); dim];
    let mut worst_diff = vec![(T::zero(), None::<Vec<T>>); dim];
    let mut worst_upper = vec![(T::zero(), None::<Vec<T>>); dim];

    for x in samples {
        model.drift_into(x, &mut drift);
        model.diffusion_into(x, &mut diffusion);
        for i in 0..dim {
            let row_norm: T = (0..dim).map(|j| diffusion.get(i, j).abs()).sum();
            if x[i] <= tol {
                let viol = (-drift[i]).max(T::zero());
                if viol > worst_drift[i].0 {
                    worst_drift[i] = (viol, Some(x.clone()));
                }
                if row_norm > worst_diff[i].0 {
                    worst_diff[i] = (row_norm, Some(x.clone()));
                }
            }
            if upper_faces && (x[i] - T::one()).abs() <= tol {
                let viol = drift[i].max(T::zero());
                if viol > worst_upper[i].0 {
                    worst_upper[i] = (viol, Some(x.clone()));
                }
                if row_norm > worst_diff[i].0 {
                    worst_diff[i] = (row_norm, Some(x.clone()));
                }
            }
        }
    }
    for i in 0..dim {
        let (v, w) = worst_drift[i].clone();
        conditions.push(ConditionReport {
            name: format!("drift_inward_on_face_{i}"),
            passed: v <= tol,
            worst_violation: v,
            witness: w,
        });
        let (v, w) = worst_diff[i].clone();
        conditions.push(ConditionReport {
            name: format!("diffusion_row_vanishes_on_face_{i}"),
            passed: v <= tol,
            worst_violation: v,
            witness: w,
        });
        if upper_faces {
            let (v, w) = worst_upper[i].clone();
            conditions.push(ConditionReport {
                name: format!("drift_inward_on_upper_face_{i}"),
                passed: v <= tol,
                worst_violation: v,
                witness: w,
            });
        }
    }
}
