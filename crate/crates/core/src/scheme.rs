//! Path simulation for stochastic Volterra equations
//! `X_t = X_0 + int_0^t Gamma(t,s) (b(X_s) ds + sigma(X_s) dB_s)`.
//!
//! Two discretizations are provided. The `Hat` variant evolves an inner
//! diffusion at rate `Gamma(t_{k+1}, t_{k+1})` between grid points and
//! propagates normalized jumps through the kernel; it requires a finite
//! positive diagonal and is the variant that preserves convex domains for
//! nonnegativity-preserving kernels. The `Check` variant evolves the inner
//! diffusion at unit rate and propagates raw step integrals, so it never
//! evaluates the diagonal and accepts singular kernels.
//!
//! Both variants reconstruct the state at any time as
//! `X_0 + sum_{t_j <= t} increment_j * Gamma(t, t_j)`.

use rayon::prelude::*;

use crate::domains::{CoefficientModel, ConvexDomain};
use crate::error::SchemeError;
use crate::kernels::Kernel;
use crate::linalg::{norm2, Mat};
use crate::rng::GaussianField;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Hat,
    Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainMode {
    Enforce,
    Off,
}

#[derive(Debug, Clone)]
pub struct SchemeConfig<T> {
    pub n_steps: usize,
    pub horizon: T,
    /// Euler-Maruyama substeps of the inner diffusion per grid interval.
    pub inner_substeps: usize,
    pub variant: Variant,
    pub domain_mode: DomainMode,
    pub seed: u64,
}

impl<T: Scalar> SchemeConfig<T> {
    pub fn new(n_steps: usize, horizon: T) -> Self {
        SchemeConfig {
            n_steps,
            horizon,
            inner_substeps: 1,
            variant: Variant::Hat,
            domain_mode: DomainMode::Enforce,
            seed: 0,
        }
    }

    pub fn variant(mut self, v: Variant) -> Self {
        self.variant = v;
        self
    }

    pub fn domain_mode(mut self, m: DomainMode) -> Self {
        self.domain_mode = m;
        self
    }

    pub fn substeps(mut self, m: usize) -> Self {
        self.inner_substeps = m.max(1);
        self
    }

    pub fn seed(mut self, s: u64) -> Self {
        self.seed = s;
        self
    }
}

/// One simulated path: grid values, scheme increments, and optionally the
/// fine inner path.
#[derive(Debug, Clone)]
pub struct PathState<T> {
    pub dim: usize,
    pub variant: Variant,
    /// Grid times `t_0 .. t_N`.
    pub grid: Vec<T>,
    /// `(N+1) x dim` grid values, row-major by time.
    pub values: Vec<T>,
    /// `N x dim` scheme increments: normalized jumps for `Hat`, inner step
    /// displacements for `Check`.
    pub increments: Vec<T>,
    /// Fine inner path `(N m + 1) x dim` when recorded.
    pub inner: Option<Vec<T>>,
    pub x0: Vec<T>,
    /// Count of kernel-assembled state components below `-1e-9` before any
    /// enforcement projection (invariance diagnostics).
    pub raw_violations: usize,
    /// Smallest kernel-assembled component seen before projection.
    pub raw_min: T,
}

impl<T: Scalar> PathState<T> {
    pub fn value_at(&self, step: usize) -> &[T] {
        &self.values[step * self.dim..(step + 1) * self.dim]
    }

    pub fn increment(&self, step: usize) -> &[T] {
        &self.increments[step * self.dim..(step + 1) * self.dim]
    }
}

/// Kernel values frozen on the simulation grid.
struct KernelGrid<T> {
    n: usize,
    times: Vec<T>,
    /// `gamma[k * (n+1) + j] = Gamma(t_k, t_j)` for `1 <= j <= k`.
    gamma: Vec<T>,
    /// Inner-diffusion rate at each grid point (the true diagonal for `Hat`).
    diag: Vec<T>,
    /// Diagonal representative used to assemble grid values for `Check`:
    /// the true diagonal when finite, otherwise the forward cell average
    /// `(1/h) int_{t_k}^{t_k + h} Gamma(s, t_k) ds`, which integrates the
    /// singular spike instead of sampling it.
    diag_repr: Vec<T>,
    /// Largest off-diagonal entry in each column (zero-column detection).
    col_max: Vec<T>,
}

impl<T: Scalar> KernelGrid<T> {
    fn build(kernel: &Kernel<T>, config: &SchemeConfig<T>) -> Result<Self, SchemeError> {
        let n = config.n_steps;
        let h = config.horizon / T::of_usize(n);
        let times: Vec<T> = (0..=n).map(|k| config.horizon * T::of_usize(k) / T::of_usize(n)).collect();
        let mut gamma = vec![T::zero(); (n + 1) * (n + 1)];
        let mut col_max = vec![T::zero(); n + 1];
        for k in 1..=n {
            for j in 1..=k.saturating_sub(1) {
                let v = kernel.eval_unchecked(times[k], times[j]);
                gamma[k * (n + 1) + j] = v;
                col_max[j] = col_max[j].max(v.abs());
            }
        }
        let singular = kernel.singular_on_diagonal();
        let mut diag = vec![T::zero(); n + 1];
        let mut diag_repr = vec![T::zero(); n + 1];
        for k in 1..=n {
            match kernel.diagonal(times[k]) {
                Some(d) if d.is_finite() => {
                    diag[k] = d;
                    diag_repr[k] = d;
                    gamma[k * (n + 1) + k] = d;
                }
                _ if singular => {
                    diag[k] = T::nan();
                    let avg = forward_cell_average(kernel, times[k], h);
                    diag_repr[k] = avg;
                    gamma[k * (n + 1) + k] = avg;
                }
                _ => {
                    return Err(SchemeError::SingularDiagonal { at: times[k].as_f64() });
                }
            }
        }
        Ok(KernelGrid { n, times, gamma, diag, diag_repr, col_max })
    }

    #[inline]
    fn row(&self, k: usize) -> &[T] {
        &self.gamma[k * (self.n + 1)..k * (self.n + 1) + k + 1]
    }
}

/// Finite stand-in for `Gamma(t, t)` when the diagonal diverges: the mean of
/// `Gamma(., t)` over the following cell of width `h`.
pub(crate) fn diagonal_representative<T: Scalar>(kernel: &Kernel<T>, t: T, h: T) -> T {
    match kernel.diagonal(t) {
        Some(d) if d.is_finite() => d,
        _ => forward_cell_average(kernel, t, h),
    }
}

fn forward_cell_average<T: Scalar>(kernel: &Kernel<T>, t: T, h: T) -> T {
    if let Some((m0, _)) = kernel.moments_in_t(t, t, t + h) {
        return m0 / h;
    }
    crate::numeric::integrate(|v| kernel.eval_unchecked(v, t), t, t + h, T::of(1e-10))
        .map(|m0| m0 / h)
        .unwrap_or_else(|_| kernel.eval_unchecked(t + h * T::of(0.5), t))
}

/// Left limit `X_0 + sum_{j=1}^{upto} increments_j * row[j]`, written into
/// `out`. Shared by both variants so that their arithmetic agrees bitwise
/// when the kernel is constant.
fn assemble_into<T: Scalar>(x0: &[T], increments: &[T], row: &[T], upto: usize, out: &mut [T]) {
    let dim = x0.len();
    out.copy_from_slice(x0);
    for j in 1..=upto {
        let g = row[j];
        if g == T::zero() {
            continue;
        }
        let inc = &increments[(j - 1) * dim..j * dim];
        for (o, &iv) in out.iter_mut().zip(inc) {
            *o += g * iv;
        }
    }
}

struct PathBuffers<T> {
    xi: Vec<T>,
    start: Vec<T>,
    xminus: Vec<T>,
    drift: Vec<T>,
    noise: Vec<T>,
    z: Vec<T>,
    sigma: Mat<T>,
}

#[allow(clippy::too_many_arguments)]
fn run_path<T: Scalar>(
    kernel_grid: &KernelGrid<T>,
    model: &CoefficientModel<T>,
    domain: Option<&ConvexDomain<T>>,
    x0: &[T],
    config: &SchemeConfig<T>,
    path_index: u64,
    record_inner: bool,
) -> PathState<T> {
    let dim = model.dim();
    let n = config.n_steps;
    let m = config.inner_substeps.max(1);
    let h = config.horizon / T::of_usize(n);
    let dt = h / T::of_usize(m);
    let sqrt_dt = dt.sqrt();
    let field = GaussianField::new(config.seed);
    let enforce = matches!(config.domain_mode, DomainMode::Enforce) && domain.is_some();
    let is_hat = matches!(config.variant, Variant::Hat);

    let mut values = vec![T::zero(); (n + 1) * dim];
    let mut increments = vec![T::zero(); n * dim];
    let mut inner = record_inner.then(|| vec![T::zero(); (n * m + 1) * dim]);
    values[..dim].copy_from_slice(x0);
    if let Some(fine) = inner.as_mut() {
        fine[..dim].copy_from_slice(x0);
    }

    let mut buf = PathBuffers {
        xi: vec![T::zero(); dim],
        start: vec![T::zero(); dim],
        xminus: vec![T::zero(); dim],
        drift: vec![T::zero(); dim],
        noise: vec![T::zero(); dim],
        z: vec![T::zero(); dim],
        sigma: Mat::zeros(dim, dim),
    };
    let mut raw_violations = 0usize;
    let mut raw_min = T::infinity();
    let raw_gate = T::of(-1e-9);

    for k in 0..n {
        let next = k + 1;
        assemble_into(x0, &increments, kernel_grid.row(next), k, &mut buf.xminus);
        for &v in buf.xminus.iter() {
            raw_min = raw_min.min(v);
            if v < raw_gate {
                raw_violations += 1;
            }
        }

        // inner-diffusion rate: the next diagonal for Hat, one for Check
        let (lambda, frozen) = if is_hat {
            let d = kernel_grid.diag[next];
            if d > T::zero() {
                (d, false)
            } else {
                // a vanishing diagonal with a vanishing kernel column
                // transmits nothing: freeze the interval
                (T::zero(), true)
            }
        } else {
            (T::one(), false)
        };

        buf.xi.copy_from_slice(&buf.xminus);
        if !is_hat && enforce {
            if let Some(d) = domain {
                d.project_in_place(&mut buf.xi);
            }
        }
        buf.start.copy_from_slice(&buf.xi);

        if !frozen {
            for sub in 0..m {
                let step_key = (k * m + sub) as u64;
                model.drift_into(&buf.xi, &mut buf.drift);
                model.diffusion_into(&buf.xi, &mut buf.sigma);
                for (lane, z) in buf.z.iter_mut().enumerate() {
                    *z = field.normal::<T>(path_index, step_key, lane as u64) * sqrt_dt;
                }
                buf.sigma.matvec(&buf.z, &mut buf.noise);
                for i in 0..dim {
                    buf.xi[i] = buf.xi[i] + lambda * (buf.drift[i] * dt) + lambda * buf.noise[i];
                }
                if enforce {
                    if let Some(d) = domain {
                        d.project_in_place(&mut buf.xi);
                    }
                }
                if let Some(fine) = inner.as_mut() {
                    let at = (k * m + sub + 1) * dim;
                    fine[at..at + dim].copy_from_slice(&buf.xi);
                }
            }
        } else if let Some(fine) = inner.as_mut() {
            for sub in 0..m {
                let at = (k * m + sub + 1) * dim;
                fine[at..at + dim].copy_from_slice(&buf.xi);
            }
        }

        // increment and assembled grid value
        let scale = if is_hat { lambda } else { kernel_grid.diag_repr[next] };
        let inc_row = &mut increments[k * dim..(k + 1) * dim];
        for i in 0..dim {
            inc_row[i] = if frozen {
                T::zero()
            } else if is_hat {
                (buf.xi[i] - buf.xminus[i]) / lambda
            } else {
                buf.xi[i] - buf.start[i]
            };
        }
        let out = &mut values[next * dim..(next + 1) * dim];
        for i in 0..dim {
            out[i] = buf.xminus[i] + scale * inc_row[i];
        }
        if !is_hat {
            for &v in out.iter() {
                raw_min = raw_min.min(v);
                if v < raw_gate {
                    raw_violations += 1;
                }
            }
            if enforce {
                if let Some(d) = domain {
                    d.project_in_place(out);
                }
            }
        }
    }

    PathState {
        dim,
        variant: config.variant,
        grid: kernel_grid.times.clone(),
        values,
        increments,
        inner,
        x0: x0.to_vec(),
        raw_violations,
        raw_min,
    }
}

fn validate_inputs<T: Scalar>(
    kernel_grid: &KernelGrid<T>,
    model: &CoefficientModel<T>,
    domain: Option<&ConvexDomain<T>>,
    x0: &[T],
    config: &SchemeConfig<T>,
) -> Result<(), SchemeError> {
    if x0.len() != model.dim() {
        return Err(SchemeError::Domain(crate::error::DomainError::Dimension {
            expected: model.dim(),
            got: x0.len(),
        }));
    }
    if let (DomainMode::Enforce, Some(d)) = (config.domain_mode, domain) {
        if !d.contains(x0, T::of(1e-12)) {
            return Err(SchemeError::DomainViolation {
                at: 0.0,
                distance: norm2(&d.project(x0).iter().zip(x0).map(|(&p, &x)| p - x).collect::<Vec<_>>())
                    .as_f64(),
            });
        }
    }
    if matches!(config.variant, Variant::Hat) {
        // a zero diagonal is tolerated only when the whole kernel column
        // vanishes with it (the grid point then transmits nothing)
        for k in 1..=config.n_steps {
            let d = kernel_grid.diag[k];
            if !d.is_finite() {
                return Err(SchemeError::SingularDiagonal { at: kernel_grid.times[k].as_f64() });
            }
            if d <= T::zero() && kernel_grid.col_max[k] > T::of(1e-14) {
                return Err(SchemeError::SingularDiagonal { at: kernel_grid.times[k].as_f64() });
            }
        }
    }
    Ok(())
}

/// Simulate one path of the diagonal-scaled (`Hat`) scheme.
pub fn simulate_hat<T: Scalar>(
    kernel: &Kernel<T>,
    model: &CoefficientModel<T>,
    domain: &ConvexDomain<T>,
    x0: &[T],
    config: &SchemeConfig<T>,
    path_index: u64,
) -> Result<PathState<T>, SchemeError> {
    let config = SchemeConfig { variant: Variant::Hat, ..config.clone() };
    let kg = KernelGrid::build(kernel, &config)?;
    validate_inputs(&kg, model, Some(domain), x0, &config)?;
    Ok(run_path(&kg, model, Some(domain), x0, &config, path_index, true))
}

/// Simulate one path of the diagonal-free (`Check`) scheme; `domain` is only
/// consulted when enforcement is on.
pub fn simulate_check<T: Scalar>(
    kernel: &Kernel<T>,
    model: &CoefficientModel<T>,
    domain: Option<&ConvexDomain<T>>,
    x0: &[T],
    config: &SchemeConfig<T>,
    path_index: u64,
) -> Result<PathState<T>, SchemeError> {
    let config = SchemeConfig { variant: Variant::Check, ..config.clone() };
    let kg = KernelGrid::build(kernel, &config)?;
    validate_inputs(&kg, model, domain, x0, &config)?;
    Ok(run_path(&kg, model, domain, x0, &config, path_index, true))
}

/// Simulate `n_paths` paths in parallel and fold each through `f`.
///
/// Results are collected by path index, so any reduction over the returned
/// vector is independent of the worker count.
pub fn simulate_fold<T: Scalar, R: Send>(
    kernel: &Kernel<T>,
    model: &CoefficientModel<T>,
    domain: Option<&ConvexDomain<T>>,
    x0: &[T],
    config: &SchemeConfig<T>,
    n_paths: usize,
    f: impl Fn(u64, &PathState<T>) -> R + Sync,
) -> Result<Vec<R>, SchemeError> {
    let kg = KernelGrid::build(kernel, config)?;
    validate_inputs(&kg, model, domain, x0, config)?;
    Ok((0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let path = run_path(&kg, model, domain, x0, config, p, false);
            f(p, &path)
        })
        .collect())
}

/// Reconstruct the state at an arbitrary time from the stored increments:
/// `X_0 + sum_{t_j <= t} increment_j * Gamma(t, t_j)`.
pub fn reconstruct_at<T: Scalar>(path: &PathState<T>, kernel: &Kernel<T>, t: T) -> Vec<T> {
    let dim = path.dim;
    let mut out = path.x0.clone();
    for (j, &tj) in path.grid.iter().enumerate().skip(1) {
        if tj > t {
            break;
        }
        let g = if tj < t {
            kernel.eval_unchecked(t, tj)
        } else {
            // grid point itself: use the same value the scheme used
            match kernel.diagonal(tj) {
                Some(d) => d,
                None => {
                    let h = path.grid[1] - path.grid[0];
                    forward_cell_average(kernel, tj, h)
                }
            }
        };
        let inc = path.increment(j - 1);
        for i in 0..dim {
            out[i] += g * inc[i];
        }
    }
    out
}

/// Per-exponent dispersion statistic of [`holder_estimate`].
#[derive(Debug, Clone, Copy)]
pub struct HolderStat<T> {
    pub exponent: T,
    /// Median over paths of `sup_{j<k} |X_k - X_j| / (t_k - t_j)^a`.
    pub median: T,
    pub p95: T,
}

/// Empirical path-regularity statistic over an ensemble of flattened paths
/// (`(N+1) x dim` each, uniform grid).
pub fn holder_estimate<T: Scalar>(
    grid: &[T],
    paths: &[Vec<T>],
    dim: usize,
    exponents: &[T],
) -> Result<Vec<HolderStat<T>>, SchemeError> {
    if paths.len() < 100 {
        return Err(SchemeError::InsufficientPaths { needed: 100, got: paths.len() });
    }
    let n = grid.len();
    let mut stats = Vec::with_capacity(exponents.len());
    for &a in exponents {
        let mut sups: Vec<T> = paths
            .par_iter()
            .map(|vals| {
                let mut sup = T::zero();
                for k in 1..n {
                    for j in 0..k {
                        let gap = grid[k] - grid[j];
                        let mut d2 = T::zero();
                        for i in 0..dim {
                            let d = vals[k * dim + i] - vals[j * dim + i];
                            d2 += d * d;
                        }
                        let ratio = d2.sqrt() / gap.powf(a);
                        sup = sup.max(ratio);
                    }
                }
                sup
            })
            .collect();
        sups.sort_by(|x, y| x.partial_cmp(y).expect("finite statistics"));
        let median = sups[sups.len() / 2];
        let p95 = sups[(sups.len() - 1) * 95 / 100];
        stats.push(HolderStat { exponent: a, median, p95 });
    }
    Ok(stats)
}

/// Check that every grid value lies in the domain.
pub fn assert_in_domain<T: Scalar>(
    path: &PathState<T>,
    domain: &ConvexDomain<T>,
    tol: T,
) -> Result<(), SchemeError> {
    for k in 0..path.grid.len() {
        let x = path.value_at(k);
        if !domain.contains(x, tol) {
            let p = domain.project(x);
            let diff: Vec<T> = p.iter().zip(x).map(|(&a, &b)| a - b).collect();
            return Err(SchemeError::DomainViolation {
                at: path.grid[k].as_f64(),
                distance: norm2(&diff).as_f64(),
            });
        }
    }
    Ok(())
}
