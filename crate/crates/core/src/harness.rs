//! End-to-end validation: simulate an ensemble, estimate the Laplace
//! transform by Monte Carlo, and compare against the Riccati value.

use std::time::Instant;

use thiserror::Error;

use crate::domains::{validate_invariance_conditions, AffineParams, CoefficientModel, ConvexDomain};
use crate::error::{DomainError, PositivityError, RiccatiError, SchemeError};
use crate::kernels::Kernel;
use crate::riccati::{laplace_transform, RiccatiConfig};
use crate::scalar::Scalar;
use crate::scheme::{holder_estimate, simulate_fold, HolderStat, SchemeConfig, Variant};

#[derive(Error, Debug)]
pub enum HarnessError {
    #[error("affine parameters fail the domain invariance conditions: {0}")]
    InvariancePrecondition(String),

    #[error("kernel failed the nonnegativity-preservation check (min value {min_value})")]
    KernelPrecondition { min_value: f64 },

    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Riccati(#[from] RiccatiError),
    #[error(transparent)]
    Positivity(#[from] PositivityError),
}

/// A simulated ensemble: grid times plus per-path state trajectories.
#[derive(Debug, Clone)]
pub struct PathEnsemble<T> {
    pub grid: Vec<T>,
    pub dim: usize,
    /// One flattened `(n_steps + 1) x dim` trajectory per path.
    pub paths: Vec<Vec<T>>,
    pub seed: u64,
    /// Provenance strings: kernel, model, scheme settings.
    pub provenance: [String; 3],
    /// Total count of kernel-assembled components below `-1e-9` before
    /// enforcement, summed over paths.
    pub raw_violations: usize,
    /// Smallest such component over the whole ensemble.
    pub raw_min: T,
}

impl<T: Scalar> PathEnsemble<T> {
    /// Simulate `n_paths` trajectories (values only) with per-path counter
    /// RNG streams; bit-identical for a fixed seed at any worker count.
    pub fn generate(
        kernel: &Kernel<T>,
        model: &CoefficientModel<T>,
        domain: Option<&ConvexDomain<T>>,
        x0: &[T],
        config: &SchemeConfig<T>,
        n_paths: usize,
    ) -> Result<Self, SchemeError> {
        let per_path = simulate_fold(kernel, model, domain, x0, config, n_paths, |_p, path| {
            (path.values.clone(), path.raw_violations, path.raw_min)
        })?;
        let grid: Vec<T> = (0..=config.n_steps)
            .map(|k| config.horizon * T::of_usize(k) / T::of_usize(config.n_steps))
            .collect();
        let mut paths = Vec::with_capacity(n_paths);
        let mut raw_violations = 0usize;
        let mut raw_min = T::infinity();
        for (values, violations, path_min) in per_path {
            paths.push(values);
            raw_violations += violations;
            raw_min = raw_min.min(path_min);
        }
        Ok(PathEnsemble {
            grid,
            dim: model.dim(),
            paths,
            seed: config.seed,
            provenance: [
                kernel.describe(),
                format!("{model:?}"),
                format!(
                    "steps={} substeps={} horizon={} variant={:?} domain_mode={:?} seed={}",
                    config.n_steps,
                    config.inner_substeps,
                    config.horizon,
                    config.variant,
                    config.domain_mode,
                    config.seed
                ),
            ],
            raw_violations,
            raw_min,
        })
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// Empirical path-regularity statistics (see [`holder_estimate`]).
    pub fn holder_stats(&self, exponents: &[T]) -> Result<Vec<HolderStat<T>>, SchemeError> {
        holder_estimate(&self.grid, &self.paths, self.dim, exponents)
    }
}

/// Monte Carlo estimate of `E[exp(int_0^T f(s)^T X_s ds)]`: per-path
/// trapezoid of the integrand, exponentiate, average.
///
/// Returns `(estimate, standard error)`. Reduction order is fixed by path
/// index, so the result does not depend on the worker count.
pub fn mc_laplace<T: Scalar>(
    ensemble: &PathEnsemble<T>,
    f: impl Fn(T, &mut [T]),
) -> (T, T) {
    let n = ensemble.grid.len();
    let dim = ensemble.dim;
    // trapezoid weights folded with the (time-dependent) source values
    let mut weighted_f = vec![T::zero(); n * dim];
    let mut buf = vec![T::zero(); dim];
    for k in 0..n {
        f(ensemble.grid[k], &mut buf);
        let w = if k == 0 {
            T::of(0.5) * (ensemble.grid[1] - ensemble.grid[0])
        } else if k == n - 1 {
            T::of(0.5) * (ensemble.grid[n - 1] - ensemble.grid[n - 2])
        } else {
            T::of(0.5) * (ensemble.grid[k + 1] - ensemble.grid[k - 1])
        };
        for c in 0..dim {
            weighted_f[k * dim + c] = w * buf[c];
        }
    }

    let exps: Vec<T> = ensemble
        .paths
        .iter()
        .map(|path| {
            let mut acc = T::zero();
            for (v, w) in path.iter().zip(&weighted_f) {
                acc += *v * *w;
            }
            acc.exp()
        })
        .collect();
    let count = T::of_usize(exps.len());
    let mean = exps.iter().copied().sum::<T>() / count;
    if exps.len() < 2 {
        return (mean, T::zero());
    }
    let var = exps.iter().map(|&e| (e - mean) * (e - mean)).sum::<T>()
        / (count - T::one());
    (mean, (var / count).sqrt())
}

/// Inputs of the full validation pipeline.
#[derive(Debug, Clone)]
pub struct ValidationSetup<T: Scalar> {
    pub kernel: Kernel<T>,
    pub params: AffineParams<T>,
    pub x0: Vec<T>,
    /// Constant nonpositive source vector.
    pub f_const: Vec<T>,
    pub horizon: T,
    pub n_paths: usize,
    pub scheme: SchemeConfig<T>,
    pub riccati_steps: usize,
}

/// Outcome of [`validate_affine`].
#[derive(Debug, Clone)]
pub struct ValidationReport<T> {
    pub mc_estimate: T,
    pub mc_stderr: T,
    pub riccati_value: T,
    /// `(mc_estimate - riccati_value) / mc_stderr` when the error is positive.
    pub z_score: T,
    /// Stored ensemble values below `-1e-9` (after any enforcement), i.e.
    /// states that reached the consumer outside the domain.
    pub invariance_violations: usize,
    /// Kernel-assembled values below `-1e-9` before enforcement projection.
    pub raw_violations: usize,
    pub runtime_ms: u128,
}

/// Run the full pipeline: domain validation, simulation (diagonal-free
/// variant for singular kernels), Monte Carlo Laplace estimate, Riccati
/// solve, and the z-score comparison.
pub fn validate_affine<T: Scalar>(setup: &ValidationSetup<T>) -> Result<ValidationReport<T>, HarnessError> {
    let start = Instant::now();
    let d = setup.params.b0.len();
    let model = CoefficientModel::affine_square_root(
        setup.params.b0.clone(),
        setup.params.mat_b.clone(),
        setup.params.sigmas.clone(),
    )?;
    let domain = ConvexDomain::orthant(d);

    // sign conditions on the affine coefficients
    let invariance = validate_invariance_conditions(&domain, &model, &[T::one()], 64, setup.scheme.seed)?;
    if !invariance.passed {
        let failing: Vec<String> = invariance
            .conditions
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} (violation {})", c.name, c.worst_violation))
            .collect();
        return Err(HarnessError::InvariancePrecondition(failing.join(", ")));
    }

    // kernels with a finite diagonal must carry a preservation certificate;
    // singular kernels go through the diagonal-free scheme instead
    let mut scheme = setup.scheme.clone();
    if setup.kernel.singular_on_diagonal() {
        scheme.variant = Variant::Check;
    } else {
        let report = crate::positivity::check_preserves_nonnegativity(
            &setup.kernel,
            setup.horizon,
            4,
            64,
            setup.scheme.seed ^ 0xDEAD,
            T::of(1e-10),
        )?;
        if !report.passed {
            return Err(HarnessError::KernelPrecondition { min_value: report.min_value.as_f64() });
        }
    }

    let ensemble = PathEnsemble::generate(
        &setup.kernel,
        &model,
        Some(&domain),
        &setup.x0,
        &scheme,
        setup.n_paths,
    )?;
    let f = |_s: T, out: &mut [T]| out.copy_from_slice(&setup.f_const);
    let (mc_estimate, mc_stderr) = mc_laplace(&ensemble, f);

    let config = RiccatiConfig::uniform(setup.riccati_steps, setup.horizon);
    let solution =
        laplace_transform(&setup.kernel, &setup.params, &setup.x0, f, setup.horizon, &config)?;
    let riccati_value = solution.laplace_value.expect("laplace_transform fills the value");

    let z_score = if mc_stderr > T::zero() {
        (mc_estimate - riccati_value) / mc_stderr
    } else {
        T::zero()
    };
    let gate = T::of(-1e-9);
    let invariance_violations = ensemble
        .paths
        .iter()
        .map(|path| path.iter().filter(|&&v| v < gate).count())
        .sum();
    Ok(ValidationReport {
        mc_estimate,
        mc_stderr,
        riccati_value,
        z_score,
        invariance_violations,
        raw_violations: ensemble.raw_violations,
        runtime_ms: start.elapsed().as_millis(),
    })
}
