//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p volterra --test acceptance -- --nocapture` to see
//! the per-criterion lines and measured figures.

use volterra::domains::{AffineParams, CoefficientModel, ConvexDomain};
use volterra::harness::{validate_affine, PathEnsemble, ValidationSetup};
use volterra::kernels::{
    holder_d, l2_distance, smooth_kernel, AffineProfile, CumulativeMeasure, GFunction, Kernel,
    TimeChange,
};
use volterra::linalg::Mat;
use volterra::positivity::{
    check_preserves_nonnegativity, gamma_l, gamma_l_nonrecursive, OrderedTuple,
};
use volterra::riccati::{
    fractional_riccati_check, laplace_transform, solve_linear_volterra, solve_riccati,
    RiccatiConfig,
};
use volterra::rng::Stream;
use volterra::scheme::{simulate_fold, DomainMode, SchemeConfig, Variant};

fn random_tuple(stream: &mut Stream, horizon: f64, order: usize) -> OrderedTuple<f64> {
    loop {
        let mut pts: Vec<f64> =
            (0..order).map(|_| stream.range(1e-4 * horizon, 0.9999 * horizon)).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if let Ok(t) = OrderedTuple::new(pts) {
            return t;
        }
    }
}

fn report(criterion: usize, passed: bool, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion:2} [{tag}] {detail}");
    assert!(passed, "criterion {criterion} failed: {detail}");
}

/// Runs a criterion body under its stated wall-clock budget.
fn timed<R>(criterion: usize, budget_secs: f64, body: impl FnOnce() -> R) -> R {
    let start = std::time::Instant::now();
    let out = body();
    let elapsed = start.elapsed().as_secs_f64();
    println!("ACCEPTANCE {criterion:2} runtime {elapsed:.2}s (budget {budget_secs}s)");
    assert!(
        elapsed <= budget_secs,
        "criterion {criterion} exceeded its runtime budget: {elapsed:.2}s > {budget_secs}s"
    );
    out
}

/// Criterion 1: the exponential-product kernel has exactly vanishing
/// certificates at every order from 3 to 6.
#[test]
fn criterion_01_positivity_exactness() {
    timed(1, 5.0, || {
        let kernel = Kernel::exp_product(
            AffineProfile::constant(1.0),
            AffineProfile::constant(1.0),
            CumulativeMeasure::Linear { c: 1.0 },
        )
        .unwrap();
        let root = Stream::new(101);
        let mut worst = 0.0f64;
        for order in 3..=6 {
            for i in 0..500u64 {
                let mut s = root.substream((order as u64) << 32 | i);
                let tuple = random_tuple(&mut s, 1.0, order);
                let v = gamma_l(&kernel, &tuple).unwrap();
                worst = worst.max(v.abs());
            }
        }
        report(1, worst <= 1e-12, &format!("max |Gamma_l| over 2000 tuples = {worst:.3e} (<= 1e-12)"));

    });
}

/// Criterion 2: the drifting kernel 1 + (t - s) is falsified with a
/// length-3 witness matching the hand expansion.
#[test]
fn criterion_02_positivity_falsification() {
    timed(2, 1.0, || {
        let kernel: Kernel<f64> = Kernel::time_changed(
            GFunction::Affine { intercept: 1.0, slope: 1.0 },
            TimeChange::Identity,
        )
        .unwrap();
        let rep = check_preserves_nonnegativity(&kernel, 1.0, 3, 200, 7, 1e-10).unwrap();
        let Some(witness) = rep.witness.as_ref() else {
            report(2, false, "no witness produced");
            return;
        };
        let s = witness.times();
        let ok = !rep.passed && witness.order() == 3;
        let predicted = -(s[1] - s[0]) * (s[2] - s[1]);
        let gap = (rep.witness_value - predicted).abs();
        report(
            2,
            ok && gap <= 1e-10,
            &format!(
                "failed with length-{} witness, Gamma_3 = {:.6e} vs -(s2-s1)(s3-s2) = {predicted:.6e} (gap {gap:.2e})",
                witness.order(),
                rep.witness_value
            ),
        );

    });
}

/// Criterion 3: recursion and alternating-sum expansion agree to 1e-10 over
/// 1000 random tuples of order up to 8 for three kernel families.
#[test]
fn criterion_03_recursion_expansion_agreement() {
    timed(3, 30.0, || {
        let families: Vec<(&str, Kernel<f64>)> = vec![
            (
                "exp_product",
                Kernel::exp_product(
                    AffineProfile::constant(1.0),
                    AffineProfile::constant(1.0),
                    CumulativeMeasure::Linear { c: 0.8 },
                )
                .unwrap(),
            ),
            (
                "affine_drift",
                Kernel::time_changed(
                    GFunction::Affine { intercept: 1.0, slope: 1.0 },
                    TimeChange::Identity,
                )
                .unwrap(),
            ),
            (
                "cm_mixture",
                Kernel::completely_monotone(vec![
                    volterra::kernels::CmAtom {
                        alpha: 0.0,
                        weight: 0.4,
                        scale: 0.6,
                        measure: CumulativeMeasure::Linear { c: 1.0 },
                    },
                    volterra::kernels::CmAtom {
                        alpha: 1.0,
                        weight: 0.6,
                        scale: 2.4,
                        measure: CumulativeMeasure::Linear { c: 1.0 },
                    },
                ])
                .unwrap(),
            ),
        ];
        let root = Stream::new(303);
        let mut worst = 0.0f64;
        for (fi, (_, kernel)) in families.iter().enumerate() {
            for i in 0..1000u64 {
                let mut s = root.substream((fi as u64) << 40 | i);
                let order = 2 + (s.next_u64() % 7) as usize; // up to 8
                let tuple = random_tuple(&mut s, 2.0, order);
                let a = gamma_l(kernel, &tuple).unwrap();
                let b = gamma_l_nonrecursive(kernel, &tuple).unwrap();
                worst = worst.max((a - b).abs());
            }
        }
        report(3, worst <= 1e-10, &format!("max |recursion - expansion| = {worst:.3e} over 3000 tuples"));

    });
}

/// Criterion 4: the flat-kernel scalar Riccati solution matches the tanh
/// closed form to 1e-6 at grid step 1e-3.
#[test]
fn criterion_04_riccati_closed_form() {
    timed(4, 5.0, || {
        let kernel = Kernel::constant(1.0f64);
        let sigma = 0.4;
        let params =
            AffineParams { b0: vec![0.0], mat_b: Mat::from_rows(&[&[0.0]]), sigmas: vec![sigma] };
        let config = RiccatiConfig::uniform(1000, 1.0);
        let sol = solve_riccati(&kernel, &params, |_s, out| out[0] = -1.0, 1.0, &config).unwrap();
        let a = (2.0f64).sqrt() / sigma;
        let b = sigma / (2.0f64).sqrt();
        let mut max_err = 0.0f64;
        for i in 0..=1000 {
            let u = sol.grid[i];
            max_err = max_err.max((sol.psi_forward_at(i)[0] + a * (b * u).tanh()).abs());
        }
        report(4, max_err <= 1e-6, &format!("max |psi~ - tanh form| = {max_err:.3e} (<= 1e-6)"));

    });
}

/// Criterion 5: nonnegative data keeps the linear Volterra solution
/// nonnegative over 50 random 3-dimensional instances with the fractional
/// kernel.
#[test]
fn criterion_05_linear_volterra_sign() {
    timed(5, 60.0, || {
        let kernel = Kernel::fractional(0.75f64).unwrap();
        let config = RiccatiConfig::uniform(200, 1.0);
        let mut s = Stream::new(505);
        let mut min_value = f64::INFINITY;
        for _ in 0..50 {
            let d = 3usize;
            let v: Vec<f64> = (0..d).map(|_| s.range(0.0, 1.0)).collect();
            let fconst: Vec<f64> = (0..d).map(|_| s.range(0.0, 1.0)).collect();
            let mut rows = Vec::new();
            for i in 0..d {
                let mut row = vec![0.0f64; d];
                for (j, r) in row.iter_mut().enumerate() {
                    *r = if i == j { s.range(-0.5, 0.3) } else { s.range(0.0, 0.3) };
                }
                rows.push(row);
            }
            let g = Mat::from_rows(&rows.iter().map(|r| r.as_slice()).collect::<Vec<_>>());
            let chi = solve_linear_volterra(
                &kernel,
                &v,
                |_t, out| out.copy_from_slice(&fconst),
                |_t| g.clone(),
                &config,
            )
            .unwrap();
            min_value = min_value.min(chi.iter().copied().fold(f64::INFINITY, f64::min));
        }
        report(5, min_value >= -1e-10, &format!("min chi over 50 instances = {min_value:.3e} (>= -1e-10)"));

    });
}

/// Criterion 6: domain preservation of the diagonal-scaled scheme with the
/// tent-smoothed fractional kernel: no grid value and no reconstructed
/// inter-grid value below -1e-12 over 1e4 paths.
#[test]
fn criterion_06_invariance_smoothed_fractional() {
    timed(6, 120.0, || {
        let base = Kernel::fractional(0.75f64).unwrap();
        let kernel = smooth_kernel(&base, 8, 1.0);
        let model = CoefficientModel::affine_square_root(
            vec![0.5],
            Mat::from_rows(&[&[-0.5]]),
            vec![0.15],
        )
        .unwrap();
        let domain = ConvexDomain::orthant(1);
        let n = 200usize;
        let config = SchemeConfig::new(n, 1.0)
            .variant(Variant::Hat)
            .domain_mode(DomainMode::Enforce)
            .seed(606);

        // reconstruction rows for 10 checkpoints per step, frozen once
        let h = 1.0 / n as f64;
        let mut checkpoints = Vec::new();
        for k in 0..n {
            for q in 1..=10 {
                checkpoints.push(k as f64 * h + q as f64 * h / 10.0);
            }
        }
        let grid: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
        let rows: Vec<(usize, Vec<f64>)> = checkpoints
            .iter()
            .map(|&t| {
                let upto = grid.iter().skip(1).take_while(|&&tj| tj <= t).count();
                let row: Vec<f64> = (1..=upto)
                    .map(|j| {
                        if grid[j] < t {
                            kernel.eval_unchecked(t, grid[j])
                        } else {
                            kernel.diagonal(grid[j]).unwrap()
                        }
                    })
                    .collect();
                (upto, row)
            })
            .collect();

        let mins = simulate_fold(&kernel, &model, Some(&domain), &[1.0], &config, 10_000, |_p, path| {
            let mut min = f64::INFINITY;
            for k in 0..=n {
                min = min.min(path.value_at(k)[0]);
            }
            for (upto, row) in rows.iter() {
                let mut v = path.x0[0];
                for j in 0..*upto {
                    v += row[j] * path.increments[j];
                }
                min = min.min(v);
            }
            min
        })
        .unwrap();
        let worst = mins.iter().copied().fold(f64::INFINITY, f64::min);
        report(
            6,
            worst >= -1e-12,
            &format!("min over grid and 10 checkpoints/step of 1e4 paths = {worst:.3e} (>= -1e-12)"),
        );

    });
}

/// Criterion 7: the Monte Carlo Laplace estimate agrees with the Riccati
/// value within 3 standard errors at 1e5 paths for (a) the flat kernel and
/// (b) the singular fractional kernel.
#[test]
fn criterion_07_laplace_validation() {
    timed(7, 600.0, || {
        let mk_setup = |kernel: Kernel<f64>| ValidationSetup {
            kernel,
            params: AffineParams {
                b0: vec![0.3],
                mat_b: Mat::from_rows(&[&[-0.5]]),
                sigmas: vec![0.4],
            },
            x0: vec![0.2],
            f_const: vec![-1.0],
            horizon: 1.0,
            n_paths: 100_000,
            scheme: SchemeConfig::new(500, 1.0)
                .variant(Variant::Check)
                .domain_mode(DomainMode::Enforce)
                .seed(42),
            riccati_steps: 1000,
        };

        let flat = validate_affine(&mk_setup(Kernel::constant(1.0))).unwrap();
        let frac = validate_affine(&mk_setup(Kernel::fractional(0.75).unwrap())).unwrap();
        let ok = flat.z_score.abs() <= 3.0
            && frac.z_score.abs() <= 3.0
            && flat.invariance_violations == 0
            && frac.invariance_violations == 0;
        report(
            7,
            ok,
            &format!(
                "flat kernel z = {:.2} ({} violations), fractional z = {:.2} ({} violations)",
                flat.z_score, flat.invariance_violations, frac.z_score, frac.invariance_violations
            ),
        );

    });
}

/// Criterion 8: the fractional predictor-corrector and the product-
/// integration solver produce the same Laplace value to 1e-3 relative.
#[test]
fn criterion_08_fractional_cross_check() {
    timed(8, 60.0, || {
        let params = AffineParams {
            b0: vec![0.3],
            mat_b: Mat::from_rows(&[&[-0.5]]),
            sigmas: vec![0.4],
        };
        let x0 = [0.2f64];
        let mut worst = 0.0f64;
        let mut detail = String::new();
        for alpha in [0.75f64, 0.9] {
            let kernel = Kernel::fractional(alpha).unwrap();
            let config = RiccatiConfig::uniform(2000, 1.0);
            let sol = laplace_transform(&kernel, &params, &x0, |_s, out| out[0] = -1.0, 1.0, &config)
                .unwrap();
            let l1 = sol.laplace_value.unwrap();
            let (_phi, l2) = fractional_riccati_check(
                alpha,
                &TimeChange::Identity,
                &params,
                &x0,
                |_s, out| out[0] = -1.0,
                1.0,
                2000,
            )
            .unwrap();
            let rel = (l1 - l2).abs() / l2;
            worst = worst.max(rel);
            detail.push_str(&format!("alpha={alpha}: {l1:.8} vs {l2:.8} (rel {rel:.2e}); "));
        }
        report(8, worst <= 1e-3, &detail);

    });
}

/// Criterion 9: smoothing converges in L2 (strictly decreasing distances
/// over the levels 3, 5, 7) and satisfies the doubled regularity bound
/// `D_M <= 2 eta (t-s)^(2 gamma)` on a 20 x 20 grid.
#[test]
fn criterion_09_kernel_approximation() {
    timed(9, 60.0, || {
        let base = Kernel::fractional(0.75f64).unwrap();
        let params = base.holder_params().unwrap();

        let mut dists = Vec::new();
        for level in [3u32, 5, 7] {
            let sm = smooth_kernel(&base, level, 1.0);
            dists.push(l2_distance(&base, &sm, 1.0, 400).unwrap());
        }
        let decreasing = dists[0] > dists[1] && dists[1] > dists[2];

        let mut bound_ok = true;
        let mut worst_ratio = 0.0f64;
        for level in [3u32, 5, 7] {
            let sm = smooth_kernel(&base, level, 1.0);
            for i in 1..=20 {
                let t = i as f64 / 20.0;
                for j in 0..i {
                    let s = j as f64 / 20.0;
                    let d = holder_d(&sm, t, s, 64);
                    let bound = 2.0 * params.eta * (t - s).powf(2.0 * params.gamma);
                    worst_ratio = worst_ratio.max(d / bound);
                    if d > bound {
                        bound_ok = false;
                    }
                }
            }
        }
        report(
            9,
            decreasing && bound_ok,
            &format!(
                "L2 distances {:.5} > {:.5} > {:.5}; max D_M / (2 eta gap^2gamma) = {worst_ratio:.3}",
                dists[0], dists[1], dists[2]
            ),
        );

    });
}

/// Criterion 10: Brownian paths show N-growth of the dispersion statistic at
/// exponent 0.6 and N-stability at exponent 0.4 over N in {100, 200, 400}.
#[test]
fn criterion_10_holder_regularity() {
    timed(10, 120.0, || {
        let kernel = Kernel::constant(1.0f64);
        let model = CoefficientModel::brownian(1, 1.0);
        let mut medians_06 = Vec::new();
        let mut medians_04 = Vec::new();
        for n in [100usize, 200, 400] {
            let config = SchemeConfig::new(n, 1.0)
                .variant(Variant::Check)
                .domain_mode(DomainMode::Off)
                .seed(1010);
            let ensemble = PathEnsemble::generate(&kernel, &model, None, &[0.0], &config, 1000).unwrap();
            let stats = ensemble.holder_stats(&[0.4, 0.6]).unwrap();
            medians_04.push(stats[0].median);
            medians_06.push(stats[1].median);
        }
        let growth = medians_06[2] / medians_06[0];
        let stability = (medians_04[2] / medians_04[0] - 1.0).abs();
        let monotone_06 = medians_06[1] > medians_06[0] && medians_06[2] > medians_06[1];
        report(
            10,
            growth >= 1.15 && stability <= 0.10 && monotone_06,
            &format!(
                "exponent 0.6 medians {:?} (x{growth:.3} over N 100 -> 400), exponent 0.4 drift {stability:.3}",
                medians_06
            ),
        );

    });
}
