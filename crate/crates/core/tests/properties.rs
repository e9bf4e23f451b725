//! Property tests over randomized inputs.

use proptest::prelude::*;

use volterra::domains::ConvexDomain;
use volterra::kernels::{reverse_kernel, Kernel};
use volterra::linalg::norm2;
use volterra::positivity::{gamma_l, OrderedTuple};

proptest! {
    #[test]
    fn double_reversal_is_the_identity(
        t in 1e-4f64..1.0,
        frac in 0.0f64..0.999,
        alpha in 0.51f64..1.0,
    ) {
        let s = t * frac;
        let kernel = Kernel::fractional(alpha).unwrap();
        let twice = reverse_kernel(&reverse_kernel(&kernel, 1.0), 1.0);
        prop_assert_eq!(kernel.eval_unchecked(t, s), twice.eval_unchecked(t, s));
    }

    #[test]
    fn reversal_transposes_the_triangle(
        t in 0.01f64..1.0,
        frac in 0.0f64..0.999,
    ) {
        let s = t * frac;
        let kernel = Kernel::fractional(0.75).unwrap();
        let rev = reverse_kernel(&kernel, 1.0);
        let direct = rev.eval_unchecked(t, s);
        let reflected = kernel.eval_unchecked(1.0 - s, 1.0 - t);
        prop_assert_eq!(direct, reflected);
    }

    #[test]
    fn projections_are_idempotent_and_never_further(
        x in prop::collection::vec(-5.0f64..5.0, 3),
        y in prop::collection::vec(-1.0f64..1.0, 3),
        kind in 0usize..3,
    ) {
        let domain: ConvexDomain<f64> = match kind {
            0 => ConvexDomain::orthant(3),
            1 => ConvexDomain::unit_interval_box(3),
            _ => ConvexDomain::unit_ball(3),
        };
        let p = domain.project(&x);
        prop_assert!(domain.contains(&p, 1e-12));
        let pp = domain.project(&p);
        for (a, b) in p.iter().zip(&pp) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        // projection optimality against an arbitrary feasible competitor
        let q = domain.project(&y);
        let dp = norm2(&x.iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<_>>());
        let dq = norm2(&x.iter().zip(&q).map(|(a, b)| a - b).collect::<Vec<_>>());
        prop_assert!(dp <= dq + 1e-12);
    }

    #[test]
    fn gamma_l_is_scale_invariant(
        times in prop::collection::vec(1e-3f64..1.0, 3..6),
        weight in 0.1f64..10.0,
    ) {
        let mut times = times;
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        prop_assume!(times.len() >= 3);
        let tuple = OrderedTuple::new(times).unwrap();

        let atom = |w: f64| volterra::kernels::CmAtom {
            alpha: 0.0,
            weight: w,
            scale: 1.3,
            measure: volterra::kernels::CumulativeMeasure::Linear { c: 1.0 },
        };
        let base = Kernel::completely_monotone(vec![atom(1.0)]).unwrap();
        let scaled = Kernel::completely_monotone(vec![atom(weight)]).unwrap();
        let a = gamma_l(&base, &tuple).unwrap();
        let b = gamma_l(&scaled, &tuple).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}
