//! Pathwise ordering of estimators built on the coupled point sets.

use frontier_core::estimator::{estimate, plan_sequences, strip_maxima, EstimatorParams};
use frontier_core::experiments::{run_sandwich, GammaPolicy, SandwichConfig};
use frontier_core::sim::sample_sandwich;
use frontier_core::{Frontier, Kernel};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn estimators_ordered_along_containment(
        n in 20usize..3000,
        gamma in 0.01f64..0.9,
        seed in any::<u64>(),
        x in 0.0f64..1.0,
        amp in -0.5f64..0.5,
    ) {
        let f = Frontier::cosine(1.0, amp).unwrap();
        let k = (n / 10).max(1);
        let p = EstimatorParams::new(n, k, 0.15, Kernel::biweight()).unwrap();
        let t = sample_sandwich(&f, n, gamma, seed).unwrap();
        let est = |pts| estimate(&p, &strip_maxima(pts, k), x).unwrap();
        let (f1, f0, f2, fn_) = (est(t.sigma1()), est(t.sigma0()), est(t.sigma2()), est(t.sigma_n()));
        prop_assert!(f1 <= f0 && f0 <= f2);
        if t.e_n_holds() {
            prop_assert!(f1 <= fn_ && fn_ <= f2);
        }
        let (m1, m2) = (strip_maxima(t.sigma1(), k), strip_maxima(t.sigma2(), k));
        prop_assert!(m1.u.iter().zip(&m2.u).all(|(a, b)| a <= b));
        for pt in t.stream() {
            prop_assert!(pt.y <= 1.0 + amp.abs() && pt.y <= f.evaluate(pt.x).unwrap());
        }
    }
}

#[test]
fn scaled_estimator_gap_shrinks_with_inverse_sqrt_gamma() {
    let plan = plan_sequences(1.0, 0.9, 0.5).unwrap();
    let gaps: Vec<f64> = [1_000usize, 10_000, 100_000]
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            run_sandwich(&SandwichConfig {
                frontier: Frontier::constant(1.0).unwrap(),
                params: plan.params(n, Kernel::epanechnikov()).unwrap(),
                gamma: GammaPolicy::InverseSqrtStrips,
                replicates: 200,
                x: 0.5,
                master_seed: 77,
                grid_index: i,
            })
            .unwrap()
            .scaled_estimator_gap
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}
