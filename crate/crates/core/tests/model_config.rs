mod common;

use common::*;
use flatpop::flat_metric::{flat_distance, NormVariant};
use flatpop::model_config::{eta_bl_norm, growth_constants, kappa_margin};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kappa_holds_at_random_points(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ing = random_kappa_model(&mut r);
        let kappa = kappa_margin(&ing).unwrap();
        for _ in 0..10_000 {
            let x = r.gen_range(0.0..12.0);
            let slope = ing.c.slope_right(x).abs().max(ing.c.slope_left(x.max(1e-12)).abs());
            prop_assert!(ing.c.value(x) - slope >= kappa - 1e-12);
            prop_assert!(ing.b.slope_right(x) <= 0.0);
        }
    }

    #[test]
    fn kernel_norm_estimates_stay_below_bounds(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ing = random_spread_model(&mut r);
        let norms = eta_bl_norm(&ing).unwrap();
        prop_assert!(norms.lip_sampled <= norms.lip + 1e-12);
        prop_assert!((norms.bl - norms.bc - norms.lip).abs() < 1e-12);
        let channel_bc: f64 = ing.eta.channels.iter().map(|ch| ch.weight.sup_abs().unwrap()).sum();
        for _ in 0..50 {
            let y1 = r.gen_range(0.0..10.0);
            let y2 = r.gen_range(0.0..10.0);
            let e1 = ing.eta.at(y1);
            prop_assert!(e1.tv_norm() <= norms.bc + 1e-12);
            prop_assert!(norms.bc <= channel_bc + 1e-12);
            if (y1 - y2).abs() > 1e-9 {
                let d = flat_distance(&e1, &ing.eta.at(y2), NormVariant::Paper).unwrap();
                prop_assert!(d <= norms.lip * (y1 - y2).abs() + 1e-12);
            }
        }
    }

    #[test]
    fn growth_constants_are_monotone(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ing = random_model(&mut r);
        let (c1, _) = growth_constants(&ing, 0.0).unwrap();
        prop_assert_eq!(c1, 1.0);
        let mut prev = (0.0, 0.0);
        for k in 0..40 {
            let t = 0.1 * k as f64;
            let c = growth_constants(&ing, t).unwrap();
            prop_assert!(c.0 >= prev.0 && c.1 >= prev.1);
            prev = c;
        }
        prop_assert!(growth_constants(&ing, -1.0).is_err());
    }
}
