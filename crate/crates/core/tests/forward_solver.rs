mod common;

use common::*;
use flatpop::flat_metric::{flat_distance, flat_norm_value, NormVariant};
use flatpop::forward_solver::{simulate, SimConfig, Splitting};
use flatpop::model_config::{growth_constants, kappa_margin};
use flatpop::{AtomicMeasure, ModelIngredients};
use proptest::prelude::*;

fn cfg(dt: f64, t_end: f64) -> SimConfig {
    SimConfig::new(dt, t_end)
}

/// Net per-capita growth `m(y) = sum_k W_k(y) - c(y)` and bounds on `m` and `m'`.
fn net_rate(ing: &ModelIngredients) -> (impl Fn(f64) -> f64 + '_, f64, f64) {
    let sup = ing.c.sup_abs().unwrap()
        + ing.eta.channels.iter().map(|ch| ch.weight.sup_abs().unwrap()).sum::<f64>();
    let lip = ing.c.lipschitz() + ing.eta.channels.iter().map(|ch| ch.weight.lipschitz()).sum::<f64>();
    (move |y: f64| ing.eta.total_rate(y) - ing.c.value(y), sup, lip)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mass_balance_per_step(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ing = random_model(&mut r);
        let mu0 = random_positive(&mut r, 4, 6.0);
        let dt = 0.01;
        let traj = simulate(&mu0, &ing, &cfg(dt, 1.0)).unwrap();
        let (m, m_sup, m_lip) = net_rate(&ing);
        let b_sup = ing.b.sup_abs().unwrap();
        let eta_bc: f64 = ing.eta.channels.iter().map(|ch| ch.weight.sup_abs().unwrap()).sum();
        let c_sup = ing.c.sup_abs().unwrap();
        for w in traj.checkpoints.windows(2) {
            let mu = &w[0].measure;
            let drift: f64 = mu.atoms().iter().map(|a| a.weight * m(a.location)).sum();
            let tv = w[0].measure.tv_norm().max(w[1].measure.tv_norm());
            let second = (b_sup * m_lip + (c_sup + eta_bc) * m_sup) * tv;
            let defect = (w[1].mass - w[0].mass - dt * drift).abs();
            prop_assert!(defect <= second * dt * dt + 1e-13, "defect {defect} bound {}", second * dt * dt);
        }
    }

    #[test]
    fn positivity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ing = random_model(&mut r);
        let mu0 = random_positive(&mut r, 5, 8.0);
        for splitting in [Splitting::Lie, Splitting::Strang] {
            let c = SimConfig { splitting, checkpoint_every: 10, ..cfg(0.05, 2.0) };
            let traj = simulate(&mu0, &ing, &c).unwrap();
            for cp in &traj.checkpoints {
                prop_assert!(cp.measure.is_positive());
            }
        }
        let spread = random_spread_model(&mut r);
        let c = SimConfig { coalesce_radius: 0.02, prune: 1e-12, checkpoint_every: 10, ..cfg(0.02, 2.0) };
        let traj = simulate(&mu0, &spread, &c).unwrap();
        for cp in &traj.checkpoints {
            prop_assert!(cp.measure.is_positive());
        }
    }

    #[test]
    fn lipschitz_in_initial_data(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ing = ModelIngredients::lotka(1.0, 0.5);
        let mu1 = random_positive(&mut r, 3, 5.0);
        let mu2 = random_positive(&mut r, 3, 5.0);
        let d0 = flat_distance(&mu1, &mu2, NormVariant::Paper).unwrap();
        let dt = 0.01;
        let c = SimConfig { checkpoint_every: 50, ..cfg(dt, 2.0) };
        let t1 = simulate(&mu1, &ing, &c).unwrap();
        let t2 = simulate(&mu2, &ing, &c).unwrap();
        for (a, b) in t1.checkpoints.iter().zip(&t2.checkpoints).skip(1) {
            let d = flat_distance(&a.measure, &b.measure, NormVariant::Paper).unwrap();
            let (c1, _) = growth_constants(&ing, a.t).unwrap();
            prop_assert!(d <= c1 * d0 * (1.0 + 10.0 * dt), "t {} d {d} bound {}", a.t, c1 * d0);
        }
    }

    #[test]
    fn time_regularity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ing = random_model(&mut r);
        let mu0 = random_positive(&mut r, 4, 6.0);
        let dt = 0.01;
        let traj = simulate(&mu0, &ing, &SimConfig { checkpoint_every: 5, ..cfg(dt, 1.0) }).unwrap();
        for cp in traj.checkpoints.iter().skip(1) {
            let d = flat_distance(&cp.measure, &mu0, NormVariant::Paper).unwrap();
            let (_, c2) = growth_constants(&ing, cp.t).unwrap();
            let bound = c2 * mu0.tv_norm() * cp.t * (1.0 + 10.0 * dt);
            prop_assert!(d <= bound, "t {} d {d} bound {bound}", cp.t);
        }
    }

    #[test]
    fn contraction_without_births(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ing = random_kappa_model(&mut r);
        let kappa = kappa_margin(&ing).unwrap();
        let mu0 = random_signed(&mut r, 6, 8.0, 2.0);
        let dt = 0.01;
        let n0 = flat_norm_value(&mu0, NormVariant::Paper).unwrap();
        let traj = flatpop::forward_solver::simulate_signed(&mu0, &ing, &SimConfig { checkpoint_every: 50, ..cfg(dt, 2.0) }).unwrap();
        for cp in &traj.checkpoints {
            let n = flat_norm_value(&cp.measure, NormVariant::Paper).unwrap();
            prop_assert!(n <= (-kappa * cp.t).exp() * n0 * (1.0 + 10.0 * dt), "t {} {n} vs {n0}", cp.t);
        }
    }

    #[test]
    fn semigroup_property(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ing = random_model(&mut r);
        let mu0 = random_positive(&mut r, 3, 6.0);
        let dt = 0.02;
        let whole = simulate(&mu0, &ing, &cfg(dt, 0.6)).unwrap();
        let first = simulate(&mu0, &ing, &cfg(dt, 0.2)).unwrap();
        let second = simulate(first.final_measure(), &ing, &cfg(dt, 0.4)).unwrap();
        let a = whole.final_measure().atoms();
        let b = second.final_measure().atoms();
        prop_assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(b) {
            prop_assert!((p.location - q.location).abs() <= 1e-12);
            prop_assert!((p.weight - q.weight).abs() <= 1e-12 * p.weight.abs().max(1.0));
        }
    }
}

#[test]
fn exponential_mass_growth() {
    let ing = ModelIngredients::lotka(1.0, 0.0);
    let traj = simulate(&AtomicMeasure::dirac(1.0), &ing, &cfg(0.01, 1.0)).unwrap();
    let rel = (traj.last().mass - 1f64.exp()).abs() / 1f64.exp();
    assert!(rel < 0.01, "{rel}");
}

#[test]
fn error_bound_is_monotone_and_times_increase() {
    let mut r = rng(7);
    let ing = random_model(&mut r);
    let mu0 = random_positive(&mut r, 6, 6.0);
    let c = SimConfig {
        coalesce_radius: 0.05,
        prune: 1e-6,
        coalesce_every: 3,
        checkpoint_every: 4,
        ..cfg(0.01, 1.0)
    };
    let traj = simulate(&mu0, &ing, &c).unwrap();
    assert_eq!(traj.checkpoints[0].t, 0.0);
    for w in traj.checkpoints.windows(2) {
        assert!(w[1].t > w[0].t);
        assert!(w[1].error_bound >= w[0].error_bound);
    }
    let exact = simulate(&mu0, &ing, &cfg(0.01, 1.0)).unwrap();
    let d = flat_distance(traj.final_measure(), exact.final_measure(), NormVariant::Paper).unwrap();
    let (c1, _) = growth_constants(&ing, 1.0).unwrap();
    assert!(d <= c1 * traj.last().error_bound + 1e-12, "{d} vs {}", traj.last().error_bound);
}
