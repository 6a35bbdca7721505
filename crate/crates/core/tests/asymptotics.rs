mod common;

use flatpop::asymptotics::{
    analyze, classify, estimate_lambda, generator_matrix, leading_eigenpair, lotka_root, stable_profile,
};
use flatpop::flat_metric::{flat_distance, NormVariant};
use flatpop::forward_solver::{simulate, SimConfig};
use flatpop::model_config::check_irreducibility;
use flatpop::{AtomicMeasure, Channel, Kernel, ModelIngredients, PiecewiseLinearFn};

fn run(mu0: &AtomicMeasure, ing: &ModelIngredients, t_end: f64) -> flatpop::forward_solver::Trajectory {
    let cfg = SimConfig {
        checkpoint_every: 50,
        ..SimConfig::new(0.01, t_end)
    };
    simulate(mu0, ing, &cfg).unwrap()
}

#[test]
fn scaling_the_initial_datum_changes_nothing() {
    let ing = ModelIngredients::lotka(1.0, 0.5);
    let mu0 = AtomicMeasure::from_atoms([(0.5, 1.0), (2.0, 0.3)]).unwrap();
    let a = run(&mu0, &ing, 20.0);
    let b = run(&mu0.scaled(5.0), &ing, 20.0);
    let ea = analyze(&a, (8.0, 20.0), 12).unwrap();
    let eb = analyze(&b, (8.0, 20.0), 12).unwrap();
    assert!((ea.lambda_star - eb.lambda_star).abs() < 1e-12);
    assert_eq!(ea.classification, eb.classification);
    let d = flat_distance(&ea.profile, &eb.profile, NormVariant::Paper).unwrap();
    assert!(d < 1e-12, "{d}");
}

#[test]
fn structured_fertility_agrees_with_renewal_root() {
    // Offspring at 0 with a rate that ramps up with size; b = 1, c = 0.4.
    let beta = PiecewiseLinearFn::new(vec![0.0, 1.0, 3.0], vec![0.0, 0.5, 1.5]).unwrap();
    let c = PiecewiseLinearFn::constant(0.4);
    let ing = ModelIngredients::new(PiecewiseLinearFn::constant(1.0), c.clone(), Kernel::at_zero(beta.clone()));
    let root = lotka_root(&beta, &c, 1.0).unwrap();
    let mut errors = Vec::new();
    for n in [500, 1000, 2000] {
        let g = generator_matrix(&ing, 40.0, n).unwrap();
        errors.push((leading_eigenpair(&g).unwrap().lambda - root).abs());
    }
    assert!(errors[2] < 0.01, "{errors:?}");
    assert!(errors[2] < errors[0], "{errors:?}");
    let traj = run(&AtomicMeasure::dirac(1.0), &ing, 40.0);
    let lam = estimate_lambda(&traj, (20.0, 40.0)).unwrap();
    assert!((lam.lambda - root).abs() < 0.01, "{} vs {root}", lam.lambda);
}

#[test]
fn reducible_kernel_is_still_analysed() {
    // Offspring never at 0: profiles may depend on the initial datum.
    let ing = ModelIngredients::new(
        PiecewiseLinearFn::constant(1.0),
        PiecewiseLinearFn::constant(0.5),
        Kernel {
            channels: vec![Channel {
                location: PiecewiseLinearFn::constant(1.0),
                weight: PiecewiseLinearFn::constant(1.0),
            }],
        },
    );
    assert!(!check_irreducibility(&ing).0);
    let traj = run(&AtomicMeasure::dirac(0.2), &ing, 10.0);
    let prof = stable_profile(&traj, 5).unwrap();
    assert!((prof.profile.tv_norm() - 1.0).abs() < 1e-9);
    let lam = estimate_lambda(&traj, (4.0, 10.0)).unwrap();
    assert!(lam.lambda.is_finite());
    let _ = classify(&traj, lam.lambda, None);
}

#[test]
fn generator_is_metzler_with_conservative_interior() {
    let mut r = common::rng(11);
    for _ in 0..10 {
        let ing = common::random_model(&mut r).without_births();
        let g = generator_matrix(&ing, 12.0, 60).unwrap();
        assert!(g.is_metzler());
        let sums = g.column_sums();
        for (j, s) in sums.iter().enumerate() {
            let x = (j as f64 + 0.5) * g.h;
            let expected = if j + 1 < g.n { -ing.c.value(x) } else { -ing.c.value(x) - ing.b.value(12.0) / g.h };
            assert!((s - expected).abs() < 1e-9, "{j}: {s} vs {expected}");
        }
    }
}
