#![allow(dead_code)]

use flatpop::model_config::kappa_margin;
use flatpop::{AtomicMeasure, Channel, Kernel, ModelIngredients, PiecewiseLinearFn};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Piecewise-linear function with `k` pieces on `[0, span]`, values in `lo..hi`.
pub fn random_pl(rng: &mut ChaCha8Rng, k: usize, span: f64, lo: f64, hi: f64) -> PiecewiseLinearFn {
    let mut xs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..span)).collect();
    xs.push(0.0);
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let ys = xs.iter().map(|_| rng.gen_range(lo..hi)).collect();
    PiecewiseLinearFn::new(xs, ys).unwrap()
}

pub fn monotone_pl(rng: &mut ChaCha8Rng, k: usize, span: f64, lo: f64, hi: f64) -> PiecewiseLinearFn {
    let f = random_pl(rng, k, span, lo, hi);
    let mut ys = f.values().to_vec();
    ys.sort_by(|a, b| b.total_cmp(a));
    PiecewiseLinearFn::new(f.breakpoints().to_vec(), ys).unwrap()
}

/// Validated model with up to two offspring channels at fixed birth states,
/// so offspring of different parents share atoms.
pub fn random_model(rng: &mut ChaCha8Rng) -> ModelIngredients {
    let b = random_pl(rng, 3, 8.0, 0.3, 2.0);
    let c = random_pl(rng, 3, 8.0, 0.0, 1.0);
    let channels = (0..rng.gen_range(0..=2))
        .map(|_| Channel {
            location: PiecewiseLinearFn::constant(rng.gen_range(0.0..3.0)),
            weight: random_pl(rng, 2, 8.0, 0.0, 1.0),
        })
        .collect();
    let ing = ModelIngredients::new(b, c, Kernel { channels });
    ing.check().unwrap();
    ing
}

/// Validated model whose birth states depend on the parent; needs particle
/// management for long runs.
pub fn random_spread_model(rng: &mut ChaCha8Rng) -> ModelIngredients {
    let mut ing = random_model(rng);
    for ch in &mut ing.eta.channels {
        ch.location = random_pl(rng, 2, 8.0, 0.0, 3.0);
    }
    ing.check().unwrap();
    ing
}

/// Birth-free model with a positive contraction margin.
pub fn random_kappa_model(rng: &mut ChaCha8Rng) -> ModelIngredients {
    loop {
        let b = monotone_pl(rng, 3, 8.0, 0.3, 2.0);
        let c = random_pl(rng, 2, 8.0, 0.6, 1.5);
        let ing = ModelIngredients::new(b, c, Kernel::none());
        if ing.check().is_ok() && kappa_margin(&ing).is_some() {
            return ing;
        }
    }
}

pub fn random_positive(rng: &mut ChaCha8Rng, n: usize, span: f64) -> AtomicMeasure {
    AtomicMeasure::from_atoms((0..n).map(|_| (rng.gen_range(0.0..span), rng.gen_range(0.05..2.0)))).unwrap()
}

pub fn random_signed(rng: &mut ChaCha8Rng, n: usize, span: f64, wmax: f64) -> AtomicMeasure {
    AtomicMeasure::from_atoms((0..n).map(|_| (rng.gen_range(0.0..span), rng.gen_range(-wmax..wmax)))).unwrap()
}

pub fn random_tent(rng: &mut ChaCha8Rng, span: f64) -> PiecewiseLinearFn {
    let center = rng.gen_range(1.0..span);
    let half = rng.gen_range(0.3..1.0f64).min(center);
    let height = rng.gen_range(0.1..0.9);
    PiecewiseLinearFn::new(vec![0.0, center - half, center, center + half], vec![0.0, 0.0, height, 0.0])
        .unwrap_or_else(|_| PiecewiseLinearFn::new(vec![center - half, center, center + half], vec![0.0, height, 0.0]).unwrap())
}

/// `b = b0 - b1 x`, `c = c0 + c1 x` on `[0, 3.4]`, constant beyond; atoms in
/// `[0, 1]` stay below 3.2 up to `t = 1`.
pub fn affine_model(rng: &mut ChaCha8Rng) -> ModelIngredients {
    let b0 = rng.gen_range(3.6..4.0);
    let b1 = rng.gen_range(0.8..1.0);
    let c0 = rng.gen_range(0.1..0.5);
    let c1 = rng.gen_range(0.1..0.5);
    let b = PiecewiseLinearFn::new(vec![0.0, 3.4], vec![b0, b0 - 3.4 * b1]).unwrap();
    let c = PiecewiseLinearFn::new(vec![0.0, 3.4], vec![c0, c0 + 3.4 * c1]).unwrap();
    ModelIngredients::new(b, c, Kernel::none())
}
