//! Particle integrator for the model equation.
//!
//! Atoms are transported along the characteristics `x' = b(x)` with classical
//! fourth-order Runge-Kutta substeps while their weights decay by
//! `exp(-int c)` (Simpson's rule along the path). Births are added as new
//! atoms. The two parts are combined by Lie or Strang splitting:
//!
//! ```text
//! Lie:    B(dt) . TD(dt)
//! Strang: TD(dt/2) . B2(dt) . TD(dt/2),   B2(dt) = I + dt C + dt^2/2 C^2
//! ```
//!
//! where `C mu = int eta(y) dmu(y)`. Particle management (merging and pruning)
//! is the only error that is certified; its flat-norm bound is accumulated in
//! the trajectory.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bl_functions::PiecewiseLinearFn;
use crate::error::{Error, Result};
use crate::measures::{Atom, AtomicMeasure};
use crate::model_config::ModelIngredients;

/// Below this many atoms the transport map runs on the calling thread.
const PARALLEL_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitting {
    Lie,
    #[default]
    Strang,
}

impl std::str::FromStr for Splitting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lie" => Ok(Splitting::Lie),
            "strang" => Ok(Splitting::Strang),
            other => Err(format!("unknown splitting '{other}' (expected lie or strang)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub splitting: Splitting,
    /// Runge-Kutta substeps per transport substep.
    pub ode_substeps: usize,
    pub coalesce_radius: f64,
    pub prune: f64,
    /// Apply particle management every this many steps.
    pub coalesce_every: usize,
    /// Record a checkpoint every this many steps (plus the first and last).
    pub checkpoint_every: usize,
    pub max_particles: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 1.0,
            splitting: Splitting::Strang,
            ode_substeps: 4,
            coalesce_radius: 0.0,
            prune: 0.0,
            coalesce_every: 1,
            checkpoint_every: 1,
            max_particles: 2_000_000,
        }
    }
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be >= 0", self.t_end));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(1.0) {
            return bad(format!("t_end = {} is not a multiple of dt = {}", self.t_end, self.dt));
        }
        if self.ode_substeps == 0 {
            return bad("ode_substeps must be >= 1".into());
        }
        if !(self.coalesce_radius >= 0.0) || !(self.prune >= 0.0) {
            return bad("coalesce radius and prune threshold must be >= 0".into());
        }
        if self.coalesce_every == 0 || self.checkpoint_every == 0 {
            return bad("coalesce_every and checkpoint_every must be >= 1".into());
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    fn manages_particles(&self) -> bool {
        self.coalesce_radius > 0.0 || self.prune > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub t: f64,
    pub measure: AtomicMeasure,
    /// Signed total mass.
    pub mass: f64,
    /// Accumulated particle-management bound in the flat norm.
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub checkpoints: Vec<Checkpoint>,
    pub config: SimConfig,
    pub ingredient_hash: String,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.checkpoints.iter().map(|c| c.t).collect()
    }

    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("trajectory has a checkpoint")
    }

    pub fn final_measure(&self) -> &AtomicMeasure {
        &self.last().measure
    }

    /// Checkpoint whose time is closest to `t`.
    pub fn at_time(&self, t: f64) -> &Checkpoint {
        self.checkpoints
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("trajectory has a checkpoint")
    }

    /// `t,mass,atoms,error_bound` rows with 17 significant digits.
    pub fn series_csv(&self) -> String {
        let mut out = String::from("t,mass,atoms,error_bound\n");
        for c in &self.checkpoints {
            out.push_str(&format!(
                "{:.16e},{:.16e},{},{:.16e}\n",
                c.t,
                c.mass,
                c.measure.len(),
                c.error_bound
            ));
        }
        out
    }
}

/// Position after time `tau` on the characteristic of `b` through `x`.
pub fn flow_map(b: &PiecewiseLinearFn, x: f64, tau: f64, substeps: usize) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("flow time {tau} must be >= 0")));
    }
    let h = tau / substeps.max(1) as f64;
    let mut y = x;
    for _ in 0..substeps.max(1) {
        y = rk4(b, y, h);
    }
    if !y.is_finite() {
        return Err(Error::Numerical(format!("characteristic from {x} produced {y}")));
    }
    Ok(y)
}

#[inline]
fn rk4(b: &PiecewiseLinearFn, x: f64, h: f64) -> f64 {
    let k1 = b.value(x);
    let k2 = b.value(x + 0.5 * h * k1);
    let k3 = b.value(x + 0.5 * h * k2);
    let k4 = b.value(x + h * k3);
    x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Position after time `tau` and `int_0^tau c(X_s) ds` along the way, using
/// `substeps` Runge-Kutta steps and Simpson's rule on each of them.
pub fn characteristic(ing: &ModelIngredients, x: f64, tau: f64, substeps: usize) -> (f64, f64) {
    let n = substeps.max(1);
    let h = tau / n as f64;
    let (b, c) = (&ing.b, &ing.c);
    let mut y = x;
    let mut integral = 0.0;
    for _ in 0..n {
        let mid = rk4(b, y, 0.5 * h);
        let next = rk4(b, y, h);
        integral += h / 6.0 * (c.value(y) + 4.0 * c.value(mid) + c.value(next));
        y = next;
    }
    (y, integral)
}

/// Transport-and-decay map for a fixed sub-interval length.
struct Transport<'a> {
    ing: &'a ModelIngredients,
    tau: f64,
    substeps: usize,
    exact: Option<(f64, f64)>,
}

impl<'a> Transport<'a> {
    fn new(ing: &'a ModelIngredients, tau: f64, substeps: usize) -> Self {
        let exact = (ing.b.is_constant() && ing.c.is_constant())
            .then(|| (ing.b.values()[0] * tau, (-ing.c.values()[0] * tau).exp()));
        Self {
            ing,
            tau,
            substeps,
            exact,
        }
    }

    fn apply(&self, atoms: &[Atom]) -> Vec<Atom> {
        let one = |a: &Atom| match self.exact {
            Some((shift, decay)) => Atom::new(a.location + shift, a.weight * decay),
            None => {
                let (y, integral) = characteristic(self.ing, a.location, self.tau, self.substeps);
                Atom::new(y, a.weight * (-integral).exp())
            }
        };
        if atoms.len() < 2 * PARALLEL_CHUNK {
            atoms.iter().map(one).collect()
        } else {
            atoms.par_iter().with_min_len(PARALLEL_CHUNK).map(one).collect()
        }
    }
}

/// `C mu`: every atom `(x, w)` produces `(L_k(x), scale * w * W_k(x))`.
fn offspring(ing: &ModelIngredients, atoms: &[Atom], scale: f64) -> Vec<Atom> {
    let mut out = Vec::with_capacity(atoms.len() * ing.eta.channels.len());
    for a in atoms {
        for ch in &ing.eta.channels {
            let w = ch.weight.value(a.location);
            if w != 0.0 {
                out.push(Atom::new(ch.location.value(a.location), scale * a.weight * w));
            }
        }
    }
    out
}

fn advance(mu: &AtomicMeasure, ing: &ModelIngredients, cfg: &SimConfig) -> AtomicMeasure {
    let dt = cfg.dt;
    let births = !ing.eta.channels.is_empty();
    match cfg.splitting {
        Splitting::Lie => {
            let moved = Transport::new(ing, dt, cfg.ode_substeps).apply(mu.atoms());
            if !births {
                return AtomicMeasure::canonical(moved);
            }
            let mut all = offspring(ing, &moved, dt);
            all.extend(moved);
            AtomicMeasure::canonical(all)
        }
        Splitting::Strang => {
            let half = Transport::new(ing, 0.5 * dt, cfg.ode_substeps);
            let moved = half.apply(mu.atoms());
            let mid = if births {
                let first = AtomicMeasure::canonical(offspring(ing, &moved, 1.0));
                let second = offspring(ing, first.atoms(), 0.5 * dt * dt);
                let mut all: Vec<Atom> = first
                    .atoms()
                    .iter()
                    .map(|a| Atom::new(a.location, dt * a.weight))
                    .collect();
                all.extend(second);
                all.extend(moved);
                AtomicMeasure::canonical(all)
            } else {
                AtomicMeasure::canonical(moved)
            };
            AtomicMeasure::canonical(half.apply(mid.atoms()))
        }
    }
}

fn require_positive(mu: &AtomicMeasure) -> Result<()> {
    if mu.is_positive() {
        Ok(())
    } else {
        Err(Error::InvalidMeasure(
            "the particle solver needs a non-negative measure; use simulate_signed".into(),
        ))
    }
}

/// One splitting step followed by particle management. Returns the new
/// measure and the flat-norm bound of the management error.
pub fn step(mu: &AtomicMeasure, ing: &ModelIngredients, cfg: &SimConfig) -> Result<(AtomicMeasure, f64)> {
    cfg.validate()?;
    ing.check()?;
    require_positive(mu)?;
    let next = advance(mu, ing, cfg);
    next.coalesce(cfg.coalesce_radius, cfg.prune)
}

/// Run the scheme from `mu0` to `cfg.t_end`.
pub fn simulate(mu0: &AtomicMeasure, ing: &ModelIngredients, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    ing.check()?;
    require_positive(mu0)?;
    let n = cfg.n_steps();
    let checkpoint = |step: usize, measure: &AtomicMeasure, error_bound: f64| Checkpoint {
        step,
        t: step as f64 * cfg.dt,
        mass: measure.mass(),
        measure: measure.clone(),
        error_bound,
    };
    let mut mu = mu0.clone();
    let mut bound = 0.0;
    let mut checkpoints = vec![checkpoint(0, &mu, 0.0)];
    for k in 1..=n {
        mu = advance(&mu, ing, cfg);
        if cfg.manages_particles() && k % cfg.coalesce_every == 0 {
            let (managed, increment) = mu.coalesce(cfg.coalesce_radius, cfg.prune)?;
            mu = managed;
            bound += increment;
        }
        if mu.len() > cfg.max_particles {
            return Err(Error::ParticleCap {
                count: mu.len(),
                cap: cfg.max_particles,
            });
        }
        if !mu.mass().is_finite() {
            return Err(Error::Numerical(format!("non-finite mass at step {k}")));
        }
        if k % cfg.checkpoint_every == 0 || k == n {
            checkpoints.push(checkpoint(k, &mu, bound));
        }
    }
    Ok(Trajectory {
        checkpoints,
        config: cfg.clone(),
        ingredient_hash: ing.hash(),
    })
}

/// Signed initial data: both Hahn-Jordan parts are evolved and subtracted.
pub fn simulate_signed(mu0: &AtomicMeasure, ing: &ModelIngredients, cfg: &SimConfig) -> Result<Trajectory> {
    let (pos, neg) = mu0.hahn_jordan();
    let p = simulate(&pos, ing, cfg)?;
    let q = simulate(&neg, ing, cfg)?;
    let checkpoints = p
        .checkpoints
        .into_iter()
        .zip(q.checkpoints)
        .map(|(a, b)| {
            let measure = a.measure.difference(&b.measure);
            Checkpoint {
                step: a.step,
                t: a.t,
                mass: measure.mass(),
                measure,
                error_bound: a.error_bound + b.error_bound,
            }
        })
        .collect();
    Ok(Trajectory {
        checkpoints,
        config: p.config,
        ingredient_hash: p.ingredient_hash,
    })
}

/// A test function `phi(t, x)` for the weak formulation, evaluated at the
/// checkpoints of a trajectory (`j` is the checkpoint index).
pub trait TestFunction: Sync {
    /// Reject checkpoint grids the function cannot be evaluated on.
    fn check_times(&self, _times: &[f64]) -> Result<()> {
        Ok(())
    }
    fn value(&self, j: usize, t: f64, x: f64) -> f64;
    /// `d_x phi`; the right derivative where `phi` has a kink.
    fn dx(&self, j: usize, t: f64, x: f64) -> f64;
    fn dt(&self, j: usize, t: f64, x: f64) -> f64;
}

/// `phi(t, .)` given by one piecewise-linear slice per checkpoint; the time
/// derivative is taken by finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionSeries {
    pub times: Vec<f64>,
    pub slices: Vec<PiecewiseLinearFn>,
}

impl TestFunctionSeries {
    /// The same function at every time.
    pub fn stationary(phi: PiecewiseLinearFn, times: &[f64]) -> Self {
        Self {
            times: times.to_vec(),
            slices: vec![phi; times.len()],
        }
    }

    /// `phi(t, .) = f(t)` sampled at `times`.
    pub fn from_fn(times: &[f64], f: impl Fn(f64) -> PiecewiseLinearFn) -> Self {
        Self {
            times: times.to_vec(),
            slices: times.iter().map(|&t| f(t)).collect(),
        }
    }
}

impl TestFunction for TestFunctionSeries {
    fn check_times(&self, times: &[f64]) -> Result<()> {
        if self.times.len() != times.len() || self.slices.len() != times.len() {
            return Err(Error::MismatchedCheckpoints(format!(
                "{} checkpoints but {} test-function slices",
                times.len(),
                self.slices.len()
            )));
        }
        if let Some((a, b)) = self
            .times
            .iter()
            .zip(times)
            .find(|(t, s)| (*t - *s).abs() > 1e-9 * s.abs().max(1.0))
        {
            return Err(Error::MismatchedCheckpoints(format!(
                "test function at t = {a}, checkpoint at t = {b}"
            )));
        }
        Ok(())
    }

    fn value(&self, j: usize, _t: f64, x: f64) -> f64 {
        self.slices[j].value(x)
    }

    fn dx(&self, j: usize, _t: f64, x: f64) -> f64 {
        self.slices[j].slope_right(x)
    }

    /// Second-order finite differences on a possibly non-uniform grid.
    fn dt(&self, j: usize, _t: f64, x: f64) -> f64 {
        let t = &self.times;
        let f = |i: usize| self.slices[i].value(x);
        let n = t.len();
        if n < 2 {
            return 0.0;
        }
        if n == 2 {
            return (f(1) - f(0)) / (t[1] - t[0]);
        }
        let (i0, i1, i2) = if j == 0 {
            (0, 1, 2)
        } else if j == n - 1 {
            (n - 3, n - 2, n - 1)
        } else {
            (j - 1, j, j + 1)
        };
        // Derivative at t[j] of the quadratic through the three points.
        let (a, b, c) = (t[i0], t[i1], t[i2]);
        let s = t[j];
        let l0 = ((s - b) + (s - c)) / ((a - b) * (a - c));
        let l1 = ((s - a) + (s - c)) / ((b - a) * (b - c));
        let l2 = ((s - a) + (s - b)) / ((c - a) * (c - b));
        l0 * f(i0) + l1 * f(i1) + l2 * f(i2)
    }
}

/// Smooth tent `height * (1 + rate t) * (1 - z^2)^3` with `z = (x - center) / half_width`,
/// zero for `|z| >= 1`. Twice continuously differentiable in `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothTent {
    pub center: f64,
    pub half_width: f64,
    pub height: f64,
    pub rate: f64,
}

impl SmoothTent {
    fn shape(&self, x: f64) -> (f64, f64) {
        let z = (x - self.center) / self.half_width;
        if z.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let q = 1.0 - z * z;
        (q * q * q, -6.0 * z * q * q / self.half_width)
    }
}

impl TestFunction for SmoothTent {
    fn value(&self, _j: usize, t: f64, x: f64) -> f64 {
        self.height * (1.0 + self.rate * t) * self.shape(x).0
    }

    fn dx(&self, _j: usize, t: f64, x: f64) -> f64 {
        self.height * (1.0 + self.rate * t) * self.shape(x).1
    }

    fn dt(&self, _j: usize, _t: f64, x: f64) -> f64 {
        self.height * self.rate * self.shape(x).0
    }
}

/// Absolute residual of the weak formulation along a trajectory:
///
/// ```text
/// int_0^T <mu_t, d_t phi + b d_x phi - c phi + int phi d eta> dt
///     - (<mu_T, phi(T)> - <mu_0, phi(0)>)
/// ```
///
/// The time integral uses the trapezoid rule over the checkpoints.
pub fn weak_residual(traj: &Trajectory, phi: &dyn TestFunction, ing: &ModelIngredients) -> Result<f64> {
    let cps = &traj.checkpoints;
    phi.check_times(&traj.times())?;
    let integrand: Vec<f64> = cps
        .iter()
        .enumerate()
        .map(|(j, cp)| {
            let t = cp.t;
            cp.measure
                .atoms()
                .iter()
                .map(|a| {
                    let x = a.location;
                    let births: f64 = ing
                        .eta
                        .channels
                        .iter()
                        .map(|ch| ch.weight.value(x) * phi.value(j, t, ch.location.value(x)))
                        .sum();
                    a.weight
                        * (phi.dt(j, t, x) + ing.b.value(x) * phi.dx(j, t, x) - ing.c.value(x) * phi.value(j, t, x)
                            + births)
                })
                .sum()
        })
        .collect();
    let integral: f64 = cps
        .windows(2)
        .zip(integrand.windows(2))
        .map(|(c, v)| 0.5 * (c[1].t - c[0].t) * (v[0] + v[1]))
        .sum();
    let n = cps.len() - 1;
    let pairing = |j: usize| -> f64 {
        cps[j]
            .measure
            .atoms()
            .iter()
            .map(|a| a.weight * phi.value(j, cps[j].t, a.location))
            .sum()
    };
    Ok((integral - (pairing(n) - pairing(0))).abs())
}
