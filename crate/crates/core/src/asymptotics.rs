//! Long-time diagnostics: Malthusian parameter, stable profile, exponential
//! convergence fit, classification, the Euler-Lotka root of the renewal
//! reduction and a finite-volume eigensolver for the generator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bl_functions::PiecewiseLinearFn;
use crate::error::{Error, Result};
use crate::flat_metric::{flat_distance, NormVariant};
use crate::forward_solver::{Checkpoint, Trajectory};
use crate::measures::{Atom, AtomicMeasure};
use crate::model_config::ModelIngredients;

/// `|lambda|` below this is treated as zero by [`classify`].
pub const LAMBDA_TOL: f64 = 1e-3;

/// Relative size below which increments of the normalized profile are noise.
pub const NOISE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Extinction,
    GrowthAttractor,
    Inconclusive,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Extinction => "Extinction",
            Classification::GrowthAttractor => "GrowthAttractor",
            Classification::Inconclusive => "Inconclusive",
        };
        f.write_str(s)
    }
}

/// Least-squares line `y = intercept + slope * x` with its R^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub(crate) fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).max(0.0) } else { 1.0 };
    LineFit { slope, intercept, r2 }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaFit {
    pub lambda: f64,
    pub r2: f64,
    pub points: usize,
}

/// Slope of `log mass(t)` over the checkpoints with `t` in `window`.
pub fn estimate_lambda(traj: &Trajectory, window: (f64, f64)) -> Result<LambdaFit> {
    let (ta, tb) = window;
    if !(tb > ta) {
        return Err(Error::InvalidParameter(format!("window [{ta}, {tb}] is empty")));
    }
    let eps = 1e-9 * tb.abs().max(1.0);
    let points: Vec<&Checkpoint> = traj
        .checkpoints
        .iter()
        .filter(|c| c.t >= ta - eps && c.t <= tb + eps)
        .collect();
    if points.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "window [{ta}, {tb}] holds {} checkpoints; need at least 2",
            points.len()
        )));
    }
    if let Some(c) = points.iter().find(|c| !(c.mass > 0.0)) {
        return Err(Error::InvalidParameter(format!("mass {} at t = {} is not positive", c.mass, c.t)));
    }
    let ts: Vec<f64> = points.iter().map(|c| c.t).collect();
    let ls: Vec<f64> = points.iter().map(|c| c.mass.ln()).collect();
    let fit = fit_line(&ts, &ls);
    Ok(LambdaFit {
        lambda: fit.slope,
        r2: fit.r2,
        points: points.len(),
    })
}

fn tail_of(traj: &Trajectory, tail: usize) -> Result<&[Checkpoint]> {
    let n = traj.checkpoints.len();
    if tail == 0 || tail > n {
        return Err(Error::InvalidParameter(format!("tail {tail} must be in 1..={n}")));
    }
    let cps = &traj.checkpoints[n - tail..];
    if let Some(c) = cps.iter().find(|c| !(c.measure.tv_norm() > 0.0)) {
        return Err(Error::InvalidParameter(format!("measure at t = {} has no mass", c.t)));
    }
    Ok(cps)
}

fn normalized(m: &AtomicMeasure) -> AtomicMeasure {
    m.scaled(1.0 / m.tv_norm())
}

/// Paper-variant flat distance, skipping the dynamic program when the total
/// variation of the difference already falls below `floor`.
fn distance_above(a: &AtomicMeasure, b: &AtomicMeasure, floor: f64) -> Result<f64> {
    let diff = a.difference(b);
    let tv = diff.tv_norm();
    if tv <= floor {
        return Ok(tv);
    }
    flat_distance(a, b, NormVariant::Paper)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableProfile {
    /// Unit-mass final measure.
    pub profile: AtomicMeasure,
    /// `(t_j, flat_distance(nu_j, nu_last))` for the tail checkpoints before
    /// the last.
    pub series: Vec<(f64, f64)>,
}

impl StableProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,distance\n");
        for (t, d) in &self.series {
            out.push_str(&format!("{t:.16e},{d:.16e}\n"));
        }
        out
    }
}

/// Normalize the last `tail` checkpoints and measure their distance to the
/// final one.
pub fn stable_profile(traj: &Trajectory, tail: usize) -> Result<StableProfile> {
    let cps = tail_of(traj, tail)?;
    let nus: Vec<AtomicMeasure> = cps.iter().map(|c| normalized(&c.measure)).collect();
    let last = nus.last().expect("tail is non-empty");
    let distances = nus[..nus.len() - 1]
        .par_iter()
        .map(|nu| flat_distance(nu, last, NormVariant::Paper))
        .collect::<Result<Vec<f64>>>()?;
    Ok(StableProfile {
        profile: last.clone(),
        series: cps.iter().map(|c| c.t).zip(distances).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AegFit {
    /// Convergence rate; `+inf` when every increment is below the noise floor.
    pub epsilon: f64,
    pub m: f64,
    pub r2: f64,
    /// `(t_j, flat_distance(nu_j, nu_{j+1}))` over the tail.
    pub increments: Vec<(f64, f64)>,
    /// Number of increments above the noise floor used in the fit.
    pub fitted: usize,
}

impl AegFit {
    pub fn converged(&self) -> bool {
        self.epsilon > 0.0
    }

    /// Serialized form with the infinite sentinel spelled out.
    pub fn epsilon_json(&self) -> serde_json::Value {
        if self.epsilon.is_infinite() {
            serde_json::Value::String("inf".into())
        } else {
            serde_json::json!(self.epsilon)
        }
    }
}

/// Exponential fit `||nu_t - nu_inf|| <= M e^{-eps t}` over the last `tail`
/// checkpoints, with `nu` the unit-mass profiles.
///
/// The fit uses successive increments `d_j = ||nu_j - nu_{j+1}||`: if they
/// decay like `K e^{-eps t_j}` at a fixed stride `Delta`, the telescoping sum
/// gives `M = K / (1 - e^{-eps Delta})`. Increments below the noise floor are
/// dropped; if all of them are, the profile is already fixed and `eps = +inf`.
/// Slopes within rounding of zero are reported as `eps = 0`.
pub fn aeg_fit(traj: &Trajectory, tail: usize) -> Result<AegFit> {
    if tail < 4 {
        return Err(Error::InvalidParameter(format!("aeg fit needs tail >= 4, got {tail}")));
    }
    let cps = tail_of(traj, tail)?;
    let nus: Vec<AtomicMeasure> = cps.iter().map(|c| normalized(&c.measure)).collect();
    let increments = (0..nus.len() - 1)
        .into_par_iter()
        .map(|j| distance_above(&nus[j], &nus[j + 1], NOISE_FLOOR).map(|d| (cps[j].t, d)))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let kept: Vec<(f64, f64)> = increments.iter().copied().filter(|&(_, d)| d > NOISE_FLOOR).collect();
    let span = cps.last().expect("tail").t - cps[0].t;
    let stride = span / (cps.len() - 1) as f64;
    if kept.is_empty() {
        return Ok(AegFit {
            epsilon: f64::INFINITY,
            m: 1.0,
            r2: 1.0,
            increments,
            fitted: 0,
        });
    }
    if kept.len() == 1 {
        let last_below = increments.last().map_or(false, |&(_, d)| d <= NOISE_FLOOR);
        return Ok(AegFit {
            epsilon: if last_below { f64::INFINITY } else { 0.0 },
            m: kept[0].1.max(1.0),
            r2: 1.0,
            increments,
            fitted: 1,
        });
    }
    let ts: Vec<f64> = kept.iter().map(|p| p.0).collect();
    let ls: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let fit = fit_line(&ts, &ls);
    let fit_span = ts.last().expect("kept") - ts[0];
    let mut epsilon = -fit.slope;
    if ((-epsilon * fit_span).exp() - 1.0).abs() <= 1e-8 {
        epsilon = 0.0;
    }
    let k = fit.intercept.exp();
    let m = if epsilon > 0.0 {
        (k / (-(-epsilon * stride).exp_m1())).max(1.0)
    } else {
        k.max(1.0)
    };
    Ok(AegFit {
        epsilon,
        m,
        r2: fit.r2,
        increments,
        fitted: kept.len(),
    })
}

/// Extinction iff `lambda < -LAMBDA_TOL` and the mass decreased;
/// GrowthAttractor iff `lambda >= -LAMBDA_TOL` and the profile converges;
/// Inconclusive otherwise.
pub fn classify(traj: &Trajectory, lambda: f64, aeg: Option<&AegFit>) -> Classification {
    let m0 = traj.checkpoints[0].mass;
    let m1 = traj.last().mass;
    if lambda < -LAMBDA_TOL && m1 < m0 {
        Classification::Extinction
    } else if lambda >= -LAMBDA_TOL && aeg.map_or(false, AegFit::converged) {
        Classification::GrowthAttractor
    } else {
        Classification::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub lambda_star: f64,
    pub lambda_r2: f64,
    pub profile: AtomicMeasure,
    pub epsilon: f64,
    pub m: f64,
    pub aeg_r2: f64,
    pub classification: Classification,
    pub tail_distances: Vec<(f64, f64)>,
    pub increments: Vec<(f64, f64)>,
}

/// All diagnostics for one trajectory.
pub fn analyze(traj: &Trajectory, window: (f64, f64), tail: usize) -> Result<SpectralEstimate> {
    let lam = estimate_lambda(traj, window)?;
    let prof = stable_profile(traj, tail)?;
    let aeg = if tail >= 4 { Some(aeg_fit(traj, tail)?) } else { None };
    let classification = classify(traj, lam.lambda, aeg.as_ref());
    Ok(SpectralEstimate {
        lambda_star: lam.lambda,
        lambda_r2: lam.r2,
        profile: prof.profile,
        epsilon: aeg.as_ref().map_or(0.0, |a| a.epsilon),
        m: aeg.as_ref().map_or(1.0, |a| a.m),
        aeg_r2: aeg.as_ref().map_or(0.0, |a| a.r2),
        classification,
        tail_distances: prof.series,
        increments: aeg.map(|a| a.increments).unwrap_or_default(),
    })
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Renewal function `F(lambda) = int_0^inf beta(b0 a) e^{-lambda a - int_0^a c(b0 s) ds} da - 1`.
///
/// The integral is split at the breakpoints of `beta` and `c`; past the last
/// one both are constant and the tail is integrated in closed form.
pub fn lotka_function(beta: &PiecewiseLinearFn, c: &PiecewiseLinearFn, b0: f64, lambda: f64) -> f64 {
    let mut cuts: Vec<f64> = beta
        .breakpoints()
        .iter()
        .chain(c.breakpoints())
        .map(|x| x / b0)
        .filter(|&a| a > 0.0)
        .collect();
    cuts.push(0.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    // Running `int_0^a c(b0 s) ds`; `c` is linear between cuts.
    let mut hazard = 0.0;
    for w in cuts.windows(2) {
        let (a0, a1) = (w[0], w[1]);
        let c0 = c.value(b0 * a0);
        let slope = (c.value(b0 * a1) - c0) / (a1 - a0);
        let h0 = hazard;
        let f = |a: f64| {
            let s = a - a0;
            let exponent = -lambda * a - h0 - c0 * s - 0.5 * slope * s * s;
            beta.value(b0 * a) * exponent.exp()
        };
        let scale = f(a0).abs().max(f(a1).abs()).max(1e-300);
        total += adaptive_simpson(&f, a0, a1, 1e-14 * scale.max(1.0));
        hazard += 0.5 * (c0 + c.value(b0 * a1)) * (a1 - a0);
    }
    let a_end = *cuts.last().expect("cuts");
    let beta_inf = beta.value(b0 * a_end);
    let c_inf = c.value(b0 * a_end);
    if beta_inf != 0.0 {
        let rate = lambda + c_inf;
        if rate <= 0.0 {
            return f64::INFINITY;
        }
        total += beta_inf * (-lambda * a_end - hazard).exp() / rate;
    }
    total - 1.0
}

/// Unique real root of [`lotka_function`], by bisection on
/// `[-sup|c| - 1, sup|beta| + 1]`.
pub fn lotka_root(beta: &PiecewiseLinearFn, c: &PiecewiseLinearFn, b0: f64) -> Result<f64> {
    if !(b0 > 0.0 && b0.is_finite()) {
        return Err(Error::InvalidParameter(format!("b0 = {b0} must be positive")));
    }
    let beta_sup = beta.sup_abs()?;
    let c_sup = c.sup_abs()?;
    if beta.min_value()? < 0.0 {
        return Err(Error::InvalidParameter("beta must be non-negative".into()));
    }
    if beta_sup == 0.0 {
        return Err(Error::InvalidParameter("beta is identically zero".into()));
    }
    let (mut lo, mut hi) = (-c_sup - 1.0, beta_sup + 1.0);
    let f_lo = lotka_function(beta, c, b0, lo);
    let f_hi = lotka_function(beta, c, b0, hi);
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::NoSignChange {
            low: lo,
            high: hi,
            f_low: f_lo,
            f_high: f_hi,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lotka_function(beta, c, b0, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sparse upwind finite-volume discretization of the generator, stored by
/// rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMatrix {
    pub n: usize,
    pub h: f64,
    pub x_max: f64,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl GeneratorMatrix {
    fn from_triplets(n: usize, h: f64, x_max: f64, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_start = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().expect("entry") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_start[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_start[i + 1] += row_start[i];
        }
        Self {
            n,
            h,
            x_max,
            row_start,
            cols,
            vals,
        }
    }

    /// Build from a dense row-major matrix.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("matrix must be square".into()));
        }
        let triplets = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(move |(j, &v)| (i, j, v)))
            .collect();
        Ok(Self::from_triplets(n, 1.0, n as f64, triplets))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.row_start[i], self.row_start[i + 1]);
        match self.cols[a..b].binary_search(&j) {
            Ok(k) => self.vals[a + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn is_metzler(&self) -> bool {
        (0..self.n).all(|i| {
            (self.row_start[i]..self.row_start[i + 1]).all(|k| self.cols[k] == i || self.vals[k] >= 0.0)
        })
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for (&j, &v) in self.cols.iter().zip(&self.vals) {
            sums[j] += v;
        }
        sums
    }

    /// `y = (G + shift I) x`.
    pub fn apply_shifted(&self, x: &[f64], shift: f64, y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = shift * x[i];
            for k in self.row_start[i]..self.row_start[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc;
        }
    }

    /// Cell centers.
    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| (i as f64 + 0.5) * self.h).collect()
    }
}

/// Upwind discretization on `n` cells of `[0, x_max]`.
///
/// Cell `i` loses mass at rate `b(x_{i+1/2}) / h + c(x_i)`, passes the flux on
/// to cell `i + 1` (or out of the domain), and cell `j` sends births of rate
/// `W_k(x_j)` into the cell containing `L_k(x_j)`.
pub fn generator_matrix(ing: &ModelIngredients, x_max: f64, n: usize) -> Result<GeneratorMatrix> {
    ing.check()?;
    if n == 0 || !(x_max > 0.0 && x_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("need n >= 1 and x_max > 0, got n = {n}, x_max = {x_max}")));
    }
    let h = x_max / n as f64;
    let mut triplets = Vec::with_capacity(3 * n);
    for i in 0..n {
        let x = (i as f64 + 0.5) * h;
        let flux = ing.b.value((i + 1) as f64 * h) / h;
        triplets.push((i, i, -flux - ing.c.value(x)));
        if i + 1 < n {
            triplets.push((i + 1, i, flux));
        }
        for ch in &ing.eta.channels {
            let w = ch.weight.value(x);
            if w == 0.0 {
                continue;
            }
            let loc = ch.location.value(x).max(0.0);
            if loc >= x_max {
                return Err(Error::InvalidParameter(format!(
                    "offspring state {loc} of parent {x} lies beyond x_max = {x_max}"
                )));
            }
            let cell = ((loc / h).floor() as usize).min(n - 1);
            triplets.push((cell, i, w));
        }
    }
    Ok(GeneratorMatrix::from_triplets(n, h, x_max, triplets))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub lambda: f64,
    /// Non-negative, unit sum.
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl Eigenpair {
    /// The eigenvector as a unit-mass measure at the cell centers.
    pub fn to_measure(&self, g: &GeneratorMatrix) -> AtomicMeasure {
        AtomicMeasure::canonical(
            g.centers()
                .into_iter()
                .zip(&self.vector)
                .map(|(x, &w)| Atom::new(x, w))
                .collect(),
        )
    }

    pub fn to_csv(&self, g: &GeneratorMatrix) -> String {
        let mut out = String::from("x,v\n");
        for (x, v) in g.centers().iter().zip(&self.vector) {
            out.push_str(&format!("{x:.16e},{v:.16e}\n"));
        }
        out
    }
}

pub const MAX_POWER_ITERATIONS: usize = 1_000_000;

/// Power iteration on `G + sigma I` with `sigma = max |G_ii| + 1`, stopped
/// when both the Rayleigh quotient and the unit-sum iterate settle to 1e-10.
pub fn leading_eigenpair(g: &GeneratorMatrix) -> Result<Eigenpair> {
    leading_eigenpair_with_cap(g, MAX_POWER_ITERATIONS)
}

pub fn leading_eigenpair_with_cap(g: &GeneratorMatrix, cap: usize) -> Result<Eigenpair> {
    if !g.is_metzler() {
        return Err(Error::InvalidParameter("matrix has negative off-diagonal entries".into()));
    }
    let n = g.n;
    let sigma = g.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs())) + 1.0;
    let mut v = vec![1.0 / n as f64; n];
    let mut y = vec![0.0; n];
    let mut rho_prev = f64::NAN;
    for it in 1..=cap {
        g.apply_shifted(&v, sigma, &mut y);
        let vv: f64 = v.iter().map(|a| a * a).sum();
        let rho = v.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / vv;
        let s: f64 = y.iter().sum();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Numerical(format!("power iterate has sum {s}")));
        }
        let mut change = 0.0;
        for (vi, yi) in v.iter_mut().zip(&y) {
            let next = yi / s;
            change += (next - *vi).abs();
            *vi = next;
        }
        if (rho - rho_prev).abs() < 1e-10 && change < 1e-10 {
            let lambda = rho - sigma;
            return Ok(Eigenpair {
                lambda,
                residual: residual(g, &v, lambda),
                vector: v,
                iterations: it,
            });
        }
        rho_prev = rho;
    }
    let lambda = rho_prev - sigma;
    Err(Error::NonConvergence {
        iterations: cap,
        residual: residual(g, &v, lambda),
    })
}

fn residual(g: &GeneratorMatrix, v: &[f64], lambda: f64) -> f64 {
    let mut y = vec![0.0; g.n];
    g.apply_shifted(v, -lambda, &mut y);
    let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    y.iter().map(|a| a * a).sum::<f64>().sqrt() / norm
}
