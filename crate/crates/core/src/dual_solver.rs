//! Backward propagation of test functions for the birth-free evolution.
//!
//! With `X_t` the forward flow of `b`,
//!
//! ```text
//! psi_t(x) = exp(-int_0^t c(X_s(x)) ds) * phi0(X_t(x))
//! ```
//!
//! satisfies `<mu_t, phi0> = <mu_0, psi_t>` for the transport-decay part, which
//! fixes the orientation of the dual problem without any time reversal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bl_functions::PiecewiseLinearFn;
use crate::error::{Error, Result};
use crate::forward_solver::{characteristic, simulate, SimConfig};
use crate::measures::AtomicMeasure;
use crate::model_config::{kappa_margin, ModelIngredients};

/// Default Runge-Kutta steps per unit time for the backward characteristics.
pub const DEFAULT_STEPS_PER_UNIT: usize = 400;

/// Uniform grid `start, start + step, ..., <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(start >= 0.0 && end >= start && step > 0.0 && start.is_finite() && end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid {start}:{end}:{step} needs 0 <= start <= end and step > 0"
            )));
        }
        Ok(Self { start, end, step })
    }

    pub fn nodes(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl std::str::FromStr for Grid {
    type Err = Error;

    /// `start:end:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let parse = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad grid component '{p}' in '{s}'")))
        };
        match parts.as_slice() {
            [a, b, h] => Grid::new(parse(a)?, parse(b)?, parse(h)?),
            _ => Err(Error::InvalidParameter(format!("grid '{s}' must be start:end:step"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointResult {
    pub t: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// `max_j (|psi_j| + max(|left slope|, |right slope|))`.
    pub norm: f64,
    pub grid_step: f64,
}

impl AdjointResult {
    /// Linear interpolation of the samples, constant beyond the last node.
    pub fn to_function(&self) -> Result<PiecewiseLinearFn> {
        let mut xs = self.nodes.clone();
        let mut ys = self.values.clone();
        if xs[0] > 0.0 {
            xs.insert(0, 0.0);
            ys.insert(0, ys[0]);
        }
        PiecewiseLinearFn::new(xs, ys)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,psi\n");
        for (x, v) in self.nodes.iter().zip(&self.values) {
            out.push_str(&format!("{x:.16e},{v:.16e}\n"));
        }
        out
    }
}

/// Paper-norm estimate of sampled values from one-sided differences.
fn sampled_norm(nodes: &[f64], values: &[f64]) -> f64 {
    let n = values.len();
    (0..n)
        .map(|j| {
            let left = if j > 0 {
                ((values[j] - values[j - 1]) / (nodes[j] - nodes[j - 1])).abs()
            } else {
                0.0
            };
            let right = if j + 1 < n {
                ((values[j + 1] - values[j]) / (nodes[j + 1] - nodes[j])).abs()
            } else {
                0.0
            };
            values[j].abs() + left.max(right)
        })
        .fold(0.0, f64::max)
}

/// `psi_t` on `nodes`, using `steps` Runge-Kutta steps per characteristic.
pub fn adjoint_apply_with_steps(
    phi0: &PiecewiseLinearFn,
    ing: &ModelIngredients,
    t: f64,
    nodes: &[f64],
    steps: usize,
) -> Result<AdjointResult> {
    if nodes.is_empty() {
        return Err(Error::InvalidParameter("adjoint grid is empty".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time {t} must be >= 0")));
    }
    ing.check()?;
    let values: Vec<f64> = nodes
        .par_iter()
        .with_min_len(256)
        .map(|&x| {
            if t == 0.0 {
                return phi0.value(x);
            }
            let (y, integral) = characteristic(ing, x, t, steps);
            (-integral).exp() * phi0.value(y)
        })
        .collect();
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("adjoint produced {bad}")));
    }
    let grid_step = nodes
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    Ok(AdjointResult {
        t,
        norm: sampled_norm(nodes, &values),
        nodes: nodes.to_vec(),
        values,
        grid_step,
    })
}

/// `psi_t` on a uniform grid.
pub fn adjoint_apply(phi0: &PiecewiseLinearFn, ing: &ModelIngredients, t: f64, grid: &Grid) -> Result<AdjointResult> {
    let steps = ((t * DEFAULT_STEPS_PER_UNIT as f64).ceil() as usize).max(1);
    adjoint_apply_with_steps(phi0, ing, t, &grid.nodes(), steps)
}

/// `|<mu_t, phi0> - <mu_0, psi_t>|` for the birth-free evolution. The forward
/// side is the particle solver with `cfg`; the backward side integrates each
/// characteristic in one pass with `n_steps * ode_substeps` Runge-Kutta steps.
pub fn duality_gap(
    mu0: &AtomicMeasure,
    phi0: &PiecewiseLinearFn,
    ing: &ModelIngredients,
    t: f64,
    cfg: &SimConfig,
) -> Result<f64> {
    let free = ing.without_births();
    let cfg = SimConfig {
        t_end: t,
        coalesce_radius: 0.0,
        prune: 0.0,
        checkpoint_every: usize::MAX,
        ..cfg.clone()
    };
    let forward = simulate(mu0, &free, &cfg)?;
    let lhs = forward.final_measure().pair(phi0);
    let nodes: Vec<f64> = mu0.locations().collect();
    if nodes.is_empty() {
        return Ok(lhs.abs());
    }
    let steps = (cfg.n_steps() * cfg.ode_substeps).max(1);
    let psi = adjoint_apply_with_steps(phi0, &free, t, &nodes, steps)?;
    let rhs: f64 = mu0.weights().zip(&psi.values).map(|(w, v)| w * v).sum();
    Ok((lhs - rhs).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionCheck {
    pub norm_t: f64,
    pub bound: f64,
    pub kappa: f64,
    pub grid_step: f64,
    pub pass: bool,
}

/// Compare the sampled norm of `psi_t` with `e^{-kappa t} ||phi0||`.
///
/// Passes when `norm_t <= bound * (1 + h) + 1e-9` with `h` the grid step,
/// which absorbs the first-order error of the one-sided differences.
pub fn dual_contraction_check(
    phi0: &PiecewiseLinearFn,
    ing: &ModelIngredients,
    t: f64,
    grid: &Grid,
) -> Result<ContractionCheck> {
    ing.check()?;
    let kappa = kappa_margin(ing).ok_or(Error::KappaAbsent)?;
    let psi = adjoint_apply(phi0, &ing.without_births(), t, grid)?;
    let bound = (-kappa * t).exp() * phi0.bl_norm_paper()?;
    let pass = psi.norm <= bound * (1.0 + grid.step) + 1e-9;
    Ok(ContractionCheck {
        norm_t: psi.norm,
        bound,
        kappa,
        grid_step: grid.step,
        pass,
    })
}
