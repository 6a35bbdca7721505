//! Continuous piecewise-linear functions on the half-line `[0, inf)`.
//!
//! These represent test functions as well as the model ingredients `b`, `c`
//! and the kernel channels. Both bounded-Lipschitz norms are computed exactly:
//!
//! ```text
//! paper:   ||f|| = sup_x ( |f(x)| + |f'(x)| )
//! classic: ||f|| = sup_x |f(x)| + Lip(f)
//! ```
//!
//! On each linear piece `|f| + |f'|` is convex in `x`, so its supremum over the
//! piece sits at one of the two endpoints, with the piece's own slope.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Behaviour beyond the last breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Extension {
    #[default]
    Constant,
    /// Continue with the given slope. Only finite for slope zero.
    Linear(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlfRepr", into = "PlfRepr")]
pub struct PiecewiseLinearFn {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    extension: Extension,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlfRepr {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    #[serde(default)]
    extension: Extension,
}

impl TryFrom<PlfRepr> for PiecewiseLinearFn {
    type Error = Error;

    fn try_from(repr: PlfRepr) -> Result<Self> {
        PiecewiseLinearFn::with_extension(repr.breakpoints, repr.values, repr.extension)
    }
}

impl From<PiecewiseLinearFn> for PlfRepr {
    fn from(f: PiecewiseLinearFn) -> Self {
        PlfRepr {
            breakpoints: f.breakpoints,
            values: f.values,
            extension: f.extension,
        }
    }
}

impl PiecewiseLinearFn {
    /// Function through `(breakpoints[i], values[i])`, constant after the last breakpoint.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::with_extension(breakpoints, values, Extension::Constant)
    }

    pub fn with_extension(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        extension: Extension,
    ) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidFunction("no breakpoints".into()));
        }
        if breakpoints.len() != values.len() {
            return Err(Error::InvalidFunction(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidFunction(format!(
                "first breakpoint must be 0, got {}",
                breakpoints[0]
            )));
        }
        if let Some(bad) = breakpoints.iter().chain(&values).find(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(format!("non-finite entry {bad}")));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidFunction(format!(
                "breakpoints not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        if let Extension::Linear(s) = extension {
            if !s.is_finite() {
                return Err(Error::InvalidFunction(format!("non-finite extension slope {s}")));
            }
        }
        Ok(Self {
            breakpoints,
            values,
            extension,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            breakpoints: vec![0.0],
            values: vec![value],
            extension: Extension::Constant,
        }
    }

    /// Build from `(x, y)` pairs; the first `x` must be 0.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        let (xs, ys) = points.iter().copied().unzip();
        Self::new(xs, ys)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&v| v == self.values[0]) && self.extension_slope() == 0.0
    }

    pub fn is_bounded(&self) -> bool {
        self.extension_slope() == 0.0
    }

    pub fn extension_slope(&self) -> f64 {
        match self.extension {
            Extension::Constant => 0.0,
            Extension::Linear(s) => s,
        }
    }

    fn last_breakpoint(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Evaluate at `x >= 0`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < 0.0 || x.is_nan() {
            return Err(Error::NegativeArgument(x));
        }
        Ok(self.value(x))
    }

    /// Evaluate without the domain check. Arguments below 0 are treated as 0.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let n = self.breakpoints.len();
        if n == 1 {
            return self.values[0] + self.extension_slope() * x.max(0.0);
        }
        let last = self.breakpoints[n - 1];
        if x >= last {
            return self.values[n - 1] + self.extension_slope() * (x - last);
        }
        if x <= 0.0 {
            return self.values[0];
        }
        let i = self.breakpoints.partition_point(|&b| b <= x) - 1;
        let (x0, x1) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Slope of each finite piece, in order.
    pub fn piece_slopes(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect()
    }

    /// Right derivative at `x`.
    pub fn slope_right(&self, x: f64) -> f64 {
        let n = self.breakpoints.len();
        if x >= self.last_breakpoint() {
            return self.extension_slope();
        }
        let i = self.breakpoints.partition_point(|&b| b <= x.max(0.0)) - 1;
        debug_assert!(i + 1 < n);
        (self.values[i + 1] - self.values[i]) / (self.breakpoints[i + 1] - self.breakpoints[i])
    }

    /// Left derivative at `x`; at `x = 0` this is the right derivative.
    pub fn slope_left(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.slope_right(0.0);
        }
        if x > self.last_breakpoint() {
            return self.extension_slope();
        }
        let i = self.breakpoints.partition_point(|&b| b < x) - 1;
        (self.values[i + 1] - self.values[i]) / (self.breakpoints[i + 1] - self.breakpoints[i])
    }

    fn require_bounded(&self) -> Result<()> {
        if self.is_bounded() {
            Ok(())
        } else {
            Err(Error::Unbounded(self.extension_slope()))
        }
    }

    /// `sup |f|`.
    pub fn sup_abs(&self) -> Result<f64> {
        self.require_bounded()?;
        Ok(self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    }

    pub fn max_value(&self) -> Result<f64> {
        self.require_bounded()?;
        Ok(self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn min_value(&self) -> Result<f64> {
        self.require_bounded()?;
        Ok(self.values.iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// Global Lipschitz constant, including the extension.
    pub fn lipschitz(&self) -> f64 {
        self.piece_slopes()
            .into_iter()
            .fold(self.extension_slope().abs(), |m, s| m.max(s.abs()))
    }

    /// `sup_x (|f(x)| + |f'(x)|)`, taking both one-sided slopes at breakpoints.
    pub fn bl_norm_paper(&self) -> Result<f64> {
        self.require_bounded()?;
        let tail = self.values.last().unwrap().abs();
        let norm = self
            .breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| {
                let slope = ((y[1] - y[0]) / (x[1] - x[0])).abs();
                y[0].abs().max(y[1].abs()) + slope
            })
            .fold(tail, f64::max);
        Ok(norm)
    }

    /// `sup |f| + Lip(f)`.
    pub fn bl_norm_classic(&self) -> Result<f64> {
        Ok(self.sup_abs()? + self.lipschitz())
    }

    fn merged_breakpoints(&self, other: &Self) -> Vec<f64> {
        let mut xs: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .copied()
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    }

    /// `alpha * self + beta * other`, exact on the merged breakpoint set.
    pub fn linear_combination(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        let xs = self.merged_breakpoints(other);
        let ys = xs
            .iter()
            .map(|&x| alpha * self.value(x) + beta * other.value(x))
            .collect();
        let slope = alpha * self.extension_slope() + beta * other.extension_slope();
        let extension = if slope == 0.0 {
            Extension::Constant
        } else {
            Extension::Linear(slope)
        };
        Self {
            breakpoints: xs,
            values: ys,
            extension,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let extension = match self.extension {
            Extension::Constant => Extension::Constant,
            Extension::Linear(s) => Extension::Linear(s * factor),
        };
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            extension,
        }
    }

    /// Interpolate samples on an increasing grid starting at 0.
    pub fn interpolate(grid: &[f64], samples: &[f64]) -> Result<Self> {
        Self::new(grid.to_vec(), samples.to_vec())
    }
}
