//! Dual bounded-Lipschitz (flat) norm of signed atomic measures.
//!
//! For atoms `x_1 < ... < x_n` with weights `s_i` the norm is the value of
//! `max sum s_i u_i` over test-function values `u_i = phi(x_i)`.
//!
//! * `Classic` (`||phi||_inf + Lip(phi) <= 1`): with the sup-budget `a`, the
//!   constraints are `|u_i| <= a` and `|u_{i+1} - u_i| <= (1 - a) d_i`.
//! * `Paper` (`|phi| + |phi'| <= 1` pointwise): writing
//!   `g = G(u) = sign(u) * (-ln(1 - |u|))`, a function is admissible exactly
//!   when `G(phi)` is 1-Lipschitz, so the constraints are
//!   `|G(u_{i+1}) - G(u_i)| <= d_i`.
//!
//! Both chain problems are solved exactly by dynamic programming over the
//! value function of the last atom (see [`paper`] and [`classic`]). An
//! independent brute-force grid LP lives in [`oracle`].

pub mod classic;
pub mod oracle;
pub mod paper;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measures::AtomicMeasure;

pub use oracle::{flat_norm_oracle, flat_norm_oracle_with_cap, DEFAULT_NODE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormVariant {
    /// `|phi(x)| + |phi'(x)| <= 1` pointwise.
    #[default]
    Paper,
    /// `||phi||_inf + Lip(phi) <= 1`.
    Classic,
}

impl std::str::FromStr for NormVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(NormVariant::Paper),
            "classic" => Ok(NormVariant::Classic),
            other => Err(format!("unknown norm variant '{other}' (expected paper or classic)")),
        }
    }
}

impl std::fmt::Display for NormVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NormVariant::Paper => "paper",
            NormVariant::Classic => "classic",
        })
    }
}

/// Optimal test-function values at the atom locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub variant: NormVariant,
    pub locations: Vec<f64>,
    pub values: Vec<f64>,
    /// Sup-budget `a` of the classic variant.
    pub budget: Option<f64>,
}

impl Witness {
    /// `sum s_i u_i` for the measure the witness was computed for.
    pub fn objective(&self, mu: &AtomicMeasure) -> f64 {
        mu.weights().zip(&self.values).map(|(s, u)| s * u).sum()
    }

    /// Largest violation of the variant's constraint system.
    pub fn max_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        match self.variant {
            NormVariant::Classic => {
                let a = self.budget.unwrap_or(1.0);
                worst = worst.max(-a).max(a - 1.0);
                for &u in &self.values {
                    worst = worst.max(u.abs() - a);
                }
                for (x, u) in self.locations.windows(2).zip(self.values.windows(2)) {
                    worst = worst.max((u[1] - u[0]).abs() - (1.0 - a) * (x[1] - x[0]));
                }
            }
            NormVariant::Paper => {
                for &u in &self.values {
                    worst = worst.max(u.abs() - 1.0);
                }
                for (x, u) in self.locations.windows(2).zip(self.values.windows(2)) {
                    let d = x[1] - x[0];
                    let g = paper::to_g(u[0].clamp(-1.0, 1.0));
                    let lo = paper::from_g(g - d);
                    let hi = paper::from_g(g + d);
                    worst = worst.max(lo - u[1]).max(u[1] - hi);
                }
            }
        }
        worst
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }

    /// `location,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("location,value\n");
        for (x, u) in self.locations.iter().zip(&self.values) {
            out.push_str(&format!("{x:.16e},{u:.16e}\n"));
        }
        out
    }
}

/// Flat norm of `mu` together with an optimal witness.
pub fn flat_norm(mu: &AtomicMeasure, variant: NormVariant) -> Result<(f64, Witness)> {
    let xs: Vec<f64> = mu.locations().collect();
    let ss: Vec<f64> = mu.weights().collect();
    let (value, values, budget) = match variant {
        NormVariant::Paper => {
            let (v, u) = paper::solve(&xs, &ss)?;
            (v, u, None)
        }
        NormVariant::Classic => {
            let (v, u, a) = classic::solve(&xs, &ss)?;
            (v, u, Some(a))
        }
    };
    Ok((
        value,
        Witness {
            variant,
            locations: xs,
            values,
            budget,
        },
    ))
}

/// Flat norm value only.
pub fn flat_norm_value(mu: &AtomicMeasure, variant: NormVariant) -> Result<f64> {
    flat_norm(mu, variant).map(|(v, _)| v)
}

/// `flat_norm(mu - nu)`.
pub fn flat_distance(mu: &AtomicMeasure, nu: &AtomicMeasure, variant: NormVariant) -> Result<f64> {
    flat_norm_value(&mu.difference(nu), variant)
}
