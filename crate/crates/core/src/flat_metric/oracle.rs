//! Brute-force grid oracle: the dual problem over continuous piecewise-linear
//! test functions on a uniform grid, solved as a linear program.
//!
//! Every grid function satisfying the discrete constraints is admissible for
//! the continuous problem, so the oracle value is a lower bound that converges
//! as the step shrinks.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};

use super::NormVariant;
use crate::error::{Error, Result};
use crate::measures::AtomicMeasure;

pub const DEFAULT_NODE_CAP: usize = 20_000;

/// Oracle with the default node cap.
pub fn flat_norm_oracle(mu: &AtomicMeasure, variant: NormVariant, h: f64, pad: f64) -> Result<f64> {
    flat_norm_oracle_with_cap(mu, variant, h, pad, DEFAULT_NODE_CAP)
}

fn expr(terms: &[(Variable, f64)]) -> LinearExpr {
    let mut e = LinearExpr::empty();
    for &(v, c) in terms {
        if c != 0.0 {
            e.add(v, c);
        }
    }
    e
}

pub fn flat_norm_oracle_with_cap(
    mu: &AtomicMeasure,
    variant: NormVariant,
    h: f64,
    pad: f64,
    node_cap: usize,
) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid step {h} must be positive")));
    }
    if !(pad >= 0.0 && pad.is_finite()) {
        return Err(Error::InvalidParameter(format!("domain pad {pad} must be >= 0")));
    }
    let Some(max_x) = mu.max_location() else {
        return Ok(0.0);
    };
    let end = max_x + pad;
    let cells = (end / h).ceil();
    let estimate = cells + 1.0 + mu.len() as f64;
    if estimate > node_cap as f64 {
        return Err(Error::GridTooLarge {
            nodes: estimate.min(usize::MAX as f64) as usize,
            cap: node_cap,
        });
    }
    let cells = cells as usize;

    let snap = h * 1e-6;
    let mut nodes: Vec<f64> = (0..=cells).map(|j| j as f64 * h).collect();
    nodes.extend(mu.locations());
    nodes.sort_by(f64::total_cmp);
    nodes.dedup_by(|later, earlier| *later - *earlier <= snap);

    let mut objective = vec![0.0; nodes.len()];
    for atom in mu.atoms() {
        let j = nodes.partition_point(|&z| z < atom.location - snap);
        objective[j] += atom.weight;
    }

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let v: Vec<Variable> = objective.iter().map(|&s| lp.add_var(s, (-1.0, 1.0))).collect();
    match variant {
        NormVariant::Paper => {
            // |v_e| + |v_{j+1} - v_j| / h_j <= 1 at both ends e of every cell,
            // scaled by h_j.
            for j in 0..nodes.len() - 1 {
                let hj = nodes[j + 1] - nodes[j];
                for sd in [1.0, -1.0] {
                    for sv in [1.0, -1.0] {
                        lp.add_constraint(expr(&[(v[j], sv * hj - sd), (v[j + 1], sd)]), ComparisonOp::Le, hj);
                        lp.add_constraint(expr(&[(v[j], -sd), (v[j + 1], sv * hj + sd)]), ComparisonOp::Le, hj);
                    }
                }
            }
        }
        NormVariant::Classic => {
            let a = lp.add_var(0.0, (0.0, 1.0));
            for &vj in &v {
                lp.add_constraint(expr(&[(vj, 1.0), (a, -1.0)]), ComparisonOp::Le, 0.0);
                lp.add_constraint(expr(&[(vj, -1.0), (a, -1.0)]), ComparisonOp::Le, 0.0);
            }
            for j in 0..nodes.len() - 1 {
                let hj = nodes[j + 1] - nodes[j];
                for sd in [1.0, -1.0] {
                    lp.add_constraint(expr(&[(v[j + 1], sd), (v[j], -sd), (a, hj)]), ComparisonOp::Le, hj);
                }
            }
        }
    }
    let solution = lp.solve().map_err(|e| Error::LinearProgram(e.to_string()))?;
    Ok(solution.objective())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_witness_survives() {
        let v = flat_norm_oracle(&AtomicMeasure::dirac(3.0), NormVariant::Classic, 0.01, 2.0).unwrap();
        assert!((v - 1.0).abs() <= 0.02);
    }

    #[test]
    fn grid_cap_is_enforced() {
        let r = flat_norm_oracle_with_cap(&AtomicMeasure::dirac(3.0), NormVariant::Paper, 0.01, 2.0, 100);
        assert!(matches!(r, Err(Error::GridTooLarge { .. })));
        assert!(flat_norm_oracle(&AtomicMeasure::dirac(1.0), NormVariant::Paper, 0.0, 1.0).is_err());
    }
}
