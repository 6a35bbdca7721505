//! Model ingredients `(b, c, eta)`, their validation and derived constants.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bl_functions::PiecewiseLinearFn;
use crate::error::{Error, Result};
use crate::flat_metric::{flat_distance, NormVariant};
use crate::measures::{Atom, AtomicMeasure};

/// One offspring channel: an individual of state `y` produces offspring of
/// state `location(y)` at rate `weight(y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Channel {
    pub location: PiecewiseLinearFn,
    pub weight: PiecewiseLinearFn,
}

/// `eta(y) = sum_k W_k(y) delta_{L_k(y)}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Kernel {
    pub channels: Vec<Channel>,
}

impl Kernel {
    pub fn none() -> Self {
        Self::default()
    }

    /// All offspring born at state 0 with rate `beta(y)`.
    pub fn at_zero(beta: PiecewiseLinearFn) -> Self {
        Self {
            channels: vec![Channel {
                location: PiecewiseLinearFn::constant(0.0),
                weight: beta,
            }],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.channels
            .iter()
            .all(|ch| ch.weight.values().iter().all(|&w| w == 0.0) && ch.weight.extension_slope() == 0.0)
    }

    /// The offspring measure `eta(y)`.
    pub fn at(&self, y: f64) -> AtomicMeasure {
        AtomicMeasure::canonical(
            self.channels
                .iter()
                .map(|ch| Atom::new(ch.location.value(y).max(0.0), ch.weight.value(y)))
                .collect(),
        )
    }

    /// `sum_k W_k(y)`, the total birth rate at `y`.
    pub fn total_rate(&self, y: f64) -> f64 {
        self.channels.iter().map(|ch| ch.weight.value(y)).sum()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self
            .channels
            .iter()
            .flat_map(|ch| ch.location.breakpoints().iter().chain(ch.weight.breakpoints()))
            .copied()
            .collect();
        xs.push(0.0);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelIngredients {
    pub b: PiecewiseLinearFn,
    pub c: PiecewiseLinearFn,
    #[serde(default)]
    pub eta: Kernel,
}

impl ModelIngredients {
    pub fn new(b: PiecewiseLinearFn, c: PiecewiseLinearFn, eta: Kernel) -> Self {
        Self { b, c, eta }
    }

    /// Constant growth `b = 1`, death rate `c0` and birth rate `beta0` at state 0.
    pub fn lotka(beta0: f64, c0: f64) -> Self {
        Self::new(
            PiecewiseLinearFn::constant(1.0),
            PiecewiseLinearFn::constant(c0),
            Kernel::at_zero(PiecewiseLinearFn::constant(beta0)),
        )
    }

    /// Same transport and decay, no births.
    pub fn without_births(&self) -> Self {
        Self::new(self.b.clone(), self.c.clone(), Kernel::none())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Assumptions(format!("model schema: {e}")))
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("ingredients serialise");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Problems with the standing assumptions; empty when all hold.
    pub fn assumption_issues(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if !self.c.is_bounded() {
            issues.push("(i) c must be bounded (constant extension)".to_string());
        }
        for (k, ch) in self.eta.channels.iter().enumerate() {
            if !ch.location.is_bounded() || !ch.weight.is_bounded() {
                issues.push(format!("(ii) channel {k}: location and weight must be bounded"));
                continue;
            }
            if ch.weight.min_value().unwrap_or(0.0) < 0.0 {
                issues.push(format!("(ii) channel {k}: weight takes negative values"));
            }
            if ch.location.min_value().unwrap_or(0.0) < 0.0 {
                issues.push(format!("(ii) channel {k}: offspring location takes negative values"));
            }
        }
        if !self.b.is_bounded() {
            issues.push("(iii) b must be bounded (constant extension)".to_string());
        } else if self.b.min_value().unwrap_or(0.0) <= 0.0 {
            issues.push("(iii) b must be strictly positive".to_string());
        }
        issues
    }

    /// Fails with [`Error::Assumptions`] unless all standing assumptions hold.
    pub fn check(&self) -> Result<()> {
        let issues = self.assumption_issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Assumptions(issues.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaNorms {
    /// `sup_y ||eta(y)||`.
    pub bc: f64,
    /// Channel-wise upper bound on the Lipschitz constant of `y -> eta(y)`.
    pub lip: f64,
    /// Sampled lower estimate of the same Lipschitz constant.
    pub lip_sampled: f64,
    /// `bc + lip`.
    pub bl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub c_bounded: bool,
    pub eta_bl_valued: bool,
    pub b_bounded_positive: bool,
    pub issues: Vec<String>,
    pub kappa: Option<f64>,
    pub irreducible: bool,
    pub y_hat: Option<f64>,
    pub b_sup: Option<f64>,
    pub b_prime_sup: f64,
    pub c_bl: Option<f64>,
    pub c_sup: Option<f64>,
    pub eta: Option<EtaNorms>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.issues.is_empty()
    }
}

pub fn validate_assumptions(ing: &ModelIngredients) -> ValidationReport {
    let issues = ing.assumption_issues();
    let has = |tag: &str| issues.iter().any(|s| s.starts_with(tag));
    let passed = issues.is_empty();
    let (irreducible, y_hat) = if passed { check_irreducibility(ing) } else { (false, None) };
    ValidationReport {
        c_bounded: !has("(i)"),
        eta_bl_valued: !has("(ii)"),
        b_bounded_positive: !has("(iii)"),
        kappa: if passed { kappa_margin(ing) } else { None },
        irreducible,
        y_hat,
        b_sup: ing.b.sup_abs().ok(),
        b_prime_sup: ing.b.lipschitz(),
        c_bl: ing.c.bl_norm_paper().ok(),
        c_sup: ing.c.sup_abs().ok(),
        eta: if has("(ii)") { None } else { eta_bl_norm(ing).ok() },
        issues,
    }
}

/// `inf_x (c(x) - |c'(x)|)` when `b' <= 0` everywhere and the infimum is
/// positive.
pub fn kappa_margin(ing: &ModelIngredients) -> Option<f64> {
    if !ing.c.is_bounded() || ing.b.extension_slope() > 0.0 {
        return None;
    }
    if ing.b.piece_slopes().iter().any(|&s| s > 0.0) {
        return None;
    }
    let ys = ing.c.values();
    let mut kappa = *ys.last().unwrap();
    for (i, s) in ing.c.piece_slopes().into_iter().enumerate() {
        kappa = kappa.min(ys[i] - s.abs()).min(ys[i + 1] - s.abs());
    }
    (kappa > 0.0).then_some(kappa)
}

/// Whether large individuals eventually always produce offspring at state 0,
/// with the smallest breakpoint `y_hat` from which this holds.
pub fn check_irreducibility(ing: &ModelIngredients) -> (bool, Option<f64>) {
    let mut best: Option<f64> = None;
    for ch in &ing.eta.channels {
        if !ch.location.is_bounded() || !ch.weight.is_bounded() {
            continue;
        }
        let mut ys: Vec<f64> = ch
            .location
            .breakpoints()
            .iter()
            .chain(ch.weight.breakpoints())
            .copied()
            .collect();
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        let mut found = None;
        for &y in ys.iter().rev() {
            if ch.location.value(y) == 0.0 && ch.weight.value(y) > 0.0 {
                found = Some(y);
            } else {
                break;
            }
        }
        if let Some(y) = found {
            best = Some(best.map_or(y, |b: f64| b.min(y)));
        }
    }
    (best.is_some(), best)
}

/// `||eta||_BC`, Lipschitz bound and sampled estimate, `||eta||_BL`.
pub fn eta_bl_norm(ing: &ModelIngredients) -> Result<EtaNorms> {
    let eta = &ing.eta;
    let mut lip = 0.0;
    for ch in &eta.channels {
        lip += ch.weight.lipschitz() + ch.weight.sup_abs()? * ch.location.lipschitz();
    }
    let knots = eta.breakpoints();
    let bc = knots
        .iter()
        .map(|&y| eta.total_rate(y))
        .fold(0.0, f64::max);

    const REFINE: usize = 4;
    let mut samples = Vec::with_capacity(knots.len() * REFINE + 1);
    for w in knots.windows(2) {
        for j in 0..REFINE {
            samples.push(w[0] + (w[1] - w[0]) * j as f64 / REFINE as f64);
        }
    }
    samples.push(*knots.last().unwrap());
    let mut lip_sampled: f64 = 0.0;
    for w in samples.windows(2) {
        let d = flat_distance(&eta.at(w[0]), &eta.at(w[1]), NormVariant::Paper)?;
        lip_sampled = lip_sampled.max(d / (w[1] - w[0]));
    }
    Ok(EtaNorms {
        bc,
        lip,
        lip_sampled,
        bl: bc + lip,
    })
}

/// `(C1(t), C2(t))`:
///
/// ```text
/// C1(t) = exp(3t (||b'||_inf + ||c||_BL + ||eta||_BL))
/// C2(t) = ||b||_inf + (||c||_inf + ||eta||_BC) exp((||c||_inf + ||eta||_BC) t)
/// ```
pub fn growth_constants(ing: &ModelIngredients, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time {t} must be >= 0")));
    }
    ing.check()?;
    let eta = eta_bl_norm(ing)?;
    let c_bl = ing.c.bl_norm_paper()?;
    let c_sup = ing.c.sup_abs()?;
    let c1 = (3.0 * t * (ing.b.lipschitz() + c_bl + eta.bl)).exp();
    let rate = c_sup + eta.bc;
    let c2 = ing.b.sup_abs()? + rate * (rate * t).exp();
    Ok((c1, c2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plf(xs: &[f64], ys: &[f64]) -> PiecewiseLinearFn {
        PiecewiseLinearFn::new(xs.to_vec(), ys.to_vec()).unwrap()
    }

    fn constant_model() -> ModelIngredients {
        ModelIngredients::lotka(1.0, 0.5)
    }

    #[test]
    fn validation_examples() {
        assert!(validate_assumptions(&constant_model()).passed());

        let mut m = constant_model();
        m.b = plf(&[0.0, 1.0], &[1.0, 0.0]);
        let r = validate_assumptions(&m);
        assert!(!r.b_bounded_positive && r.c_bounded && r.eta_bl_valued);

        let mut m = constant_model();
        m.eta.channels[0].weight = PiecewiseLinearFn::constant(-1.0);
        let r = validate_assumptions(&m);
        assert!(!r.eta_bl_valued && r.b_bounded_positive);

        let mut m = constant_model();
        m.eta.channels[0].location = PiecewiseLinearFn::with_extension(
            vec![0.0],
            vec![0.0],
            crate::bl_functions::Extension::Linear(0.5),
        )
        .unwrap();
        assert!(!validate_assumptions(&m).eta_bl_valued);
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa_margin(&constant_model()), Some(0.5));
        let mut m = constant_model();
        m.c = plf(&[0.0, 1.0], &[1.0, 0.7]);
        assert!((kappa_margin(&m).unwrap() - 0.4).abs() < 1e-15);
        let mut m = constant_model();
        m.b = plf(&[0.0, 1.0], &[1.0, 2.0]);
        assert_eq!(kappa_margin(&m), None);
        let mut m = constant_model();
        m.c = PiecewiseLinearFn::constant(0.0);
        assert_eq!(kappa_margin(&m), None);
    }

    #[test]
    fn irreducibility_examples() {
        assert_eq!(check_irreducibility(&constant_model()), (true, Some(0.0)));
        let mut m = constant_model();
        m.eta.channels[0].location = PiecewiseLinearFn::constant(1.0);
        assert_eq!(check_irreducibility(&m), (false, None));
        let mut m = constant_model();
        m.eta.channels[0].location = plf(&[0.0, 1.0], &[1.0, 0.0]);
        assert_eq!(check_irreducibility(&m), (true, Some(1.0)));
    }

    #[test]
    fn eta_norm_examples() {
        let n = eta_bl_norm(&constant_model()).unwrap();
        assert_eq!((n.bc, n.lip, n.bl), (1.0, 0.0, 1.0));
        let m = ModelIngredients::new(
            PiecewiseLinearFn::constant(1.0),
            PiecewiseLinearFn::constant(0.5),
            Kernel::at_zero(plf(&[0.0, 1.0], &[1.0, 2.0])),
        );
        let n = eta_bl_norm(&m).unwrap();
        assert_eq!(n.bc, 2.0);
        assert!(n.lip <= 1.0 && n.bl <= 3.0);
        assert!(n.lip_sampled <= n.lip + 1e-12);
    }

    #[test]
    fn growth_constant_examples() {
        let m = constant_model();
        for t in [0.0, 0.5, 2.0] {
            let (c1, c2) = growth_constants(&m, t).unwrap();
            assert!((c1 - (4.5 * t).exp()).abs() <= 1e-12 * c1);
            assert!((c2 - (1.0 + 1.5 * (1.5 * t).exp())).abs() <= 1e-12 * c2);
        }
        assert!(growth_constants(&m, -1.0).is_err());
    }

    #[test]
    fn json_schema() {
        let json = r#"{"b":{"breakpoints":[0],"values":[1]},
                       "c":{"breakpoints":[0],"values":[0.5]},
                       "eta":{"channels":[{"location":{"breakpoints":[0],"values":[0]},
                                            "weight":{"breakpoints":[0],"values":[1]}}]}}"#;
        let m = ModelIngredients::from_json(json).unwrap();
        assert_eq!(m, constant_model());
        let back = ModelIngredients::from_json(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(m.hash(), back.hash());
        assert!(ModelIngredients::from_json(r#"{"b":1}"#).is_err());
    }
}
