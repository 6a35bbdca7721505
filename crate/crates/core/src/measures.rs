//! Finite signed atomic measures on `[0, inf)`.
//!
//! Canonical form: atoms sorted by location, locations closer than
//! [`LOCATION_EPS`] merged by adding weights, zero weights dropped.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bl_functions::PiecewiseLinearFn;
use crate::error::{Error, Result};

/// Locations closer than this are the same location.
pub const LOCATION_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

impl Atom {
    pub fn new(location: f64, weight: f64) -> Self {
        Self { location, weight }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureRepr {
    atoms: Vec<(f64, f64)>,
}

impl TryFrom<MeasureRepr> for AtomicMeasure {
    type Error = Error;

    fn try_from(repr: MeasureRepr) -> Result<Self> {
        AtomicMeasure::from_atoms(repr.atoms)
    }
}

impl From<AtomicMeasure> for MeasureRepr {
    fn from(m: AtomicMeasure) -> Self {
        MeasureRepr {
            atoms: m.atoms.iter().map(|a| (a.location, a.weight)).collect(),
        }
    }
}

impl AtomicMeasure {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Unit point mass at `x`.
    pub fn dirac(x: f64) -> Self {
        Self::from_atoms([(x, 1.0)]).expect("dirac location must be finite and non-negative")
    }

    /// Build from `(location, weight)` pairs, validating and canonicalising.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|(x, w)| Atom::new(x, w))
            .collect();
        for a in &atoms {
            if !a.location.is_finite() || a.location < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "atom location {} is not a finite non-negative number",
                    a.location
                )));
            }
            if !a.weight.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "atom at {} has non-finite weight {}",
                    a.location, a.weight
                )));
            }
        }
        Ok(Self::canonical(atoms))
    }

    /// Canonicalise atoms known to have finite, non-negative locations.
    pub(crate) fn canonical(mut atoms: Vec<Atom>) -> Self {
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match out.last_mut() {
                Some(last) if a.location - last.location <= LOCATION_EPS => last.weight += a.weight,
                _ => out.push(a),
            }
        }
        out.retain(|a| a.weight != 0.0);
        Self { atoms: out }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn locations(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.location)
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.weight)
    }

    pub fn max_location(&self) -> Option<f64> {
        self.atoms.last().map(|a| a.location)
    }

    /// Total variation `sum |w_i|`.
    pub fn tv_norm(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight.abs()).sum()
    }

    /// Signed total mass `sum w_i`.
    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn is_positive(&self) -> bool {
        self.atoms.iter().all(|a| a.weight > 0.0)
    }

    /// `a * mu + b * nu`.
    pub fn linear_combine(a: f64, mu: &Self, b: f64, nu: &Self) -> Self {
        let atoms = mu
            .atoms
            .iter()
            .map(|x| Atom::new(x.location, a * x.weight))
            .chain(nu.atoms.iter().map(|x| Atom::new(x.location, b * x.weight)))
            .collect();
        Self::canonical(atoms)
    }

    /// `self - other`.
    pub fn difference(&self, other: &Self) -> Self {
        Self::linear_combine(1.0, self, -1.0, other)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::canonical(
            self.atoms
                .iter()
                .map(|a| Atom::new(a.location, factor * a.weight))
                .collect(),
        )
    }

    /// `<mu, phi> = sum w_i phi(x_i)`.
    pub fn pair(&self, phi: &PiecewiseLinearFn) -> f64 {
        self.atoms.iter().map(|a| a.weight * phi.value(a.location)).sum()
    }

    /// Move every atom through `map`, keeping its weight.
    pub fn push_forward(&self, map: impl Fn(f64) -> f64) -> Result<Self> {
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            let y = map(a.location);
            if !(y.is_finite() && y >= 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "push-forward sends {} to {}, outside [0, inf)",
                    a.location, y
                )));
            }
            atoms.push(Atom::new(y, a.weight));
        }
        Ok(Self::canonical(atoms))
    }

    /// Split into positive and negative parts, `mu = pos - neg`.
    pub fn hahn_jordan(&self) -> (Self, Self) {
        let (pos, neg): (Vec<Atom>, Vec<Atom>) = self.atoms.iter().partition(|a| a.weight > 0.0);
        let neg = neg
            .into_iter()
            .map(|a| Atom::new(a.location, -a.weight))
            .collect();
        (Self { atoms: pos }, Self { atoms: neg })
    }

    /// Greedy left-to-right merging of same-sign atoms lying within `radius` of
    /// the first atom of their cluster, followed by pruning of atoms with
    /// `|w| < prune`.
    ///
    /// Returns the new measure and an upper bound on the flat distance to the
    /// input, valid for both norm variants: `sum |w_i| |x_i - barycenter|` over
    /// merged atoms plus the pruned mass.
    pub fn coalesce(&self, radius: f64, prune: f64) -> Result<(Self, f64)> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("merge radius {radius} must be >= 0")));
        }
        if !(prune >= 0.0 && prune.is_finite()) {
            return Err(Error::InvalidParameter(format!("prune threshold {prune} must be >= 0")));
        }
        let atoms = &self.atoms;
        let mut merged = Vec::with_capacity(atoms.len());
        let mut bound = 0.0;
        let mut i = 0;
        while i < atoms.len() {
            let first = atoms[i];
            let positive = first.weight > 0.0;
            let mut j = i + 1;
            while j < atoms.len()
                && atoms[j].location - first.location <= radius
                && (atoms[j].weight > 0.0) == positive
            {
                j += 1;
            }
            if j == i + 1 {
                merged.push(first);
            } else {
                let cluster = &atoms[i..j];
                let total: f64 = cluster.iter().map(|a| a.weight).sum();
                let offset: f64 = cluster
                    .iter()
                    .map(|a| a.weight * (a.location - first.location))
                    .sum::<f64>()
                    / total;
                let barycenter = first.location + offset;
                bound += cluster
                    .iter()
                    .map(|a| a.weight.abs() * (a.location - barycenter).abs())
                    .sum::<f64>();
                merged.push(Atom::new(barycenter, total));
            }
            i = j;
        }
        let mut kept = Vec::with_capacity(merged.len());
        for a in merged {
            if a.weight.abs() < prune {
                bound += a.weight.abs();
            } else {
                kept.push(a);
            }
        }
        Ok((Self::canonical(kept), bound))
    }

    /// `location,weight` rows with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("location,weight\n");
        for a in &self.atoms {
            let _ = writeln!(out, "{:.16e},{:.16e}", a.location, a.weight);
        }
        out
    }
}
