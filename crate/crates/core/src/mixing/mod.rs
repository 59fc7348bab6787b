//! Mixing distributions, signed differences of them, and the exact
//! one-dimensional transportation distance.

mod serde_impl;
pub mod tree;

use std::cmp::Ordering;

use crate::error::{MixError, Result};
use crate::scalar::{KahanSum, Scalar};

pub use tree::{
    cluster_tree, default_scales, tree_wasserstein_estimate, witness_lower_bound, witness_at,
    ClusterNode, ClusterTree,
};

/// A finite discrete probability measure `G = sum_j pi_j delta_{theta_j}`.
///
/// Always held in canonical form: locations strictly increasing, no two
/// atoms within [`Scalar::merge_tol`], every weight strictly positive and
/// the weights summing to one within [`Scalar::weight_tol`].
#[derive(Debug, Clone, PartialEq)]
pub struct MixingDistribution<T> {
    locations: Vec<T>,
    weights: Vec<T>,
}

/// A finite signed atomic measure, typically `G1 - G2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedAtomMeasure<T> {
    locations: Vec<T>,
    weights: Vec<T>,
}

fn sort_pairs<T: Scalar>(atoms: &mut [(T, T)]) {
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
}

/// Merges sorted atoms whose locations lie within `tol` of the running
/// cluster's first location; merged location is the weight-averaged one
/// when weights share a sign, otherwise the first location is kept.
fn merge_sorted<T: Scalar>(atoms: &[(T, T)], tol: T) -> Vec<(T, T)> {
    let mut out: Vec<(T, T)> = Vec::with_capacity(atoms.len());
    let mut anchor = T::neg_infinity();
    for &(loc, w) in atoms {
        match out.last_mut() {
            Some(last) if loc - anchor <= tol => {
                let total = last.1 + w;
                if last.1 > T::zero() && w > T::zero() {
                    last.0 = (last.0 * last.1 + loc * w) / total;
                }
                last.1 = total;
            }
            _ => {
                anchor = loc;
                out.push((loc, w));
            }
        }
    }
    out
}

impl<T: Scalar> MixingDistribution<T> {
    /// Builds a canonical mixing distribution from `(location, weight)` pairs.
    pub fn new(atoms: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        let mut atoms: Vec<(T, T)> = atoms.into_iter().collect();
        if atoms.is_empty() {
            return Err(MixError::InvalidMixing("no atoms".into()));
        }
        for &(loc, w) in &atoms {
            if !loc.is_finite() || !w.is_finite() {
                return Err(MixError::InvalidMixing("non-finite atom".into()));
            }
            if w <= T::zero() {
                return Err(MixError::InvalidMixing(format!(
                    "weight {w} is not strictly positive"
                )));
            }
        }
        let total: T = atoms.iter().map(|a| a.1).sum();
        if (total - T::one()).abs() > T::weight_tol() {
            return Err(MixError::InvalidMixing(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        sort_pairs(&mut atoms);
        let merged = merge_sorted(&atoms, T::merge_tol());
        let (locations, weights) = merged.into_iter().unzip();
        Ok(Self { locations, weights })
    }

    /// Like [`Self::new`] but rescales the weights to sum to one.
    pub fn from_unnormalized(atoms: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        let atoms: Vec<(T, T)> = atoms.into_iter().collect();
        let total: T = atoms.iter().map(|a| a.1).sum();
        if !(total > T::zero()) || !total.is_finite() {
            return Err(MixError::InvalidMixing("total weight not positive".into()));
        }
        Self::new(atoms.into_iter().map(|(l, w)| (l, w / total)))
    }

    pub fn dirac(location: T) -> Self {
        Self {
            locations: vec![location],
            weights: vec![T::one()],
        }
    }

    /// Equal-weight distribution on the given locations.
    pub fn uniform(locations: &[T]) -> Result<Self> {
        let w = T::one() / T::from_usize_lossy(locations.len().max(1));
        Self::from_unnormalized(locations.iter().map(|&l| (l, w)))
    }

    /// Number of support points `m`.
    pub fn order(&self) -> usize {
        self.locations.len()
    }

    pub fn locations(&self) -> &[T] {
        &self.locations
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.locations
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    /// `G((-inf, t])`.
    pub fn cdf(&self, t: T) -> T {
        self.atoms()
            .take_while(|&(loc, _)| loc <= t)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn mean(&self) -> T {
        self.atoms().map(|(l, w)| l * w).sum()
    }

    /// Image under `theta -> center + factor * (theta - center)`.
    pub fn homothety(&self, center: T, factor: T) -> Result<Self> {
        Self::new(self.atoms().map(|(l, w)| (center + factor * (l - center), w)))
    }

    /// Re-canonicalizes with a coarser merge tolerance, reducing the order
    /// when atoms collapse.
    pub fn merged_within(&self, tol: T) -> Self {
        let atoms: Vec<(T, T)> = self.atoms().collect();
        let merged = merge_sorted(&atoms, tol);
        let (locations, weights) = merged.into_iter().unzip();
        Self { locations, weights }
    }

    pub fn min_location(&self) -> T {
        self.locations[0]
    }

    pub fn max_location(&self) -> T {
        *self.locations.last().expect("non-empty")
    }

    /// Lexicographic comparison of (locations, weights); used for
    /// deterministic tie-breaking.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        let a = self.locations.iter().chain(self.weights.iter());
        let b = other.locations.iter().chain(other.weights.iter());
        for (x, y) in a.zip(b) {
            match x.partial_cmp(y) {
                Some(Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        self.order().cmp(&other.order())
    }

    pub fn cast<U: Scalar>(&self) -> MixingDistribution<U> {
        MixingDistribution {
            locations: self.locations.iter().map(|l| U::lit(l.as_f64())).collect(),
            weights: self.weights.iter().map(|w| U::lit(w.as_f64())).collect(),
        }
    }
}

impl<T: Scalar> SignedAtomMeasure<T> {
    /// Canonical signed measure: sorted, near-duplicates merged, zero
    /// weights dropped.
    pub fn new(atoms: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        let mut atoms: Vec<(T, T)> = atoms.into_iter().collect();
        if atoms.iter().any(|a| !a.0.is_finite() || !a.1.is_finite()) {
            return Err(MixError::InvalidMixing("non-finite signed atom".into()));
        }
        sort_pairs(&mut atoms);
        let merged = merge_sorted(&atoms, T::merge_tol());
        let (locations, weights) = merged
            .into_iter()
            .filter(|a| a.1.abs() > T::zero_mass_tol())
            .unzip();
        Ok(Self { locations, weights })
    }

    pub fn empty() -> Self {
        Self {
            locations: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn locations(&self) -> &[T] {
        &self.locations
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.locations
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> T {
        let mut k = KahanSum::new();
        for &w in &self.weights {
            k.add(w);
        }
        k.value()
    }

    /// Signed mass of the atoms with the given indices.
    pub fn mass_of(&self, indices: &[usize]) -> T {
        indices.iter().map(|&i| self.weights[i]).sum()
    }

    /// `integral |Delta((-inf, t])| dt`, the transportation cost of a
    /// zero-mass signed measure.
    pub fn transport_cost(&self) -> T {
        let mut acc = KahanSum::new();
        let mut cum = T::zero();
        for k in 0..self.locations.len().saturating_sub(1) {
            cum += self.weights[k];
            acc.add(cum.abs() * (self.locations[k + 1] - self.locations[k]));
        }
        acc.value()
    }
}

/// Exact Wasserstein-1 distance between two mixing distributions: the area
/// between their CDFs, accumulated over the merged breakpoints.
pub fn wasserstein<T: Scalar>(g1: &MixingDistribution<T>, g2: &MixingDistribution<T>) -> T {
    let (a_loc, a_w) = (g1.locations(), g1.weights());
    let (b_loc, b_w) = (g2.locations(), g2.weights());
    let (mut i, mut j) = (0usize, 0usize);
    let (mut fa, mut fb) = (T::zero(), T::zero());
    let mut prev: Option<T> = None;
    let mut area = KahanSum::new();
    while i < a_loc.len() || j < b_loc.len() {
        let t = match (a_loc.get(i), b_loc.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        if let Some(p) = prev {
            area.add((fa - fb).abs() * (t - p));
        }
        while i < a_loc.len() && a_loc[i] == t {
            fa += a_w[i];
            i += 1;
        }
        while j < b_loc.len() && b_loc[j] == t {
            fb += b_w[j];
            j += 1;
        }
        prev = Some(t);
    }
    area.value()
}

/// Canonical signed difference `G1 - G2`.
pub fn diff<T: Scalar>(
    g1: &MixingDistribution<T>,
    g2: &MixingDistribution<T>,
) -> SignedAtomMeasure<T> {
    SignedAtomMeasure::new(g1.atoms().chain(g2.atoms().map(|(l, w)| (l, -w))))
        .expect("finite atoms")
}
