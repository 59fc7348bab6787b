//! Fixed-scale coarse-graining of a signed atomic measure and the
//! 1-Lipschitz witness lower bounds on its transportation cost.
//!
//! For a node `J` with representative `c`, radius `d = max_{j in J} |x_j - c|`
//! and separation `e = min_{j not in J} |x_j - c|`, the function
//! `g(x) = min(e - d, max(0, e - |x - c|))` is 1-Lipschitz, equals `e - d` on
//! `J` and vanishes off `J`. Integrating it against `Delta` gives
//! `|Delta(J)| (e - d) <= W` by Kantorovich duality.

use crate::error::{MixError, Result};
use crate::mixing::SignedAtomMeasure;
use crate::scalar::Scalar;

/// One node of a [`ClusterTree`]. Members are indices into the atoms of the
/// signed measure the tree was built from; they are always contiguous in
/// sorted order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterNode<T> {
    pub members: Vec<usize>,
    /// Smallest scale at which this member set appears as a cluster.
    pub scale: T,
    /// Representative location, the member maximizing `separation - radius`.
    pub center: T,
    /// Largest distance from `center` to a member.
    pub radius: T,
    /// Largest distance between two members.
    pub diameter: T,
    /// Smallest distance from `center` to a non-member; infinite for the root.
    pub separation: T,
    /// Signed mass of the members.
    pub mass: T,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

impl<T: Scalar> ClusterNode<T> {
    /// Whether the node is separated from the rest at least as far as it is
    /// wide, the condition under which the witness bound is informative.
    pub fn is_separated(&self) -> bool {
        self.separation >= self.diameter
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTree<T> {
    pub nodes: Vec<ClusterNode<T>>,
    pub root: Option<usize>,
}

impl<T: Scalar> ClusterTree<T> {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &ClusterNode<T>> {
        self.nodes.iter().filter(|n| n.children.is_empty())
    }

    pub fn non_root(&self) -> impl Iterator<Item = &ClusterNode<T>> {
        let root = self.root;
        self.nodes
            .iter()
            .enumerate()
            .filter(move |(i, _)| Some(*i) != root)
            .map(|(_, n)| n)
    }
}

fn radius_and_separation<T: Scalar>(locs: &[T], members: &[usize], center: T) -> (T, T) {
    let mut radius = T::zero();
    let mut separation = T::infinity();
    let mut k = 0;
    for (i, &x) in locs.iter().enumerate() {
        let dist = (x - center).abs();
        if k < members.len() && members[k] == i {
            radius = radius.max(dist);
            k += 1;
        } else {
            separation = separation.min(dist);
        }
    }
    (radius, separation)
}

/// Best representative among members and the resulting `(e - d)` gap.
fn best_center<T: Scalar>(locs: &[T], members: &[usize]) -> (T, T, T, T) {
    let mut best: Option<(T, T, T, T)> = None;
    for &c in members {
        let center = locs[c];
        let (radius, separation) = radius_and_separation(locs, members, center);
        let gap = separation - radius;
        if best.is_none_or(|b| gap > b.3) {
            best = Some((center, radius, separation, gap));
        }
    }
    best.expect("non-empty members")
}

fn normalize_members(len: usize, members: &[usize]) -> Result<Vec<usize>> {
    let mut j: Vec<usize> = members.to_vec();
    j.sort_unstable();
    j.dedup();
    if j.is_empty() {
        return Err(MixError::InvalidCluster("empty index set".into()));
    }
    if j.len() >= len {
        return Err(MixError::InvalidCluster("index set covers every atom".into()));
    }
    if *j.last().unwrap() >= len {
        return Err(MixError::InvalidCluster("index out of range".into()));
    }
    Ok(j)
}

/// `|Delta(J)| * max(0, e(J) - d(J))` with the representative chosen to
/// maximize `e - d`. Always a lower bound on the transportation cost of the
/// pair that produced `delta`.
pub fn witness_lower_bound<T: Scalar>(delta: &SignedAtomMeasure<T>, members: &[usize]) -> Result<T> {
    let j = normalize_members(delta.len(), members)?;
    let (_, _, _, gap) = best_center(delta.locations(), &j);
    Ok(delta.mass_of(&j).abs() * gap.max(T::zero()))
}

/// The witness bound with an explicitly chosen representative location.
pub fn witness_at<T: Scalar>(delta: &SignedAtomMeasure<T>, members: &[usize], center: T) -> Result<T> {
    let j = normalize_members(delta.len(), members)?;
    let (radius, separation) = radius_and_separation(delta.locations(), &j, center);
    Ok(delta.mass_of(&j).abs() * (separation - radius).max(T::zero()))
}

/// Scales that reproduce the full single-linkage dendrogram: half the
/// smallest gap (singleton leaves) followed by every distinct gap.
pub fn default_scales<T: Scalar>(delta: &SignedAtomMeasure<T>) -> Vec<T> {
    let locs = delta.locations();
    let mut gaps: Vec<T> = locs.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    gaps.dedup();
    match gaps.first() {
        Some(&g) => {
            let mut scales = vec![g * T::lit(0.5)];
            scales.extend(gaps);
            scales
        }
        None => vec![T::one()],
    }
}

/// Single-linkage clusters at each scale, deduplicated and ordered by
/// inclusion. The root always holds every atom.
pub fn cluster_tree<T: Scalar>(delta: &SignedAtomMeasure<T>, scales: &[T]) -> Result<ClusterTree<T>> {
    if scales.is_empty() {
        return Err(MixError::InvalidArgument("no scales given".into()));
    }
    if scales.iter().any(|&s| !(s > T::zero()) || !s.is_finite()) {
        return Err(MixError::InvalidArgument("scales must be positive".into()));
    }
    if scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MixError::InvalidArgument("scales must be strictly increasing".into()));
    }
    let locs = delta.locations();
    let m = locs.len();
    if m == 0 {
        return Ok(ClusterTree {
            nodes: Vec::new(),
            root: None,
        });
    }

    // Contiguous ranges [start, end) with the scale at which they appear.
    let mut ranges: Vec<(usize, usize, T)> = Vec::new();
    let push = |start: usize, end: usize, s: T, ranges: &mut Vec<(usize, usize, T)>| {
        if !ranges.iter().any(|r| r.0 == start && r.1 == end) {
            ranges.push((start, end, s));
        }
    };
    for &s in scales {
        let mut start = 0;
        for i in 1..=m {
            if i == m || locs[i] - locs[i - 1] > s {
                push(start, i, s, &mut ranges);
                start = i;
            }
        }
    }
    if !ranges.iter().any(|r| r.0 == 0 && r.1 == m) {
        let spread = locs.windows(2).map(|w| w[1] - w[0]).fold(T::zero(), T::max);
        let top = scales.last().copied().unwrap().max(spread);
        ranges.push((0, m, top));
    }

    let mut nodes: Vec<ClusterNode<T>> = ranges
        .iter()
        .map(|&(start, end, scale)| {
            let members: Vec<usize> = (start..end).collect();
            let whole = end - start == m;
            let (center, radius, separation) = if whole {
                let c = locs[0];
                (c, locs[m - 1] - c, T::infinity())
            } else {
                let (c, r, e, _) = best_center(locs, &members);
                (c, r, e)
            };
            ClusterNode {
                mass: delta.mass_of(&members),
                diameter: locs[end - 1] - locs[start],
                members,
                scale,
                center,
                radius,
                separation,
                parent: None,
                children: Vec::new(),
            }
        })
        .collect();

    // Parent = smallest strict superset; nesting holds because single-linkage
    // clusters only merge as the scale grows.
    let root = ranges.iter().position(|r| r.0 == 0 && r.1 == m);
    for i in 0..ranges.len() {
        let (s, e, _) = ranges[i];
        let parent = ranges
            .iter()
            .enumerate()
            .filter(|(k, r)| *k != i && r.0 <= s && e <= r.1 && (r.1 - r.0) > (e - s))
            .min_by_key(|(_, r)| r.1 - r.0)
            .map(|(k, _)| k);
        nodes[i].parent = parent;
        if let Some(p) = parent {
            nodes[p].children.push(i);
        }
    }
    Ok(ClusterTree { nodes, root })
}

/// Best witness bound over all non-root nodes; a certified lower bound on
/// the transportation cost.
pub fn tree_wasserstein_estimate<T: Scalar>(delta: &SignedAtomMeasure<T>, tree: &ClusterTree<T>) -> T {
    tree.non_root()
        .filter_map(|node| witness_lower_bound(delta, &node.members).ok())
        .fold(T::zero(), T::max)
}
