//! Truncated moment problems.
//!
//! A sequence `1, mu_1, ..., mu_{2d-2}` with positive leading Hankel
//! determinants, extended by an arbitrary `mu_{2d-1}`, is matched by exactly
//! one `d`-point distribution. That distribution is recovered here from the
//! monic orthogonal polynomial of degree `d`: its coefficients solve a Hankel
//! system, its roots are the support points, and the weights then solve a
//! Vandermonde system.

use log::warn;
use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{MixError, Result};
use crate::family::ParamDomain;
use crate::linalg::{determinant, monic_eval, monic_roots, solve_refined, Matrix};
use crate::mixing::MixingDistribution;
use crate::scalar::{KahanSum, Scalar};

/// `(mu_0 = 1, mu_1, ..., mu_L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence<T> {
    values: Vec<T>,
}

impl<T: Scalar> MomentSequence<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        match values.first() {
            None => return Err(MixError::InsufficientMoments { needed: 1, got: 0 }),
            Some(&m0) if m0 != T::one() => {
                return Err(MixError::InvalidArgument(format!("mu_0 must be exactly 1, got {m0}")))
            }
            _ => {}
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MixError::InvalidArgument("non-finite moment".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Highest moment index `L`.
    pub fn max_index(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: usize) -> Option<T> {
        self.values.get(k).copied()
    }

    /// The first `len` values as a new sequence.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        if len > self.values.len() || len == 0 {
            return Err(MixError::InsufficientMoments {
                needed: len,
                got: self.values.len(),
            });
        }
        Ok(Self {
            values: self.values[..len].to_vec(),
        })
    }

    /// Appends one more moment.
    pub fn extended(&self, next: T) -> Self {
        let mut values = self.values.clone();
        values.push(next);
        Self { values }
    }

    /// `(M_k)_{i,j} = mu_{i+j}` for `0 <= i, j <= k`.
    pub fn hankel(&self, k: usize) -> Result<Matrix<T>> {
        if 2 * k >= self.values.len() {
            return Err(MixError::InsufficientMoments {
                needed: 2 * k + 1,
                got: self.values.len(),
            });
        }
        Ok(Matrix::from_fn(k + 1, k + 1, |i, j| self.values[i + j]))
    }

    /// Whether `det M_k > 0` for every `k` in `1..d`.
    pub fn feasible(&self, d: usize) -> bool {
        hankel_dets(self, d).is_ok_and(|dets| dets.iter().all(|&v| v > T::zero()))
    }

    /// Moments of the affine image `(X - shift) / scale`.
    pub fn standardized(&self, shift: T, scale: T) -> Self {
        let l = self.values.len();
        let mut binom = vec![T::one(); l];
        let mut out = Vec::with_capacity(l);
        for k in 0..l {
            // binom holds C(k, i) for i <= k
            if k > 0 {
                for i in (1..k).rev() {
                    binom[i] = binom[i] + binom[i - 1];
                }
                binom[k] = T::one();
            }
            let mut acc = KahanSum::new();
            for i in 0..=k {
                acc.add(binom[i] * self.values[i] * (-shift).powi((k - i) as i32));
            }
            out.push(acc.value() / scale.powi(k as i32));
        }
        out[0] = T::one();
        Self { values: out }
    }
}

impl<T: Scalar + Serialize> Serialize for MomentSequence<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.values.serialize(serializer)
    }
}

impl<'de, T: Scalar + DeserializeOwned> Deserialize<'de> for MomentSequence<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let values: Vec<T> = Vec::deserialize(deserializer)?;
        MomentSequence::new(values).map_err(D::Error::custom)
    }
}

/// `(det M_1, ..., det M_{d-1})`; needs `mu_0 .. mu_{2d-2}`.
pub fn hankel_dets<T: Scalar>(mu: &MomentSequence<T>, d: usize) -> Result<Vec<T>> {
    if d == 0 {
        return Err(MixError::InvalidArgument("d must be at least 1".into()));
    }
    let needed = 2 * d - 1;
    if mu.values.len() < needed {
        return Err(MixError::InsufficientMoments {
            needed,
            got: mu.values.len(),
        });
    }
    (1..d).map(|k| determinant(&mu.hankel(k)?)).collect()
}

/// `mu_k = sum_j pi_j theta_j^k` for `k = 0..=max_k`, with `mu_0 = 1`.
pub fn moments_of<T: Scalar>(g: &MixingDistribution<T>, max_k: usize) -> MomentSequence<T> {
    moments_of_atoms(g.locations(), g.weights(), max_k)
}

/// Moments of an arbitrary weighted point set; `mu_0` is set to 1.
pub fn moments_of_atoms<T: Scalar>(locations: &[T], weights: &[T], max_k: usize) -> MomentSequence<T> {
    let mut values = vec![T::one()];
    for k in 1..=max_k {
        let mut acc = KahanSum::new();
        for (&x, &w) in locations.iter().zip(weights) {
            acc.add(w * x.powi(k as i32));
        }
        values.push(acc.value());
    }
    MomentSequence { values }
}

/// A solved moment problem with its conditioning diagnostics.
#[derive(Debug, Clone)]
pub struct MomentSolution<T> {
    pub distribution: MixingDistribution<T>,
    /// Condition number of the (standardized) Hankel system.
    pub hankel_condition: T,
    /// Max absolute mismatch of moments `0..2d-1` after solving.
    pub moment_residual: T,
}

/// The unique `d`-point distribution whose moments `1..=2d-1` equal
/// `mu_1..mu_{2d-1}`.
pub fn solve_moment_problem<T: Scalar>(mu: &MomentSequence<T>, d: usize) -> Result<MixingDistribution<T>> {
    solve_moment_problem_detailed(mu, d).map(|s| s.distribution)
}

pub fn solve_moment_problem_detailed<T: Scalar>(
    mu: &MomentSequence<T>,
    d: usize,
) -> Result<MomentSolution<T>> {
    if d == 0 {
        return Err(MixError::InvalidArgument("d must be at least 1".into()));
    }
    if mu.values.len() < 2 * d {
        return Err(MixError::InsufficientMoments {
            needed: 2 * d,
            got: mu.values.len(),
        });
    }
    let mu = mu.truncated(2 * d)?;
    for (k, det) in hankel_dets(&mu, d)?.into_iter().enumerate() {
        if !(det > T::zero()) {
            return Err(MixError::Infeasible {
                k: k + 1,
                det: det.as_f64(),
            });
        }
    }
    if d == 1 {
        return Ok(MomentSolution {
            distribution: MixingDistribution::dirac(mu.values[1]),
            hankel_condition: T::one(),
            moment_residual: T::zero(),
        });
    }

    let shift = mu.values[1];
    let var = mu.values[2] - shift * shift;
    if !(var > T::zero()) {
        return Err(MixError::Infeasible {
            k: 1,
            det: var.as_f64(),
        });
    }
    let scale = var.sqrt();
    let nu = mu.standardized(shift, scale);
    let nv = &nu.values;

    // Monic orthogonal polynomial: sum_k c_k nu_{i+k} = -nu_{i+d}.
    let hankel = Matrix::from_fn(d, d, |i, k| nv[i + k]);
    let rhs: Vec<T> = (0..d).map(|i| -nv[i + d]).collect();
    let poly = solve_refined(&hankel, &rhs, 3)?;
    if poly.condition > T::lit(1e10) {
        warn!("moment Hankel system is ill-conditioned (cond = {:e})", poly.condition.as_f64());
    }
    let coeffs = poly.x;

    let mut roots = Vec::with_capacity(d);
    for (re, im) in monic_roots(&coeffs)? {
        if im.abs() > T::lit(1e-8) * T::one().max(re.abs()) {
            return Err(MixError::Numerical(format!(
                "orthogonal polynomial has a complex root {re} + {im}i"
            )));
        }
        roots.push(polish_root(&coeffs, re));
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if roots.windows(2).any(|w| w[1] - w[0] <= T::merge_tol()) {
        return Err(MixError::Numerical("orthogonal polynomial has a repeated root".into()));
    }

    let vander = Matrix::from_fn(d, d, |i, j| roots[j].powi(i as i32));
    let mut weights = solve_refined(&vander, &nv[..d], 3)?.x;
    newton_polish(nv, &mut weights, &mut roots);

    if weights.iter().any(|&w| !(w > T::zero())) {
        return Err(MixError::Numerical("moment solution has a non-positive weight".into()));
    }
    let residual = moment_mismatch(nv, &weights, &roots);
    let atoms: Vec<(T, T)> = roots
        .iter()
        .zip(&weights)
        .map(|(&y, &w)| (shift + scale * y, w))
        .collect();
    Ok(MomentSolution {
        distribution: MixingDistribution::from_unnormalized(atoms)?,
        hankel_condition: poly.condition,
        moment_residual: residual,
    })
}

fn polish_root<T: Scalar>(coeffs: &[T], mut x: T) -> T {
    let mut best = monic_eval(coeffs, x).0.abs();
    for _ in 0..4 {
        let (p, dp) = monic_eval(coeffs, x);
        if dp == T::zero() {
            break;
        }
        let cand = x - p / dp;
        let v = monic_eval(coeffs, cand).0.abs();
        if !(v < best) {
            break;
        }
        best = v;
        x = cand;
    }
    x
}

fn moment_mismatch<T: Scalar>(nu: &[T], w: &[T], y: &[T]) -> T {
    (0..nu.len())
        .map(|k| {
            let mut acc = KahanSum::new();
            for (&wj, &yj) in w.iter().zip(y) {
                acc.add(wj * yj.powi(k as i32));
            }
            (acc.value() - nu[k]).abs()
        })
        .fold(T::zero(), T::max)
}

/// Newton iterations on the full moment map `(w, y) -> (sum w y^k)_k`.
fn newton_polish<T: Scalar>(nu: &[T], w: &mut [T], y: &mut [T]) {
    let d = w.len();
    let mut current = moment_mismatch(nu, w, y);
    for _ in 0..4 {
        let jac = Matrix::from_fn(2 * d, 2 * d, |k, c| {
            if c < d {
                y[c].powi(k as i32)
            } else if k == 0 {
                T::zero()
            } else {
                let j = c - d;
                T::from_usize_lossy(k) * w[j] * y[j].powi(k as i32 - 1)
            }
        });
        let res: Vec<T> = (0..2 * d)
            .map(|k| {
                let mut acc = KahanSum::new();
                for j in 0..d {
                    acc.add(w[j] * y[j].powi(k as i32));
                }
                acc.add(-nu[k]);
                acc.value()
            })
            .collect();
        let Ok(step) = solve_refined(&jac, &res, 1) else {
            return;
        };
        let w_new: Vec<T> = (0..d).map(|j| w[j] - step.x[j]).collect();
        let y_new: Vec<T> = (0..d).map(|j| y[j] - step.x[d + j]).collect();
        let next = moment_mismatch(nu, &w_new, &y_new);
        if !(next < current) {
            return;
        }
        current = next;
        w.copy_from_slice(&w_new);
        y.copy_from_slice(&y_new);
    }
}

/// Base moments `(1, mu_1, ..., mu_{2d-2})` used when none are supplied:
/// `(1)` for `d = 1`, `(1, 0, 4)` for `d = 2`, standard Gaussian moments
/// otherwise.
pub fn default_base<T: Scalar>(d: usize) -> MomentSequence<T> {
    let values = match d {
        0 | 1 => vec![T::one()],
        2 => vec![T::one(), T::zero(), T::lit(4.0)],
        _ => {
            let mut v = vec![T::one()];
            let mut dbl = T::one();
            for k in 1..=(2 * d - 2) {
                if k % 2 == 1 {
                    v.push(T::zero());
                } else {
                    dbl *= T::from_usize_lossy(k - 1);
                    v.push(dbl);
                }
            }
            v
        }
    };
    MomentSequence { values }
}

/// The unscaled cloud `G(u) = sum_j pi_j(u) delta_{h_j(u)}` with moments
/// `base` followed by `mu_{2d-1} = u`.
pub fn lan_cloud<T: Scalar>(d: usize, u: T, base: &MomentSequence<T>) -> Result<MixingDistribution<T>> {
    if d == 0 {
        return Err(MixError::InvalidArgument("d must be at least 1".into()));
    }
    let base = base.truncated(2 * d - 1)?;
    solve_moment_problem(&base.extended(u), d)
}

/// `G_n(u)`: the heaviest-index atom `theta_{m0}` of `g0` (its largest
/// location) is replaced by the cloud `pi_{m0} sum_j pi_j(u)
/// delta_{theta_{m0} + n^{-1/(4d-2)} h_j(u)}` with `d = m - m0 + 1`.
pub fn lan_family<T: Scalar>(
    g0: &MixingDistribution<T>,
    m: usize,
    n: u64,
    u: T,
    base: &MomentSequence<T>,
    domain: &ParamDomain<T>,
) -> Result<MixingDistribution<T>> {
    let m0 = g0.order();
    if m < m0 {
        return Err(MixError::InvalidArgument(format!("m = {m} is below the order {m0} of G0")));
    }
    if n == 0 {
        return Err(MixError::InvalidArgument("n must be positive".into()));
    }
    let d = m - m0 + 1;
    let cloud = lan_cloud(d, u, base)?;
    let anchor = g0.max_location();
    let anchor_weight = *g0.weights().last().unwrap();
    if !(domain.lo < anchor && anchor < domain.hi) {
        return Err(MixError::OutOfDomain {
            value: anchor.as_f64(),
            lo: domain.lo.as_f64(),
            hi: domain.hi.as_f64(),
        });
    }
    let scale = lan_scale::<T>(n, d);
    let room = domain.distance_to_boundary(anchor);
    let mut atoms: Vec<(T, T)> = g0.atoms().take(m0 - 1).collect();
    for (h, w) in cloud.atoms() {
        let offset = scale * h;
        if offset.abs() > room {
            return Err(MixError::OutOfDomain {
                value: (anchor + offset).as_f64(),
                lo: domain.lo.as_f64(),
                hi: domain.hi.as_f64(),
            });
        }
        atoms.push((anchor + offset, anchor_weight * w));
    }
    MixingDistribution::from_unnormalized(atoms)
}

/// `n^{-1/(4d-2)}`.
pub fn lan_scale<T: Scalar>(n: u64, d: usize) -> T {
    let n = T::lit(n as f64);
    n.powf(-T::one() / T::from_usize_lossy(4 * d - 2))
}

/// Two `d`-atom distributions around `center` whose offsets (scaled by
/// `eps`) share moments `1..=2d-2` and differ in moment `2d-1` by
/// `(u1 - u2) eps^{2d-1}`.
pub fn adversarial_pair<T: Scalar>(
    d: usize,
    eps: T,
    u1: T,
    u2: T,
    base: &MomentSequence<T>,
    center: T,
) -> Result<(MixingDistribution<T>, MixingDistribution<T>)> {
    if !(eps > T::zero()) {
        return Err(MixError::InvalidArgument("eps must be positive".into()));
    }
    if u1 == u2 {
        return Err(MixError::InvalidArgument("u1 and u2 must differ".into()));
    }
    let place = |u: T| -> Result<MixingDistribution<T>> {
        let cloud = lan_cloud(d, u, base)?;
        MixingDistribution::new(cloud.atoms().map(|(h, w)| (center + eps * h, w)))
    };
    Ok((place(u1)?, place(u2)?))
}
