//! Numerical checks of the structural assumptions behind the rates:
//! strong identifiability, confluent Vandermonde rank, the moment-map
//! Jacobian, `(p, q)`-smoothness integrals, the DKW inequality and local
//! asymptotic normality of the `G_n(u)` family.

mod lan;
pub mod quadrature;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{MixError, Result};
use crate::family::ComponentFamily;
use crate::linalg::{determinant, Matrix};

pub use lan::{lan_gamma_candidate, lan_simulate, LanReport};
pub use quadrature::QuadConfig;

/// Points in the default identifiability grid.
pub const GRID_POINTS: usize = 2001;
/// Half-width padding of the default grid, in units of the family scale.
pub const GRID_PAD: f64 = 8.0;
/// Step of the five-point stencil used for the moment-map Jacobian.
pub const JACOBIAN_FD_STEP: f64 = 1e-3;

/// Uniform grid over `[min theta - 8 s, max theta + 8 s]` for scale `s`.
pub fn default_x_grid<F: ComponentFamily<f64> + ?Sized>(family: &F, thetas: &[f64]) -> Vec<f64> {
    let lo = thetas.iter().copied().fold(f64::INFINITY, f64::min) - GRID_PAD * family.scale();
    let hi = thetas.iter().copied().fold(f64::NEG_INFINITY, f64::max) + GRID_PAD * family.scale();
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    (0..GRID_POINTS).map(|i| lo + step * i as f64).collect()
}

fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { grid[i] - grid[i - 1] } else { 0.0 };
            let right = if i + 1 < n { grid[i + 1] - grid[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Smallest singular value of the matrix with rows `sqrt(w_i) F^(p)(x_i,
/// theta_j)` and one column per `(p, j)`, `p = 0..=k`: a discrete proxy
/// for how far the CDF and its first `k` theta-derivatives at the given
/// atoms are from linear dependence.
///
/// `x_grid` defaults to [`default_x_grid`]. Repeated atoms make the value 0
/// by construction and are rejected unless `allow_duplicates` is set.
pub fn identifiability_sigma_min<F: ComponentFamily<f64> + ?Sized>(
    family: &F,
    k: usize,
    thetas: &[f64],
    x_grid: Option<&[f64]>,
    allow_duplicates: bool,
) -> Result<f64> {
    if thetas.is_empty() {
        return Err(MixError::InvalidArgument("no atoms".into()));
    }
    for &t in thetas {
        family.check_args(k, t)?;
    }
    if !allow_duplicates {
        let mut sorted = thetas.to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(MixError::DegenerateInput("repeated atom locations".into()));
        }
    }
    let owned;
    let grid = match x_grid {
        Some(g) => g,
        None => {
            owned = default_x_grid(family, thetas);
            &owned
        }
    };
    if grid.len() < 2 {
        return Err(MixError::InvalidArgument("x grid needs at least two points".into()));
    }
    let root_w: Vec<f64> = trapezoid_weights(grid).into_iter().map(f64::sqrt).collect();
    let cols = (k + 1) * thetas.len();
    let a = DMatrix::from_fn(grid.len(), cols, |i, c| {
        let (p, j) = (c / thetas.len(), c % thetas.len());
        root_w[i] * family.cdf_deriv_unchecked(p, grid[i], thetas[j])
    });
    let sv = a.singular_values();
    Ok(sv.iter().copied().fold(f64::INFINITY, f64::min).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VandermondeRank {
    pub rank: usize,
    pub dim: usize,
    pub singular_values: Vec<f64>,
    /// Cutoff `d eps sigma_max` applied to the singular values.
    pub threshold: f64,
    /// `sigma_min < sqrt(eps) sigma_max`: numerically full rank but close
    /// to losing it.
    pub near_deficient: bool,
}

/// Numerical rank of the confluent Vandermonde matrix whose column for atom
/// `i` and derivative `l < mult_i` is `a[k] = theta_i^(k-l) / (k-l)!` for
/// `k >= l` and 0 otherwise, `k = 0..d`.
pub fn confluent_vandermonde_rank(thetas: &[f64], multiplicities: &[usize]) -> Result<VandermondeRank> {
    if thetas.is_empty() || thetas.len() != multiplicities.len() {
        return Err(MixError::InvalidArgument(
            "need one multiplicity per atom".into(),
        ));
    }
    if multiplicities.contains(&0) {
        return Err(MixError::InvalidArgument("multiplicities must be positive".into()));
    }
    let d: usize = multiplicities.iter().sum();
    let mut cols: Vec<(f64, usize)> = Vec::with_capacity(d);
    for (&t, &mult) in thetas.iter().zip(multiplicities) {
        cols.extend((0..mult).map(|l| (t, l)));
    }
    let a = DMatrix::from_fn(d, d, |k, c| {
        let (t, l) = cols[c];
        if k < l {
            0.0
        } else {
            let e = k - l;
            t.powi(e as i32) / (1..=e).map(|v| v as f64).product::<f64>()
        }
    });
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let smax = sv[0];
    let threshold = d as f64 * f64::EPSILON * smax;
    let rank = sv.iter().filter(|&&s| s > threshold).count();
    let near_deficient = sv[d - 1] < f64::EPSILON.sqrt() * smax;
    if rank < d || near_deficient {
        log::warn!("confluent Vandermonde matrix is rank deficient or nearly so: {sv:?}");
    }
    Ok(VandermondeRank {
        rank,
        dim: d,
        singular_values: sv,
        threshold,
        near_deficient,
    })
}

/// The closed-form Jacobian of `(pi, h) -> (sum pi_j h_j^k)_{k < 2d}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianValue {
    pub value: f64,
    /// Two of the `h_j` coincide, so the value is exactly 0.
    pub degenerate: bool,
}

/// `(-1)^(d(d-1)/2) pi_1 ... pi_d prod_{j<k} (h_j - h_k)^4`.
pub fn jacobian_phi(pi: &[f64], h: &[f64]) -> Result<JacobianValue> {
    check_jacobian_args(pi, h)?;
    let d = pi.len();
    let mut value = if (d * (d - 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    value *= pi.iter().product::<f64>();
    let mut degenerate = false;
    for j in 0..d {
        for k in j + 1..d {
            let gap = h[j] - h[k];
            degenerate |= gap == 0.0;
            value *= gap.powi(4);
        }
    }
    Ok(JacobianValue {
        value: if degenerate { 0.0 } else { value },
        degenerate,
    })
}

fn check_jacobian_args(pi: &[f64], h: &[f64]) -> Result<()> {
    if pi.is_empty() || pi.len() != h.len() {
        return Err(MixError::InvalidArgument("pi and h must have the same positive length".into()));
    }
    if pi.iter().any(|&p| !(p > 0.0)) {
        return Err(MixError::InvalidArgument("weights must be positive".into()));
    }
    Ok(())
}

/// `(sum_j pi_j h_j^k)` for `k = 0..2d`.
pub fn moment_map(pi: &[f64], h: &[f64]) -> Vec<f64> {
    (0..2 * pi.len())
        .map(|k| pi.iter().zip(h).map(|(p, x)| p * x.powi(k as i32)).sum())
        .collect()
}

/// Determinant of the finite-difference Jacobian of [`moment_map`] with
/// variables ordered `(pi_1..pi_d, h_1..h_d)`, using the fourth-order
/// five-point central stencil with the given step.
pub fn jacobian_finite_difference(pi: &[f64], h: &[f64], step: f64) -> Result<f64> {
    check_jacobian_args(pi, h)?;
    let d = pi.len();
    let vars: Vec<f64> = pi.iter().chain(h).copied().collect();
    let eval = |c: usize, offset: f64| {
        let mut v = vars.clone();
        v[c] += offset;
        moment_map(&v[..d], &v[d..])
    };
    let mut jac = Matrix::zeros(2 * d, 2 * d);
    for c in 0..2 * d {
        let (p2, p1) = (eval(c, 2.0 * step), eval(c, step));
        let (m1, m2) = (eval(c, -step), eval(c, -2.0 * step));
        for r in 0..2 * d {
            jac[(r, c)] = (8.0 * (p1[r] - m1[r]) - (p2[r] - m2[r])) / (12.0 * step);
        }
    }
    determinant(&jac)
}

/// `E_theta |f^(p)(X, theta') / f(X, theta'')|^q`, computed in log space by
/// adaptive quadrature over the line. `+inf` when the integral diverges.
pub fn smoothness_integral<F: ComponentFamily<f64> + ?Sized>(
    family: &F,
    p: usize,
    q: f64,
    theta: f64,
    theta1: f64,
    theta2: f64,
) -> Result<f64> {
    smoothness_integral_with(family, p, q, theta, theta1, theta2, &QuadConfig::default())
}

pub fn smoothness_integral_with<F: ComponentFamily<f64> + ?Sized>(
    family: &F,
    p: usize,
    q: f64,
    theta: f64,
    theta1: f64,
    theta2: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    for t in [theta, theta1, theta2] {
        family.check_args(p, t)?;
    }
    if !(q >= 1.0) {
        return Err(MixError::InvalidArgument(format!("q = {q} must be at least 1")));
    }
    let integrand = |x: f64| {
        let weight = family.ln_pdf(x, theta);
        let num = family.ln_abs_pdf_deriv(p, x, theta1);
        if weight == f64::NEG_INFINITY || num == f64::NEG_INFINITY {
            return 0.0;
        }
        (q * (num - family.ln_pdf(x, theta2)) + weight).exp()
    };
    let s = family.scale();
    let lo = theta.min(theta1).min(theta2) - GRID_PAD * s;
    let hi = theta.max(theta1).max(theta2) + GRID_PAD * s;
    quadrature::integrate_line(integrand, lo, hi, s, cfg)
}

/// `2 exp(-2 n z^2)`, capped at 1.
pub fn dkw_bound(n: usize, z: f64) -> f64 {
    (2.0 * (-2.0 * n as f64 * z * z).exp()).min(1.0)
}
