//! Monte Carlo check of local asymptotic normality for `G_n(u)`.
//!
//! Under `G_n(0)` the log-likelihood ratio `Z_{n,0}(u)` of `G_n(u)` against
//! `G_n(0)` should behave like `u Z_n - u^2 Gamma / 2` with
//! `Z_n ~ N(0, Gamma)`, where
//!
//! ```text
//! Z_n = pi_{m0} n^{-1/2} sum_i Z_{i,n},
//! Z_{i,n} = f^(2d-1)(X_i, theta_{m0}) / ((2d-1)! f(X_i, G_n(0))).
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quadrature::{integrate_line, QuadConfig};
use super::GRID_PAD;
use crate::error::{MixError, Result};
use crate::family::{sample_mixture_labeled, ComponentFamily};
use crate::mixing::MixingDistribution;
use crate::moments::{lan_family, MomentSequence};
use crate::rng::stream;
use crate::scalar::normal_cdf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanReport {
    pub u: f64,
    pub n: usize,
    /// Replications that entered the statistics.
    pub reps: usize,
    /// Replications dropped because a likelihood ratio was not finite.
    pub excluded: usize,
    pub d: usize,
    pub gamma_hat: f64,
    /// `pi_{m0}^2 E_{G0} |Z_{1,n}|^2` under `G0` itself, by quadrature.
    pub gamma_candidate: f64,
    pub zn_mean: f64,
    pub zn_var: f64,
    pub lr_mean: f64,
    pub lr_var: f64,
    /// Kolmogorov distance of the `Z_n` sample to `N(0, gamma_hat)`.
    pub ks_stat: f64,
    /// RMS of `Z_{n,0}(u) - u Z_n + u^2 gamma_hat / 2`.
    pub residual_rms: f64,
}

struct Replication {
    lr: f64,
    zn: f64,
    /// `sum_i Z_{i,n}^2`.
    sq: f64,
}

fn ln_mixture_pdf<F: ComponentFamily<f64> + ?Sized>(family: &F, g: &MixingDistribution<f64>, x: f64) -> f64 {
    let terms: Vec<f64> = g.atoms().map(|(t, w)| w.ln() + family.ln_pdf(x, t)).collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + terms.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Simulates `reps` samples of size `n` from `G_n(0)` and summarizes the
/// log-likelihood ratio against `G_n(u)`. `G0` has order `m0 <= m`; its
/// largest atom is the one replaced by the `d = m - m0 + 1` point cloud.
#[allow(clippy::too_many_arguments)]
pub fn lan_simulate<F: ComponentFamily<f64> + ?Sized>(
    family: &F,
    g0: &MixingDistribution<f64>,
    m: usize,
    u: f64,
    n: usize,
    reps: usize,
    base: &MomentSequence<f64>,
    seed: u64,
) -> Result<LanReport> {
    if reps < 2 {
        return Err(MixError::InvalidArgument("need at least two replications".into()));
    }
    if n == 0 {
        return Err(MixError::EmptySample);
    }
    let m0 = g0.order();
    if m < m0 {
        return Err(MixError::InvalidArgument(format!("m = {m} is below the order {m0} of G0")));
    }
    let d = m - m0 + 1;
    let order = 2 * d - 1;
    if order > family.max_deriv_order() {
        return Err(MixError::UnsupportedOrder {
            order,
            max: family.max_deriv_order(),
        });
    }
    let domain = family.domain();
    let null = lan_family(g0, m, n as u64, 0.0, base, &domain)?;
    let alt = lan_family(g0, m, n as u64, u, base, &domain)?;
    let anchor = g0.max_location();
    let pi_m0 = *g0.weights().last().expect("non-empty");
    let norm = factorial(order);
    let root_n = (n as f64).sqrt();

    let runs: Vec<Option<Replication>> = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<Option<Replication>> {
            let mut rng = stream(seed, &[r as u64]);
            let draws = sample_mixture_labeled(family, &null, n, &mut rng)?;
            let (mut lr, mut score, mut sq) = (0.0, 0.0, 0.0);
            for (x, _) in draws {
                let ln_null = ln_mixture_pdf(family, &null, x);
                let ratio = if null == alt { 0.0 } else { ln_mixture_pdf(family, &alt, x) - ln_null };
                let z = family.pdf_deriv_unchecked(order, x, anchor) / (norm * ln_null.exp());
                if !ratio.is_finite() || !z.is_finite() {
                    return Ok(None);
                }
                lr += ratio;
                score += z;
                sq += z * z;
            }
            Ok(Some(Replication {
                lr,
                zn: pi_m0 * score / root_n,
                sq,
            }))
        })
        .collect::<Result<_>>()?;

    let kept: Vec<&Replication> = runs.iter().flatten().collect();
    let excluded = reps - kept.len();
    if kept.len() < 2 {
        return Err(MixError::Numerical(format!(
            "{excluded} of {reps} replications had non-finite likelihood ratios"
        )));
    }
    let k = kept.len() as f64;
    let gamma_hat = pi_m0 * pi_m0 * kept.iter().map(|r| r.sq).sum::<f64>() / (k * n as f64);
    let (zn_mean, zn_var) = mean_var(kept.iter().map(|r| r.zn));
    let (lr_mean, lr_var) = mean_var(kept.iter().map(|r| r.lr));
    let mut zs: Vec<f64> = kept.iter().map(|r| r.zn).collect();
    zs.sort_by(f64::total_cmp);
    let sd = gamma_hat.sqrt();
    let ks_stat = zs
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let f = if sd > 0.0 { normal_cdf(z / sd) } else if z < 0.0 { 0.0 } else { 1.0 };
            (f - i as f64 / k).max((i + 1) as f64 / k - f)
        })
        .fold(0.0, f64::max)
        .min(1.0);
    let residual_rms = (kept
        .iter()
        .map(|r| (r.lr - u * r.zn + u * u * gamma_hat / 2.0).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();

    Ok(LanReport {
        u,
        n,
        reps: kept.len(),
        excluded,
        d,
        gamma_hat,
        gamma_candidate: lan_gamma_candidate(family, g0, m)?,
        zn_mean,
        zn_var,
        lr_mean,
        lr_var,
        ks_stat,
        residual_rms,
    })
}

/// `pi_{m0}^2 E_{G0} |f^(2d-1)(X, theta_{m0}) / ((2d-1)! f(X, G0))|^2`.
pub fn lan_gamma_candidate<F: ComponentFamily<f64> + ?Sized>(
    family: &F,
    g0: &MixingDistribution<f64>,
    m: usize,
) -> Result<f64> {
    let d = m + 1 - g0.order();
    let order = 2 * d - 1;
    let anchor = g0.max_location();
    let pi_m0 = *g0.weights().last().expect("non-empty");
    let ln_norm = factorial(order).ln();
    let integrand = |x: f64| {
        let num = family.ln_abs_pdf_deriv(order, x, anchor);
        let den = ln_mixture_pdf(family, g0, x);
        if num == f64::NEG_INFINITY {
            return 0.0;
        }
        (2.0 * (num - ln_norm) - den).exp()
    };
    let s = family.scale();
    let lo = g0.min_location() - GRID_PAD * s;
    let hi = g0.max_location() + GRID_PAD * s;
    Ok(pi_m0 * pi_m0 * integrate_line(integrand, lo, hi, s, &QuadConfig::default())?)
}

fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::GaussianLocation;

    #[test]
    fn null_direction_gives_zero_ratios() {
        let g = GaussianLocation::standard();
        let base = MomentSequence::new(vec![1.0]).unwrap();
        let r = lan_simulate(&g, &MixingDistribution::dirac(0.0), 1, 0.0, 50, 10, &base, 1).unwrap();
        assert_eq!(r.lr_mean, 0.0);
        assert_eq!(r.lr_var, 0.0);
    }

    #[test]
    fn candidate_at_unit_location_family_is_one() {
        let g = GaussianLocation::standard();
        let v = lan_gamma_candidate(&g, &MixingDistribution::dirac(0.0), 1).unwrap();
        assert!((v - 1.0).abs() < 1e-8, "{v}");
    }
}
