//! Sup-CDF distance against Wasserstein distance along a family of pairs.

use serde::{Deserialize, Serialize};

use crate::error::{MixError, Result};
use crate::family::ComponentFamily;
use crate::mixing::{diff, wasserstein, MixingDistribution};

/// Grid points for the coarse scan of `|F(., G1) - F(., G2)|`.
pub const PROBE_GRID: usize = 4001;
/// Grid padding beyond the atom span, in family scales.
pub const PROBE_PAD: f64 = 8.0;
/// Local maxima refined by golden-section search.
pub const PROBE_REFINE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub eps: f64,
    pub sup_dist: f64,
    pub wasserstein: f64,
    pub ratio: f64,
}

/// `sup_x |F(x, G1) - F(x, G2)|` from a dense grid over the atom span
/// padded by eight scales, with golden-section refinement around the
/// largest grid values.
pub fn sup_cdf_distance<F: ComponentFamily<f64> + ?Sized>(
    family: &F,
    g1: &MixingDistribution<f64>,
    g2: &MixingDistribution<f64>,
) -> f64 {
    let delta = diff(g1, g2);
    if delta.is_empty() {
        return 0.0;
    }
    let gap = |x: f64| -> f64 { delta.atoms().map(|(t, w)| w * family.cdf(x, t)).sum::<f64>().abs() };
    let s = family.scale();
    let lo = g1.min_location().min(g2.min_location()) - PROBE_PAD * s;
    let hi = g1.max_location().max(g2.max_location()) + PROBE_PAD * s;
    let step = (hi - lo) / (PROBE_GRID - 1) as f64;
    let values: Vec<f64> = (0..PROBE_GRID).map(|i| gap(lo + step * i as f64)).collect();
    let mut best = values.iter().copied().fold(0.0, f64::max);

    let mut peaks: Vec<usize> = (0..PROBE_GRID)
        .filter(|&i| {
            let left = if i > 0 { values[i - 1] } else { f64::NEG_INFINITY };
            let right = if i + 1 < PROBE_GRID { values[i + 1] } else { f64::NEG_INFINITY };
            values[i] >= left && values[i] >= right
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    for &i in peaks.iter().take(PROBE_REFINE) {
        let a = lo + step * i.saturating_sub(1) as f64;
        let b = lo + step * (i + 1).min(PROBE_GRID - 1) as f64;
        best = best.max(golden_max(&gap, a, b));
    }
    best
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = fc.max(fd);
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        best = best.max(fc).max(fd);
        if b - a <= 1e-12 * (1.0 + a.abs()) {
            break;
        }
    }
    best
}

/// For each `eps`, the pair from `pair(eps)`, its sup-CDF distance `D`, its
/// transportation distance `W` and `D / W^(2m - 2 m0 + 1)` with `m0` the
/// order of `g0`.
pub fn ratio_probe<F, P>(family: &F, g0: &MixingDistribution<f64>, m: usize, eps_grid: &[f64], pair: P) -> Result<Vec<RatioRow>>
where
    F: ComponentFamily<f64> + ?Sized,
    P: Fn(f64) -> Result<(MixingDistribution<f64>, MixingDistribution<f64>)>,
{
    let m0 = g0.order();
    if m < m0 {
        return Err(MixError::InvalidArgument(format!("m = {m} is below the order {m0} of G0")));
    }
    let exponent = (2 * (m - m0) + 1) as i32;
    eps_grid
        .iter()
        .map(|&eps| {
            let (g1, g2) = pair(eps)?;
            let sup_dist = sup_cdf_distance(family, &g1, &g2);
            let w = wasserstein(&g1, &g2);
            let ratio = if w > 0.0 { sup_dist / w.powi(exponent) } else { 0.0 };
            Ok(RatioRow {
                eps,
                sup_dist,
                wasserstein: w,
                ratio,
            })
        })
        .collect()
}

/// `k` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp()).collect()
}
