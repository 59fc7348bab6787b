//! Minimum-distance estimation over `G_{<=m}` and adaptive order selection.
//!
//! The estimator minimizes `||F(., G) - F_n||_inf` over mixing distributions
//! with at most `m` atoms. The objective is continuous, nonsmooth and
//! multimodal, so the search is a multistart Nelder-Mead: starts come from a
//! warm start at order `m - 1`, a method-of-moments fit, a k-means split of
//! the sample, caller-supplied candidates and random draws. Every start runs
//! on its own random stream and the best result is chosen by a total order
//! (objective, then lexicographic parameters), so the outcome does not
//! depend on thread scheduling.

pub mod nelder_mead;
mod objective;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MixError, Result};
use crate::family::{ComponentFamily, ParamDomain};
use crate::mixing::MixingDistribution;
use crate::moments::{solve_moment_problem, MomentSequence};
use crate::rng::stream;
use crate::sample::EmpiricalSample;
use crate::DEFAULT_M_MAX;

pub use nelder_mead::{minimize, NelderMeadConfig, NelderMeadResult};
pub use objective::SupObjective;

/// Atoms closer than this are merged in the returned estimate.
pub const COLLAPSE_TOL: f64 = 1e-8;
/// Lower bound applied to every weight during the search.
pub const WEIGHT_FLOOR: f64 = 1e-10;
/// Two restarts agreeing to within this count as a confirmed optimum.
pub const AGREEMENT_TOL: f64 = 1e-6;
/// Default `kappa` in the order-selection threshold `n^{-1/2 + kappa}`.
pub const DEFAULT_KAPPA: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct EstimateOptions {
    pub seed: u64,
    /// Number of Nelder-Mead starts per order; `None` means `20 + 10 m`.
    pub restarts: Option<usize>,
    /// Parameter interval; intersected with the family domain.
    pub domain: Option<ParamDomain<f64>>,
    /// Extra starting points. Each is also compared as-is against the final
    /// estimate, so the result never does worse than any of them.
    pub candidates: Vec<MixingDistribution<f64>>,
    pub nelder_mead: NelderMeadConfig,
    /// Restarts of Nelder-Mead from its own best point with halved steps.
    pub refinements: usize,
    pub m_max: usize,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: None,
            domain: None,
            candidates: Vec::new(),
            nelder_mead: NelderMeadConfig::default(),
            refinements: 3,
            m_max: DEFAULT_M_MAX,
        }
    }
}

impl EstimateOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn restarts_for(&self, m: usize) -> usize {
        self.restarts.unwrap_or(20 + 10 * m).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorResult {
    pub g_hat: MixingDistribution<f64>,
    /// `||F(., g_hat) - F_n||_inf`, evaluated exactly.
    pub objective: f64,
    pub restarts_used: usize,
    /// At least two restarts reached the best objective within
    /// [`AGREEMENT_TOL`]. For [`select_order`] also false when no order
    /// passed the threshold.
    pub converged: bool,
    pub selected_order: usize,
}

/// Exact `sup_x |F(x, G) - F_n(x)|` from the order statistics.
pub fn sup_distance<F: ComponentFamily<f64> + ?Sized>(
    family: &F,
    g: &MixingDistribution<f64>,
    sample: &EmpiricalSample<f64>,
) -> Result<f64> {
    if sample.is_empty() {
        return Err(MixError::EmptySample);
    }
    Ok(objective::full_scan(family, g.locations(), g.weights(), sample.data()))
}

/// The order-selection threshold `n^{-1/2 + kappa}`.
pub fn order_threshold(n: usize, kappa: f64) -> f64 {
    (n as f64).powf(kappa - 0.5)
}

/// Best distribution in `G_{<=m}` found by the multistart search.
///
/// Fits orders `1, ..., m` in turn, each warm-started from the previous, so
/// the objective is nonincreasing in `m` and the fit at order `k` does not
/// depend on which `m >= k` was requested.
pub fn min_distance_estimate<F: ComponentFamily<f64> + ?Sized>(
    family: &F,
    sample: &EmpiricalSample<f64>,
    m: usize,
    opts: &EstimateOptions,
) -> Result<EstimatorResult> {
    check_order(m, opts.m_max)?;
    let search = Search::new(family, sample, opts)?;
    let mut prev: Option<EstimatorResult> = None;
    for k in 1..=m {
        prev = Some(search.fit(k, prev.as_ref().map(|r| &r.g_hat))?);
    }
    Ok(prev.expect("m >= 1"))
}

/// The smallest `m <= m_max` whose fit reaches `n^{-1/2 + kappa}`, with that
/// fit. If none does, the order-`m_max` fit with `converged = false`.
pub fn select_order<F: ComponentFamily<f64> + ?Sized>(
    family: &F,
    sample: &EmpiricalSample<f64>,
    kappa: f64,
    m_max: usize,
    opts: &EstimateOptions,
) -> Result<EstimatorResult> {
    if !(kappa > 0.0 && kappa < 0.5) {
        return Err(MixError::InvalidArgument(format!("kappa = {kappa} is not in (0, 1/2)")));
    }
    check_order(1, m_max)?;
    let threshold = order_threshold(sample.len(), kappa);
    let search = Search::new(family, sample, opts)?;
    let mut prev: Option<EstimatorResult> = None;
    for m in 1..=m_max {
        let fit = search.fit(m, prev.as_ref().map(|r| &r.g_hat))?;
        if fit.objective <= threshold {
            return Ok(fit);
        }
        prev = Some(fit);
    }
    let mut last = prev.expect("m_max >= 1");
    last.converged = false;
    Ok(last)
}

fn check_order(m: usize, m_max: usize) -> Result<()> {
    if m == 0 || m_max == 0 {
        return Err(MixError::InvalidArgument("order must be at least 1".into()));
    }
    if m > m_max {
        return Err(MixError::InvalidArgument(format!("order {m} exceeds m_max = {m_max}")));
    }
    Ok(())
}

struct Search<'a, F: ?Sized> {
    family: &'a F,
    sample: &'a EmpiricalSample<f64>,
    objective: SupObjective<'a, F>,
    domain: ParamDomain<f64>,
    opts: &'a EstimateOptions,
    scale: f64,
}

/// Maps an unconstrained vector `(theta_1..theta_m, l_1..l_{m-1})` to atoms
/// and weights: atoms are clamped to the domain, weights are a softmax with
/// `l_m = 0`, floored at [`WEIGHT_FLOOR`] and renormalized.
fn decode(x: &[f64], m: usize, domain: &ParamDomain<f64>, thetas: &mut Vec<f64>, weights: &mut Vec<f64>) {
    thetas.clear();
    weights.clear();
    thetas.extend(x[..m].iter().map(|&t| domain.clamp(t)));
    let top = x[m..].iter().fold(0.0f64, |a, &l| a.max(l));
    weights.extend(x[m..].iter().map(|&l| (l - top).exp()));
    weights.push((-top).exp());
    let s: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w = (*w / s).max(WEIGHT_FLOOR);
    }
    let s: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= s;
    }
}

/// Inverse of [`decode`] for a distribution with at most `m` atoms; missing
/// atoms are filled by repeatedly splitting the heaviest atom in place.
fn encode(g: &MixingDistribution<f64>, m: usize) -> Vec<f64> {
    let mut atoms: Vec<(f64, f64)> = g.atoms().collect();
    while atoms.len() < m {
        let j = (0..atoms.len())
            .max_by(|&a, &b| atoms[a].1.total_cmp(&atoms[b].1).then(b.cmp(&a)))
            .unwrap();
        atoms[j].1 /= 2.0;
        atoms.insert(j + 1, atoms[j]);
    }
    let last = atoms[m - 1].1;
    let mut x: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    x.extend(atoms[..m - 1].iter().map(|a| (a.1 / last).ln()));
    x
}

fn better(a: &(MixingDistribution<f64>, f64), b: &(MixingDistribution<f64>, f64)) -> bool {
    match a.1.total_cmp(&b.1) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => a.0.lex_cmp(&b.0) == std::cmp::Ordering::Less,
    }
}

impl<'a, F: ComponentFamily<f64> + ?Sized> Search<'a, F> {
    fn new(family: &'a F, sample: &'a EmpiricalSample<f64>, opts: &'a EstimateOptions) -> Result<Self> {
        let fam = family.domain();
        let domain = match &opts.domain {
            Some(d) => ParamDomain::new(d.lo.max(fam.lo), d.hi.min(fam.hi))?,
            None => fam,
        };
        Ok(Self {
            family,
            sample,
            objective: SupObjective::new(family, sample.data()),
            domain,
            opts,
            scale: family.scale(),
        })
    }

    fn exact(&self, g: &MixingDistribution<f64>) -> f64 {
        self.objective.eval(g.locations(), g.weights(), f64::INFINITY)
    }

    fn in_domain(&self, g: &MixingDistribution<f64>) -> bool {
        g.locations().iter().all(|&t| self.domain.contains(t))
    }

    fn clamped(&self, atoms: impl IntoIterator<Item = (f64, f64)>) -> Option<MixingDistribution<f64>> {
        MixingDistribution::from_unnormalized(atoms.into_iter().map(|(t, w)| (self.domain.clamp(t), w))).ok()
    }

    fn fit(&self, m: usize, warm: Option<&MixingDistribution<f64>>) -> Result<EstimatorResult> {
        let mut seeds: Vec<MixingDistribution<f64>> = Vec::new();
        if let Some(prev) = warm {
            seeds.push(prev.clone());
            if prev.order() < m {
                for j in 0..prev.order() {
                    let (t, w) = (prev.locations()[j], prev.weights()[j]);
                    let split = prev
                        .atoms()
                        .enumerate()
                        .flat_map(|(i, a)| {
                            if i == j {
                                vec![(t - 0.25 * self.scale, w / 2.0), (t + 0.25 * self.scale, w / 2.0)]
                            } else {
                                vec![a]
                            }
                        })
                        .collect::<Vec<_>>();
                    if let Some(g) = self.clamped(split) {
                        seeds.push(g);
                    }
                }
            }
        }
        seeds.extend(self.method_of_moments(m));
        seeds.extend(self.kmeans(m));
        let supplied: Vec<&MixingDistribution<f64>> = self
            .opts
            .candidates
            .iter()
            .filter(|g| g.order() <= m && self.in_domain(g))
            .collect();
        seeds.extend(supplied.iter().map(|g| (*g).clone()));
        seeds.retain(|g| g.order() <= m);

        let total = self.opts.restarts_for(m).max(seeds.len());
        let starts: Vec<Vec<f64>> = (0..total)
            .map(|r| match seeds.get(r) {
                Some(g) => encode(g, m),
                None => self.random_start(m, r as u64),
            })
            .collect();

        let runs: Vec<(MixingDistribution<f64>, f64)> = starts
            .par_iter()
            .map(|x0| self.run_start(m, x0))
            .collect::<Result<_>>()?;

        let mut pool: Vec<(MixingDistribution<f64>, f64)> = Vec::with_capacity(runs.len() + seeds.len());
        pool.extend(seeds.iter().filter(|g| self.in_domain(g)).map(|g| (g.clone(), self.exact(g))));
        pool.extend(runs.iter().cloned());
        let mut best: Option<&(MixingDistribution<f64>, f64)> = None;
        for cand in pool.iter().filter(|c| c.1.is_finite()) {
            if best.is_none_or(|b| better(cand, b)) {
                best = Some(cand);
            }
        }
        let (g_hat, objective) = best.cloned().ok_or(MixError::SearchFailure)?;
        let agreeing = runs.iter().filter(|r| r.1 <= objective + AGREEMENT_TOL).count();
        Ok(EstimatorResult {
            g_hat,
            objective,
            restarts_used: runs.len(),
            converged: agreeing >= 2,
            selected_order: m,
        })
    }

    fn run_start(&self, m: usize, x0: &[f64]) -> Result<(MixingDistribution<f64>, f64)> {
        let dim = x0.len();
        let mut thetas = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        let mut f = |x: &[f64], cutoff: f64| {
            decode(x, m, &self.domain, &mut thetas, &mut weights);
            self.objective.eval(&thetas, &weights, cutoff)
        };
        let mut steps: Vec<f64> = (0..dim).map(|i| if i < m { 0.5 * self.scale } else { 0.5 }).collect();
        let mut best = minimize(&mut f, x0, &steps, &self.opts.nelder_mead);
        for _ in 0..self.opts.refinements {
            steps.iter_mut().for_each(|s| *s *= 0.5);
            let next = minimize(&mut f, &best.x, &steps, &self.opts.nelder_mead);
            let improved = next.value < best.value;
            if next.value <= best.value {
                best = next;
            }
            if !improved {
                break;
            }
        }
        let (mut t, mut w) = (Vec::new(), Vec::new());
        decode(&best.x, m, &self.domain, &mut t, &mut w);
        let raw = MixingDistribution::from_unnormalized(t.into_iter().zip(w))?;
        let raw_value = self.exact(&raw);
        let merged = raw.merged_within(COLLAPSE_TOL);
        if merged.order() < raw.order() {
            let merged_value = self.exact(&merged);
            if merged_value <= raw_value + 1e-9 {
                return Ok((merged, merged_value));
            }
        }
        Ok((raw, raw_value))
    }

    fn random_start(&self, m: usize, r: u64) -> Vec<f64> {
        let mut rng = stream(self.opts.seed, &[m as u64, r]);
        let mut lo = self.domain.clamp(self.sample.quantile(0.02));
        let mut hi = self.domain.clamp(self.sample.quantile(0.98));
        if !(hi > lo) {
            lo = self.domain.lo;
            hi = self.domain.hi;
        }
        let mut x: Vec<f64> = (0..m).map(|_| rng.gen_range(lo..=hi)).collect();
        let e: Vec<f64> = (0..m).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        x.extend(e[..m - 1].iter().map(|v| (v / e[m - 1]).ln()));
        x
    }

    /// Deconvolves the centered sample moments by the location noise and
    /// solves the Hankel moment problem, lowering the order until feasible.
    fn method_of_moments(&self, m: usize) -> Option<MixingDistribution<f64>> {
        let noise: Vec<f64> = (0..2 * m).map(|k| self.family.location_noise_moment(k)).collect::<Option<_>>()?;
        let data = self.sample.data();
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let raw: Vec<f64> = (0..2 * m)
            .map(|k| data.iter().map(|x| (x - mean).powi(k as i32)).sum::<f64>() / n)
            .collect();
        let mut mu = vec![1.0; 2 * m];
        for k in 1..2 * m {
            let mut binom = 1.0;
            let mut v = raw[k];
            for j in 0..k {
                v -= binom * mu[j] * noise[k - j];
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
            mu[k] = v;
        }
        for d in (1..=m).rev() {
            let seq = MomentSequence::new(mu[..2 * d].to_vec()).ok()?;
            if let Ok(g) = solve_moment_problem(&seq, d) {
                if let Some(g) = self.clamped(g.atoms().map(|(t, w)| (t + mean, w))) {
                    return Some(g);
                }
            }
        }
        None
    }

    /// Lloyd iterations on the sample from equally spaced quantiles.
    fn kmeans(&self, m: usize) -> Option<MixingDistribution<f64>> {
        let data = self.sample.data();
        let mut centers: Vec<f64> = (0..m)
            .map(|j| self.sample.quantile((2 * j + 1) as f64 / (2 * m) as f64))
            .collect();
        let mut counts = vec![0usize; m];
        for _ in 0..25 {
            centers.sort_by(f64::total_cmp);
            centers.dedup();
            let k = centers.len();
            let mut sums = vec![0.0; k];
            counts = vec![0; k];
            let mut start = 0;
            for j in 0..k {
                let end = if j + 1 < k {
                    let cut = 0.5 * (centers[j] + centers[j + 1]);
                    data.partition_point(|&x| x <= cut)
                } else {
                    data.len()
                };
                sums[j] = data[start..end].iter().sum();
                counts[j] = end - start;
                start = end;
            }
            let next: Vec<f64> = (0..k)
                .filter(|&j| counts[j] > 0)
                .map(|j| sums[j] / counts[j] as f64)
                .collect();
            counts.retain(|&c| c > 0);
            if next == centers {
                break;
            }
            centers = next;
        }
        let n = data.len() as f64;
        self.clamped(centers.into_iter().zip(counts.into_iter().map(|c| c as f64 / n)))
    }
}
