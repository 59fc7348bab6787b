//! Seeded Monte Carlo experiments: estimation-rate curves, sup-CDF versus
//! Wasserstein ratio probes and DKW coverage tables.
//!
//! Every `(n, rep)` cell draws from its own stream keyed by
//! `(seed, n index, rep)`, so results are identical whatever the thread
//! count.

mod ratio;
mod report;

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MixError, Result};
use crate::estimate::{min_distance_estimate, select_order, sup_distance, EstimateOptions, NelderMeadConfig, DEFAULT_KAPPA};
use crate::family::{sample_mixture, ComponentFamily, FamilySpec};
use crate::mixing::{wasserstein, MixingDistribution};
use crate::moments::{default_base, lan_family, MomentSequence};
use crate::rng::stream;
use crate::verify::dkw_bound;
use crate::DEFAULT_M_MAX;

pub use ratio::{log_grid, ratio_probe, sup_cdf_distance, RatioRow};
pub use report::{dkw_csv, loglog_svg, rate_csv, ratio_csv, PlotSeries};

/// Fraction dropped from each end before averaging `W`.
pub const TRIM: f64 = 0.025;

/// The true mixing distribution of a rate experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthSpec {
    /// The same distribution at every `n`.
    Fixed { g: MixingDistribution<f64> },
    /// `G_n(u)` built around `g0` with order `m`, so it moves with `n`.
    Lan {
        g0: MixingDistribution<f64>,
        m: usize,
        #[serde(default)]
        u: f64,
        #[serde(default)]
        base: Option<MomentSequence<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeSpec {
    Fixed {
        m: usize,
    },
    Auto {
        #[serde(default = "default_kappa")]
        kappa: f64,
        #[serde(default = "default_m_max")]
        m_max: usize,
    },
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

fn default_m_max() -> usize {
    DEFAULT_M_MAX
}

/// Search effort per fit; the defaults match [`EstimateOptions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    #[serde(default)]
    pub restarts: Option<usize>,
    #[serde(default = "SearchSpec::default_evals")]
    pub max_evals: usize,
    #[serde(default = "SearchSpec::default_refinements")]
    pub refinements: usize,
}

impl SearchSpec {
    fn default_evals() -> usize {
        NelderMeadConfig::default().max_evals
    }
    fn default_refinements() -> usize {
        EstimateOptions::default().refinements
    }
}

impl Default for SearchSpec {
    fn default() -> Self {
        Self {
            restarts: None,
            max_evals: Self::default_evals(),
            refinements: Self::default_refinements(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateExperimentConfig {
    #[serde(default)]
    pub family: FamilySpec,
    pub truth: TruthSpec,
    pub mode: ModeSpec,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub search: SearchSpec,
    /// Record wall-clock seconds per cell; off by default so that output
    /// files are byte-reproducible.
    #[serde(default)]
    pub timing: bool,
}

pub fn default_n_grid() -> Vec<usize> {
    vec![250, 1000, 4000, 16000]
}

impl RateExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.len() < 2 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid[0] == 0 {
            return Err(MixError::InvalidArgument(
                "n_grid must hold at least two strictly increasing positive sizes".into(),
            ));
        }
        if self.reps < 10 {
            return Err(MixError::InvalidArgument("reps must be at least 10".into()));
        }
        match self.mode {
            ModeSpec::Fixed { m: 0 } => Err(MixError::InvalidArgument("m must be at least 1".into())),
            ModeSpec::Auto { kappa, m_max } if !(kappa > 0.0 && kappa < 0.5) || m_max == 0 => {
                Err(MixError::InvalidArgument("auto mode needs kappa in (0, 1/2) and m_max >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// The true mixing distribution at sample size `n`.
    pub fn truth_at(&self, n: usize) -> Result<MixingDistribution<f64>> {
        match &self.truth {
            TruthSpec::Fixed { g } => Ok(g.clone()),
            TruthSpec::Lan { g0, m, u, base } => {
                let d = (m + 1).saturating_sub(g0.order()).max(1);
                let base = base.clone().unwrap_or_else(|| default_base(d));
                lan_family(g0, *m, n as u64, *u, &base, &self.family.domain()?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub rep: usize,
    /// `W(G_hat, G_true)`; NaN when the fit failed.
    pub w: f64,
    pub objective: f64,
    /// Selected (auto mode) or requested (fixed mode) order; 0 on failure.
    pub m_hat: usize,
    pub seconds: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub n: usize,
    /// Trimmed mean of `W` over the successful replications.
    pub mean_w: f64,
    pub stderr: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub rows: Vec<RateRow>,
    pub summary: Vec<RateSummary>,
}

impl RateResult {
    /// Log-log slope of the trimmed means against `n`.
    pub fn slope(&self) -> Result<(f64, f64)> {
        let pts: Vec<(f64, f64)> = self.summary.iter().map(|s| (s.n as f64, s.mean_w)).collect();
        fit_loglog_slope(&pts)
    }
}

/// Mean after dropping `floor(TRIM k)` values from each end, and the
/// standard error of the retained values.
pub fn trimmed_mean(values: &[f64]) -> (f64, f64) {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let cut = (TRIM * v.len() as f64).floor() as usize;
    let kept = &v[cut..v.len() - cut];
    let k = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / k;
    let stderr = if kept.len() > 1 {
        (kept.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt() / k.sqrt()
    } else {
        0.0
    };
    (mean, stderr)
}

pub fn run_rate_experiment(cfg: &RateExperimentConfig) -> Result<RateResult> {
    cfg.validate()?;
    let family = cfg.family.build()?;
    let truths: Vec<MixingDistribution<f64>> = cfg.n_grid.iter().map(|&n| cfg.truth_at(n)).collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> = (0..cfg.n_grid.len())
        .flat_map(|i| (0..cfg.reps).map(move |r| (i, r)))
        .collect();
    let rows: Vec<RateRow> = cells
        .par_iter()
        .map(|&(i, rep)| run_cell(cfg, family.as_ref(), &truths[i], i, rep))
        .collect::<Result<_>>()?;

    let summary = cfg
        .n_grid
        .iter()
        .map(|&n| {
            let ws: Vec<f64> = rows.iter().filter(|r| r.n == n && !r.failed).map(|r| r.w).collect();
            let (mean_w, stderr) = if ws.is_empty() { (f64::NAN, f64::NAN) } else { trimmed_mean(&ws) };
            RateSummary {
                n,
                mean_w,
                stderr,
                count: ws.len(),
            }
        })
        .collect();
    Ok(RateResult { rows, summary })
}

fn run_cell(
    cfg: &RateExperimentConfig,
    family: &dyn ComponentFamily<f64>,
    truth: &MixingDistribution<f64>,
    n_idx: usize,
    rep: usize,
) -> Result<RateRow> {
    let n = cfg.n_grid[n_idx];
    let start = Instant::now();
    let mut rng = stream(cfg.seed, &[n_idx as u64, rep as u64]);
    let sample = sample_mixture(family, truth, n, &mut rng)?;
    let opts = EstimateOptions {
        seed: rng.gen(),
        restarts: cfg.search.restarts,
        domain: Some(cfg.family.domain()?),
        nelder_mead: NelderMeadConfig {
            max_evals: cfg.search.max_evals,
            ..NelderMeadConfig::default()
        },
        refinements: cfg.search.refinements,
        ..EstimateOptions::default()
    };
    let fit = match cfg.mode {
        ModeSpec::Fixed { m } => min_distance_estimate(family, &sample, m, &EstimateOptions { m_max: m.max(DEFAULT_M_MAX), ..opts }),
        ModeSpec::Auto { kappa, m_max } => select_order(family, &sample, kappa, m_max, &EstimateOptions { m_max, ..opts }),
    };
    let seconds = if cfg.timing { start.elapsed().as_secs_f64() } else { 0.0 };
    Ok(match fit {
        Ok(fit) => RateRow {
            n,
            rep,
            w: wasserstein(&fit.g_hat, truth),
            objective: fit.objective,
            m_hat: fit.selected_order,
            seconds,
            failed: false,
        },
        Err(e) => {
            log::warn!("fit failed at n = {n}, rep = {rep}: {e}");
            RateRow {
                n,
                rep,
                w: f64::NAN,
                objective: f64::NAN,
                m_hat: 0,
                seconds,
                failed: true,
            }
        }
    })
}

/// Ordinary least squares of `ln w` on `ln n`; returns `(slope, stderr)`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(MixError::InvalidArgument("need at least two points".into()));
    }
    if points.iter().any(|&(n, w)| !(n > 0.0) || !(w > 0.0)) {
        return Err(MixError::InvalidArgument("log-log fit needs positive coordinates".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(MixError::DegenerateInput("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let stderr = if points.len() > 2 {
        let intercept = my - slope * mx;
        let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (ssr / (k - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, stderr))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DkwRow {
    pub z: f64,
    pub bound: f64,
    pub exceedances: usize,
    pub reps: usize,
    pub frequency: f64,
    /// Binomial standard error `sqrt(b (1 - b) / reps)` at `b = bound`.
    pub stderr: f64,
}

/// Frequency of `||F_n - F(., G)||_inf > z` over `reps` samples of size
/// `n`, next to the DKW bound.
pub fn dkw_coverage<F: ComponentFamily<f64> + ?Sized>(
    family: &F,
    g: &MixingDistribution<f64>,
    n: usize,
    reps: usize,
    z_grid: &[f64],
    seed: u64,
) -> Result<Vec<DkwRow>> {
    if reps == 0 {
        return Err(MixError::InvalidArgument("reps must be positive".into()));
    }
    let sups: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let sample = sample_mixture(family, g, n, &mut stream(seed, &[r as u64]))?;
            sup_distance(family, g, &sample)
        })
        .collect::<Result<_>>()?;
    Ok(z_grid
        .iter()
        .map(|&z| {
            let exceedances = sups.iter().filter(|&&s| s > z).count();
            let bound = dkw_bound(n, z);
            DkwRow {
                z,
                bound,
                exceedances,
                reps,
                frequency: exceedances as f64 / reps as f64,
                stderr: (bound * (1.0 - bound) / reps as f64).sqrt(),
            }
        })
        .collect())
}
