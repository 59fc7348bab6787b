use std::path::Path;

use anyhow::{anyhow, Context};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use mixrate::bench::{
    dkw_coverage, dkw_csv, log_grid, loglog_svg, rate_csv, ratio_csv, ratio_probe, run_rate_experiment, PlotSeries,
    RateExperimentConfig,
};
use mixrate::estimate::{min_distance_estimate, select_order, EstimateOptions};
use mixrate::mixing::wasserstein;
use mixrate::moments::{adversarial_pair, default_base, solve_moment_problem};
use mixrate::rng::stream;
use mixrate::verify::{
    confluent_vandermonde_rank, identifiability_sigma_min, jacobian_finite_difference, jacobian_phi, lan_simulate,
    JACOBIAN_FD_STEP,
};
use mixrate::{ComponentFamily, FamilySpec, MixError, Mixing, Moments, Sample};

use crate::input::{emit, read_json, read_sample, read_toml};
use crate::{
    AdversarialArgs, BenchCommand, Cli, Command, DkwArgs, FamilyArgs, MomentsCommand, SampleArgs, SearchArgs,
    VerifyCommand,
};

pub enum Failure {
    Usage(anyhow::Error),
    Breach(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

/// Library errors caused by the input map to usage errors; numerical
/// failures count as breaches.
impl From<MixError> for Failure {
    fn from(e: MixError) -> Self {
        match e {
            MixError::Numerical(_) | MixError::Quadrature { .. } | MixError::SearchFailure => {
                Failure::Breach(e.to_string())
            }
            other => Failure::Usage(other.into()),
        }
    }
}

type Outcome = Result<(), Failure>;

pub fn dispatch(cli: &Cli) -> Outcome {
    let quiet = cli.quiet;
    match &cli.command {
        Command::Estimate(a) => {
            let order = if a.auto_order { None } else { a.m };
            estimate(&a.sample, &a.family, &a.search, order, a.kappa, a.m_max)
        }
        Command::SelectOrder(a) => estimate(&a.sample, &a.family, &a.search, None, a.kappa, a.m_max),
        Command::Moments(MomentsCommand::Solve { moments, d }) => {
            let mu: Moments = serde_json::from_str(moments).context("moments must be a JSON array starting with 1")?;
            let d = d.unwrap_or(mu.values().len() / 2);
            let g = solve_moment_problem(&mu, d)?;
            print_json(&g)
        }
        Command::Adversarial(a) => adversarial(a),
        Command::Bench(BenchCommand::Rate {
            config,
            output,
            summary,
            svg,
        }) => bench_rate(config, output.as_deref(), summary.as_deref(), svg.as_deref(), quiet),
        Command::Bench(BenchCommand::Ratio {
            d,
            eps_lo,
            eps_hi,
            points,
            u1,
            u2,
            base,
            family,
            output,
            svg,
        }) => {
            let fam = build_family(family)?;
            let base = parse_base(base.as_deref(), *d)?;
            if !(*eps_lo > 0.0 && eps_lo <= eps_hi) || *points == 0 {
                return Err(Failure::Usage(anyhow!("need 0 < eps-lo <= eps-hi and points >= 1")));
            }
            let grid = log_grid(*eps_lo, *eps_hi, *points);
            let rows = ratio_probe(fam.as_ref(), &Mixing::dirac(0.0), *d, &grid, |eps| {
                adversarial_pair(*d, eps, *u1, *u2, &base, 0.0)
            })?;
            emit(output.as_deref(), &ratio_csv(&rows))?;
            if let Some(path) = svg {
                let series = [
                    PlotSeries {
                        label: "sup |F1 - F2|".into(),
                        points: rows.iter().map(|r| (r.wasserstein, r.sup_dist)).collect(),
                    },
                ];
                emit(Some(path), &loglog_svg("Sup-CDF distance against W", "W", "sup distance", &series))?;
            }
            Ok(())
        }
        Command::Bench(BenchCommand::Dkw(a)) => {
            let rows = run_dkw(a)?;
            emit(a.output.as_deref(), &dkw_csv(&rows))?;
            Ok(())
        }
        Command::Verify(v) => verify(v),
        Command::Wasserstein { a, b } => {
            let g1: Mixing = read_json(a)?;
            let g2: Mixing = read_json(b)?;
            println!("{}", serde_json::to_string(&wasserstein(&g1, &g2)).expect("finite"));
            Ok(())
        }
    }
}

fn build_family(args: &FamilyArgs) -> Result<Box<dyn ComponentFamily<f64>>, Failure> {
    let spec = FamilySpec {
        name: args.family.clone(),
        sigma: args.sigma,
        theta_lo: args.theta_lo,
        theta_hi: args.theta_hi,
    };
    Ok(spec.build()?)
}

fn parse_base(text: Option<&str>, d: usize) -> Result<Moments, Failure> {
    match text {
        Some(t) => Ok(serde_json::from_str(t).context("base must be a JSON array starting with 1")?),
        None => Ok(default_base(d)),
    }
}

fn print_json<T: Serialize>(value: &T) -> Outcome {
    emit_json(None, value)
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.into()))?;
    text.push('\n');
    Ok(emit(path, &text)?)
}

fn estimate(
    sample: &SampleArgs,
    family: &FamilyArgs,
    search: &SearchArgs,
    order: Option<usize>,
    kappa: f64,
    m_max: usize,
) -> Outcome {
    let fam = build_family(family)?;
    let data = Sample::new(read_sample(&sample.input, sample.column)?)?;
    let opts = EstimateOptions {
        seed: search.seed,
        restarts: search.restarts,
        m_max,
        ..EstimateOptions::default()
    };
    let result = match order {
        Some(m) => min_distance_estimate(fam.as_ref(), &data, m, &opts)?,
        None => select_order(fam.as_ref(), &data, kappa, m_max, &opts)?,
    };
    emit_json(search.output.as_deref(), &result)
}

fn adversarial(a: &AdversarialArgs) -> Outcome {
    let base = parse_base(a.base.as_deref(), a.d)?;
    let (g1, g2) = adversarial_pair(a.d, a.eps, a.u1, a.u2, &base, a.center)?;
    let w = wasserstein(&g1, &g2);
    print_json(&json!({ "g1": g1, "g2": g2, "wasserstein": w }))
}

fn bench_rate(
    config: &Path,
    output: Option<&Path>,
    summary: Option<&Path>,
    svg: Option<&Path>,
    quiet: bool,
) -> Outcome {
    let cfg: RateExperimentConfig = read_toml(config)?;
    cfg.validate()?;
    if !quiet {
        eprintln!(
            "running {} replications at n = {:?}",
            cfg.reps, cfg.n_grid
        );
    }
    let result = run_rate_experiment(&cfg)?;
    let slope = result.slope();
    if !quiet {
        for s in &result.summary {
            eprintln!("n = {:>6}  mean W = {:.6}  (stderr {:.2e}, {} fits)", s.n, s.mean_w, s.stderr, s.count);
        }
        match &slope {
            Ok((b, se)) => eprintln!("log-log slope {b:.4} (stderr {se:.4})"),
            Err(e) => eprintln!("no slope: {e}"),
        }
    }
    emit(output, &rate_csv(&result))?;
    if let Some(path) = summary {
        let (slope, slope_stderr) = slope.map_or((None, None), |(b, se)| (Some(b), Some(se)));
        emit_json(
            Some(path),
            &json!({ "summary": result.summary, "slope": slope, "slope_stderr": slope_stderr }),
        )?;
    }
    if let Some(path) = svg {
        let series = [PlotSeries {
            label: "trimmed mean W".into(),
            points: result.summary.iter().map(|s| (s.n as f64, s.mean_w)).collect(),
        }];
        emit(Some(path), &loglog_svg("Estimation rate", "n", "W(G_hat, G)", &series))?;
    }
    Ok(())
}

fn run_dkw(a: &DkwArgs) -> Result<Vec<mixrate::bench::DkwRow>, Failure> {
    let fam = build_family(&a.family)?;
    let g = match &a.mixing {
        Some(p) => read_json(p)?,
        None => Mixing::dirac(0.0),
    };
    if a.n == 0 {
        return Err(Failure::Usage(anyhow!("n must be positive")));
    }
    Ok(dkw_coverage(fam.as_ref(), &g, a.n, a.reps, &a.z, a.seed)?)
}

fn breach_unless(ok: bool, what: &str) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(Failure::Breach(what.to_string()))
    }
}

fn verify(cmd: &VerifyCommand) -> Outcome {
    match cmd {
        VerifyCommand::Jacobian {
            pi,
            h,
            random,
            seed,
            tol,
        } => {
            let cases: Vec<(Vec<f64>, Vec<f64>)> = match (pi, h) {
                (Some(pi), Some(h)) => vec![(pi.clone(), h.clone())],
                _ => random_jacobian_cases(*random, *seed),
            };
            let mut worst = json!(null);
            let mut max_err: f64 = 0.0;
            for (pi, h) in &cases {
                let closed = jacobian_phi(pi, h)?;
                let fd = jacobian_finite_difference(pi, h, JACOBIAN_FD_STEP)?;
                let err = if closed.value == 0.0 { fd.abs() } else { ((closed.value - fd) / closed.value).abs() };
                if worst.is_null() || err > max_err {
                    max_err = err;
                    worst = json!({ "pi": pi, "h": h, "closed_form": closed.value, "finite_difference": fd });
                }
            }
            print_json(&json!({
                "cases": cases.len(),
                "max_relative_error": max_err,
                "tolerance": tol,
                "worst": worst,
            }))?;
            breach_unless(max_err <= *tol, "finite-difference Jacobian disagrees with the closed form")
        }
        VerifyCommand::Identifiability {
            k,
            thetas,
            multiplicities,
            allow_duplicates,
            family,
        } => {
            let fam = build_family(family)?;
            let sigma_min = identifiability_sigma_min(fam.as_ref(), *k, thetas, None, *allow_duplicates)?;
            let vandermonde = match multiplicities {
                Some(mults) => Some(confluent_vandermonde_rank(thetas, mults)?),
                None => None,
            };
            print_json(&json!({ "k": k, "thetas": thetas, "sigma_min": sigma_min, "vandermonde": vandermonde }))?;
            breach_unless(
                *allow_duplicates || sigma_min > 0.0,
                "singular value vanished at distinct atoms",
            )
        }
        VerifyCommand::Dkw(a) => {
            let rows = run_dkw(a)?;
            let text = serde_json::to_string_pretty(&rows).map_err(|e| Failure::Usage(e.into()))? + "\n";
            emit(a.output.as_deref(), &text)?;
            breach_unless(
                rows.iter().all(|r| r.frequency <= r.bound + 3.0 * r.stderr),
                "exceedance frequency above the DKW bound",
            )
        }
        VerifyCommand::Lan {
            u,
            n,
            reps,
            m,
            g0,
            base,
            seed,
            family,
        } => {
            let fam = build_family(family)?;
            let g0: Mixing = match g0 {
                Some(p) => read_json(p)?,
                None => Mixing::dirac(0.0),
            };
            let d = (m + 1).saturating_sub(g0.order()).max(1);
            let base = parse_base(base.as_deref(), d)?;
            let r = lan_simulate(fam.as_ref(), &g0, *m, *u, *n, *reps, &base, *seed)?;
            print_json(&r)?;
            let ok = if *u == 0.0 {
                r.lr_mean == 0.0 && r.lr_var == 0.0
            } else {
                let scale = u * u * r.gamma_hat;
                (r.lr_mean + scale / 2.0).abs() <= 0.1 * scale
                    && (r.lr_var - scale).abs() <= 0.15 * scale
                    && r.ks_stat <= 1.63 / (r.reps as f64).sqrt()
            };
            breach_unless(ok, "log-likelihood ratio is not close to its Gaussian limit")
        }
    }
}

/// Random `(pi, h)` with `d` in 1..=4, `pi_j` in [0.05, 1) and the `h_j`
/// at least 0.1 apart in [-3, 3].
fn random_jacobian_cases(count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = stream(seed, &[]);
    (0..count)
        .map(|_| {
            let d = rng.gen_range(1..=4);
            let h = loop {
                let mut h: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
                h.sort_by(f64::total_cmp);
                if h.windows(2).all(|w| w[1] - w[0] >= 0.1) {
                    break h;
                }
            };
            let pi = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
            (pi, h)
        })
        .collect()
}
