use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use elemodds::fit::{fit_gbp, fit_sigmoid, FitConfig, Weighting};
use elemodds::freq::{log_grid, parse_csv, run_experiment};
use elemodds::laws::{BetaPair, GeneralizedBetaPrime, LawParams, Sigmoid, TwoStep};
use elemodds::mc::{mc_prob_event, mc_prob_independent_uniform, RngSeed};
use elemodds::{Error, RungeProblem};

use crate::output::{emit, Manifest};
use crate::{CliError, EvalArgs, ExperimentArgs, FitArgs, FitLaw, LawFlags, LawKind, McArgs, McModel, WeightingArg};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn required<T>(value: Option<T>, flag: &str, law: &str) -> Result<T, CliError> {
    value.ok_or_else(|| usage(format!("--{flag} is required for --law {law}")))
}

fn law_from_flags(f: &LawFlags) -> Result<LawParams, CliError> {
    let law = match f.law {
        LawKind::Twostep => TwoStep::new(f.hstar)?.into(),
        LawKind::Sigmoid => Sigmoid::new(f.hstar, required(f.delta, "delta", "sigmoid")?)?.into(),
        LawKind::Gbp => GeneralizedBetaPrime::new(
            required(f.p, "p", "gbp")?,
            required(f.q, "q", "gbp")?,
            required(f.delta, "delta", "gbp")?,
            f.hstar,
        )?
        .into(),
    };
    Ok(law)
}

fn law_manifest(mut m: Manifest, law: &LawParams) -> Manifest {
    m = m.param("law", law.name());
    match law {
        LawParams::TwoStep(_) => {}
        LawParams::Sigmoid(l) => m = m.param("delta", l.delta()),
        LawParams::GeneralizedBetaPrime(l) => m = m.param("p", l.p()).param("q", l.q()).param("delta", l.delta()),
    }
    m.param("hstar", law.h_star())
}

/// `h,probability` rows; the two-step law is `undefined` exactly at `h*`.
fn curve_rows(law: &LawParams, grid: &[f64]) -> Result<String, CliError> {
    let mut out = String::from("h,probability\n");
    for &h in grid {
        match law.probability(h) {
            Ok(v) => writeln!(out, "{h},{v}").expect("write to string"),
            Err(Error::AtThreshold(_)) => writeln!(out, "{h},undefined").expect("write to string"),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    let law = law_from_flags(&a.law)?;
    let mut manifest = law_manifest(Manifest::new("eval"), &law);
    let grid = if a.h.is_empty() {
        let lo = a.h_min.unwrap_or(law.h_star() / 100.0);
        let hi = a.h_max.unwrap_or(law.h_star() * 100.0);
        manifest = manifest.param("h_min", lo).param("h_max", hi).param("points", a.points);
        log_grid(lo, hi, a.points as usize)?
    } else {
        if a.h_min.is_some() || a.h_max.is_some() {
            return Err(usage("--h cannot be combined with --h-min/--h-max"));
        }
        let list: Vec<String> = a.h.iter().map(|h| h.to_string()).collect();
        manifest = manifest.param("h", list.join(","));
        a.h.clone()
    };
    let text = manifest.header() + &curve_rows(&law, &grid)?;
    emit(&text, a.out.as_deref(), &manifest)?;
    Ok(())
}

pub fn mc(a: &McArgs) -> Result<(), CliError> {
    let mut manifest = Manifest::new("mc").param("model", format!("{:?}", a.model).to_lowercase());
    let shapes = match a.model {
        McModel::Gbp => {
            let p = a.p.ok_or_else(|| usage("--p is required for --model gbp"))?;
            let q = a.q.ok_or_else(|| usage("--q is required for --model gbp"))?;
            manifest = manifest.param("p", p).param("q", q);
            Some((p, q))
        }
        McModel::Uniform => {
            if a.p.is_some() || a.q.is_some() {
                return Err(usage("--p/--q only apply to --model gbp"));
            }
            None
        }
    };
    let pair = match (a.beta_lo, a.beta_hi, a.hstar, a.delta, a.h) {
        (Some(lo), Some(hi), None, None, None) => {
            manifest = manifest.param("beta_lo", lo).param("beta_hi", hi);
            BetaPair::new(lo, hi)?
        }
        (None, None, Some(hs), Some(d), Some(h)) => {
            manifest = manifest.param("hstar", hs).param("delta", d).param("h", h);
            BetaPair::from_ratio(hs, d, h)?
        }
        _ => return Err(usage("give either --beta-lo and --beta-hi, or --hstar, --delta and --h")),
    };
    manifest = manifest.param("trials", a.trials).param("seed", a.seed);
    let seed = RngSeed(a.seed);
    let est = match shapes {
        Some((p, q)) => mc_prob_event(pair, p, q, a.trials, seed)?,
        None => mc_prob_independent_uniform(pair, a.trials, seed)?,
    };
    let text = format!(
        "{}trials,successes,estimate,std_error\n{},{},{},{}\n",
        manifest.header(),
        est.trials,
        est.successes,
        est.estimate,
        est.std_error
    );
    emit(&text, a.out.as_deref(), &manifest)?;
    Ok(())
}

pub fn experiment(a: &ExperimentArgs) -> Result<(), CliError> {
    if a.k1 >= a.k2 {
        return Err(usage(format!("--k1 must be below --k2, got {} and {}", a.k1, a.k2)));
    }
    let lo = RungeProblem::new(a.alpha, a.center, a.k1 as usize)?;
    let hi = lo.with_degree(a.k2 as usize)?;
    let grid = if a.points == 1 {
        if a.h_min != a.h_max {
            return Err(usage("--points 1 needs --h-min equal to --h-max"));
        }
        vec![a.h_min]
    } else {
        log_grid(a.h_min, a.h_max, a.points as usize)?
    };
    let series = run_experiment(&lo, &hi, &grid, a.trials, a.jitter, RngSeed(a.seed))?;

    let manifest = Manifest::new("experiment")
        .param("k1", a.k1)
        .param("k2", a.k2)
        .param("alpha", a.alpha)
        .param("center", a.center)
        .param("trials", a.trials)
        .param("jitter", a.jitter)
        .param("seed", a.seed)
        .param("h_min", a.h_min)
        .param("h_max", a.h_max)
        .param("points", a.points);
    // k1, k2, alpha, jitter and seed are written by the series itself
    let in_meta = ["k1", "k2", "alpha", "jitter", "seed"];
    let extra: Vec<(String, String)> =
        manifest.comments().into_iter().filter(|(k, _)| !in_meta.contains(&k.as_str())).collect();
    emit(&series.to_csv(&extra), a.out.as_deref(), &manifest)?;
    Ok(())
}

pub fn fit(a: &FitArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.input).map_err(|e| usage(format!("cannot read {}: {e}", a.input.display())))?;
    let parsed = parse_csv(&text).map_err(|e| usage(format!("{}: {e}", a.input.display())))?;
    let from_comments = || -> Option<u32> {
        let c = &parsed.comments;
        if let Some(d) = c.get("delta") {
            return d.parse().ok();
        }
        let k1: u32 = c.get("k1")?.parse().ok()?;
        let k2: u32 = c.get("k2")?.parse().ok()?;
        k2.checked_sub(k1)
    };
    let delta = match a.delta.or_else(from_comments) {
        Some(d) if d >= 1 => d,
        _ => return Err(usage("cannot infer delta from the input; pass --delta")),
    };
    if !(a.tolerance > 0.0) {
        return Err(usage("--tolerance must be positive"));
    }
    let config = FitConfig {
        max_iterations: a.max_iterations as usize,
        simplex_tolerance: a.tolerance,
        restarts: a.restarts as usize,
        delta,
        weighting: match a.weighting {
            WeightingArg::Unweighted => Weighting::Unweighted,
            WeightingArg::Wilson => Weighting::Wilson,
        },
    };
    let data = &parsed.observations;
    let result = match a.law {
        FitLaw::Sigmoid => fit_sigmoid(data, &config)?,
        FitLaw::Gbp => fit_gbp(data, &config)?,
    };
    if !result.converged {
        eprintln!("warning: fit did not converge (see the `converged` row)");
    }

    let manifest = Manifest::new("fit")
        .param("input", a.input.display())
        .param("law", format!("{:?}", a.law).to_lowercase())
        .param("delta", delta)
        .param("max_iterations", a.max_iterations)
        .param("tolerance", a.tolerance)
        .param("restarts", a.restarts)
        .param("weighting", format!("{:?}", a.weighting).to_lowercase())
        .param("curve_points", a.curve_points);
    emit(&(manifest.header() + &result.to_csv()), a.out.as_deref(), &manifest)?;

    let curve_path = a.curve.clone().or_else(|| {
        a.out.as_ref().map(|o| {
            let mut name = o.as_os_str().to_owned();
            name.push(".curve.csv");
            PathBuf::from(name)
        })
    });
    if let Some(path) = curve_path {
        let lo = data.iter().map(|o| o.h).fold(f64::INFINITY, f64::min);
        let hi = data.iter().map(|o| o.h).fold(0.0, f64::max);
        let mut fitted = law_manifest(Manifest::new("eval"), &result.params);
        let grid = if hi > lo {
            fitted = fitted.param("h_min", lo).param("h_max", hi).param("points", a.curve_points);
            log_grid(lo, hi, a.curve_points as usize)?
        } else {
            fitted = fitted.param("h", lo);
            vec![lo]
        };
        let body = format!(
            "{}# curve_command={}\n{}",
            manifest.header(),
            fitted.command_line(),
            curve_rows(&result.params, &grid)?
        );
        emit(&body, Some(&path), &manifest)?;
    }
    Ok(())
}
