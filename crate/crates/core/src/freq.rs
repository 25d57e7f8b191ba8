//! Statistical-frequency experiment: for each mesh size, draw independent
//! random meshes for the two element degrees, solve both, and count how often
//! the higher-degree element's H¹ error is the smaller one.
//!
//! Trial `t` of row `r` draws its two meshes from substream `(r, t)` of the
//! seed, so results do not depend on scheduling or thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::fem1d::{assemble_and_solve, h1_error, random_mesh, RungeProblem, MAX_JITTER};
use crate::mc::RngSeed;

/// Default jitter of the interior mesh nodes.
pub const DEFAULT_JITTER: f64 = 0.49;
/// Default number of random mesh pairs per mesh size.
pub const DEFAULT_TRIALS: u32 = 100;

/// One row of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyRow {
    pub h: f64,
    pub trials: u64,
    pub successes: u64,
    pub frequency: f64,
}

impl FrequencyRow {
    pub fn new(h: f64, trials: u64, successes: u64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(domain(format!("mesh size must be positive, got {h}")));
        }
        if trials == 0 || successes > trials {
            return Err(domain(format!("need 0 <= successes <= trials, trials >= 1; got {successes}/{trials}")));
        }
        Ok(Self { h, trials, successes, frequency: successes as f64 / trials as f64 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentMeta {
    pub k1: usize,
    pub k2: usize,
    pub alpha: f64,
    pub jitter: f64,
    pub seed: u64,
}

impl ExperimentMeta {
    pub fn key_values(&self) -> Vec<(String, String)> {
        vec![
            ("k1".into(), self.k1.to_string()),
            ("k2".into(), self.k2.to_string()),
            ("alpha".into(), self.alpha.to_string()),
            ("jitter".into(), self.jitter.to_string()),
            ("seed".into(), self.seed.to_string()),
        ]
    }
}

/// Empirical frequencies over a strictly increasing grid of mesh sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySeries {
    rows: Vec<FrequencyRow>,
    meta: Option<ExperimentMeta>,
}

/// A single `(h, frequency)` data point for fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub h: f64,
    pub frequency: f64,
    /// Known when the observation came from counted trials.
    pub trials: Option<u64>,
}

impl Observation {
    pub fn new(h: f64, frequency: f64) -> Self {
        Self { h, frequency, trials: None }
    }
}

impl FrequencySeries {
    pub fn new(rows: Vec<FrequencyRow>, meta: Option<ExperimentMeta>) -> Result<Self> {
        if rows.windows(2).any(|w| !(w[1].h > w[0].h)) {
            return Err(domain("mesh sizes must be strictly increasing across rows"));
        }
        Ok(Self { rows, meta })
    }

    pub fn rows(&self) -> &[FrequencyRow] {
        &self.rows
    }

    pub fn meta(&self) -> Option<&ExperimentMeta> {
        self.meta.as_ref()
    }

    pub fn observations(&self) -> Vec<Observation> {
        self.rows.iter().map(|r| Observation { h: r.h, frequency: r.frequency, trials: Some(r.trials) }).collect()
    }

    /// CSV with `# key=value` comment lines, then `h,trials,successes,frequency`.
    pub fn to_csv(&self, extra_comments: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in extra_comments {
            let _ = writeln!(out, "# {k}={v}");
        }
        if let Some(meta) = &self.meta {
            for (k, v) in meta.key_values() {
                let _ = writeln!(out, "# {k}={v}");
            }
        }
        out.push_str("h,trials,successes,frequency\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.h, r.trials, r.successes, r.frequency);
        }
        out
    }
}

/// The success event: the higher-degree error is at most the lower-degree one.
/// Ties count as success.
pub fn higher_wins(error_lo: f64, error_hi: f64) -> bool {
    error_hi <= error_lo
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err(domain(format!("log grid needs 0 < lo < hi and n >= 2, got [{lo}, {hi}], n = {n}")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
    grid[0] = lo;
    grid[n - 1] = hi;
    Ok(grid)
}

/// 16 log-spaced mesh sizes in `[1/128, 1/2]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(1.0 / 128.0, 0.5, 16).expect("static grid bounds are valid")
}

/// Runs the experiment over `h_grid` with `trials_per_h` mesh pairs per row.
pub fn run_experiment(
    problem_lo: &RungeProblem,
    problem_hi: &RungeProblem,
    h_grid: &[f64],
    trials_per_h: u32,
    jitter: f64,
    seed: RngSeed,
) -> Result<FrequencySeries> {
    if problem_lo.degree() >= problem_hi.degree() {
        return Err(domain(format!(
            "lower degree must be below higher degree, got {} and {}",
            problem_lo.degree(),
            problem_hi.degree()
        )));
    }
    if h_grid.is_empty() {
        return Err(domain("mesh-size grid is empty"));
    }
    if h_grid.iter().any(|&h| !(h > 0.0 && h < 1.0)) {
        return Err(domain("every mesh size must lie in (0, 1)"));
    }
    if h_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("mesh-size grid must be strictly increasing"));
    }
    if trials_per_h == 0 {
        return Err(domain("trials per mesh size must be at least 1"));
    }
    if !(0.0..=MAX_JITTER).contains(&jitter) {
        return Err(domain(format!("jitter must lie in [0, {MAX_JITTER}], got {jitter}")));
    }
    if u32::try_from(h_grid.len()).is_err() {
        return Err(domain("mesh-size grid is too long"));
    }

    let one_trial = |row: usize, trial: u32| -> Result<bool> {
        let h = h_grid[row];
        let mut rng = seed.substream2(row as u32, trial);
        let wrap = |e: Error| Error::Trial { h, trial: trial as usize, source: Box::new(e) };
        let mesh_lo = random_mesh(h, jitter, &mut rng).map_err(wrap)?;
        let mesh_hi = random_mesh(h, jitter, &mut rng).map_err(wrap)?;
        let sol_lo = assemble_and_solve(problem_lo, &mesh_lo).map_err(wrap)?;
        let sol_hi = assemble_and_solve(problem_hi, &mesh_hi).map_err(wrap)?;
        Ok(higher_wins(h1_error(problem_lo, &sol_lo), h1_error(problem_hi, &sol_hi)))
    };

    let counts: Vec<u64> = (0..h_grid.len())
        .into_par_iter()
        .map(|row| {
            (0..trials_per_h)
                .into_par_iter()
                .map(|t| one_trial(row, t).map(u64::from))
                .try_reduce(|| 0, |a, b| Ok(a + b))
        })
        .collect::<Result<_>>()?;

    let rows = h_grid
        .iter()
        .zip(counts)
        .map(|(&h, s)| FrequencyRow::new(h, u64::from(trials_per_h), s))
        .collect::<Result<Vec<_>>>()?;
    FrequencySeries::new(
        rows,
        Some(ExperimentMeta {
            k1: problem_lo.degree(),
            k2: problem_hi.degree(),
            alpha: problem_lo.alpha(),
            jitter,
            seed: seed.0,
        }),
    )
}

const WILSON_Z: f64 = 1.959_963_984_540_054;

/// 95% Wilson score interval for a row's frequency.
pub fn wilson_interval(row: &FrequencyRow) -> (f64, f64) {
    let n = row.trials as f64;
    let p = row.frequency;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if row.successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if row.successes == row.trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Parsed content of a frequency or law-curve CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCsv {
    pub comments: BTreeMap<String, String>,
    pub observations: Vec<Observation>,
}

/// Reads either `h,trials,successes,frequency` or a two-column
/// `h,probability` / `h,frequency` table. `# key=value` lines before the
/// header are collected; blank lines are skipped. Errors name the 1-based line.
pub fn parse_csv(text: &str) -> Result<ParsedCsv> {
    let mut comments = BTreeMap::new();
    let mut header: Option<Vec<String>> = None;
    let mut observations = Vec::new();
    let err = |line: usize, message: String| Error::Parse { line, message };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                comments.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let Some(cols) = &header else {
            let cols: Vec<String> = fields.iter().map(|s| s.to_ascii_lowercase()).collect();
            let known = matches!(
                cols.iter().map(String::as_str).collect::<Vec<_>>().as_slice(),
                ["h", "trials", "successes", "frequency"] | ["h", "probability"] | ["h", "frequency"]
            );
            if !known {
                return Err(err(
                    line_no,
                    format!("unrecognized header `{line}`; expected `h,trials,successes,frequency` or `h,probability`"),
                ));
            }
            header = Some(cols);
            continue;
        };
        if fields.len() != cols.len() {
            return Err(err(line_no, format!("expected {} fields, found {}", cols.len(), fields.len())));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| err(line_no, format!("column `{}`: `{}` is not a number", cols[i], fields[i])))
        };
        let h = num(0)?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(err(line_no, format!("mesh size must be positive, got {h}")));
        }
        let obs = if cols.len() == 4 {
            let int = |i: usize| -> Result<u64> {
                fields[i]
                    .parse::<u64>()
                    .map_err(|_| err(line_no, format!("column `{}`: `{}` is not a count", cols[i], fields[i])))
            };
            let (trials, successes) = (int(1)?, int(2)?);
            let row = FrequencyRow::new(h, trials, successes).map_err(|e| err(line_no, e.to_string()))?;
            let stated = num(3)?;
            if (stated - row.frequency).abs() > 1e-12 {
                return Err(err(line_no, format!("frequency {stated} does not equal {successes}/{trials}")));
            }
            Observation { h, frequency: row.frequency, trials: Some(trials) }
        } else {
            let f = num(1)?;
            if !(0.0..=1.0).contains(&f) {
                return Err(err(line_no, format!("probability must lie in [0, 1], got {f}")));
            }
            Observation::new(h, f)
        };
        observations.push(obs);
    }
    if header.is_none() {
        return Err(err(text.lines().count().max(1), "missing header line".into()));
    }
    Ok(ParsedCsv { comments, observations })
}

/// Reads a four-column frequency table back into a [`FrequencySeries`].
pub fn parse_series(text: &str) -> Result<FrequencySeries> {
    let parsed = parse_csv(text)?;
    let rows = parsed
        .observations
        .iter()
        .map(|o| {
            let trials = o.trials.ok_or_else(|| domain("frequency table needs trial counts"))?;
            let successes = (o.frequency * trials as f64).round() as u64;
            FrequencyRow::new(o.h, trials, successes)
        })
        .collect::<Result<Vec<_>>>()?;
    let c = &parsed.comments;
    let meta = (|| {
        Some(ExperimentMeta {
            k1: c.get("k1")?.parse().ok()?,
            k2: c.get("k2")?.parse().ok()?,
            alpha: c.get("alpha")?.parse().ok()?,
            jitter: c.get("jitter")?.parse().ok()?,
            seed: c.get("seed")?.parse().ok()?,
        })
    })();
    FrequencySeries::new(rows, meta)
}
