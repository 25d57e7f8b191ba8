//! Least-squares estimation of law parameters from observed frequencies.
//!
//! The sigmoid law has one free parameter (`h*`) and is fitted by a grid
//! scan in `ln h*` followed by golden-section refinement. The generalized
//! Beta prime law is fitted over `(ln p, ln q, ln h*)` with Nelder–Mead from
//! a small deterministic lattice of starting points. `delta = k2 - k1` is
//! always held fixed.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::freq::{wilson_interval, FrequencyRow, Observation};
use crate::laws::{GeneralizedBetaPrime, LawParams, Sigmoid};

/// Residual weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Unweighted,
    /// Inverse squared Wilson half-width; only rows with known trial counts
    /// are reweighted.
    Wilson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the spread of simplex objective values,
    /// relative to the best value.
    pub simplex_tolerance: f64,
    /// Extra Nelder–Mead starts around the central one.
    pub restarts: usize,
    pub delta: u32,
    pub weighting: Weighting,
}

impl FitConfig {
    pub fn new(delta: u32) -> Self {
        Self { max_iterations: 20_000, simplex_tolerance: 1e-10, restarts: 8, delta, weighting: Weighting::Unweighted }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || !(self.simplex_tolerance > 0.0) || self.delta == 0 {
            return Err(domain("fit configuration needs max_iterations >= 1, tolerance > 0 and delta >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: LawParams,
    pub ssr: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective value after every iteration of the winning run.
    pub objective_history: Vec<f64>,
}

impl FitResult {
    /// `param,value` CSV. Parameters the law does not have are left empty.
    pub fn to_csv(&self) -> String {
        let (p, q, delta) = match self.params {
            LawParams::GeneralizedBetaPrime(l) => (l.p().to_string(), l.q().to_string(), l.delta().to_string()),
            LawParams::Sigmoid(l) => (String::new(), String::new(), l.delta().to_string()),
            LawParams::TwoStep(_) => (String::new(), String::new(), String::new()),
        };
        format!(
            "param,value\nlaw,{}\np,{p}\nq,{q}\nh_star,{}\ndelta,{delta}\nssr,{}\niterations,{}\nconverged,{}\n",
            self.params.name(),
            self.params.h_star(),
            self.ssr,
            self.iterations,
            self.converged
        )
    }
}

fn weights(data: &[Observation], weighting: Weighting) -> Vec<f64> {
    data.iter()
        .map(|o| match (weighting, o.trials) {
            (Weighting::Wilson, Some(n)) => {
                let successes = (o.frequency * n as f64).round() as u64;
                let row = FrequencyRow { h: o.h, trials: n, successes, frequency: o.frequency };
                let (lo, hi) = wilson_interval(&row);
                let half = 0.5 * (hi - lo);
                1.0 / (half * half)
            }
            _ => 1.0,
        })
        .collect()
}

/// `sum (frequency - P(h))^2` over the data.
pub fn ssr_objective(law: &LawParams, data: &[Observation]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InsufficientData("no observations".into()));
    }
    data.iter().try_fold(0.0, |acc, o| Ok(acc + (o.frequency - law.probability(o.h)?).powi(2)))
}

fn weighted_ssr(law: &LawParams, data: &[Observation], w: &[f64]) -> f64 {
    let mut total = 0.0;
    for (o, wi) in data.iter().zip(w) {
        match law.probability(o.h) {
            Ok(p) => total += wi * (o.frequency - p).powi(2),
            Err(_) => return f64::INFINITY,
        }
    }
    total
}

fn h_range(data: &[Observation]) -> (f64, f64) {
    let lo = data.iter().map(|o| o.h).fold(f64::INFINITY, f64::min);
    let hi = data.iter().map(|o| o.h).fold(0.0, f64::max);
    (lo, hi)
}

/// Bracket for `ln h*`: two decades beyond the observed mesh sizes.
fn log_h_star_bounds(data: &[Observation]) -> (f64, f64) {
    let (lo, hi) = h_range(data);
    ((lo / 100.0).ln(), (hi * 100.0).ln())
}

fn all_saturated(data: &[Observation]) -> bool {
    data.iter().all(|o| o.frequency == 1.0) || data.iter().all(|o| o.frequency == 0.0)
}

const SIGMOID_SCAN_POINTS: usize = 401;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// One-parameter fit of the sigmoid law.
///
/// A scan over `ln h*` picks the best grid point (smallest `h*` on ties);
/// golden-section search then refines inside the neighbouring cells. A best
/// point on the edge of the bracket means the data pushes `h*` out of range
/// and the result is flagged as not converged.
pub fn fit_sigmoid(data: &[Observation], config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InsufficientData("sigmoid fit needs at least one observation".into()));
    }
    let w = weights(data, config.weighting);
    let delta = config.delta;
    let objective = |t: f64| -> f64 {
        match Sigmoid::new(t.exp(), delta) {
            Ok(l) => weighted_ssr(&l.into(), data, &w),
            Err(_) => f64::INFINITY,
        }
    };

    let (t_lo, t_hi) = log_h_star_bounds(data);
    let step = (t_hi - t_lo) / (SIGMOID_SCAN_POINTS - 1) as f64;
    let scan: Vec<f64> = (0..SIGMOID_SCAN_POINTS).map(|i| objective(t_lo + step * i as f64)).collect();
    let mut best_idx = 0;
    for (i, &v) in scan.iter().enumerate() {
        if v < scan[best_idx] {
            best_idx = i;
        }
    }
    let mut history = vec![scan[best_idx]];
    let mut iterations = 0;

    let mut a = t_lo + step * best_idx.saturating_sub(1) as f64;
    let mut b = t_lo + step * (best_idx + 1).min(SIGMOID_SCAN_POINTS - 1) as f64;
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    let mut best_t = t_lo + step * best_idx as f64;
    let mut best_f = scan[best_idx];
    while (b - a) > 1e-13 * (1.0 + best_t.abs()) && iterations < config.max_iterations {
        iterations += 1;
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = objective(x2);
        }
        for (t, f) in [(x1, f1), (x2, f2)] {
            if f < best_f || (f == best_f && t < best_t) {
                best_f = f;
                best_t = t;
            }
        }
        history.push(best_f);
    }
    let bracket_closed = (b - a) <= 1e-13 * (1.0 + best_t.abs());
    let on_edge = best_idx == 0 || best_idx == SIGMOID_SCAN_POINTS - 1;
    let params: LawParams = Sigmoid::new(best_t.exp(), delta)?.into();
    let ssr = ssr_objective(&params, data)?;
    Ok(FitResult {
        params,
        ssr,
        iterations,
        converged: bracket_closed && !on_edge && !all_saturated(data),
        objective_history: history,
    })
}

/// Box for `ln p` and `ln q`; leaving it means the shapes are drifting.
const LOG_SHAPE_BOUND: f64 = 8.0;

/// Mesh size where the frequencies first cross one half, linearly
/// interpolated between the bracketing rows.
pub fn crossing_estimate(data: &[Observation]) -> f64 {
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.h.total_cmp(&b.h));
    for w in sorted.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.frequency - 0.5) * (b.frequency - 0.5) <= 0.0 && a.frequency != b.frequency {
            let t = (a.frequency - 0.5) / (a.frequency - b.frequency);
            return a.h + t * (b.h - a.h);
        }
    }
    let (lo, hi) = h_range(data);
    let mean = sorted.iter().map(|o| o.frequency).sum::<f64>() / sorted.len() as f64;
    if mean >= 0.5 {
        hi
    } else {
        lo
    }
}

/// Starting points in `(ln p, ln q, ln h*)`: the centre `(0, 0, ln h0)` then
/// the corners of the lattice `(±1, ±1, ln h0 ± 0.5)`.
fn gbp_starts(h0: f64, restarts: usize) -> Vec<[f64; 3]> {
    let c = h0.ln();
    let mut starts = vec![[0.0, 0.0, c]];
    for i in 0..8 {
        let s = |bit: usize| if i >> bit & 1 == 0 { -1.0 } else { 1.0 };
        starts.push([s(0), s(1), c + 0.5 * s(2)]);
    }
    starts.truncate(1 + restarts.min(8));
    starts
}

/// Three-parameter fit of the generalized Beta prime law.
pub fn fit_gbp(data: &[Observation], config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    if data.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "generalized Beta prime fit has 3 free parameters and needs at least 4 observations, got {}",
            data.len()
        )));
    }
    let w = weights(data, config.weighting);
    let delta = config.delta;
    let (t_lo, t_hi) = log_h_star_bounds(data);
    let in_box =
        |x: &[f64; 3]| x[0].abs() <= LOG_SHAPE_BOUND && x[1].abs() <= LOG_SHAPE_BOUND && x[2] >= t_lo && x[2] <= t_hi;
    let objective = |x: &[f64; 3]| -> f64 {
        if !in_box(x) {
            return f64::INFINITY;
        }
        match GeneralizedBetaPrime::new(x[0].exp(), x[1].exp(), delta, x[2].exp()) {
            Ok(l) => weighted_ssr(&l.into(), data, &w),
            Err(_) => f64::INFINITY,
        }
    };

    let h0 = crossing_estimate(data).clamp(t_lo.exp(), t_hi.exp());
    let runs: Vec<NelderMeadRun> =
        gbp_starts(h0, config.restarts).into_par_iter().map(|start| nelder_mead(&objective, start, config)).collect();
    // lowest objective wins; ties go to the earliest start
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value < runs[best].value {
            best = i;
        }
    }
    let iterations = runs.iter().map(|r| r.iterations).sum();
    let run = runs.into_iter().nth(best).expect("at least one start");
    let x = run.point;
    let params: LawParams = GeneralizedBetaPrime::new(x[0].exp(), x[1].exp(), delta, x[2].exp())?.into();
    let ssr = ssr_objective(&params, data)?;
    let margin = 1e-3;
    let near_edge = x[0].abs() > LOG_SHAPE_BOUND - margin
        || x[1].abs() > LOG_SHAPE_BOUND - margin
        || x[2] < t_lo + margin
        || x[2] > t_hi - margin;
    Ok(FitResult {
        params,
        ssr,
        iterations,
        converged: run.converged && !near_edge && !all_saturated(data),
        objective_history: run.history,
    })
}

#[derive(Debug, Clone)]
struct NelderMeadRun {
    point: [f64; 3],
    value: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

/// Nelder–Mead with standard coefficients, restarted from the best vertex
/// with a fresh simplex until a restart no longer improves the objective.
fn nelder_mead<F: Fn(&[f64; 3]) -> f64>(f: &F, start: [f64; 3], config: &FitConfig) -> NelderMeadRun {
    const N: usize = 3;
    let tol = config.simplex_tolerance;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut best_point = start;
    let mut best_value = f(&start);
    let mut step = 0.5;
    let mut converged = false;

    while iterations < config.max_iterations {
        let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(N + 1);
        simplex.push((best_point, best_value));
        for i in 0..N {
            let mut x = best_point;
            x[i] += step;
            let mut v = f(&x);
            if !v.is_finite() {
                x[i] = best_point[i] - step;
                v = f(&x);
            }
            simplex.push((x, v));
        }
        let before = best_value;
        let mut inner_converged = false;
        while iterations < config.max_iterations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (lo, hi) = (simplex[0].1, simplex[N].1);
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| (0..N).map(|i| (x[i] - simplex[0].0[i]).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if (hi - lo) <= tol * (lo.abs() + tol) || diameter < 1e-14 {
                inner_converged = true;
                break;
            }
            iterations += 1;

            let mut centroid = [0.0; N];
            for (x, _) in &simplex[..N] {
                for i in 0..N {
                    centroid[i] += x[i] / N as f64;
                }
            }
            let along = |t: f64| -> [f64; 3] {
                let worst = simplex[N].0;
                let mut y = [0.0; N];
                for i in 0..N {
                    y[i] = centroid[i] + t * (worst[i] - centroid[i]);
                }
                y
            };
            let xr = along(-1.0);
            let fr = f(&xr);
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = f(&xe);
                simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[N - 1].1 {
                simplex[N] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[N].1 {
                    let xc = along(-0.5);
                    (xc, f(&xc))
                } else {
                    let xc = along(0.5);
                    (xc, f(&xc))
                };
                if fc < fr.min(simplex[N].1) {
                    simplex[N] = (xc, fc);
                } else {
                    let best = simplex[0].0;
                    for v in simplex.iter_mut().skip(1) {
                        for i in 0..N {
                            v.0[i] = best[i] + 0.5 * (v.0[i] - best[i]);
                        }
                        v.1 = f(&v.0);
                    }
                }
            }
            let current = simplex.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
            history.push(current.min(history.last().copied().unwrap_or(f64::INFINITY)));
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best_value {
            best_point = simplex[0].0;
            best_value = simplex[0].1;
        }
        let improvement = before - best_value;
        if inner_converged && improvement <= tol * (best_value.abs() + tol) {
            converged = true;
            break;
        }
        step = 0.1;
    }
    NelderMeadRun { point: best_point, value: best_value, iterations, converged, history }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::log_grid;

    fn synth(law: &LawParams, grid: &[f64]) -> Vec<Observation> {
        grid.iter().map(|&h| Observation::new(h, law.probability(h).unwrap())).collect()
    }

    fn grid16() -> Vec<f64> {
        log_grid(1.0 / 128.0, 0.5, 16).unwrap()
    }

    #[test]
    fn ssr_examples() {
        let sig: LawParams = Sigmoid::new(0.1, 2).unwrap().into();
        let data = synth(&sig, &grid16());
        assert!(ssr_objective(&sig, &data).unwrap() <= 1e-20);
        assert!((ssr_objective(&sig, &[Observation::new(0.1, 1.0)]).unwrap() - 0.25).abs() < 1e-15);
        let gbp: LawParams = GeneralizedBetaPrime::new(2.0, 2.0, 2, 0.1).unwrap().into();
        assert!(ssr_objective(&gbp, &[Observation::new(0.1, 0.5)]).unwrap() < 1e-24);
        assert!(ssr_objective(&gbp, &[]).is_err());
    }

    #[test]
    fn sigmoid_round_trip() {
        for delta in [1, 2, 3] {
            let truth: LawParams = Sigmoid::new(0.1, delta).unwrap().into();
            let fit = fit_sigmoid(&synth(&truth, &grid16()), &FitConfig::new(delta)).unwrap();
            assert!(fit.converged);
            assert!(((fit.params.h_star() - 0.1) / 0.1).abs() < 1e-6, "delta {delta}: {:?}", fit.params);
            assert!(fit.objective_history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn sigmoid_flat_half_data() {
        let data: Vec<Observation> = grid16().iter().map(|&h| Observation::new(h, 0.5)).collect();
        let fit = fit_sigmoid(&data, &FitConfig::new(2)).unwrap();
        assert!(fit.converged);
        let (lo, hi) = h_range(&data);
        assert!(fit.params.h_star() > lo && fit.params.h_star() < hi);
    }

    #[test]
    fn gbp_round_trip_noiseless() {
        let truth: LawParams = GeneralizedBetaPrime::new(2.0, 5.0, 2, 0.08).unwrap().into();
        let data = synth(&truth, &grid16());
        let fit = fit_gbp(&data, &FitConfig::new(2)).unwrap();
        assert!(fit.ssr <= 1e-12, "{fit:?}");
        assert!(fit.converged);
        assert!(fit.objective_history.windows(2).all(|w| w[1] <= w[0]));
        let sig = fit_sigmoid(&data, &FitConfig::new(2)).unwrap();
        assert!(fit.ssr <= sig.ssr);
    }

    #[test]
    fn gbp_requires_four_rows() {
        let data: Vec<Observation> = [0.1, 0.2, 0.3].iter().map(|&h| Observation::new(h, 0.5)).collect();
        assert!(matches!(fit_gbp(&data, &FitConfig::new(2)), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn gbp_saturated_data_is_flagged() {
        let data: Vec<Observation> = grid16().iter().map(|&h| Observation::new(h, 1.0)).collect();
        let fit = fit_gbp(&data, &FitConfig::new(2)).unwrap();
        assert!(!fit.converged);
        let fit = fit_sigmoid(&data, &FitConfig::new(2)).unwrap();
        assert!(!fit.converged);
    }

    #[test]
    fn fits_are_deterministic_and_positive() {
        let truth: LawParams = GeneralizedBetaPrime::new(0.7, 3.0, 1, 0.2).unwrap().into();
        let mut data = synth(&truth, &grid16());
        for (i, o) in data.iter_mut().enumerate() {
            o.frequency = (o.frequency + 0.03 * ((i * 7 % 5) as f64 - 2.0)).clamp(0.0, 1.0);
        }
        let a = fit_gbp(&data, &FitConfig::new(1)).unwrap();
        let b = fit_gbp(&data, &FitConfig::new(1)).unwrap();
        assert_eq!(a, b);
        let LawParams::GeneralizedBetaPrime(l) = a.params else { panic!("wrong law") };
        assert!(l.p() > 0.0 && l.q() > 0.0 && l.h_star() > 0.0);
    }

    #[test]
    fn crossing_is_interpolated() {
        let data = vec![Observation::new(0.1, 0.9), Observation::new(0.2, 0.7), Observation::new(0.3, 0.3)];
        assert!((crossing_estimate(&data) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn result_csv_layout() {
        let fit = FitResult {
            params: GeneralizedBetaPrime::new(2.0, 5.0, 2, 0.08).unwrap().into(),
            ssr: 0.0,
            iterations: 12,
            converged: true,
            objective_history: vec![],
        };
        assert_eq!(
            fit.to_csv(),
            "param,value\nlaw,gbp\np,2\nq,5\nh_star,0.08\ndelta,2\nssr,0\niterations,12\nconverged,true\n"
        );
    }

    #[test]
    fn noisy_fit_reaches_the_noise_floor() {
        use rand::SeedableRng;
        use rand_distr::{Binomial, Distribution};
        let truth = GeneralizedBetaPrime::new(2.0, 5.0, 2, 0.08).unwrap();
        let grid = grid16();
        let exact: Vec<f64> = grid.iter().map(|&h| truth.probability(h).unwrap()).collect();
        for seed in 0..20 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let noisy: Vec<Observation> = grid
                .iter()
                .zip(&exact)
                .map(|(&h, &p)| {
                    let s = Binomial::new(100, p).unwrap().sample(&mut rng);
                    Observation { h, frequency: s as f64 / 100.0, trials: Some(100) }
                })
                .collect();
            let floor: f64 = noisy.iter().zip(&exact).map(|(o, p)| (o.frequency - p).powi(2)).sum();
            let fit = fit_gbp(&noisy, &FitConfig::new(2)).unwrap();
            assert!(fit.ssr <= 1.5 * floor, "seed {seed}: {} vs floor {floor}", fit.ssr);
        }
    }

    #[test]
    fn wilson_weighting_runs() {
        let truth: LawParams = Sigmoid::new(0.05, 2).unwrap().into();
        let data: Vec<Observation> = grid16()
            .iter()
            .map(|&h| {
                let p = truth.probability(h).unwrap();
                let s = (p * 100.0).round();
                Observation { h, frequency: s / 100.0, trials: Some(100) }
            })
            .collect();
        let cfg = FitConfig { weighting: Weighting::Wilson, ..FitConfig::new(2) };
        let fit = fit_sigmoid(&data, &cfg).unwrap();
        assert!(((fit.params.h_star() - 0.05) / 0.05).abs() < 0.05);
    }
}
