//! Monte Carlo oracle for the random-variable model, independent of every
//! closed form in [`crate::laws`].
//!
//! Reproducibility: every trial `i` draws from its own ChaCha8 substream
//! (stream id `i`) of the generator keyed by the user seed. Success counts are
//! integers, so a parallel reduction gives bit-identical estimates for any
//! thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::laws::BetaPair;

/// Random generator used for a single trial.
pub type TrialRng = ChaCha8Rng;

/// User-facing seed. Substreams are derived from it deterministically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Generator for substream `stream`. Distinct streams never overlap.
    pub fn substream(self, stream: u64) -> TrialRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }

    /// Substream keyed by a `(row, trial)` pair.
    pub fn substream2(self, row: u32, trial: u32) -> TrialRng {
        self.substream((u64::from(row) << 32) | u64::from(trial))
    }
}

/// Empirical probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    pub std_error: f64,
}

impl McEstimate {
    pub fn new(trials: u64, successes: u64) -> Result<Self> {
        if trials == 0 || successes > trials {
            return Err(domain(format!("need 0 <= successes <= trials and trials >= 1, got {successes}/{trials}")));
        }
        let estimate = successes as f64 / trials as f64;
        let std_error = (estimate * (1.0 - estimate) / trials as f64).sqrt();
        Ok(Self { trials, successes, estimate, std_error })
    }

    /// Whether `value` lies within `k` standard errors of the estimate.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.std_error
    }
}

/// Gamma(shape, 1) deviate by the Marsaglia–Tsang squeeze; shapes below one
/// are boosted through `Gamma(a) = Gamma(a + 1) U^(1/a)`.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(domain(format!("gamma shape must be finite and positive, got {shape}")));
    }
    if shape < 1.0 {
        let boosted = marsaglia_tsang(shape + 1.0, rng);
        let u = open_unit(rng);
        return Ok(boosted * (u.ln() / shape).exp());
    }
    Ok(marsaglia_tsang(shape, rng))
}

/// Uniform on `(0, 1]`.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

fn marsaglia_tsang<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = open_unit(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One Beta(p, q) draw, strictly inside `(0, 1)`, as `G_p / (G_p + G_q)`.
pub fn sample_beta<R: Rng + ?Sized>(p: f64, q: f64, rng: &mut R) -> Result<f64> {
    check_shapes(p, q)?;
    loop {
        let a = sample_gamma(p, rng)?;
        let b = sample_gamma(q, rng)?;
        let x = a / (a + b);
        // underflow of either deviate puts x on the boundary; redraw
        if x > 0.0 && x < 1.0 {
            return Ok(x);
        }
    }
}

fn check_shapes(p: f64, q: f64) -> Result<()> {
    if p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("beta shapes must be finite and positive, got p = {p}, q = {q}")))
    }
}

/// Map a Beta variate onto the support of the error difference.
pub fn affine_z(pair: BetaPair, x: f64) -> f64 {
    -pair.beta_lo() + (pair.beta_lo() + pair.beta_hi()) * x
}

/// One draw of `Z = -beta_lo + (beta_lo + beta_hi) X`, `X ~ Beta(p, q)`.
pub fn sample_z<R: Rng + ?Sized>(pair: BetaPair, p: f64, q: f64, rng: &mut R) -> Result<f64> {
    Ok(affine_z(pair, sample_beta(p, q, rng)?))
}

fn check_trials(n: u64) -> Result<()> {
    if n == 0 {
        Err(domain("the number of trials must be at least 1"))
    } else {
        Ok(())
    }
}

fn count_parallel<F>(n_trials: u64, seed: RngSeed, trial: F) -> Result<McEstimate>
where
    F: Fn(&mut TrialRng) -> Result<bool> + Sync,
{
    check_trials(n_trials)?;
    let successes = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.substream(i);
            trial(&mut rng).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    McEstimate::new(n_trials, successes)
}

/// Estimate of `Prob{Z <= 0}` under the Beta model.
pub fn mc_prob_event(pair: BetaPair, p: f64, q: f64, n_trials: u64, seed: RngSeed) -> Result<McEstimate> {
    check_shapes(p, q)?;
    count_parallel(n_trials, seed, |rng| Ok(sample_z(pair, p, q, rng)? <= 0.0))
}

/// Estimate of `Prob{X_hi <= X_lo}` for independent `X_lo ~ U[0, beta_lo]`,
/// `X_hi ~ U[0, beta_hi]`.
pub fn mc_prob_independent_uniform(pair: BetaPair, n_trials: u64, seed: RngSeed) -> Result<McEstimate> {
    count_parallel(n_trials, seed, |rng| {
        let x_lo = pair.beta_lo() * rng.random::<f64>();
        let x_hi = pair.beta_hi() * rng.random::<f64>();
        Ok(x_hi <= x_lo)
    })
}

/// Two-sided Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i as f64 + 1.0) / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance 0.01.
pub fn ks_critical_value_01(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_of_draws(p: f64, q: f64, n: usize, seed: u64) -> f64 {
        let mut rng = RngSeed(seed).substream(0);
        (0..n).map(|_| sample_beta(p, q, &mut rng).unwrap()).sum::<f64>() / n as f64
    }

    #[test]
    fn beta_means() {
        assert!((mean_of_draws(1.0, 1.0, 100_000, 1) - 0.5).abs() < 0.005);
        assert!((mean_of_draws(2.0, 3.0, 100_000, 2) - 0.4).abs() < 0.005);
        assert!((mean_of_draws(0.3, 0.6, 100_000, 3) - 1.0 / 3.0).abs() < 0.005);
    }

    #[test]
    fn beta_draws_are_interior() {
        let mut rng = RngSeed(9).substream(0);
        for &(p, q) in &[(0.5, 0.5), (0.2, 4.0), (30.0, 0.4), (1.0, 1.0)] {
            for _ in 0..20_000 {
                let x = sample_beta(p, q, &mut rng).unwrap();
                assert!(x > 0.0 && x < 1.0);
            }
        }
    }

    #[test]
    fn gamma_mean_and_variance() {
        let mut rng = RngSeed(4).substream(0);
        for &shape in &[0.4, 1.0, 3.5] {
            let n = 200_000;
            let draws: Vec<f64> = (0..n).map(|_| sample_gamma(shape, &mut rng).unwrap()).collect();
            let mean = draws.iter().sum::<f64>() / n as f64;
            let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            assert!((mean - shape).abs() < 0.02 * shape.max(1.0), "shape {shape}: mean {mean}");
            assert!((var - shape).abs() < 0.05 * shape.max(1.0), "shape {shape}: var {var}");
        }
    }

    #[test]
    fn invalid_shapes_rejected() {
        let mut rng = RngSeed(0).substream(0);
        assert!(sample_beta(0.0, 1.0, &mut rng).is_err());
        assert!(sample_gamma(-1.0, &mut rng).is_err());
        let pair = BetaPair::new(1.0, 1.0).unwrap();
        assert!(mc_prob_event(pair, 1.0, f64::NAN, 10, RngSeed(0)).is_err());
        assert!(mc_prob_event(pair, 1.0, 1.0, 0, RngSeed(0)).is_err());
    }

    #[test]
    fn z_stays_in_support_and_is_centered() {
        let pair = BetaPair::new(1.0, 1.0).unwrap();
        assert_eq!(affine_z(pair, 0.0), -1.0);
        assert_eq!(affine_z(pair, 1.0), 1.0);
        let mut rng = RngSeed(5).substream(0);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let z = sample_z(pair, 2.0, 2.0, &mut rng).unwrap();
            assert!((-1.0..=1.0).contains(&z));
            sum += z;
        }
        assert!((sum / n as f64).abs() < 0.01);
    }

    #[test]
    fn event_estimates_match_simple_cases() {
        let sym = BetaPair::new(0.4, 0.4).unwrap();
        let e = mc_prob_event(sym, 2.5, 2.5, 1_000_000, RngSeed(11)).unwrap();
        assert!(e.agrees_with(0.5, 3.0), "{e:?}");
        let pair = BetaPair::new(1.0, 3.0).unwrap();
        let e = mc_prob_event(pair, 1.0, 1.0, 1_000_000, RngSeed(12)).unwrap();
        assert!(e.agrees_with(0.25, 3.0), "{e:?}");
    }

    #[test]
    fn uniform_estimates_match_sigmoid_arithmetic() {
        let sym = BetaPair::new(2.0, 2.0).unwrap();
        let e = mc_prob_independent_uniform(sym, 1_000_000, RngSeed(1)).unwrap();
        assert!(e.agrees_with(0.5, 3.0));
        // h = 2h*, delta = 2: beta_lo / beta_hi = 1/4
        let coarse = BetaPair::from_ratio(1.0, 2, 2.0).unwrap();
        let e = mc_prob_independent_uniform(coarse, 1_000_000, RngSeed(2)).unwrap();
        assert!(e.agrees_with(0.125, 3.0), "{e:?}");
        let fine = BetaPair::from_ratio(1.0, 2, 0.5).unwrap();
        let e = mc_prob_independent_uniform(fine, 1_000_000, RngSeed(3)).unwrap();
        assert!(e.agrees_with(0.875, 3.0), "{e:?}");
    }

    #[test]
    fn estimates_are_seed_deterministic_and_thread_independent() {
        let pair = BetaPair::new(0.3, 0.9).unwrap();
        let a = mc_prob_event(pair, 1.7, 0.8, 50_000, RngSeed(77)).unwrap();
        let b = mc_prob_event(pair, 1.7, 0.8, 50_000, RngSeed(77)).unwrap();
        assert_eq!(a, b);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = single.install(|| mc_prob_event(pair, 1.7, 0.8, 50_000, RngSeed(77)).unwrap());
        assert_eq!(a, c);
        let d = mc_prob_event(pair, 1.7, 0.8, 50_000, RngSeed(78)).unwrap();
        assert_ne!(a.successes, d.successes);
    }

    #[test]
    fn estimate_invariants() {
        let e = McEstimate::new(100, 30).unwrap();
        assert_eq!(e.estimate, 0.3);
        assert!((e.std_error - (0.3f64 * 0.7 / 100.0).sqrt()).abs() < 1e-16);
        assert!(McEstimate::new(10, 11).is_err());
        assert!(McEstimate::new(0, 0).is_err());
    }

    #[test]
    fn substreams_differ() {
        let s = RngSeed(3);
        let a: u64 = s.substream(0).random();
        let b: u64 = s.substream(1).random();
        let c: u64 = s.substream2(0, 1).random();
        assert_ne!(a, b);
        assert_eq!(b, c);
    }

    #[test]
    fn ks_statistic_of_exact_quantiles_is_small() {
        let n = 1000;
        let mut xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&mut xs, |x| x);
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }
}
