//! Built-in cross-checks: closed forms against quadrature and Monte Carlo,
//! and the finite element convergence rate.

use elemodds::fem1d::convergence_rate;
use elemodds::laws::{BetaPair, GeneralizedBetaPrime, Sigmoid};
use elemodds::mc::{mc_prob_event, mc_prob_independent_uniform, RngSeed};
use elemodds::RungeProblem;

use crate::{CliError, ValidateArgs};

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

const GBP_FIXTURES: [(f64, f64, u32, f64, f64); 4] =
    [(2.0, 5.0, 2, 0.08, 0.1), (1.0, 1.0, 1, 0.1, 0.05), (0.6, 3.0, 3, 0.2, 0.25), (4.0, 0.8, 2, 0.05, 0.04)];

fn closed_form_vs_quadrature() -> Check {
    let mut worst: f64 = 0.0;
    for (p, q, delta, hs, _) in GBP_FIXTURES {
        let law = GeneralizedBetaPrime::new(p, q, delta, hs).expect("fixture is valid");
        for i in 0..=20 {
            let h = hs * 10f64.powf(-2.0 + 0.2 * i as f64);
            let closed = law.probability(h).expect("positive h");
            let integral = law.survival_by_quadrature(h, 1e-12).unwrap_or(f64::NAN);
            worst = worst.max((closed - integral).abs());
        }
    }
    Check {
        name: "gbp closed form vs density quadrature",
        passed: worst <= 1e-8,
        detail: format!("max deviation {worst:.2e}"),
    }
}

fn gbp_vs_monte_carlo(trials: u64, inject_fault: bool) -> Check {
    let mut failures = Vec::new();
    for (i, (p, q, delta, hs, h)) in GBP_FIXTURES.into_iter().enumerate() {
        let law = GeneralizedBetaPrime::new(p, q, delta, hs).expect("fixture is valid");
        let sampled_hs = if inject_fault && i == 0 { 2.0 * hs } else { hs };
        let pair = BetaPair::from_ratio(sampled_hs, delta, h).expect("fixture is valid");
        let est = mc_prob_event(pair, p, q, trials, RngSeed(100 + i as u64)).expect("fixture is valid");
        let want = law.probability(h).expect("positive h");
        if !est.agrees_with(want, 4.0) {
            failures.push(format!("fixture {i}: {} vs {want}", est.estimate));
        }
    }
    Check {
        name: "gbp law vs Monte Carlo",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{} fixtures, {trials} trials each", GBP_FIXTURES.len())
        } else {
            failures.join("; ")
        },
    }
}

fn sigmoid_vs_monte_carlo(trials: u64) -> Check {
    let mut failures = Vec::new();
    for (i, (delta, hs, h)) in [(1, 0.1, 0.05), (2, 0.1, 0.2), (3, 0.3, 0.3)].into_iter().enumerate() {
        let law = Sigmoid::new(hs, delta).expect("fixture is valid");
        let pair = BetaPair::from_ratio(hs, delta, h).expect("fixture is valid");
        let est = mc_prob_independent_uniform(pair, trials, RngSeed(200 + i as u64)).expect("fixture is valid");
        let want = law.probability(h).expect("positive h");
        if !est.agrees_with(want, 4.0) {
            failures.push(format!("fixture {i}: {} vs {want}", est.estimate));
        }
    }
    Check {
        name: "sigmoid law vs Monte Carlo",
        passed: failures.is_empty(),
        detail: if failures.is_empty() { format!("3 fixtures, {trials} trials each") } else { failures.join("; ") },
    }
}

fn midpoint() -> Check {
    let mut worst: f64 = 0.0;
    for p in [0.3, 1.0, 2.5, 10.0] {
        for delta in 1..=3 {
            let law = GeneralizedBetaPrime::new(p, p, delta, 0.1).expect("fixture is valid");
            worst = worst.max((law.probability(0.1).expect("positive h") - 0.5).abs());
        }
    }
    let sigmoid_half = Sigmoid::new(0.1, 2).expect("fixture is valid").probability(0.1).expect("positive h");
    Check {
        name: "midpoint identity",
        passed: worst <= 1e-12 && sigmoid_half == 0.5,
        detail: format!("max |P(h*) - 1/2| = {worst:.2e}"),
    }
}

fn fem_rate(quick: bool) -> Check {
    let meshes: &[f64] = if quick {
        &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
    } else {
        &[1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0]
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 1..=3 {
        let problem = RungeProblem::centered(10.0, k).expect("fixture is valid");
        let slope = convergence_rate(&problem, meshes).unwrap_or(f64::NAN);
        let tol = if k == 3 { 0.3 } else { 0.2 };
        ok &= (slope - k as f64).abs() <= tol;
        parts.push(format!("k={k}: {slope:.3}"));
    }
    Check { name: "finite element H1 rates", passed: ok, detail: parts.join(", ") }
}

pub fn run(a: &ValidateArgs) -> Result<(), CliError> {
    let trials = if a.quick { 20_000 } else { 400_000 };
    let checks = [
        closed_form_vs_quadrature(),
        gbp_vs_monte_carlo(trials, a.inject_fault),
        sigmoid_vs_monte_carlo(trials),
        midpoint(),
        fem_rate(a.quick),
    ];
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed == 0 {
        println!("validate: {} checks passed", checks.len());
        Ok(())
    } else {
        Err(CliError::Failure(format!("{failed} of {} checks failed", checks.len())))
    }
}
