use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use elemodds::fem1d::{assemble_and_solve, h1_error, Mesh1D};
use elemodds::fit::{fit_gbp, fit_sigmoid, FitConfig};
use elemodds::freq::{default_grid, Observation};
use elemodds::laws::{BetaPair, GeneralizedBetaPrime};
use elemodds::mc::{mc_prob_event, RngSeed};
use elemodds::special::reg_inc_beta;
use elemodds::RungeProblem;

fn special(c: &mut Criterion) {
    c.bench_function("reg_inc_beta x=0.3 p=2.5 q=7", |b| {
        b.iter(|| reg_inc_beta(black_box(0.3), black_box(2.5), black_box(7.0)))
    });
    let law = GeneralizedBetaPrime::new(2.0, 5.0, 2, 0.08).unwrap();
    c.bench_function("gbp probability", |b| b.iter(|| law.probability(black_box(0.1))));
}

fn monte_carlo(c: &mut Criterion) {
    let pair = BetaPair::from_ratio(0.08, 2, 0.1).unwrap();
    let mut group = c.benchmark_group("monte carlo");
    group.sample_size(10);
    group.bench_function("gbp event, 1e5 trials", |b| {
        b.iter(|| mc_prob_event(pair, 2.0, 5.0, black_box(100_000), RngSeed(1)))
    });
    group.finish();
}

fn fem(c: &mut Criterion) {
    let mesh = Mesh1D::uniform(128).unwrap();
    for k in [1, 2, 3] {
        let problem = RungeProblem::centered(500.0, k).unwrap();
        c.bench_function(&format!("solve and H1 error, P{k}, N=128"), |b| {
            b.iter(|| {
                let sol = assemble_and_solve(&problem, black_box(&mesh)).unwrap();
                h1_error(&problem, &sol)
            })
        });
    }
}

fn fitting(c: &mut Criterion) {
    let truth = GeneralizedBetaPrime::new(2.0, 5.0, 2, 0.08).unwrap();
    let data: Vec<Observation> =
        default_grid().iter().map(|&h| Observation::new(h, truth.probability(h).unwrap())).collect();
    let config = FitConfig::new(2);
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    group.bench_function("sigmoid, 16 rows", |b| b.iter(|| fit_sigmoid(black_box(&data), &config)));
    group.bench_function("gbp, 16 rows", |b| b.iter(|| fit_gbp(black_box(&data), &config)));
    group.finish();
}

criterion_group!(benches, special, monte_carlo, fem, fitting);
criterion_main!(benches);
