use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DMatrix;
use tcr_core::assignment::{hungarian_max, WeightTable};
use tcr_core::dashf::initial_point;
use tcr_core::part1::slot_share_resources;
use tcr_core::part2::solve_part2;
use tcr_core::qcqp::{build_qcqp, compute_coefficients, delay_constants, gamma_star, lift_to_sdp, trust_table};
use tcr_core::sdp::{solve_sdp_ipm, SdpProblem};
use tcr_core::{generate_scenario, Scenario, ScenarioConfig};

fn scenario(n: usize, m: usize) -> Scenario {
    generate_scenario(&ScenarioConfig::with_size(n, m), 1).expect("default scenario")
}

fn relaxation(sc: &Scenario) -> SdpProblem {
    let a = initial_point(sc).unwrap();
    let pricing = slot_share_resources(sc, &a);
    let coeffs = compute_coefficients(sc, &pricing, 1.0).unwrap();
    let delays = delay_constants(sc, &pricing, gamma_star(sc.params.omega_b)).unwrap();
    let trust = trust_table(sc, &pricing).unwrap();
    let form = build_qcqp(sc, &coeffs, &trust, &delays, &pricing).unwrap();
    lift_to_sdp(&form).unwrap().problem
}

fn bench_hungarian(c: &mut Criterion) {
    // Deterministic scrambled weights.
    let affinity = DMatrix::from_fn(20, 3, |i, j| ((i * 7919 + j * 104_729) % 1000) as f64 / 1000.0);
    let table = WeightTable::with_slots(&affinity, 7);
    c.bench_function("hungarian 20x21", |b| b.iter(|| hungarian_max(black_box(&table)).unwrap()));
}

fn bench_relaxation(c: &mut Criterion) {
    let mut g = c.benchmark_group("relaxation ipm");
    g.sample_size(10);
    for (n, m) in [(10, 2), (20, 3)] {
        let p = relaxation(&scenario(n, m));
        g.bench_function(format!("{n}x{m}"), |b| b.iter(|| solve_sdp_ipm(black_box(&p), 1e-8, 200).unwrap()));
    }
    g.finish();
}

fn bench_resources(c: &mut Criterion) {
    let mut g = c.benchmark_group("resource step");
    g.sample_size(10);
    for (n, m) in [(10, 2), (20, 3)] {
        let sc = scenario(n, m);
        let a = initial_point(&sc).unwrap();
        let tols = sc.params.tolerances.clone();
        g.bench_function(format!("{n}x{m}"), |b| b.iter(|| solve_part2(&sc, black_box(&a), &tols).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench_hungarian, bench_relaxation, bench_resources);
criterion_main!(benches);
