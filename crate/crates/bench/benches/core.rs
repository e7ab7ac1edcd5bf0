use criterion::{criterion_group, criterion_main, Criterion};
use grandab_core::asymptotics::schedule_from_rates;
use grandab_core::channel_info::{blahut_arimoto, CAPACITY_MAX_ITER, CAPACITY_TOL};
use grandab_core::exponents::ExponentSolver;
use grandab_core::ranking::{psi, rank_g};
use grandab_core::simulator::estimate;
use grandab_core::{Channel, EnsembleSpec, NType, Pmf, Sequence, SolverConfig};
use std::hint::black_box;

fn bac() -> Channel {
    Channel::new(vec![vec![0.8, 0.2], vec![0.1, 0.9]]).unwrap()
}

fn ranking(c: &mut Criterion) {
    let n = 24;
    let x = Sequence::new((0..n).map(|i| i % 2).collect(), 2).unwrap();
    let y = Sequence::new((0..n).map(|i| usize::from(i % 5 == 0)).collect(), 2).unwrap();
    let comp = NType::new(vec![12, 12]).unwrap();
    c.bench_function("psi_n24", |b| b.iter(|| psi(black_box(&x), &y, &comp).unwrap()));
    c.bench_function("rank_g_n24", |b| b.iter(|| rank_g(black_box(&x), &y, &comp).unwrap()));
}

fn exponents(c: &mut Criterion) {
    let w = bac();
    let p = Pmf::uniform(2);
    let solver = ExponentSolver::new(&p, &w, SolverConfig::default()).unwrap();
    c.bench_function("e_star_bac", |b| b.iter(|| solver.e_star(black_box(0.1), 0.6).unwrap()));
    c.bench_function("k_sp_bac", |b| b.iter(|| solver.k_sp(black_box(0.5)).unwrap()));
    c.bench_function("blahut_arimoto_bac", |b| {
        b.iter(|| blahut_arimoto(black_box(&w), CAPACITY_TOL, CAPACITY_MAX_ITER).unwrap())
    });
}

fn simulation(c: &mut Criterion) {
    let w = Channel::bsc(0.11).unwrap();
    let p = Pmf::uniform(2);
    let sched = schedule_from_rates(64, 0.15, 0.45, &p).unwrap();
    let spec = EnsembleSpec::from_schedule(&sched).unwrap();
    c.bench_function("estimate_n64_1000", |b| {
        b.iter(|| estimate(&spec, &w, 1000, black_box(7)).unwrap())
    });
}

criterion_group!(benches, ranking, exponents, simulation);
criterion_main!(benches);
