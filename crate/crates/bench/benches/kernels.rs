use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use trampoline_core::budget::{assemble_budget, detuning_scan, BudgetInput};
use trampoline_core::ensemble::{atom_rng, edge_height, nominal_entry_speed, run_ensemble};
use trampoline_core::integrator::{integrate_bounce, IntegratorOptions};
use trampoline_core::mirror::optimal_ratio;
use trampoline_core::physics::{angular, builtin_rb87, impact_energy, impact_momentum, KinematicState};
use trampoline_core::{BinSpec, InterfaceGeometry, MirrorConfig, MolassesConfig};

fn reference_mirror() -> MirrorConfig {
    let rb = builtin_rb87();
    let geom = InterfaceGeometry::above_critical(1.51, 0.01, 780e-9).unwrap();
    let base = MirrorConfig::new(rb, geom, 2.0 * impact_energy(&rb, 6e-3).unwrap().0, 100.0 * rb.gamma(), 0.5)
        .unwrap();
    let p = impact_momentum(&rb, 6e-3).unwrap();
    base.with_pump_ratio(optimal_ratio(p, base.kappa())).unwrap()
}

fn bounce(c: &mut Criterion) {
    let mirror = reference_mirror();
    let mol = MolassesConfig::reference(&builtin_rb87(), 1, 0).unwrap();
    let entry = KinematicState { z: edge_height(&mirror), v: -nominal_entry_speed(&mol, &mirror), t: 0.0 };
    let options = IntegratorOptions::default();
    let mut i = 0u64;
    c.bench_function("integrate_bounce", |b| {
        b.iter(|| {
            i += 1;
            integrate_bounce(&mirror, black_box(&entry), &mut atom_rng(0, i), &options).unwrap()
        })
    });
}

fn ensemble(c: &mut Criterion) {
    let mirror = reference_mirror();
    let mol = MolassesConfig::reference(&builtin_rb87(), 2_000, 0).unwrap();
    let options = IntegratorOptions::default();
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    group.bench_function("run_ensemble_2000", |b| {
        b.iter(|| run_ensemble(black_box(&mol), &mirror, BinSpec::default(), &options).unwrap())
    });
    group.finish();
}

fn budget(c: &mut Criterion) {
    let input = BudgetInput::new(builtin_rb87(), angular(100e9)).unwrap();
    c.bench_function("assemble_budget", |b| b.iter(|| assemble_budget(black_box(&input)).unwrap()));
    c.bench_function("detuning_scan_46", |b| {
        b.iter(|| detuning_scan(black_box(&input), angular(50e9), angular(500e9), 46).unwrap())
    });
}

criterion_group!(benches, bounce, ensemble, budget);
criterion_main!(benches);
