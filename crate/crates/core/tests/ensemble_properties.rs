use trampoline_core::ensemble::{
    edge_height, nominal_entry_speed, run_ensemble, BinSpec, MolassesConfig,
};
use trampoline_core::integrator::{integrate_bounce, IntegratorOptions};
use trampoline_core::mirror::optimal_ratio;
use trampoline_core::optics::InterfaceGeometry;
use trampoline_core::physics::{builtin_rb87, impact_energy, Energy, KinematicState, Momentum};
use trampoline_core::MirrorConfig;

fn reference_mirror() -> MirrorConfig {
    let rb = builtin_rb87();
    let geom = InterfaceGeometry::above_critical(1.51, 0.01, 780e-9).unwrap();
    let u0 = 2.0 * impact_energy(&rb, 6e-3).unwrap().0;
    MirrorConfig::new(rb, geom, u0, 100.0 * rb.gamma(), 0.5).unwrap()
}

fn optimal_mirror(mol: &MolassesConfig) -> MirrorConfig {
    let m = reference_mirror();
    let v_i = nominal_entry_speed(mol, &m);
    let ratio = optimal_ratio(Momentum(m.species().mass * v_i), m.kappa());
    m.with_pump_ratio(ratio).unwrap()
}

#[test]
fn full_bounce_pumping_at_optimal_ratio() {
    let rb = builtin_rb87();
    let n = 100_000u64;
    let mol = MolassesConfig::reference(&rb, n, 11).unwrap();
    let mirror = optimal_mirror(&mol);
    let (_, report) = run_ensemble(&mol, &mirror, BinSpec::default(), &IntegratorOptions::default()).unwrap();
    let expected = 1.0 - (-2.0f64).exp();
    let se = (expected * (1.0 - expected) / n as f64).sqrt();
    assert!(
        (report.pumped_fraction - expected).abs() < 3.0 * se,
        "{} vs {expected} (se {se:e})",
        report.pumped_fraction
    );
    assert_eq!(report.n_pumped + report.n_unpumped + report.n_overrun, n);
}

#[test]
fn pump_events_concentrate_at_turning_point() {
    let rb = builtin_rb87();
    let mol = MolassesConfig::reference(&rb, 20_000, 2).unwrap();
    let mirror = reference_mirror();
    let (hist, report) = run_ensemble(&mol, &mirror, BinSpec::default(), &IntegratorOptions::default()).unwrap();
    let z_t = mirror.turning_point(Energy(0.5 * rb.mass * nominal_entry_speed(&mol, &mirror).powi(2))).unwrap();
    let marginal = hist.z_marginal();
    let centers = hist.z_centers();
    let mode = centers[marginal
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0];
    assert!((mode - z_t).abs() < 2.0 * hist.dz(), "mode {mode:e} vs z_t {z_t:e}");
    assert!((report.z_peak - z_t).abs() < 2.0 * hist.dz());
}

#[test]
fn pump_speed_never_exceeds_entry_speed() {
    let rb = builtin_rb87();
    let mirror = reference_mirror();
    let mol = MolassesConfig::reference(&rb, 2_000, 9).unwrap();
    let edge = edge_height(&mirror);
    let options = IntegratorOptions::default();
    for (i, start) in trampoline_core::ensemble::sample_initial(&mol).enumerate() {
        let entry = trampoline_core::ensemble::free_fall_to_mirror(&start, edge).unwrap();
        let mut rng = trampoline_core::ensemble::atom_rng(3, i as u64);
        let out = integrate_bounce(&mirror, &entry, &mut rng, &options).unwrap();
        if let Some(p) = out.pump {
            assert!(p.v.abs() <= entry.v.abs() * (1.0 + 1e-9));
            assert!(p.z >= 0.0 && p.z <= edge);
        }
    }
}

#[test]
fn histogram_independent_of_thread_count() {
    let rb = builtin_rb87();
    let mol = MolassesConfig::reference(&rb, 3_000, 42).unwrap();
    let mirror = reference_mirror();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&mol, &mirror, BinSpec::default(), &IntegratorOptions::default()).unwrap())
    };
    let (h1, r1) = run(1);
    let (h4, r4) = run(4);
    assert_eq!(h1, h4);
    assert_eq!(r1, r4);
}

#[test]
fn compression_invariant_under_atom_number() {
    let rb = builtin_rb87();
    let mirror = reference_mirror();
    let small = MolassesConfig::reference(&rb, 20_000, 5).unwrap();
    let large = small.with_atoms(80_000).unwrap().with_seed(6);
    let opts = IntegratorOptions::default();
    let (_, rs) = run_ensemble(&small, &mirror, BinSpec::default(), &opts).unwrap();
    let (_, rl) = run_ensemble(&large, &mirror, BinSpec::default(), &opts).unwrap();
    let ratio = rs.compression_factor / rl.compression_factor;
    assert!((ratio - 1.0).abs() < 0.15, "{ratio}");
    assert!((rs.pumped_fraction - rl.pumped_fraction).abs() < 0.015);
}

#[test]
fn start_below_edge_is_an_error() {
    let edge = edge_height(&reference_mirror());
    let s = KinematicState::new(0.5 * edge, 0.0, 0.0).unwrap();
    assert!(trampoline_core::ensemble::free_fall_to_mirror(&s, edge).is_err());
}
