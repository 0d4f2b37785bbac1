//! The integrator against the exact gravity-free trajectory U(t) = E sech²(κv∞(t − t_t)),
//! evaluated by adaptive Simpson quadrature.

use proptest::prelude::*;
use trampoline_core::integrator::{integrate_with_threshold, trace_bounce, IntegratorOptions};
use trampoline_core::optics::InterfaceGeometry;
use trampoline_core::physics::{builtin_rb87, impact_energy, impact_momentum, KinematicState};
use trampoline_core::MirrorConfig;

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

struct Exact {
    energy: f64,
    rate: f64,
    t_turn: f64,
}

impl Exact {
    fn new(cfg: &MirrorConfig, entry: &KinematicState) -> Self {
        let m = cfg.species().mass;
        let u_e = cfg.potential(entry.z).unwrap();
        let energy = 0.5 * m * entry.v * entry.v + u_e;
        let v_inf = (2.0 * energy / m).sqrt();
        let rate = cfg.kappa() * v_inf;
        // sech(rate τ) = √(U_e/E)
        let tau = (1.0 / (u_e / energy).sqrt()).acosh() / rate;
        Exact { energy, rate, t_turn: entry.t + tau }
    }

    fn potential(&self, t: f64) -> f64 {
        let c = (self.rate * (t - self.t_turn)).cosh();
        self.energy / (c * c)
    }
}

fn reference() -> (MirrorConfig, KinematicState) {
    let rb = builtin_rb87();
    let geom = InterfaceGeometry::above_critical(1.51, 0.01, 780e-9).unwrap();
    let u0 = 2.0 * impact_energy(&rb, 6e-3).unwrap().0;
    let cfg = MirrorConfig::new(rb, geom, u0, 100.0 * rb.gamma(), 0.5).unwrap();
    let v = impact_momentum(&rb, 6e-3).unwrap().speed(rb.mass);
    let entry = KinematicState { z: 2.5 / cfg.kappa(), v: -v, t: 0.0 };
    (cfg, entry)
}

#[test]
fn exposure_profile_matches_quadrature() {
    let (cfg, entry) = reference();
    let exact = Exact::new(&cfg, &entry);
    let (_, trace) = trace_bounce(&cfg, &entry, &IntegratorOptions::default()).unwrap();
    let scale = cfg.raman_rate0() / cfg.u0();
    let mut worst_cdf = 0.0f64;
    let mut prev = (entry.t, 0.0);
    for p in trace.iter().skip(1).step_by(7) {
        let piece = simpson(&|t| exact.potential(t), prev.0, p.t, 1e-40);
        let exposure = prev.1 + scale * piece;
        prev = (p.t, exposure);
        // pump CDF 1 − e^{−exposure}
        let diff = ((-exposure).exp() - (-p.exposure).exp()).abs();
        worst_cdf = worst_cdf.max(diff);
    }
    assert!(worst_cdf < 1e-6, "sup-norm CDF deviation {worst_cdf:e}");
}

#[test]
fn trajectory_matches_closed_form() {
    let (cfg, entry) = reference();
    let exact = Exact::new(&cfg, &entry);
    let (out, trace) = trace_bounce(&cfg, &entry, &IntegratorOptions::default()).unwrap();
    for p in trace.iter().step_by(50) {
        let u = cfg.potential(p.z).unwrap();
        let rel = (u - exact.potential(p.t)).abs() / exact.energy;
        assert!(rel < 1e-7, "t = {} rel {rel:e}", p.t);
    }
    assert!((out.t_exit - 2.0 * exact.t_turn).abs() / exact.t_turn < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn bounce_integral_is_m_v_over_kappa(
        n in 1.3f64..2.0,
        offset in 0.003f64..0.15,
        drop_mm in 0.5f64..25.0,
        headroom in 1.05f64..6.0,
        detuning_gamma in 10.0f64..2000.0,
        edge_decay_lengths in 1.5f64..4.0,
    ) {
        let rb = builtin_rb87();
        let geom = InterfaceGeometry::above_critical(n, offset, 780e-9).unwrap();
        let e = impact_energy(&rb, drop_mm * 1e-3).unwrap().0;
        let cfg = MirrorConfig::new(rb, geom, headroom * e, detuning_gamma * rb.gamma(), 0.5).unwrap();
        let v = (2.0 * e / rb.mass).sqrt();
        let entry = KinematicState { z: edge_decay_lengths / cfg.kappa(), v: -v, t: 0.0 };
        let out = integrate_with_threshold(&cfg, &entry, f64::INFINITY, &IntegratorOptions::default()).unwrap();
        let closed = rb.mass * v / cfg.kappa();
        prop_assert!((out.potential_integral / closed - 1.0).abs() < 1e-8,
            "closed form: {} vs {}", out.potential_integral, closed);
        let exact = Exact::new(&cfg, &entry);
        let quad = simpson(&|t| exact.potential(t), 0.0, out.t_exit, closed * 1e-13);
        prop_assert!((out.potential_integral / quad - 1.0).abs() < 1e-8,
            "quadrature: {} vs {}", out.potential_integral, quad);
        prop_assert!(out.max_energy_error < 1e-9);
    }
}
