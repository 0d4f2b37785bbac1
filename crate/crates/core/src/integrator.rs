//! Trajectory integration of a single bounce with stochastic Raman interruption.
//!
//! The motion under U(z) = U₀e^{−2κz} is integrated with a fourth-order
//! composition of velocity-Verlet substeps. Alongside the trajectory the
//! integrator accumulates A(t) = ∫e^{−2κz}dt with the trapezoid rule on every
//! substep, which gives the Raman exposure R₀A, the potential integral U₀A
//! and the scattered photon number Γ'₀A. Without gravity the trapezoid sums
//! coincide with the Verlet velocity kicks, so A inherits the accuracy of
//! the velocity.
//!
//! A pump event is drawn by inversion: the atom is pumped when its exposure
//! reaches an Exp(1) threshold drawn at entry.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mirror::MirrorConfig;
use crate::physics::{KinematicState, GRAVITY};

// Yoshida triple-jump weights.
const CBRT2: f64 = 1.259_921_049_894_873_2;
const W_OUTER: f64 = 1.0 / (2.0 - CBRT2);
const W_INNER: f64 = -CBRT2 / (2.0 - CBRT2);
const WEIGHTS: [f64; 3] = [W_OUTER, W_INNER, W_OUTER];

/// Tuning of the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    /// Step in units of the local dynamical time 1/(κ√(v² + 4U/m)).
    pub step_factor: f64,
    /// Upper bound on the Raman exposure accumulated in one step.
    pub max_step_exposure: f64,
    /// Largest tolerated |E(t) − E(0)|/E(0) at any accepted step.
    pub energy_tolerance: f64,
    /// Smallest step, in units of the entry dynamical time, before giving up.
    pub min_step_factor: f64,
    /// Hard limit on the number of accepted steps.
    pub max_steps: usize,
    /// Include gravity inside the evanescent region.
    pub gravity: bool,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            step_factor: 0.01,
            max_step_exposure: 1e-3,
            energy_tolerance: 1e-9,
            min_step_factor: 1e-12,
            max_steps: 10_000_000,
            gravity: false,
        }
    }
}

/// Phase-space coordinates at which the bounce was interrupted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpCoordinates {
    pub z: f64,
    pub v: f64,
}

/// Result of one bounce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BounceOutcome {
    /// Pump coordinates (z_p, v_p), present iff the atom was pumped.
    pub pump: Option<PumpCoordinates>,
    /// State at the pump event, or on leaving the evanescent region.
    pub final_state: KinematicState,
    /// Expected photons scattered along the realized path, ∫Γ'dt.
    pub photons_scattered: f64,
    /// Raman exposure ∫R dt along the realized path.
    pub raman_exposure: f64,
    /// ∫U dt along the realized path, J s.
    pub potential_integral: f64,
    /// Time at which the bounce ended (pump or exit), s.
    pub t_exit: f64,
    /// Largest relative energy deviation seen at an accepted step.
    pub max_energy_error: f64,
    /// Accepted steps.
    pub steps: usize,
}

impl BounceOutcome {
    pub fn pumped(&self) -> bool {
        self.pump.is_some()
    }
}

/// One sample of a traced trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub z: f64,
    pub v: f64,
    /// Raman exposure accumulated since entry.
    pub exposure: f64,
}

#[derive(Debug, Clone, Copy)]
struct State {
    z: f64,
    v: f64,
    t: f64,
    /// e^{−2κz} at z.
    att: f64,
    /// ∫e^{−2κz}dt since entry.
    acc: f64,
}

struct Dynamics {
    two_kappa: f64,
    /// 2κU₀/m: acceleration at the surface.
    a0: f64,
    u0: f64,
    mass: f64,
    gravity: f64,
}

impl Dynamics {
    fn new(cfg: &MirrorConfig, options: &IntegratorOptions) -> Self {
        let kappa = cfg.kappa();
        let mass = cfg.species().mass;
        Dynamics {
            two_kappa: 2.0 * kappa,
            a0: 2.0 * kappa * cfg.u0() / mass,
            u0: cfg.u0(),
            mass,
            gravity: if options.gravity { GRAVITY } else { 0.0 },
        }
    }

    #[inline]
    fn attenuation(&self, z: f64) -> f64 {
        (-self.two_kappa * z).exp()
    }

    #[inline]
    fn accel(&self, att: f64) -> f64 {
        self.a0 * att - self.gravity
    }

    #[inline]
    fn energy(&self, s: &State) -> f64 {
        0.5 * self.mass * s.v * s.v + self.u0 * s.att + self.mass * self.gravity * s.z
    }

    /// One composed step of length h.
    #[inline]
    fn advance(&self, s: &State, h: f64) -> State {
        let mut z = s.z;
        let mut v = s.v;
        let mut att = s.att;
        let mut acc = s.acc;
        let mut a = self.accel(att);
        for w in WEIGHTS {
            let hw = h * w;
            let v_half = v + 0.5 * hw * a;
            z += hw * v_half;
            let att_new = self.attenuation(z);
            let a_new = self.accel(att_new);
            v = v_half + 0.5 * hw * a_new;
            acc += 0.5 * hw * (att + att_new);
            att = att_new;
            a = a_new;
        }
        State {
            z,
            v,
            t: s.t + h,
            att,
            acc,
        }
    }

    /// Step length from the local dynamical time and the exposure cap.
    #[inline]
    fn step_size(&self, s: &State, raman0: f64, options: &IntegratorOptions) -> f64 {
        let speed2 = s.v * s.v + 4.0 * self.a0 * s.att / self.two_kappa;
        let rate = 0.5 * self.two_kappa * speed2.sqrt();
        let h_dyn = options.step_factor / rate;
        let r = raman0 * s.att;
        if r > 0.0 {
            h_dyn.min(0.9 * options.max_step_exposure / r)
        } else {
            h_dyn
        }
    }
}

/// Finds s in (0, 1] with f(advance(start, s h)) crossing zero, by bisection.
fn locate<F: Fn(&State) -> f64>(dyn_: &Dynamics, start: &State, h: f64, f: F) -> State {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = dyn_.advance(start, h);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let trial = dyn_.advance(start, mid * h);
        if f(&trial) >= 0.0 {
            hi = mid;
            best = trial;
        } else {
            lo = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    best
}

fn check_entry(entry: &KinematicState) -> Result<()> {
    if !(entry.z.is_finite() && entry.v.is_finite() && entry.t.is_finite()) {
        return Err(Error::domain("integrate_bounce", "entry state must be finite"));
    }
    if entry.z < 0.0 {
        return Err(Error::domain(
            "integrate_bounce",
            format!("entry height must be non-negative, got {}", entry.z),
        ));
    }
    if !(entry.v < 0.0) {
        return Err(Error::domain(
            "integrate_bounce",
            format!("entry velocity must point towards the surface, got {}", entry.v),
        ));
    }
    Ok(())
}

/// Core loop shared by [`integrate_bounce`] and [`trace_bounce`].
fn run<O: FnMut(&TracePoint)>(
    cfg: &MirrorConfig,
    entry: &KinematicState,
    threshold: f64,
    options: &IntegratorOptions,
    mut observer: O,
) -> Result<BounceOutcome> {
    check_entry(entry)?;
    let dyn_ = Dynamics::new(cfg, options);
    let raman0 = cfg.raman_rate0();
    let att0 = dyn_.attenuation(entry.z);
    let mut state = State {
        z: entry.z,
        v: entry.v,
        t: entry.t,
        att: att0,
        acc: 0.0,
    };
    let e0 = dyn_.energy(&state);
    if e0 > dyn_.u0 {
        return Err(Error::MirrorOverrun {
            energy: e0,
            u0: dyn_.u0,
        });
    }
    let z_exit = entry.z;
    let exposure_of = |s: &State| raman0 * s.acc;
    let emit = |s: &State, observer: &mut O| {
        observer(&TracePoint {
            t: s.t,
            z: s.z,
            v: s.v,
            exposure: exposure_of(s),
        })
    };
    emit(&state, &mut observer);

    let h_min = options.min_step_factor * dyn_.step_size(&state, 0.0, options) / options.step_factor;
    let mut max_err = 0.0f64;
    let mut steps = 0usize;
    let mut pump = None;

    loop {
        if steps >= options.max_steps {
            return Err(Error::IntegrationFailure(format!(
                "no exit after {steps} steps"
            )));
        }
        let mut h = dyn_.step_size(&state, raman0, options);
        let next = loop {
            let trial = dyn_.advance(&state, h);
            let err = (dyn_.energy(&trial) - e0).abs() / e0;
            let step_exposure = raman0 * (trial.acc - state.acc);
            if err <= options.energy_tolerance
                && step_exposure <= options.max_step_exposure
                && trial.z.is_finite()
            {
                max_err = max_err.max(err);
                break trial;
            }
            h *= 0.5;
            if h < h_min {
                return Err(Error::IntegrationFailure(format!(
                    "step size underflow at z = {:e} m (energy error {err:e})",
                    state.z
                )));
            }
        };
        if next.z < 0.0 {
            return Err(Error::MirrorOverrun {
                energy: e0,
                u0: dyn_.u0,
            });
        }
        steps += 1;

        let pumped_here = exposure_of(&next) >= threshold;
        let exits_here = next.v > 0.0 && next.z >= z_exit;
        if pumped_here || exits_here {
            let at_pump = pumped_here
                .then(|| locate(&dyn_, &state, h, |s| exposure_of(s) - threshold));
            let at_exit = exits_here.then(|| {
                locate(&dyn_, &state, h, |s| {
                    if s.v > 0.0 {
                        s.z - z_exit
                    } else {
                        -1.0
                    }
                })
            });
            let end = match (at_pump, at_exit) {
                (Some(p), Some(x)) if x.t < p.t => x,
                (Some(p), _) => {
                    pump = Some(PumpCoordinates { z: p.z, v: p.v });
                    p
                }
                (None, Some(x)) => x,
                (None, None) => unreachable!(),
            };
            max_err = max_err.max((dyn_.energy(&end) - e0).abs() / e0);
            emit(&end, &mut observer);
            return Ok(BounceOutcome {
                pump,
                final_state: KinematicState {
                    z: end.z,
                    v: end.v,
                    t: end.t,
                },
                photons_scattered: cfg.gamma_prime0() * end.acc,
                raman_exposure: raman0 * end.acc,
                potential_integral: dyn_.u0 * end.acc,
                t_exit: end.t,
                max_energy_error: max_err,
                steps,
            });
        }
        state = next;
        emit(&state, &mut observer);
    }
}

/// Integrates one bounce entering at `entry`, drawing the pump threshold from `rng`.
///
/// Exactly one Exp(1) variate is drawn from `rng` per call, also when pumping is off.
pub fn integrate_bounce<R: Rng + ?Sized>(
    cfg: &MirrorConfig,
    entry: &KinematicState,
    rng: &mut R,
    options: &IntegratorOptions,
) -> Result<BounceOutcome> {
    integrate_with_threshold(cfg, entry, draw_threshold(rng), options)
}

/// Exp(1) pump threshold on the Raman exposure.
pub fn draw_threshold<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Integrates one bounce that is pumped once the Raman exposure reaches `threshold`.
pub fn integrate_with_threshold(
    cfg: &MirrorConfig,
    entry: &KinematicState,
    threshold: f64,
    options: &IntegratorOptions,
) -> Result<BounceOutcome> {
    run(cfg, entry, threshold, options, |_| {})
}

/// Integrates an uninterrupted bounce and records every accepted step.
pub fn trace_bounce(
    cfg: &MirrorConfig,
    entry: &KinematicState,
    options: &IntegratorOptions,
) -> Result<(BounceOutcome, Vec<TracePoint>)> {
    trace_with_threshold(cfg, entry, f64::INFINITY, options)
}

/// Like [`integrate_with_threshold`], recording every accepted step and the final point.
pub fn trace_with_threshold(
    cfg: &MirrorConfig,
    entry: &KinematicState,
    threshold: f64,
    options: &IntegratorOptions,
) -> Result<(BounceOutcome, Vec<TracePoint>)> {
    let mut points = Vec::new();
    let outcome = run(cfg, entry, threshold, options, |p| points.push(*p))?;
    Ok((outcome, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mirror::{optimal_ratio, MirrorConfig};
    use crate::optics::InterfaceGeometry;
    use crate::physics::{builtin_rb87, impact_energy, impact_momentum, Momentum};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference() -> MirrorConfig {
        let rb = builtin_rb87();
        let geom = InterfaceGeometry::above_critical(1.51, 0.01, 780e-9).unwrap();
        let u0 = 2.0 * impact_energy(&rb, 6e-3).unwrap().0;
        MirrorConfig::new(rb, geom, u0, 100.0 * rb.gamma(), 0.5).unwrap()
    }

    fn entry(cfg: &MirrorConfig) -> KinematicState {
        let v = impact_momentum(cfg.species(), 6e-3).unwrap().speed(cfg.species().mass);
        KinematicState {
            z: 2.5 / cfg.kappa(),
            v: -v,
            t: 0.0,
        }
    }

    #[test]
    fn elastic_bounce_without_pumping() {
        let cfg = reference().with_raman_rate(0.0).unwrap();
        let start = entry(&cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = integrate_bounce(&cfg, &start, &mut rng, &IntegratorOptions::default()).unwrap();
        assert!(!out.pumped());
        assert_eq!(out.raman_exposure, 0.0);
        assert_relative_eq!(out.final_state.v, -start.v, max_relative = 1e-9);
        assert_relative_eq!(out.final_state.z, start.z, max_relative = 1e-12);
        assert!(out.max_energy_error < 1e-9);
        assert_relative_eq!(
            out.potential_integral,
            -start.v * cfg.species().mass / cfg.kappa(),
            max_relative = 1e-8
        );
    }

    #[test]
    fn gravity_flag_changes_little() {
        let cfg = reference().with_raman_rate(0.0).unwrap();
        let start = entry(&cfg);
        let options = IntegratorOptions {
            gravity: true,
            ..Default::default()
        };
        let out = integrate_with_threshold(&cfg, &start, f64::INFINITY, &options).unwrap();
        assert!(out.max_energy_error < 1e-9);
        let plain = integrate_with_threshold(&cfg, &start, f64::INFINITY, &IntegratorOptions::default()).unwrap();
        assert_relative_eq!(out.potential_integral, plain.potential_integral, max_relative = 1e-4);
    }

    #[test]
    fn pump_event_at_threshold() {
        let cfg = reference();
        let start = entry(&cfg);
        let out = integrate_with_threshold(&cfg, &start, 0.7, &IntegratorOptions::default()).unwrap();
        let pump = out.pump.expect("pumped");
        assert_relative_eq!(out.raman_exposure, 0.7, max_relative = 1e-12);
        assert!(pump.z >= 0.0 && pump.z < start.z);
        assert!(pump.v.abs() <= start.v.abs());
    }

    #[test]
    fn overrun_is_reported() {
        let cfg = reference();
        let mut start = entry(&cfg);
        start.v *= 1.5;
        let err = integrate_with_threshold(&cfg, &start, 1.0, &IntegratorOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MirrorOverrun { .. }));
    }

    #[test]
    fn entry_must_move_down() {
        let cfg = reference();
        let mut start = entry(&cfg);
        start.v = -start.v;
        assert!(matches!(
            integrate_with_threshold(&cfg, &start, 1.0, &IntegratorOptions::default()),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn step_underflow_is_integration_failure() {
        let cfg = reference();
        let start = entry(&cfg);
        let options = IntegratorOptions {
            energy_tolerance: 0.0,
            min_step_factor: 1e-3,
            ..Default::default()
        };
        let err = integrate_with_threshold(&cfg, &start, f64::INFINITY, &options).unwrap_err();
        assert!(matches!(err, Error::IntegrationFailure(_)), "{err}");
    }

    #[test]
    fn per_step_exposure_bounded() {
        let p = impact_momentum(&builtin_rb87(), 6e-3).unwrap();
        let cfg = reference().with_pump_ratio(optimal_ratio(p, reference().kappa())).unwrap();
        let (_, trace) = trace_bounce(&cfg, &entry(&cfg), &IntegratorOptions::default()).unwrap();
        for pair in trace.windows(2) {
            assert!(pair[1].exposure - pair[0].exposure <= 1e-3);
        }
        let total = trace.last().unwrap().exposure;
        let expected = cfg.bounce_raman_exposure(Momentum(p.0)).unwrap();
        assert_relative_eq!(total, expected, max_relative = 1e-8);
    }
}
