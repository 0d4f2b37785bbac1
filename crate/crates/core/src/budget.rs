//! Closed-form photon scattering budget for atoms held in the dark state.
//!
//! Every channel uses the far-detuned two-level estimate Γ·U/(ħδ). The F=1
//! bounce potential at the trap location is held at `u1_ref` while the
//! detuning is scanned, so the laser intensity grows with δ₁.
//!
//! Three dimensionless scalars stand in for the angular-momentum algebra.
//! Each was calibrated once and is frozen here:
//!
//! | constant | channel | calibrated to |
//! |---|---|---|
//! | [`CG_D2`] | off-resonant D2 | 3.5 s⁻¹ at δ₁ = 2π×100 GHz |
//! | [`CG_IMPURITY`] | σ⁻ impurity on D1 | 10.6 s⁻¹ at ε = 10⁻³, δ₁ = 2π×100 GHz |
//! | [`LATTICE_STRENGTH`] | lattice depth | ω = 2π×480 kHz at δ₁ = 2π×100 GHz |

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{AtomSpecies, HBAR, PLANCK};

/// Clebsch-Gordan weight of the off-resonant D2 channel.
pub const CG_D2: f64 = 1.9275;
/// Clebsch-Gordan weight of the σ⁻ impurity channel.
pub const CG_IMPURITY: f64 = 2.3161;
/// Depth of the σ⁻ lattice in units of u1_ref·δ₁/(δ₁ + δ_GHF).
pub const LATTICE_STRENGTH: f64 = 2.8228;

/// Inputs of the scattering budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetInput {
    pub species: AtomSpecies,
    /// Bouncer detuning from the D1 line for F=1, rad/s.
    pub delta1: f64,
    /// F=1 bouncer light shift at the trap location, J.
    pub u1_ref: f64,
    /// Fraction of the intensity in the wrong circular polarization.
    pub impurity_eps: f64,
    /// D2:D1 line-strength ratio.
    pub line_strength_d2_over_d1: f64,
}

impl BudgetInput {
    /// Defaults: u1_ref = h×12 MHz, ε = 10⁻³, line-strength ratio 2.
    pub fn new(species: AtomSpecies, delta1: f64) -> Result<Self> {
        let input = BudgetInput {
            species,
            delta1,
            u1_ref: PLANCK * 12e6,
            impurity_eps: 1e-3,
            line_strength_d2_over_d1: 2.0,
        };
        input.validate()?;
        Ok(input)
    }

    pub fn validate(&self) -> Result<()> {
        self.species.validate()?;
        if !(self.delta1.is_finite() && self.delta1 > 0.0) {
            return Err(Error::invalid(
                "budget input",
                format!("delta1 must be positive, got {}", self.delta1),
            ));
        }
        if !(self.u1_ref.is_finite() && self.u1_ref > 0.0) {
            return Err(Error::invalid(
                "budget input",
                format!("u1_ref must be positive, got {}", self.u1_ref),
            ));
        }
        if !(self.impurity_eps.is_finite() && (0.0..0.5).contains(&self.impurity_eps)) {
            return Err(Error::invalid(
                "budget input",
                format!("impurity_eps must lie in [0, 0.5), got {}", self.impurity_eps),
            ));
        }
        if !(self.line_strength_d2_over_d1.is_finite() && self.line_strength_d2_over_d1 >= 0.0) {
            return Err(Error::invalid(
                "budget input",
                "line_strength_d2_over_d1 must be non-negative",
            ));
        }
        Ok(())
    }

    pub fn with_delta1(mut self, delta1: f64) -> Result<Self> {
        self.delta1 = delta1;
        self.validate()?;
        Ok(self)
    }

    /// F=2 detuning δ₂ = δ₁ + δ_GHF.
    pub fn delta2(&self) -> f64 {
        self.delta1 + self.species.delta_ghf
    }
}

/// Scattering rates of one budget evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringBudget {
    /// F=2 scattering without a dark state, s⁻¹.
    pub crosstalk_no_darkstate: f64,
    /// Off-resonant D2 scattering of the dark state, s⁻¹.
    pub d2_offresonant: f64,
    /// D1 scattering caused by the σ⁻ impurity, s⁻¹.
    pub d1_impurity: f64,
    /// Scattering from the wings of the oscillator ground state, s⁻¹.
    pub ho_wing: f64,
    /// Lattice trap angular frequency, rad/s.
    pub trap_frequency: f64,
    /// d2_offresonant + d1_impurity + ho_wing, s⁻¹.
    pub total_dark: f64,
}

/// Rate Γ·U₂/(ħδ₂) of an F=2 atom with U₂ = u1_ref·δ₁/δ₂.
pub fn crosstalk_rate(input: &BudgetInput) -> f64 {
    let delta2 = input.delta2();
    let u2 = input.u1_ref * input.delta1 / delta2;
    input.species.gamma() * u2 / (HBAR * delta2)
}

/// Off-resonant scattering on the D2 line, which the dark state does not suppress.
pub fn dark_d2_rate(input: &BudgetInput) -> Result<f64> {
    let detuning = input.species.delta_fs - input.delta1;
    if detuning <= 0.0 {
        return Err(Error::domain(
            "dark_d2_rate",
            format!(
                "delta1 = {:e} rad/s must stay below the fine-structure splitting {:e} rad/s",
                input.delta1, input.species.delta_fs
            ),
        ));
    }
    let u_d2 = input.u1_ref * (input.delta1 / detuning) * input.line_strength_d2_over_d1;
    Ok(CG_D2 * input.species.gamma() * u_d2 / (HBAR * detuning))
}

/// D1 scattering from the fraction ε of σ⁻ light.
pub fn impurity_rate(input: &BudgetInput) -> f64 {
    input.impurity_eps * CG_IMPURITY * input.species.gamma() * input.u1_ref / (HBAR * input.delta1)
}

/// Lattice wavevector for two TE beams crossing at 90° (period λ_D1/√2).
pub fn lattice_wavevector(species: &AtomSpecies) -> f64 {
    PI * SQRT_2 / species.lambda_d1
}

/// Harmonic frequency about a node of the σ⁻ standing wave, rad/s.
pub fn lattice_trap_frequency(input: &BudgetInput) -> f64 {
    let u_trap = LATTICE_STRENGTH * input.u1_ref * input.delta1 / input.delta2();
    lattice_wavevector(&input.species) * (2.0 * u_trap / input.species.mass).sqrt()
}

/// Scattering from the oscillator wings, ωΓ/(4(δ₁ + δ_GHF)).
pub fn ho_wing_rate(omega: f64, input: &BudgetInput) -> Result<f64> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::domain(
            "ho_wing_rate",
            format!("trap frequency must be non-negative, got {omega}"),
        ));
    }
    Ok(omega * input.species.gamma() / (4.0 * input.delta2()))
}

/// Evaluates every channel.
pub fn assemble_budget(input: &BudgetInput) -> Result<ScatteringBudget> {
    input.validate()?;
    let d2 = dark_d2_rate(input)?;
    let impurity = impurity_rate(input);
    let omega = lattice_trap_frequency(input);
    let ho = ho_wing_rate(omega, input)?;
    Ok(ScatteringBudget {
        crosstalk_no_darkstate: crosstalk_rate(input),
        d2_offresonant: d2,
        d1_impurity: impurity,
        ho_wing: ho,
        trap_frequency: omega,
        total_dark: d2 + impurity + ho,
    })
}

/// Budgets on `points` detunings spaced linearly between `start` and `end` (rad/s).
pub fn detuning_scan(
    input: &BudgetInput,
    start: f64,
    end: f64,
    points: usize,
) -> Result<Vec<(f64, ScatteringBudget)>> {
    if points < 2 {
        return Err(Error::domain("detuning_scan", "need at least two points"));
    }
    if !(start > 0.0 && end > start) {
        return Err(Error::domain(
            "detuning_scan",
            format!("need 0 < start < end, got [{start:e}, {end:e}]"),
        ));
    }
    (0..points)
        .map(|i| {
            let delta1 = start + (end - start) * i as f64 / (points - 1) as f64;
            let at = input.with_delta1(delta1)?;
            Ok((delta1, assemble_budget(&at)?))
        })
        .collect()
}

/// Detuning in [lo, hi] at which the D2 rate overtakes the oscillator-wing rate.
///
/// Returns `None` if the two rates do not cross inside the interval.
pub fn d2_crossover(input: &BudgetInput, lo: f64, hi: f64) -> Result<Option<f64>> {
    let diff = |delta1: f64| -> Result<f64> {
        let b = assemble_budget(&input.with_delta1(delta1)?)?;
        Ok(b.d2_offresonant - b.ho_wing)
    };
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (diff(a)?, diff(b)?);
    if fa == 0.0 {
        return Ok(Some(a));
    }
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = diff(mid)?;
        if fm.signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-12 * b {
            break;
        }
    }
    Ok(Some(0.5 * (a + b)))
}
