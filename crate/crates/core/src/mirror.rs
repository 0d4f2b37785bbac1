//! The exponential mirror potential, its photon-scattering and Raman rates,
//! and closed-form results for a single bounce.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{decay_constant, InterfaceGeometry};
use crate::physics::{AtomSpecies, Energy, Momentum, HBAR};

/// Evanescent-wave mirror acting on the bouncing hyperfine state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorConfig {
    species: AtomSpecies,
    geom: InterfaceGeometry,
    u0: f64,
    delta1: f64,
    branching_b: f64,
    raman_rate0: f64,
}

impl MirrorConfig {
    /// Mirror whose Raman pumping comes from the bouncer itself, R₀ = b Γ'₀.
    pub fn new(
        species: AtomSpecies,
        geom: InterfaceGeometry,
        u0: f64,
        delta1: f64,
        branching_b: f64,
    ) -> Result<Self> {
        species.validate()?;
        if !(u0.is_finite() && u0 > 0.0) {
            return Err(Error::invalid(
                "mirror",
                format!("surface potential u0 must be positive, got {u0}"),
            ));
        }
        if !(delta1.is_finite() && delta1 > 0.0) {
            return Err(Error::invalid(
                "mirror",
                format!("bouncer detuning delta1 must be positive (blue), got {delta1}"),
            ));
        }
        if !(branching_b > 0.0 && branching_b <= 1.0) {
            return Err(Error::invalid(
                "mirror",
                format!("branching ratio b must lie in (0, 1], got {branching_b}"),
            ));
        }
        if decay_constant(&geom) <= 0.0 {
            return Err(Error::invalid(
                "mirror",
                "geometry at the critical angle has no evanescent decay",
            ));
        }
        let gamma_prime0 = u0 * species.gamma() / (HBAR * delta1);
        Ok(MirrorConfig {
            species,
            geom,
            u0,
            delta1,
            branching_b,
            raman_rate0: branching_b * gamma_prime0,
        })
    }

    /// Replaces R₀ with an independently chosen pump rate (separate pump laser).
    /// Zero switches pumping off.
    pub fn with_raman_rate(mut self, raman_rate0: f64) -> Result<Self> {
        if !(raman_rate0.is_finite() && raman_rate0 >= 0.0) {
            return Err(Error::invalid(
                "mirror",
                format!("Raman rate must be non-negative, got {raman_rate0}"),
            ));
        }
        self.raman_rate0 = raman_rate0;
        Ok(self)
    }

    /// Sets R₀ so that U₀/R₀ equals `ratio` (J s).
    pub fn with_pump_ratio(self, ratio: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::invalid(
                "mirror",
                format!("U0/R0 ratio must be positive, got {ratio}"),
            ));
        }
        let u0 = self.u0;
        self.with_raman_rate(u0 / ratio)
    }

    /// Same mirror with a new bouncer detuning; R₀ follows b Γ'₀.
    pub fn with_detuning(self, delta1: f64) -> Result<Self> {
        MirrorConfig::new(self.species, self.geom, self.u0, delta1, self.branching_b)
    }

    /// Same mirror with a new surface potential; a same-laser R₀ follows b Γ'₀,
    /// an independent pump keeps its U₀/R₀ ratio.
    pub fn with_u0(self, u0: f64) -> Result<Self> {
        let ratio = self.pump_ratio();
        let same_laser = self.uses_bouncer_pump();
        let fresh = MirrorConfig::new(self.species, self.geom, u0, self.delta1, self.branching_b)?;
        if same_laser || !ratio.is_finite() {
            Ok(fresh)
        } else {
            fresh.with_pump_ratio(ratio)
        }
    }

    /// Same mirror on a different interface geometry.
    pub fn with_geometry(self, geom: InterfaceGeometry) -> Result<Self> {
        let fresh = MirrorConfig::new(self.species, geom, self.u0, self.delta1, self.branching_b)?;
        if self.uses_bouncer_pump() {
            Ok(fresh)
        } else {
            fresh.with_raman_rate(self.raman_rate0)
        }
    }

    fn uses_bouncer_pump(&self) -> bool {
        self.raman_rate0 == self.branching_b * self.gamma_prime0()
    }

    pub fn species(&self) -> &AtomSpecies {
        &self.species
    }

    pub fn geometry(&self) -> &InterfaceGeometry {
        &self.geom
    }

    /// Potential at the surface U₀, J.
    pub fn u0(&self) -> f64 {
        self.u0
    }

    /// Bouncer detuning δ₁, rad/s.
    pub fn delta1(&self) -> f64 {
        self.delta1
    }

    pub fn branching_b(&self) -> f64 {
        self.branching_b
    }

    /// Field decay constant κ; the potential decays as e^{−2κz}.
    pub fn kappa(&self) -> f64 {
        decay_constant(&self.geom)
    }

    /// Photon scattering rate at the surface Γ'₀ = U₀Γ/(ħδ₁).
    pub fn gamma_prime0(&self) -> f64 {
        self.u0 * self.species.gamma() / (HBAR * self.delta1)
    }

    /// Raman transfer rate at the surface R₀.
    pub fn raman_rate0(&self) -> f64 {
        self.raman_rate0
    }

    /// U₀/R₀ in J s (infinite when pumping is off).
    pub fn pump_ratio(&self) -> f64 {
        self.u0 / self.raman_rate0
    }

    /// e^{−2κz} without the domain check.
    #[inline]
    pub(crate) fn attenuation(&self, z: f64) -> f64 {
        (-2.0 * self.kappa() * z).exp()
    }

    fn check_height(operation: &'static str, z: f64) -> Result<()> {
        if !(z.is_finite() && z >= 0.0) {
            return Err(Error::domain(
                operation,
                format!("height must be non-negative (outside the dielectric), got {z}"),
            ));
        }
        Ok(())
    }

    /// U(z) = U₀ e^{−2κz}.
    pub fn potential(&self, z: f64) -> Result<f64> {
        Self::check_height("potential", z)?;
        Ok(self.u0 * self.attenuation(z))
    }

    /// Γ'(z) = Γ'₀ e^{−2κz}.
    pub fn scatter_rate(&self, z: f64) -> Result<f64> {
        Self::check_height("scatter_rate", z)?;
        Ok(self.gamma_prime0() * self.attenuation(z))
    }

    /// R(z) = R₀ e^{−2κz}.
    pub fn raman_rate(&self, z: f64) -> Result<f64> {
        Self::check_height("raman_rate", z)?;
        Ok(self.raman_rate0 * self.attenuation(z))
    }

    /// Classical turning point z_t = ln(U₀/E)/2κ for an atom of energy `incident_energy`.
    pub fn turning_point(&self, incident_energy: Energy) -> Result<f64> {
        let e = incident_energy.0;
        if !(e.is_finite() && e > 0.0) {
            return Err(Error::domain(
                "turning_point",
                format!("incident energy must be positive, got {e}"),
            ));
        }
        if e > self.u0 {
            return Err(Error::MirrorOverrun {
                energy: e,
                u0: self.u0,
            });
        }
        Ok((self.u0 / e).ln() / (2.0 * self.kappa()))
    }

    fn check_bounce(&self, p_i: Momentum) -> Result<()> {
        if !(p_i.0.is_finite() && p_i.0 > 0.0) {
            return Err(Error::domain(
                "bounce",
                format!("incident momentum must be positive, got {}", p_i.0),
            ));
        }
        let energy = p_i.0 * p_i.0 / (2.0 * self.species.mass);
        if energy > self.u0 {
            return Err(Error::MirrorOverrun {
                energy,
                u0: self.u0,
            });
        }
        Ok(())
    }

    /// ∫R dt over a complete bounce, (R₀/U₀) p_i/κ.
    pub fn bounce_raman_exposure(&self, p_i: Momentum) -> Result<f64> {
        self.check_bounce(p_i)?;
        Ok(self.raman_rate0 / self.u0 * bounce_potential_integral(p_i, self.kappa()))
    }

    /// Photons scattered over a complete bounce, (Γ/δ₁) p_i/(ħκ).
    pub fn bounce_photon_number(&self, p_i: Momentum) -> Result<f64> {
        self.check_bounce(p_i)?;
        Ok(self.gamma_prime0() / self.u0 * bounce_potential_integral(p_i, self.kappa()))
    }
}

/// ∫U dt over a complete bounce in an exponential potential: p_i/κ = m v_i/κ,
/// independent of U₀.
pub fn bounce_potential_integral(p_i: Momentum, kappa: f64) -> f64 {
    p_i.0 / kappa
}

/// U₀/R₀ = m v_i/2κ, the ratio that makes the exposure up to the turning point one.
pub fn optimal_ratio(p_i: Momentum, kappa: f64) -> f64 {
    p_i.0 / (2.0 * kappa)
}

/// Detuning δ = Γ b p_i/(2ħκ) that realizes the optimal ratio when the bouncer also pumps.
pub fn optimal_detuning(species: &AtomSpecies, branching_b: f64, p_i: Momentum, kappa: f64) -> f64 {
    species.gamma() * branching_b * p_i.0 / (2.0 * HBAR * kappa)
}

/// Length scale κ⁻¹(ħκ/p_i)^{2/3} of the atomic wavefunction at the turning point.
pub fn turning_point_wavelength_scale(kappa: f64, p_i: Momentum) -> f64 {
    (HBAR * kappa / p_i.0).powf(2.0 / 3.0) / kappa
}
