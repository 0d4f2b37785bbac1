//! Physical constants, atomic species data and free-fall kinematics.
//!
//! Everything is SI internally. Conversions to recoil units, millikelvin or
//! hertz only happen in the accessor methods of the returned newtypes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planck constant, J s (exact).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Boltzmann constant, J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Standard gravitational acceleration used throughout, m/s^2.
pub const GRAVITY: f64 = 9.81;

/// Angular frequency for a frequency given in hertz.
#[inline]
pub fn angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// Vacuum wavevector 2π/λ.
#[inline]
pub fn wavevector(wavelength: f64) -> f64 {
    2.0 * PI / wavelength
}

/// Constants of an alkali atom that the mirror and budget models need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    /// Atomic mass, kg.
    pub mass: f64,
    /// Natural linewidth of the D1 line, rad/s.
    pub gamma_d1: f64,
    /// Natural linewidth of the D2 line, rad/s.
    pub gamma_d2: f64,
    /// D1 vacuum wavelength, m.
    pub lambda_d1: f64,
    /// D2 vacuum wavelength, m.
    pub lambda_d2: f64,
    /// Ground-state hyperfine splitting, rad/s.
    pub delta_ghf: f64,
    /// Fine-structure (D1-D2) splitting, rad/s.
    pub delta_fs: f64,
}

impl AtomSpecies {
    /// Checks the species invariants.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("gamma_d1", self.gamma_d1),
            ("gamma_d2", self.gamma_d2),
            ("lambda_d1", self.lambda_d1),
            ("lambda_d2", self.lambda_d2),
            ("delta_ghf", self.delta_ghf),
            ("delta_fs", self.delta_fs),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(
                    "species",
                    format!("{name} must be strictly positive, got {value}"),
                ));
            }
        }
        if self.delta_fs <= self.delta_ghf {
            return Err(Error::invalid(
                "species",
                "fine-structure splitting must exceed the ground hyperfine splitting",
            ));
        }
        if self.lambda_d1 <= self.lambda_d2 {
            return Err(Error::invalid(
                "species",
                "D1 must be the longer-wavelength line (lambda_d1 > lambda_d2)",
            ));
        }
        Ok(())
    }

    /// Linewidth entering the far-detuned rate estimates. Both lines share it for Rb-87.
    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma_d1
    }

    /// Recoil angular frequency ħk²/2m for light of the given wavelength.
    pub fn recoil_frequency(&self, wavelength: f64) -> f64 {
        let k = wavevector(wavelength);
        HBAR * k * k / (2.0 * self.mass)
    }

    /// Photon recoil momentum ħk for the given wavelength.
    pub fn recoil_momentum(&self, wavelength: f64) -> f64 {
        HBAR * wavevector(wavelength)
    }
}

/// Rubidium-87.
pub fn builtin_rb87() -> AtomSpecies {
    let gamma = angular(6.07e6);
    AtomSpecies {
        mass: 1.4432e-25,
        gamma_d1: gamma,
        gamma_d2: gamma,
        lambda_d1: 795e-9,
        lambda_d2: 780e-9,
        delta_ghf: angular(6.8e9),
        delta_fs: angular(7.2e12),
    }
}

/// Height, vertical velocity and elapsed time of an atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicState {
    /// Height above the dielectric surface, m.
    pub z: f64,
    /// Vertical velocity, m/s (positive is upward).
    pub v: f64,
    /// Elapsed time, s.
    pub t: f64,
}

impl KinematicState {
    pub fn new(z: f64, v: f64, t: f64) -> Result<Self> {
        if !(z.is_finite() && v.is_finite() && t.is_finite()) {
            return Err(Error::invalid(
                "kinematic state",
                format!("non-finite coordinates (z={z}, v={v}, t={t})"),
            ));
        }
        Ok(KinematicState { z, v, t })
    }
}

/// A momentum in kg m/s.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Momentum(pub f64);

impl Momentum {
    /// Momentum expressed in photon recoils ħk_L for the given wavelength.
    pub fn in_recoils(self, wavelength: f64) -> f64 {
        self.0 / (HBAR * wavevector(wavelength))
    }

    /// Builds a momentum from a number of recoils ħk_L.
    pub fn from_recoils(recoils: f64, wavelength: f64) -> Self {
        Momentum(recoils * HBAR * wavevector(wavelength))
    }

    /// Corresponding speed for the given mass.
    pub fn speed(self, mass: f64) -> f64 {
        self.0 / mass
    }
}

/// An energy in joules with temperature and frequency views.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Energy(pub f64);

impl Energy {
    pub fn from_hertz(hz: f64) -> Self {
        Energy(PLANCK * hz)
    }

    /// E / k_B, kelvin.
    pub fn kelvin(self) -> f64 {
        self.0 / BOLTZMANN
    }

    /// E / h, hertz.
    pub fn hertz(self) -> f64 {
        self.0 / PLANCK
    }
}

fn check_height(operation: &'static str, drop_height: f64) -> Result<()> {
    if !(drop_height.is_finite() && drop_height >= 0.0) {
        return Err(Error::domain(
            operation,
            format!("drop height must be a finite non-negative length, got {drop_height}"),
        ));
    }
    Ok(())
}

/// Momentum m√(2gh) of an atom released at rest a height `drop_height` above the surface.
pub fn impact_momentum(species: &AtomSpecies, drop_height: f64) -> Result<Momentum> {
    check_height("impact_momentum", drop_height)?;
    Ok(Momentum(species.mass * (2.0 * GRAVITY * drop_height).sqrt()))
}

/// Kinetic energy m g h gained in the fall.
pub fn impact_energy(species: &AtomSpecies, drop_height: f64) -> Result<Energy> {
    check_height("impact_energy", drop_height)?;
    Ok(Energy(species.mass * GRAVITY * drop_height))
}

/// Lamb-Dicke parameter √(ω_R/ω) of a harmonic trap of angular frequency `trap_freq`.
pub fn lamb_dicke(species: &AtomSpecies, wavelength: f64, trap_freq: f64) -> Result<f64> {
    if !(trap_freq.is_finite() && trap_freq > 0.0) {
        return Err(Error::domain(
            "lamb_dicke",
            format!("trap frequency must be positive, got {trap_freq}"),
        ));
    }
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::domain(
            "lamb_dicke",
            format!("wavelength must be positive, got {wavelength}"),
        ));
    }
    Ok((species.recoil_frequency(wavelength) / trap_freq).sqrt())
}
