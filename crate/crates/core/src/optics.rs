//! Evanescent-field geometry and polarization at a totally internally
//! reflecting dielectric/vacuum interface.
//!
//! Frame: `z` is the outward surface normal (vacuum side), `x` the in-plane
//! propagation direction of a single incident beam, `y = z × x`. Fields are
//! complex amplitudes of `E e^{-iωt}`, so a field `(1, i, 0)/√2` rotates
//! counter-clockwise about `+z` and has `s3 = +1` (σ⁺ about `+z`).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::wavevector;

pub type Vec3 = [f64; 3];
type CVec3 = [Complex64; 3];

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: Vec3) -> Vec3 {
    let l = norm(a);
    [a[0] / l, a[1] / l, a[2] / l]
}

fn cdot_real(e: CVec3, u: Vec3) -> Complex64 {
    e[0] * u[0] + e[1] * u[1] + e[2] * u[2]
}

fn ccross(a: CVec3, b: CVec3) -> CVec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Refractive index, angle of incidence and vacuum wavelength of a
/// totally internally reflected beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceGeometry {
    n: f64,
    theta_i: f64,
    lambda0: f64,
}

impl InterfaceGeometry {
    /// Validated geometry; rejects angles below the critical angle.
    pub fn new(n: f64, theta_i: f64, lambda0: f64) -> Result<Self> {
        if !(n.is_finite() && n > 1.0) {
            return Err(Error::domain(
                "interface geometry",
                format!("refractive index must exceed 1, got {n}"),
            ));
        }
        if !(lambda0.is_finite() && lambda0 > 0.0) {
            return Err(Error::domain(
                "interface geometry",
                format!("wavelength must be positive, got {lambda0}"),
            ));
        }
        let theta_c = (1.0 / n).asin();
        if !(theta_i.is_finite() && theta_i >= theta_c && theta_i < PI / 2.0) {
            return Err(Error::domain(
                "interface geometry",
                format!(
                    "evanescent regime requires critical angle {theta_c} <= theta_i < pi/2, got {theta_i}"
                ),
            ));
        }
        Ok(InterfaceGeometry { n, theta_i, lambda0 })
    }

    /// Geometry at `offset` radians above the critical angle.
    pub fn above_critical(n: f64, offset: f64, lambda0: f64) -> Result<Self> {
        if !(n.is_finite() && n > 1.0) {
            return Err(Error::domain(
                "interface geometry",
                format!("refractive index must exceed 1, got {n}"),
            ));
        }
        Self::new(n, (1.0 / n).asin() + offset, lambda0)
    }

    /// Geometry whose decay constant equals `kappa`, keeping `n` and `lambda0`.
    pub fn with_decay_constant(n: f64, kappa: f64, lambda0: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::domain(
                "interface geometry",
                format!("decay constant must be non-negative, got {kappa}"),
            ));
        }
        let ratio = kappa / wavevector(lambda0);
        let sin_theta = (1.0 + ratio * ratio).sqrt() / n;
        if sin_theta >= 1.0 {
            return Err(Error::domain(
                "interface geometry",
                format!("decay constant {kappa} unreachable with n = {n}"),
            ));
        }
        Self::new(n, sin_theta.asin(), lambda0)
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn theta_i(&self) -> f64 {
        self.theta_i
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn critical_angle(&self) -> f64 {
        (1.0 / self.n).asin()
    }

    /// Free-space wavevector k_L = 2π/λ₀.
    pub fn k_vacuum(&self) -> f64 {
        wavevector(self.lambda0)
    }

    /// n sin θ_i, the in-plane wavevector in units of k_L.
    pub fn in_plane_index(&self) -> f64 {
        self.n * self.theta_i.sin()
    }

    /// √(n² sin²θ_i − 1) = κ/k_L; exactly zero at the critical angle.
    pub fn decay_ratio(&self) -> f64 {
        let q = self.in_plane_index();
        (q * q - 1.0).max(0.0).sqrt()
    }

    /// Unit vectors (k̂, ŝ, p̂) of the incident wave inside the dielectric,
    /// with p̂ = ŝ × k̂.
    pub fn incident_basis(&self) -> (Vec3, Vec3, Vec3) {
        let (sin, cos) = self.theta_i.sin_cos();
        let k = [sin, 0.0, cos];
        let s = [0.0, 1.0, 0.0];
        (k, s, cross(s, k))
    }
}

/// Evanescent decay constant κ = k_L √(n² sin²θ_i − 1) of the field amplitude.
pub fn decay_constant(geom: &InterfaceGeometry) -> f64 {
    geom.k_vacuum() * geom.decay_ratio()
}

/// Amplitude transmission coefficients (t_s, t_p) into the evanescent wave.
///
/// The transmitted TE field is `t_s E_s ŷ`; the TM field is
/// `t_p E_p (i κ/k_L, 0, −n sinθ_i)`, where `E_s`, `E_p` are the incident
/// components along ŝ and p̂ of [`InterfaceGeometry::incident_basis`].
pub fn fresnel_transmission(geom: &InterfaceGeometry) -> (Complex64, Complex64) {
    let n = geom.n;
    let c = geom.theta_i.cos();
    let s = geom.decay_ratio();
    let t_s = Complex64::new(2.0 * n * c, 0.0) / Complex64::new(n * c, s);
    let t_p = Complex64::new(2.0 * n * c, 0.0) / Complex64::new(c, n * s);
    (t_s, t_p)
}

/// Sense of circular polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Helicity {
    SigmaPlus,
    SigmaMinus,
}

impl Helicity {
    pub fn sign(self) -> f64 {
        match self {
            Helicity::SigmaPlus => 1.0,
            Helicity::SigmaMinus => -1.0,
        }
    }
}

/// Polarization ellipse of the incident beam.
///
/// `orientation` is the angle of the major axis measured from ŝ towards
/// `k̂ × ŝ` (a right-handed transverse frame about the incident k̂);
/// `handedness` is the sense of rotation about k̂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseSpec {
    pub ellipticity: f64,
    pub orientation: f64,
    pub handedness: Helicity,
}

impl EllipseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ellipticity) {
            return Err(Error::invalid(
                "ellipse",
                format!("ellipticity must lie in [0, 1], got {}", self.ellipticity),
            ));
        }
        if !self.orientation.is_finite() {
            return Err(Error::invalid("ellipse", "orientation must be finite"));
        }
        Ok(())
    }
}

/// Input ellipse that produces a circularly polarized evanescent wave of the
/// requested helicity (about its Poynting vector).
///
/// The ellipticity is 1/n and the orientation φ obeys
/// tan φ = −√(n² sin²θ_i − 1)/cos θ_i for σ⁺ (mirrored for σ⁻).
pub fn required_input_polarization(geom: &InterfaceGeometry, helicity: Helicity) -> EllipseSpec {
    let phi = (-geom.decay_ratio() / geom.theta_i.cos()).atan();
    EllipseSpec {
        ellipticity: 1.0 / geom.n,
        orientation: helicity.sign() * phi,
        handedness: helicity,
    }
}

/// Normalized Stokes parameters about some axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stokes {
    pub intensity: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl Stokes {
    /// √(s1² + s2² + s3²); 1 for a fully polarized field transverse to the axis.
    pub fn degree(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }
}

/// Complex three-component electric field amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    pub e_x: Complex64,
    pub e_y: Complex64,
    pub e_z: Complex64,
}

impl PolarizationState {
    pub fn new(e_x: Complex64, e_y: Complex64, e_z: Complex64) -> Self {
        PolarizationState { e_x, e_y, e_z }
    }

    fn from_array(e: CVec3) -> Self {
        PolarizationState {
            e_x: e[0],
            e_y: e[1],
            e_z: e[2],
        }
    }

    fn as_array(&self) -> CVec3 {
        [self.e_x, self.e_y, self.e_z]
    }

    /// Incident field in the dielectric carrying the given ellipse (unit intensity).
    pub fn incident(geom: &InterfaceGeometry, ellipse: &EllipseSpec) -> Result<Self> {
        ellipse.validate()?;
        let (k, s, _) = geom.incident_basis();
        let e2 = cross(k, s);
        let (sin, cos) = ellipse.orientation.sin_cos();
        let minor = I * (ellipse.handedness.sign() * ellipse.ellipticity);
        // Rotate (1, ±iε) by the orientation angle inside the (ŝ, k̂×ŝ) frame.
        let a1 = Complex64::new(cos, 0.0) - minor * sin;
        let a2 = Complex64::new(sin, 0.0) + minor * cos;
        let scale = 1.0 / (1.0 + ellipse.ellipticity * ellipse.ellipticity).sqrt();
        let e: CVec3 = std::array::from_fn(|j| (a1 * s[j] + a2 * e2[j]) * scale);
        Ok(Self::from_array(e))
    }

    /// Total intensity |E_x|² + |E_y|² + |E_z|².
    pub fn intensity(&self) -> f64 {
        self.e_x.norm_sqr() + self.e_y.norm_sqr() + self.e_z.norm_sqr()
    }

    /// Stokes parameters of the projection onto the plane normal to `axis`,
    /// normalized by the total intensity.
    ///
    /// The transverse basis (e1, e2) satisfies e1 × e2 = axis, so a field
    /// rotating positively about `axis` has s3 > 0.
    pub fn stokes_about(&self, axis: Vec3) -> Stokes {
        let a = normalize(axis);
        let reference = if a[2].abs() < 0.9 {
            [0.0, 0.0, 1.0]
        } else {
            [1.0, 0.0, 0.0]
        };
        let e1 = if a[2].abs() < 0.9 {
            normalize(cross(reference, a))
        } else {
            // For axes near ±z keep e1 along x so that stokes() is the usual (x, y) set.
            normalize(cross(cross(a, reference), a))
        };
        let e2 = cross(a, e1);
        let e = self.as_array();
        let c1 = cdot_real(e, e1);
        let c2 = cdot_real(e, e2);
        let intensity = self.intensity();
        if intensity == 0.0 {
            return Stokes {
                intensity,
                s1: 0.0,
                s2: 0.0,
                s3: 0.0,
            };
        }
        let cross_term = c1.conj() * c2;
        Stokes {
            intensity,
            s1: (c1.norm_sqr() - c2.norm_sqr()) / intensity,
            s2: 2.0 * cross_term.re / intensity,
            s3: 2.0 * cross_term.im / intensity,
        }
    }

    /// Stokes parameters about the surface normal (x, y transverse basis).
    pub fn stokes(&self) -> Stokes {
        self.stokes_about([0.0, 0.0, 1.0])
    }

    /// Normalized spin vector Im(E* × E)/|E|²; its length is the degree of circularity.
    pub fn spin(&self) -> Vec3 {
        let intensity = self.intensity();
        if intensity == 0.0 {
            return [0.0; 3];
        }
        let e = self.as_array();
        let conj = [e[0].conj(), e[1].conj(), e[2].conj()];
        let c = ccross(conj, e);
        [c[0].im / intensity, c[1].im / intensity, c[2].im / intensity]
    }

    /// |spin|, 1 for circular and 0 for linear polarization.
    pub fn circularity(&self) -> f64 {
        norm(self.spin())
    }

    /// Semi-axes of the traced ellipse and the (real) direction of the major axis.
    pub fn ellipse_axes(&self) -> (f64, f64, Vec3) {
        let e = self.as_array();
        let total = self.intensity();
        let square = e[0] * e[0] + e[1] * e[1] + e[2] * e[2];
        let major = ((total + square.norm()) / 2.0).sqrt();
        let minor = ((total - square.norm()).max(0.0) / 2.0).sqrt();
        let phase = (-I * (square.arg() / 2.0)).exp();
        let direction = [
            (e[0] * phase).re,
            (e[1] * phase).re,
            (e[2] * phase).re,
        ];
        let length = norm(direction);
        let direction = if length > 0.0 {
            [direction[0] / length, direction[1] / length, direction[2] / length]
        } else {
            [0.0; 3]
        };
        (major, minor, direction)
    }
}

/// Evanescent field at the surface (z = 0⁺) produced by an incident field.
pub fn evanescent_field(
    geom: &InterfaceGeometry,
    input: &PolarizationState,
) -> Result<PolarizationState> {
    let (k, s, p) = geom.incident_basis();
    let e = input.as_array();
    let longitudinal = cdot_real(e, k).norm();
    if !(longitudinal <= 1e-12 * input.intensity().sqrt()) {
        return Err(Error::domain(
            "evanescent_field",
            format!("incident field has a component {longitudinal:e} along its wavevector"),
        ));
    }
    let (t_s, t_p) = fresnel_transmission(geom);
    let amp_s = t_s * cdot_real(e, s);
    let amp_p = t_p * cdot_real(e, p);
    let ratio = geom.decay_ratio();
    Ok(PolarizationState {
        e_x: amp_p * I * ratio,
        e_y: amp_s,
        e_z: -amp_p * geom.in_plane_index(),
    })
}

/// Time-averaged Poynting vector direction (unit, up to a positive factor)
/// of an evanescent field travelling along +x.
pub fn poynting_direction(geom: &InterfaceGeometry, field: &PolarizationState) -> Vec3 {
    let k = [
        Complex64::new(geom.in_plane_index(), 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, geom.decay_ratio()),
    ];
    let e = field.as_array();
    let h = ccross(k, e);
    let h_conj = [h[0].conj(), h[1].conj(), h[2].conj()];
    let s = ccross(e, h_conj);
    let flow = [s[0].re, s[1].re, s[2].re];
    let l = norm(flow);
    if l == 0.0 {
        flow
    } else {
        [flow[0] / l, flow[1] / l, flow[2] / l]
    }
}

/// Sideways tilt χ of the Poynting vector of a circular evanescent wave,
/// tan χ = √(n² sin²θ_i − 1) = κλ₀/2π.
pub fn poynting_tilt(geom: &InterfaceGeometry) -> f64 {
    geom.decay_ratio().atan()
}

/// Polarization of one beam of a multi-beam evanescent pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamPolarization {
    Te,
    Tm,
}

/// An evanescent wave whose in-plane wavevector points at `azimuth` from +x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvanescentBeam {
    pub azimuth: f64,
    pub polarization: BeamPolarization,
    pub amplitude: Complex64,
}

impl EvanescentBeam {
    pub fn te(azimuth: f64) -> Self {
        EvanescentBeam {
            azimuth,
            polarization: BeamPolarization::Te,
            amplitude: Complex64::new(1.0, 0.0),
        }
    }

    pub fn tm(azimuth: f64) -> Self {
        EvanescentBeam {
            polarization: BeamPolarization::Tm,
            ..Self::te(azimuth)
        }
    }

    /// Unit-norm field vector (before the propagation phase).
    fn unit_field(&self, geom: &InterfaceGeometry) -> CVec3 {
        let (sin, cos) = self.azimuth.sin_cos();
        match self.polarization {
            BeamPolarization::Te => [
                Complex64::new(-sin, 0.0),
                Complex64::new(cos, 0.0),
                Complex64::new(0.0, 0.0),
            ],
            BeamPolarization::Tm => {
                let ratio = geom.decay_ratio();
                let index = geom.in_plane_index();
                let scale = 1.0 / (ratio * ratio + index * index).sqrt();
                [
                    I * (ratio * cos * scale),
                    I * (ratio * sin * scale),
                    Complex64::new(-index * scale, 0.0),
                ]
            }
        }
    }
}

/// Total field of several evanescent beams sharing one decay constant,
/// evaluated at in-plane positions (x, y). The common e^{−κz} factor is omitted.
pub fn multi_beam_pattern(
    geom: &InterfaceGeometry,
    beams: &[EvanescentBeam],
    points: &[(f64, f64)],
) -> Result<Vec<PolarizationState>> {
    if beams.iter().any(|b| b.amplitude.norm() == 0.0) {
        return Err(Error::domain(
            "multi_beam_pattern",
            "every beam needs a nonzero amplitude",
        ));
    }
    let q = geom.k_vacuum() * geom.in_plane_index();
    let prepared: Vec<(CVec3, f64, f64)> = beams
        .iter()
        .map(|b| {
            let u = b.unit_field(geom);
            let (sin, cos) = b.azimuth.sin_cos();
            (u.map(|c| c * b.amplitude), q * cos, q * sin)
        })
        .collect();
    Ok(points
        .iter()
        .map(|&(x, y)| {
            let mut total = [Complex64::new(0.0, 0.0); 3];
            for (u, qx, qy) in &prepared {
                let phase = Complex64::from_polar(1.0, qx * x + qy * y);
                for j in 0..3 {
                    total[j] += u[j] * phase;
                }
            }
            PolarizationState::from_array(total)
        })
        .collect())
}

/// Two equal-amplitude TE evanescent waves crossing at `crossing_angle`.
pub fn te_crossing_pattern(
    geom: &InterfaceGeometry,
    crossing_angle: f64,
    points: &[(f64, f64)],
) -> Result<Vec<PolarizationState>> {
    multi_beam_pattern(
        geom,
        &[EvanescentBeam::te(0.0), EvanescentBeam::te(crossing_angle)],
        points,
    )
}

/// Unit vector along which the relative phase of two beams crossing at
/// `crossing_angle` (first beam along +x) advances.
pub fn fringe_normal(crossing_angle: f64) -> Vec3 {
    let (sin, cos) = crossing_angle.sin_cos();
    normalize([1.0 - cos, -sin, 0.0])
}

/// Distance between neighbouring lines of opposite circular polarization,
/// π / |q₁ − q₂| = λ₀ / (4 n sinθ_i sin(α/2)); λ₀/(2√2 n sinθ_i) at 90°.
pub fn fringe_half_period(geom: &InterfaceGeometry, crossing_angle: f64) -> f64 {
    let q = geom.k_vacuum() * geom.in_plane_index();
    PI / (2.0 * q * (crossing_angle / 2.0).sin().abs())
}

/// Visibility 2√R/(1+R) of the fringes formed by a beam and its partial reflection.
pub fn fringe_visibility(intensity_reflectivity: f64) -> Result<f64> {
    let r = intensity_reflectivity;
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain(
            "fringe_visibility",
            format!("reflectivity must lie in [0, 1], got {r}"),
        ));
    }
    Ok(2.0 * r.sqrt() / (1.0 + r))
}
