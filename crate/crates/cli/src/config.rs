//! Run configuration: TOML text, `--set` overrides, defaults and validation.
//!
//! Every key is optional; an empty file gives the reference configuration.
//! Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use trampoline_core::budget::BudgetInput;
use trampoline_core::ensemble::{nominal_entry_speed, BinSpec, MolassesConfig};
use trampoline_core::mirror::optimal_ratio;
use trampoline_core::optics::Helicity;
use trampoline_core::physics::{angular, builtin_rb87, impact_energy, Momentum, PLANCK};
use trampoline_core::{AtomSpecies, InterfaceGeometry, IntegratorOptions, MirrorConfig};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeciesSection {
    pub mass_kg: f64,
    /// Natural linewidths Γ/2π, Hz.
    pub linewidth_d1_hz: f64,
    pub linewidth_d2_hz: f64,
    pub lambda_d1_m: f64,
    pub lambda_d2_m: f64,
    /// Ground hyperfine splitting / 2π, Hz.
    pub hyperfine_splitting_hz: f64,
    /// D1-D2 splitting / 2π, Hz.
    pub fine_structure_splitting_hz: f64,
}

impl Default for SpeciesSection {
    fn default() -> Self {
        let rb = builtin_rb87();
        let hz = |w: f64| w / angular(1.0);
        SpeciesSection {
            mass_kg: rb.mass,
            linewidth_d1_hz: hz(rb.gamma_d1),
            linewidth_d2_hz: hz(rb.gamma_d2),
            lambda_d1_m: rb.lambda_d1,
            lambda_d2_m: rb.lambda_d2,
            hyperfine_splitting_hz: hz(rb.delta_ghf),
            fine_structure_splitting_hz: hz(rb.delta_fs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub n: f64,
    /// Absolute angle of incidence; excludes `theta_above_critical_rad`.
    pub theta_i_rad: Option<f64>,
    /// Angle of incidence above the critical angle (0.01 if neither angle is set).
    pub theta_above_critical_rad: Option<f64>,
    pub lambda0_m: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection {
            n: 1.51,
            theta_i_rad: None,
            theta_above_critical_rad: None,
            lambda0_m: 780e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MirrorSection {
    /// U₀ in units of the impact energy m·g·drop_height.
    pub u0_over_impact: f64,
    /// Bouncer detuning in units of Γ.
    pub delta1_gamma: f64,
    pub branching_b: f64,
    /// Independent pump: U₀/R₀ in units of the optimum m·v_i/2κ.
    pub pump_ratio_over_optimal: Option<f64>,
    /// Independent pump: R₀ in s⁻¹ (0 switches pumping off).
    pub raman_rate_per_s: Option<f64>,
    /// Gravity inside the evanescent region.
    pub gravity: bool,
}

impl Default for MirrorSection {
    fn default() -> Self {
        MirrorSection {
            u0_over_impact: 2.0,
            delta1_gamma: 100.0,
            branching_b: 0.5,
            pump_ratio_over_optimal: None,
            raman_rate_per_s: None,
            gravity: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MolassesSection {
    pub sigma_z_m: f64,
    /// Cloud temperature; excludes `sigma_v_m_s`.
    pub temperature_k: Option<f64>,
    pub sigma_v_m_s: Option<f64>,
    pub drop_height_m: f64,
    pub n_atoms: u64,
}

impl Default for MolassesSection {
    fn default() -> Self {
        MolassesSection {
            sigma_z_m: 2e-4,
            temperature_k: None,
            sigma_v_m_s: None,
            drop_height_m: 6e-3,
            n_atoms: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    /// Dark-state bouncer detuning δ₁/2π, Hz.
    pub delta1_hz: f64,
    /// Bouncer detuning without dark states, for the cross-talk comparison, Hz.
    pub crosstalk_delta1_hz: f64,
    /// F=1 light shift at the trap location / h, Hz.
    pub u1_ref_hz: f64,
    pub impurity_eps: f64,
    pub line_strength_d2_over_d1: f64,
    pub scan_start_hz: f64,
    pub scan_end_hz: f64,
    pub scan_points: usize,
}

impl Default for BudgetSection {
    fn default() -> Self {
        BudgetSection {
            delta1_hz: 100e9,
            crosstalk_delta1_hz: 0.6e9,
            u1_ref_hz: 12e6,
            impurity_eps: 1e-3,
            line_strength_d2_over_d1: 2.0,
            scan_start_hz: 50e9,
            scan_end_hz: 500e9,
            scan_points: 46,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinningSection {
    pub nz: usize,
    pub nv: usize,
}

impl Default for BinningSection {
    fn default() -> Self {
        let b = BinSpec::default();
        BinningSection { nz: b.nz, nv: b.nv }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldMode {
    /// One beam with the input ellipse that makes the evanescent wave circular.
    Circular,
    /// Two TE beams crossing on the surface.
    TeCrossing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    pub mode: FieldMode,
    pub helicity: Helicity,
    pub crossing_angle_deg: f64,
    /// Intensity reflectivity of the prism surface, for the fringe visibility.
    pub reflectivity: f64,
    pub x_extent_m: f64,
    pub y_extent_m: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection {
            mode: FieldMode::TeCrossing,
            helicity: Helicity::SigmaPlus,
            crossing_angle_deg: 90.0,
            reflectivity: 0.04,
            x_extent_m: 1e-6,
            y_extent_m: 1e-6,
            nx: 41,
            ny: 41,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeSection {
    /// Free parameters: any of "pump_ratio", "detuning", "kappa".
    pub free: Vec<String>,
    /// Bounds of U₀/R₀ in units of m·v_i/2κ.
    pub pump_ratio_bounds: [f64; 2],
    /// Bounds of δ₁ in units of Γ.
    pub delta1_gamma_bounds: [f64; 2],
    /// Bounds of κ in units of k_L.
    pub kappa_over_kl_bounds: [f64; 2],
    /// Atoms per objective evaluation.
    pub n_atoms: u64,
    pub tolerance: f64,
    pub sweeps: usize,
    pub half_rows: usize,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        OptimizeSection {
            free: vec!["pump_ratio".to_string()],
            pump_ratio_bounds: [0.2, 3.0],
            delta1_gamma_bounds: [30.0, 500.0],
            kappa_over_kl_bounds: [0.08, 0.3],
            n_atoms: 30_000,
            tolerance: 0.02,
            sweeps: 2,
            half_rows: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

/// The whole run configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub species: SpeciesSection,
    pub geometry: GeometrySection,
    pub mirror: MirrorSection,
    pub molasses: MolassesSection,
    pub budget: BudgetSection,
    pub binning: BinningSection,
    pub field: FieldSection,
    pub optimize: OptimizeSection,
    pub output: OutputSection,
}

/// Parses a config file and validates it.
pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_str(&text, &[])
}

/// Parses config text, applies `section.key=value` overrides in order, and validates.
pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    for item in overrides {
        apply_override(&mut table, item)?;
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Sets `path = value` in a TOML table; the value is parsed as TOML, else taken as a string.
pub fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override '{item}' must look like section.key=value")))?;
    let path = path.trim();
    let raw = raw.trim();
    let value = parse_value(raw);
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Usage(format!("bad override key '{path}'")));
    }
    let (last, parents) = keys.split_last().expect("non-empty");
    let mut cursor = table;
    for key in parents {
        let entry = cursor
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Usage(format!("'{key}' in '{path}' is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl RunConfig {
    /// Re-checks every cross-field invariant by building the core objects.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.geometry.theta_i_rad.is_some() && self.geometry.theta_above_critical_rad.is_some() {
            return Err(CliError::Config(
                "geometry: set either theta_i_rad or theta_above_critical_rad, not both".into(),
            ));
        }
        if self.molasses.temperature_k.is_some() && self.molasses.sigma_v_m_s.is_some() {
            return Err(CliError::Config(
                "molasses: set either temperature_k or sigma_v_m_s, not both".into(),
            ));
        }
        if self.mirror.pump_ratio_over_optimal.is_some() && self.mirror.raman_rate_per_s.is_some() {
            return Err(CliError::Config(
                "mirror: set either pump_ratio_over_optimal or raman_rate_per_s, not both".into(),
            ));
        }
        self.mirror_config()?;
        self.molasses()?;
        self.budget_input()?;
        self.bins().validate()?;
        let f = &self.field;
        if !(f.x_extent_m > 0.0 && f.y_extent_m > 0.0 && f.nx >= 2 && f.ny >= 2) {
            return Err(CliError::Config(
                "field: extents must be positive and nx, ny at least 2".into(),
            ));
        }
        if !(f.crossing_angle_deg.is_finite() && f.reflectivity.is_finite()) {
            return Err(CliError::Config("field: angles and reflectivity must be finite".into()));
        }
        let b = &self.budget;
        if !(b.scan_points >= 2 && b.scan_start_hz > 0.0 && b.scan_end_hz > b.scan_start_hz) {
            return Err(CliError::Config(
                "budget: need 0 < scan_start_hz < scan_end_hz and scan_points >= 2".into(),
            ));
        }
        if !(b.crosstalk_delta1_hz > 0.0) {
            return Err(CliError::Config("budget: crosstalk_delta1_hz must be positive".into()));
        }
        self.optimize_bounds()?;
        Ok(())
    }

    pub fn species(&self) -> Result<AtomSpecies, CliError> {
        let s = &self.species;
        let species = AtomSpecies {
            mass: s.mass_kg,
            gamma_d1: angular(s.linewidth_d1_hz),
            gamma_d2: angular(s.linewidth_d2_hz),
            lambda_d1: s.lambda_d1_m,
            lambda_d2: s.lambda_d2_m,
            delta_ghf: angular(s.hyperfine_splitting_hz),
            delta_fs: angular(s.fine_structure_splitting_hz),
        };
        species.validate()?;
        Ok(species)
    }

    pub fn geometry(&self) -> Result<InterfaceGeometry, CliError> {
        let g = &self.geometry;
        let geom = match g.theta_i_rad {
            Some(theta) => InterfaceGeometry::new(g.n, theta, g.lambda0_m)?,
            None => InterfaceGeometry::above_critical(
                g.n,
                g.theta_above_critical_rad.unwrap_or(0.01),
                g.lambda0_m,
            )?,
        };
        Ok(geom)
    }

    /// Mirror with U₀ scaled to the impact energy of the configured drop.
    pub fn mirror_config(&self) -> Result<MirrorConfig, CliError> {
        let species = self.species()?;
        let geom = self.geometry()?;
        let m = &self.mirror;
        let impact = impact_energy(&species, self.molasses.drop_height_m)?;
        let base = MirrorConfig::new(
            species,
            geom,
            m.u0_over_impact * impact.0,
            m.delta1_gamma * species.gamma(),
            m.branching_b,
        )?;
        let mirror = if let Some(rel) = m.pump_ratio_over_optimal {
            base.with_pump_ratio(rel * self.optimal_pump_ratio(&base)?)?
        } else if let Some(rate) = m.raman_rate_per_s {
            base.with_raman_rate(rate)?
        } else {
            base
        };
        Ok(mirror)
    }

    /// The analytic optimum m·v_i/2κ for the nominal entry speed.
    pub fn optimal_pump_ratio(&self, mirror: &MirrorConfig) -> Result<f64, CliError> {
        let mol = self.molasses()?;
        let v_i = nominal_entry_speed(&mol, mirror);
        Ok(optimal_ratio(Momentum(mirror.species().mass * v_i), mirror.kappa()))
    }

    pub fn molasses(&self) -> Result<MolassesConfig, CliError> {
        let species = self.species()?;
        let m = &self.molasses;
        let mol = match m.sigma_v_m_s {
            Some(sigma_v) => MolassesConfig::new(m.sigma_z_m, sigma_v, m.drop_height_m, m.n_atoms, self.seed)?,
            None => MolassesConfig::from_temperature(
                &species,
                m.sigma_z_m,
                m.temperature_k.unwrap_or(1e-5),
                m.drop_height_m,
                m.n_atoms,
                self.seed,
            )?,
        };
        Ok(mol)
    }

    pub fn budget_input(&self) -> Result<BudgetInput, CliError> {
        let b = &self.budget;
        let input = BudgetInput {
            species: self.species()?,
            delta1: angular(b.delta1_hz),
            u1_ref: PLANCK * b.u1_ref_hz,
            impurity_eps: b.impurity_eps,
            line_strength_d2_over_d1: b.line_strength_d2_over_d1,
        };
        input.validate()?;
        Ok(input)
    }

    pub fn bins(&self) -> BinSpec {
        BinSpec {
            nz: self.binning.nz,
            nv: self.binning.nv,
        }
    }

    pub fn integrator(&self) -> IntegratorOptions {
        IntegratorOptions {
            gravity: self.mirror.gravity,
            ..IntegratorOptions::default()
        }
    }

    /// Free parameters of the optimizer with their bounds in SI units.
    pub fn optimize_bounds(&self) -> Result<Vec<trampoline_core::ParamBounds>, CliError> {
        use trampoline_core::FreeParam;
        let o = &self.optimize;
        if o.free.is_empty() || o.free.len() > 2 {
            return Err(CliError::Config(format!(
                "optimize: need one or two free parameters, got {}",
                o.free.len()
            )));
        }
        if !(o.n_atoms >= 1 && o.tolerance > 0.0) {
            return Err(CliError::Config("optimize: n_atoms >= 1 and tolerance > 0 required".into()));
        }
        let mirror = self.mirror_config()?;
        let species = mirror.species();
        let k_l = mirror.geometry().k_vacuum();
        o.free
            .iter()
            .map(|name| {
                let (param, [lo, hi], unit) = match name.as_str() {
                    "pump_ratio" => (FreeParam::PumpRatio, o.pump_ratio_bounds, self.optimal_pump_ratio(&mirror)?),
                    "detuning" => (FreeParam::Detuning, o.delta1_gamma_bounds, species.gamma()),
                    "kappa" => (FreeParam::Kappa, o.kappa_over_kl_bounds, k_l),
                    other => {
                        return Err(CliError::Config(format!(
                            "optimize: unknown free parameter '{other}' (expected pump_ratio, detuning or kappa)"
                        )))
                    }
                };
                if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                    return Err(CliError::Config(format!(
                        "optimize: bounds of {name} must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
                    )));
                }
                Ok(trampoline_core::ParamBounds {
                    param,
                    lo: lo * unit,
                    hi: hi * unit,
                })
            })
            .collect()
    }
}
