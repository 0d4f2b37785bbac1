//! The subcommands. Each writes its files into an output directory and
//! returns their names; none of them touch the manifest.

use std::f64::consts::SQRT_2;
use std::path::Path;

use serde::{Deserialize, Serialize};
use trampoline_core::budget::{
    assemble_budget, crosstalk_rate, d2_crossover, detuning_scan, CG_D2, CG_IMPURITY,
    LATTICE_STRENGTH,
};
use trampoline_core::ensemble::{
    atom_rng, edge_height, nominal_entry_speed, run_ensemble,
};
use trampoline_core::integrator::{draw_threshold, trace_with_threshold};
use trampoline_core::mirror::bounce_potential_integral;
use trampoline_core::optics::{
    evanescent_field, fringe_half_period, fringe_visibility, poynting_direction, poynting_tilt,
    required_input_polarization, te_crossing_pattern,
};
use trampoline_core::optimize::{optimize_peak, OptimizeOptions};
use trampoline_core::physics::{angular, Energy, Momentum};
use trampoline_core::{
    BounceOutcome, CompressionReport, EllipseSpec, FreeParam, KinematicState, PolarizationState,
    ScatteringBudget,
};

use crate::config::{FieldMode, RunConfig};
use crate::error::CliError;
use crate::io::{write_histogram_csv, write_json, write_table_csv};

pub const FIELD_CSV: &str = "field.csv";
pub const FIELD_JSON: &str = "field_summary.json";
pub const BOUNCE_CSV: &str = "bounce.csv";
pub const BOUNCE_JSON: &str = "bounce_summary.json";
pub const HISTOGRAM_CSV: &str = "histogram.csv";
pub const REPORT_JSON: &str = "report.json";
pub const BUDGET_JSON: &str = "budget.json";
pub const BUDGET_SCAN_CSV: &str = "budget_scan.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const OPTIMIZE_JSON: &str = "optimize.json";

pub const FIELD_COLUMNS: [&str; 6] = ["x", "y", "I", "s1", "s2", "s3"];
pub const BOUNCE_COLUMNS: [&str; 4] = ["t", "z", "v", "exposure"];
pub const BUDGET_SCAN_COLUMNS: [&str; 6] = ["delta1_Hz", "crosstalk", "d2", "impurity", "ho", "total"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub mode: FieldMode,
    pub n: f64,
    pub theta_i_rad: f64,
    pub critical_angle_rad: f64,
    pub kappa_per_m: f64,
    pub kappa_over_kl: f64,
    /// Sideways tilt χ of the evanescent Poynting vector.
    pub poynting_tilt_rad: f64,
    /// Input ellipse giving a circular evanescent wave.
    pub input_ellipse: EllipseSpec,
    /// |s3| of that evanescent wave about its Poynting vector.
    pub evanescent_circularity: f64,
    pub crossing_angle_rad: f64,
    /// Distance between neighboring σ⁺ and σ⁻ lines, m.
    pub fringe_half_period_m: f64,
    pub reflectivity: f64,
    pub fringe_visibility: f64,
    /// (I_max − I_min)/I_mean over the map.
    pub intensity_nonuniformity: f64,
    /// Axis the Stokes parameters in the map refer to.
    pub stokes_axis: [f64; 3],
}

pub fn run_field(cfg: &RunConfig, dir: &Path) -> Result<Vec<String>, CliError> {
    let geom = cfg.geometry()?;
    let f = &cfg.field;
    let spec = required_input_polarization(&geom, f.helicity);
    let incident = PolarizationState::incident(&geom, &spec)?;
    let circular = evanescent_field(&geom, &incident)?;
    let flow = poynting_direction(&geom, &circular);
    let angle = f.crossing_angle_deg.to_radians();

    let points: Vec<(f64, f64)> = (0..f.ny)
        .flat_map(|iy| {
            (0..f.nx).map(move |ix| {
                (
                    f.x_extent_m * ix as f64 / (f.nx - 1) as f64,
                    f.y_extent_m * iy as f64 / (f.ny - 1) as f64,
                )
            })
        })
        .collect();
    let (axis, stokes) = match f.mode {
        FieldMode::Circular => {
            let s = circular.stokes_about(flow);
            (flow, vec![s; points.len()])
        }
        FieldMode::TeCrossing => {
            let states = te_crossing_pattern(&geom, angle, &points)?;
            ([0.0, 0.0, 1.0], states.iter().map(|s| s.stokes()).collect())
        }
    };
    let rows: Vec<Vec<f64>> = points
        .iter()
        .zip(&stokes)
        .map(|(&(x, y), s)| vec![x, y, s.intensity, s.s1, s.s2, s.s3])
        .collect();
    write_table_csv(&dir.join(FIELD_CSV), &FIELD_COLUMNS, &rows)?;

    let (lo, hi, sum) = stokes.iter().fold((f64::INFINITY, 0.0f64, 0.0), |(lo, hi, sum), s| {
        (lo.min(s.intensity), hi.max(s.intensity), sum + s.intensity)
    });
    let mean = sum / stokes.len() as f64;
    let summary = FieldSummary {
        mode: f.mode,
        n: geom.n(),
        theta_i_rad: geom.theta_i(),
        critical_angle_rad: geom.critical_angle(),
        kappa_per_m: trampoline_core::optics::decay_constant(&geom),
        kappa_over_kl: geom.decay_ratio(),
        poynting_tilt_rad: poynting_tilt(&geom),
        input_ellipse: spec,
        evanescent_circularity: circular.stokes_about(flow).s3.abs(),
        crossing_angle_rad: angle,
        fringe_half_period_m: fringe_half_period(&geom, angle),
        reflectivity: f.reflectivity,
        fringe_visibility: fringe_visibility(f.reflectivity)?,
        intensity_nonuniformity: if mean > 0.0 { (hi - lo) / mean } else { 0.0 },
        stokes_axis: axis,
    };
    write_json(&dir.join(FIELD_JSON), &summary)?;
    Ok(vec![FIELD_CSV.into(), FIELD_JSON.into()])
}

/// λ₀/(2√2·n·sinθ): σ⁺/σ⁻ line spacing of the 90° TE crossing.
pub fn te_crossing_spacing(lambda0: f64, n: f64, theta_i: f64) -> f64 {
    lambda0 / (2.0 * SQRT_2 * n * theta_i.sin())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BounceSummary {
    pub entry: KinematicState,
    pub pump_threshold: f64,
    pub outcome: BounceOutcome,
    pub kappa_per_m: f64,
    pub u0_j: f64,
    pub raman_rate0_per_s: f64,
    pub turning_point_m: f64,
    /// m·v_i/κ, J s.
    pub closed_form_potential_integral: f64,
    /// Full-bounce Raman exposure from the closed form.
    pub closed_form_exposure: f64,
    /// Full-bounce photon number from the closed form.
    pub closed_form_photons: f64,
}

pub fn run_bounce(cfg: &RunConfig, dir: &Path) -> Result<Vec<String>, CliError> {
    let mirror = cfg.mirror_config()?;
    let mol = cfg.molasses()?;
    let v_i = nominal_entry_speed(&mol, &mirror);
    let entry = KinematicState::new(edge_height(&mirror), -v_i, 0.0)?;
    let threshold = draw_threshold(&mut atom_rng(cfg.seed, 0));
    let (outcome, trace) = trace_with_threshold(&mirror, &entry, threshold, &cfg.integrator())?;
    let rows: Vec<Vec<f64>> = trace.iter().map(|p| vec![p.t, p.z, p.v, p.exposure]).collect();
    write_table_csv(&dir.join(BOUNCE_CSV), &BOUNCE_COLUMNS, &rows)?;

    let mass = mirror.species().mass;
    let p_i = Momentum(mass * v_i);
    let summary = BounceSummary {
        entry,
        pump_threshold: threshold,
        outcome,
        kappa_per_m: mirror.kappa(),
        u0_j: mirror.u0(),
        raman_rate0_per_s: mirror.raman_rate0(),
        turning_point_m: mirror.turning_point(Energy(0.5 * mass * v_i * v_i))?,
        closed_form_potential_integral: bounce_potential_integral(p_i, mirror.kappa()),
        closed_form_exposure: mirror.bounce_raman_exposure(p_i)?,
        closed_form_photons: mirror.bounce_photon_number(p_i)?,
    };
    write_json(&dir.join(BOUNCE_JSON), &summary)?;
    Ok(vec![BOUNCE_CSV.into(), BOUNCE_JSON.into()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McInputs {
    pub n_atoms: u64,
    pub seed: u64,
    pub sigma_z_m: f64,
    pub sigma_v_m_s: f64,
    pub drop_height_m: f64,
    pub kappa_per_m: f64,
    pub kappa_over_kl: f64,
    pub u0_j: f64,
    pub delta1_over_gamma: f64,
    pub raman_rate0_per_s: f64,
    /// U₀/R₀ in units of m·v_i/2κ.
    pub pump_ratio_over_optimal: f64,
    pub edge_height_m: f64,
    pub nominal_entry_speed_m_s: f64,
    pub turning_point_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub inputs: McInputs,
    pub report: CompressionReport,
    /// Maximum of the row-averaged, z-smoothed v = 0 density (optimizer objective).
    pub smoothed_peak: f64,
}

/// Runs the ensemble of `cfg` and assembles the report.
pub fn simulate(cfg: &RunConfig) -> Result<(trampoline_core::PhaseSpaceHistogram, McReport), CliError> {
    let mirror = cfg.mirror_config()?;
    let mol = cfg.molasses()?;
    let (hist, report) = run_ensemble(&mol, &mirror, cfg.bins(), &cfg.integrator())?;
    let v_i = nominal_entry_speed(&mol, &mirror);
    let mass = mirror.species().mass;
    let smoothed_peak = hist
        .smoothed_line_at_v0(cfg.optimize.half_rows)
        .into_iter()
        .fold(0.0, f64::max);
    let inputs = McInputs {
        n_atoms: mol.n_atoms,
        seed: mol.master_seed,
        sigma_z_m: mol.sigma_z,
        sigma_v_m_s: mol.sigma_v,
        drop_height_m: mol.drop_height,
        kappa_per_m: mirror.kappa(),
        kappa_over_kl: mirror.geometry().decay_ratio(),
        u0_j: mirror.u0(),
        delta1_over_gamma: mirror.delta1() / mirror.species().gamma(),
        raman_rate0_per_s: mirror.raman_rate0(),
        pump_ratio_over_optimal: mirror.pump_ratio() / cfg.optimal_pump_ratio(&mirror)?,
        edge_height_m: edge_height(&mirror),
        nominal_entry_speed_m_s: v_i,
        turning_point_m: mirror.turning_point(Energy(0.5 * mass * v_i * v_i))?,
    };
    Ok((
        hist,
        McReport {
            inputs,
            report,
            smoothed_peak,
        },
    ))
}

pub fn run_mc(cfg: &RunConfig, dir: &Path) -> Result<Vec<String>, CliError> {
    let (hist, report) = simulate(cfg)?;
    write_histogram_csv(&dir.join(HISTOGRAM_CSV), &hist)?;
    write_json(&dir.join(REPORT_JSON), &report)?;
    Ok(vec![HISTOGRAM_CSV.into(), REPORT_JSON.into()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetInputsEcho {
    pub delta1_hz: f64,
    pub u1_ref_hz: f64,
    pub impurity_eps: f64,
    pub line_strength_d2_over_d1: f64,
    pub cg_d2: f64,
    pub cg_impurity: f64,
    pub lattice_strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkReference {
    pub delta1_hz: f64,
    /// F=2 scattering rate without dark states at this detuning, s⁻¹.
    pub crosstalk_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suppression {
    pub crosstalk_over_d2: f64,
    pub crosstalk_over_total_dark: f64,
    pub orders_d2: f64,
    pub orders_total_dark: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub inputs: BudgetInputsEcho,
    pub budget: ScatteringBudget,
    pub trap_frequency_hz: f64,
    pub crosstalk_reference: CrosstalkReference,
    pub suppression: Suppression,
    /// Detuning in the scan range where D2 scattering overtakes the oscillator wings, Hz.
    pub d2_crossover_hz: Option<f64>,
}

pub fn budget_report(cfg: &RunConfig) -> Result<BudgetReport, CliError> {
    let input = cfg.budget_input()?;
    let b = &cfg.budget;
    let budget = assemble_budget(&input)?;
    let reference = input.with_delta1(angular(b.crosstalk_delta1_hz))?;
    let crosstalk = crosstalk_rate(&reference);
    let crossover = d2_crossover(&input, angular(b.scan_start_hz), angular(b.scan_end_hz))?;
    Ok(BudgetReport {
        inputs: BudgetInputsEcho {
            delta1_hz: b.delta1_hz,
            u1_ref_hz: b.u1_ref_hz,
            impurity_eps: b.impurity_eps,
            line_strength_d2_over_d1: b.line_strength_d2_over_d1,
            cg_d2: CG_D2,
            cg_impurity: CG_IMPURITY,
            lattice_strength: LATTICE_STRENGTH,
        },
        budget,
        trap_frequency_hz: budget.trap_frequency / angular(1.0),
        crosstalk_reference: CrosstalkReference {
            delta1_hz: b.crosstalk_delta1_hz,
            crosstalk_per_s: crosstalk,
        },
        suppression: Suppression {
            crosstalk_over_d2: crosstalk / budget.d2_offresonant,
            crosstalk_over_total_dark: crosstalk / budget.total_dark,
            orders_d2: (crosstalk / budget.d2_offresonant).log10(),
            orders_total_dark: (crosstalk / budget.total_dark).log10(),
        },
        d2_crossover_hz: crossover.map(|x| x / angular(1.0)),
    })
}

pub fn run_budget(cfg: &RunConfig, dir: &Path) -> Result<Vec<String>, CliError> {
    let report = budget_report(cfg)?;
    write_json(&dir.join(BUDGET_JSON), &report)?;
    let input = cfg.budget_input()?;
    let b = &cfg.budget;
    let scan = detuning_scan(
        &input,
        angular(b.scan_start_hz),
        angular(b.scan_end_hz),
        b.scan_points,
    )?;
    let rows: Vec<Vec<f64>> = scan
        .iter()
        .map(|(d, s)| {
            vec![
                d / angular(1.0),
                s.crosstalk_no_darkstate,
                s.d2_offresonant,
                s.d1_impurity,
                s.ho_wing,
                s.total_dark,
            ]
        })
        .collect();
    write_table_csv(&dir.join(BUDGET_SCAN_CSV), &BUDGET_SCAN_COLUMNS, &rows)?;
    Ok(vec![BUDGET_JSON.into(), BUDGET_SCAN_CSV.into()])
}

/// Scalar outputs a sweep can record.
pub const MC_OUTPUTS: [&str; 8] = [
    "pumped_fraction",
    "unpumped_fraction",
    "overrun_fraction",
    "peak_final",
    "compression_factor",
    "width_z_at_v0",
    "z_peak",
    "smoothed_peak",
];
pub const BUDGET_OUTPUTS: [&str; 6] = ["crosstalk", "d2", "impurity", "ho", "total_dark", "trap_frequency"];

/// One-parameter sweep over a numeric config key.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Config key, `section.key`.
    pub key: String,
    pub start: f64,
    pub end: f64,
    pub steps: usize,
    /// Geometric instead of linear spacing.
    pub log: bool,
    pub outputs: Vec<String>,
}

impl SweepSpec {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.steps == 0 || !(self.start.is_finite() && self.end.is_finite()) {
            return Err(CliError::Usage("sweep needs a finite range and at least one step".into()));
        }
        if self.log && !(self.start > 0.0 && self.end > 0.0) {
            return Err(CliError::Usage("a logarithmic sweep needs a positive range".into()));
        }
        if self.steps == 1 {
            return Ok(vec![self.start]);
        }
        Ok((0..self.steps)
            .map(|i| {
                let f = i as f64 / (self.steps - 1) as f64;
                if self.log {
                    (self.start.ln() + f * (self.end.ln() - self.start.ln())).exp()
                } else {
                    self.start + f * (self.end - self.start)
                }
            })
            .collect())
    }
}

fn with_override(cfg: &RunConfig, key: &str, value: f64) -> Result<RunConfig, CliError> {
    let mut table = match toml::Value::try_from(cfg) {
        Ok(toml::Value::Table(t)) => t,
        _ => return Err(CliError::Config("cannot serialize config".into())),
    };
    crate::config::apply_override(&mut table, &format!("{key}={}", toml_number(key, value)))?;
    let out: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("sweep over {key}: {e}")))?;
    out.validate()?;
    Ok(out)
}

/// Integer-typed keys get integer text so they deserialize.
fn toml_number(key: &str, value: f64) -> String {
    const INTEGER_KEYS: [&str; 8] = [
        "seed",
        "molasses.n_atoms",
        "binning.nz",
        "binning.nv",
        "field.nx",
        "field.ny",
        "budget.scan_points",
        "optimize.n_atoms",
    ];
    if INTEGER_KEYS.contains(&key) {
        format!("{}", value.round() as i64)
    } else {
        format!("{value:?}")
    }
}

pub fn run_sweep(cfg: &RunConfig, dir: &Path, spec: &SweepSpec) -> Result<Vec<String>, CliError> {
    for name in &spec.outputs {
        if !MC_OUTPUTS.contains(&name.as_str()) && !BUDGET_OUTPUTS.contains(&name.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown sweep output '{name}'; choose from {} or {}",
                MC_OUTPUTS.join(", "),
                BUDGET_OUTPUTS.join(", ")
            )));
        }
    }
    if spec.outputs.is_empty() {
        return Err(CliError::Usage("sweep needs at least one output".into()));
    }
    let needs_mc = spec.outputs.iter().any(|o| MC_OUTPUTS.contains(&o.as_str()));
    let mut rows = Vec::new();
    for value in spec.values()? {
        let point = with_override(cfg, &spec.key, value)?;
        let mc = if needs_mc { Some(simulate(&point)?.1) } else { None };
        let budget = assemble_budget(&point.budget_input()?)?;
        let mut row = vec![value];
        for name in &spec.outputs {
            let r = mc.as_ref().map(|m| &m.report);
            let x = match name.as_str() {
                "pumped_fraction" => r.map(|r| r.pumped_fraction),
                "unpumped_fraction" => r.map(|r| r.unpumped_fraction),
                "overrun_fraction" => r.map(|r| r.overrun_fraction),
                "peak_final" => r.map(|r| r.peak_final),
                "compression_factor" => r.map(|r| r.compression_factor),
                "width_z_at_v0" => r.map(|r| r.width_z_at_v0),
                "z_peak" => r.map(|r| r.z_peak),
                "smoothed_peak" => mc.as_ref().map(|m| m.smoothed_peak),
                "crosstalk" => Some(budget.crosstalk_no_darkstate),
                "d2" => Some(budget.d2_offresonant),
                "impurity" => Some(budget.d1_impurity),
                "ho" => Some(budget.ho_wing),
                "total_dark" => Some(budget.total_dark),
                "trap_frequency" => Some(budget.trap_frequency),
                _ => None,
            };
            row.push(x.expect("output validated above"));
        }
        rows.push(row);
    }
    let mut headers = vec![spec.key.as_str()];
    headers.extend(spec.outputs.iter().map(String::as_str));
    write_table_csv(&dir.join(SWEEP_CSV), &headers, &rows)?;
    Ok(vec![SWEEP_CSV.into()])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumEntry {
    pub param: FreeParam,
    pub value_si: f64,
    /// Value in the unit of its config bounds.
    pub value: f64,
    /// Unit of `value`: the analytic optimum m·v_i/2κ, Γ, or k_L.
    pub unit: String,
    pub bounds: [f64; 2],
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub optimum: Vec<OptimumEntry>,
    pub objective: f64,
    pub evaluations: usize,
    pub n_atoms_per_evaluation: u64,
    pub report: CompressionReport,
}

fn natural_unit(cfg: &RunConfig, param: FreeParam) -> Result<(f64, &'static str), CliError> {
    let mirror = cfg.mirror_config()?;
    Ok(match param {
        FreeParam::PumpRatio => (cfg.optimal_pump_ratio(&mirror)?, "m*v_i/(2*kappa)"),
        FreeParam::Detuning => (mirror.species().gamma(), "Gamma"),
        FreeParam::Kappa => (mirror.geometry().k_vacuum(), "k_L"),
    })
}

pub fn optimize_report(cfg: &RunConfig) -> Result<OptimizeReport, CliError> {
    let o = &cfg.optimize;
    let mol = cfg.molasses()?.with_atoms(o.n_atoms)?;
    let bounds = cfg.optimize_bounds()?;
    let options = OptimizeOptions {
        tolerance: o.tolerance,
        sweeps: o.sweeps,
        half_rows: o.half_rows,
        bins: cfg.bins(),
        integrator: cfg.integrator(),
    };
    let result = optimize_peak(&mol, &cfg.mirror_config()?, &bounds, &options)?;
    let optimum = result
        .optimum
        .iter()
        .zip(&bounds)
        .map(|(opt, b)| {
            let (unit, name) = natural_unit(cfg, opt.param)?;
            Ok(OptimumEntry {
                param: opt.param,
                value_si: opt.value,
                value: opt.value / unit,
                unit: name.to_string(),
                bounds: [b.lo / unit, b.hi / unit],
                at_boundary: opt.at_boundary,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(OptimizeReport {
        optimum,
        objective: result.objective,
        evaluations: result.evaluations,
        n_atoms_per_evaluation: o.n_atoms,
        report: result.report,
    })
}

pub fn run_optimize(cfg: &RunConfig, dir: &Path) -> Result<Vec<String>, CliError> {
    let report = optimize_report(cfg)?;
    write_json(&dir.join(OPTIMIZE_JSON), &report)?;
    Ok(vec![OPTIMIZE_JSON.into()])
}
