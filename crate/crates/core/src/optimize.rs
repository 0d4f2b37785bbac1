//! Coordinate-wise golden-section search for the highest pump-event density.
//!
//! The objective is the maximum of the smoothed v = 0 density line of an
//! ensemble run. Every evaluation reuses the same master seed, so the
//! objective is a deterministic function of the parameters. The search runs
//! in log space because all free parameters are positive scales.

use serde::{Deserialize, Serialize};

use crate::ensemble::{run_ensemble, BinSpec, CompressionReport, MolassesConfig};
use crate::error::{Error, Result};
use crate::integrator::IntegratorOptions;
use crate::mirror::MirrorConfig;
use crate::optics::InterfaceGeometry;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// A mirror parameter the search may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeParam {
    /// U₀/R₀, J s. The pump rate becomes independent of the bouncer.
    PumpRatio,
    /// Bouncer detuning δ₁, rad/s, with R₀ = bΓ'₀.
    Detuning,
    /// Decay constant κ, 1/m, at fixed refractive index and wavelength.
    Kappa,
}

impl FreeParam {
    pub fn name(self) -> &'static str {
        match self {
            FreeParam::PumpRatio => "pump_ratio",
            FreeParam::Detuning => "detuning",
            FreeParam::Kappa => "kappa",
        }
    }

    /// Current value of this parameter in `mirror`.
    pub fn value(self, mirror: &MirrorConfig) -> f64 {
        match self {
            FreeParam::PumpRatio => mirror.pump_ratio(),
            FreeParam::Detuning => mirror.delta1(),
            FreeParam::Kappa => mirror.kappa(),
        }
    }

    /// `mirror` with this parameter set to `value`.
    pub fn apply(self, mirror: &MirrorConfig, value: f64) -> Result<MirrorConfig> {
        match self {
            FreeParam::PumpRatio => mirror.with_pump_ratio(value),
            FreeParam::Detuning => mirror.with_detuning(value),
            FreeParam::Kappa => {
                let g = mirror.geometry();
                let geom = InterfaceGeometry::with_decay_constant(g.n(), value, g.lambda0())?;
                mirror.with_geometry(geom)
            }
        }
    }
}

/// Search interval of one free parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub param: FreeParam,
    pub lo: f64,
    pub hi: f64,
}

/// Controls of the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    /// Stop when the bracket is this narrow, relative (log-space width).
    pub tolerance: f64,
    /// Coordinate passes over the free parameters.
    pub sweeps: usize,
    /// Rows on each side of v = 0 averaged into the objective.
    pub half_rows: usize,
    pub bins: BinSpec,
    pub integrator: IntegratorOptions,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            tolerance: 0.02,
            sweeps: 2,
            half_rows: 2,
            bins: BinSpec::default(),
            integrator: IntegratorOptions::default(),
        }
    }
}

/// Optimum of one free parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamOptimum {
    pub param: FreeParam,
    pub value: f64,
    /// The optimum sits at a bound, so the maximum was not bracketed.
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub optimum: Vec<ParamOptimum>,
    /// Smoothed peak density at the optimum.
    pub objective: f64,
    pub evaluations: usize,
    pub mirror: MirrorConfig,
    pub report: CompressionReport,
}

impl OptimizeResult {
    pub fn value_of(&self, param: FreeParam) -> Option<f64> {
        self.optimum.iter().find(|o| o.param == param).map(|o| o.value)
    }

    pub fn any_at_boundary(&self) -> bool {
        self.optimum.iter().any(|o| o.at_boundary)
    }
}

/// Smoothed peak of the v = 0 density of one ensemble run.
pub fn peak_objective(
    mol: &MolassesConfig,
    mirror: &MirrorConfig,
    options: &OptimizeOptions,
) -> Result<(f64, CompressionReport)> {
    let (hist, report) = run_ensemble(mol, mirror, options.bins, &options.integrator)?;
    let line = hist.smoothed_line_at_v0(options.half_rows);
    Ok((line.iter().cloned().fold(0.0, f64::max), report))
}

fn check_bounds(bounds: &[ParamBounds]) -> Result<()> {
    if bounds.is_empty() || bounds.len() > 2 {
        return Err(Error::domain(
            "optimize_peak",
            format!("need one or two free parameters, got {}", bounds.len()),
        ));
    }
    if bounds.len() == 2 && bounds[0].param == bounds[1].param {
        return Err(Error::domain("optimize_peak", "free parameters must be distinct"));
    }
    for b in bounds {
        if !(b.lo.is_finite() && b.hi.is_finite() && b.lo > 0.0 && b.hi >= b.lo) {
            return Err(Error::domain(
                "optimize_peak",
                format!("bounds of {} must satisfy 0 < lo <= hi, got [{:e}, {:e}]", b.param.name(), b.lo, b.hi),
            ));
        }
    }
    Ok(())
}

/// Golden-section maximization of `f` over [lo, hi] in log space.
///
/// Returns (argmax, value, evaluations). The best evaluated point wins, so
/// a non-unimodal objective still yields a sampled point.
pub fn golden_section_max<F: FnMut(f64) -> Result<f64>>(
    lo: f64,
    hi: f64,
    tolerance: f64,
    mut f: F,
) -> Result<(f64, f64, usize)> {
    if lo == hi {
        return Ok((lo, f(lo)?, 1));
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c.exp())?;
    let mut fd = f(d.exp())?;
    let mut evals = 2;
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    while b - a > tolerance {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c.exp())?;
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d.exp())?;
            if fd > best.1 {
                best = (d, fd);
            }
        }
        evals += 1;
    }
    Ok((best.0.exp(), best.1, evals))
}

/// Maximizes the smoothed peak density over one or two mirror parameters.
pub fn optimize_peak(
    mol: &MolassesConfig,
    template: &MirrorConfig,
    bounds: &[ParamBounds],
    options: &OptimizeOptions,
) -> Result<OptimizeResult> {
    check_bounds(bounds)?;
    mol.validate()?;
    let mut mirror = *template;
    // Start from the geometric center of each interval.
    for b in bounds {
        mirror = b.param.apply(&mirror, (b.lo * b.hi).sqrt())?;
    }
    let sweeps = if bounds.len() == 1 { 1 } else { options.sweeps.max(1) };
    let mut evaluations = 0;
    let mut objective = 0.0;
    for _ in 0..sweeps {
        for b in bounds {
            let base = mirror;
            let (x, fx, n) = golden_section_max(b.lo, b.hi, options.tolerance, |x| {
                let m = b.param.apply(&base, x)?;
                Ok(peak_objective(mol, &m, options)?.0)
            })?;
            evaluations += n;
            objective = fx;
            mirror = b.param.apply(&base, x)?;
        }
    }
    let (_, report) = peak_objective(mol, &mirror, options)?;
    evaluations += 1;
    let optimum = bounds
        .iter()
        .map(|b| {
            let value = b.param.value(&mirror);
            let span = (b.hi / b.lo).ln();
            let at_boundary = span > 0.0
                && ((value / b.lo).ln() < options.tolerance || (b.hi / value).ln() < options.tolerance);
            ParamOptimum {
                param: b.param,
                value,
                at_boundary,
            }
        })
        .collect();
    Ok(OptimizeResult {
        optimum,
        objective,
        evaluations,
        mirror,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{builtin_rb87, impact_energy};
    use approx::assert_relative_eq;

    fn mirror() -> MirrorConfig {
        let rb = builtin_rb87();
        let geom = InterfaceGeometry::above_critical(1.51, 0.01, 780e-9).unwrap();
        let u0 = 2.0 * impact_energy(&rb, 6e-3).unwrap().0;
        MirrorConfig::new(rb, geom, u0, 100.0 * rb.gamma(), 0.5).unwrap()
    }

    #[test]
    fn golden_section_finds_smooth_max() {
        let (x, fx, n) =
            golden_section_max(0.1, 10.0, 1e-6, |x| Ok(-(x.ln() - 0.7f64).powi(2))).unwrap();
        assert_relative_eq!(x.ln(), 0.7, epsilon = 1e-5);
        assert!(fx <= 0.0 && n > 10);
    }

    #[test]
    fn golden_section_hits_boundary() {
        let (x, _, _) = golden_section_max(1.0, 2.0, 1e-4, |x| Ok(x)).unwrap();
        assert!((x - 2.0).abs() < 1e-3);
    }

    #[test]
    fn degenerate_bounds_return_point() {
        let rb = builtin_rb87();
        let mol = MolassesConfig::reference(&rb, 200, 5).unwrap();
        let m = mirror();
        let x = m.delta1();
        let res = optimize_peak(
            &mol,
            &m,
            &[ParamBounds { param: FreeParam::Detuning, lo: x, hi: x }],
            &OptimizeOptions::default(),
        )
        .unwrap();
        assert_eq!(res.value_of(FreeParam::Detuning), Some(x));
        assert!(!res.any_at_boundary());
        assert_eq!(res.evaluations, 2);
    }

    #[test]
    fn apply_round_trips() {
        let m = mirror();
        for (p, x) in [
            (FreeParam::PumpRatio, 3e-31),
            (FreeParam::Detuning, 2.0 * m.delta1()),
            (FreeParam::Kappa, 1.1 * m.kappa()),
        ] {
            let applied = p.apply(&m, x).unwrap();
            assert_relative_eq!(p.value(&applied), x, max_relative = 1e-10);
        }
    }

    #[test]
    fn bad_bounds_rejected() {
        let rb = builtin_rb87();
        let mol = MolassesConfig::reference(&rb, 10, 5).unwrap();
        let opts = OptimizeOptions::default();
        let b = |param, lo, hi| ParamBounds { param, lo, hi };
        assert!(optimize_peak(&mol, &mirror(), &[], &opts).is_err());
        assert!(optimize_peak(&mol, &mirror(), &[b(FreeParam::Kappa, 2.0, 1.0)], &opts).is_err());
        let three = [
            b(FreeParam::Kappa, 1.0, 2.0),
            b(FreeParam::Detuning, 1.0, 2.0),
            b(FreeParam::PumpRatio, 1.0, 2.0),
        ];
        assert!(optimize_peak(&mol, &mirror(), &three, &opts).is_err());
        let dup = [b(FreeParam::Kappa, 1.0, 2.0), b(FreeParam::Kappa, 1.0, 2.0)];
        assert!(optimize_peak(&mol, &mirror(), &dup, &opts).is_err());
    }
}
