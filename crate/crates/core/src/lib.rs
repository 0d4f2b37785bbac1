//! Inelastic bouncing of ultracold atoms on an evanescent-wave mirror.
//!
//! * [`physics`]: constants, species data, free-fall kinematics
//! * [`optics`]: evanescent decay, Fresnel transmission, circular evanescent waves, beam crossings
//! * [`mirror`]: the exponential mirror, its rates and closed-form bounce results
//! * [`integrator`]: adaptive trajectory integration with stochastic Raman interruption
//! * [`ensemble`]: molasses sampling, ensemble runs, phase-space histograms
//! * [`optimize`]: golden-section search of the pumping parameters
//! * [`budget`]: photon-scattering budget of trapped atoms

pub mod budget;
pub mod ensemble;
pub mod error;
pub mod integrator;
pub mod mirror;
pub mod optics;
pub mod optimize;
pub mod physics;

pub use budget::{BudgetInput, ScatteringBudget};
pub use ensemble::{BinSpec, CompressionReport, MolassesConfig, PhaseSpaceHistogram};
pub use error::{Error, Result};
pub use integrator::{BounceOutcome, IntegratorOptions, PumpCoordinates, TracePoint};
pub use mirror::MirrorConfig;
pub use optimize::{FreeParam, OptimizeOptions, OptimizeResult, ParamBounds};
pub use optics::{EllipseSpec, Helicity, InterfaceGeometry, PolarizationState, Stokes};
pub use physics::{AtomSpecies, Energy, KinematicState, Momentum};
