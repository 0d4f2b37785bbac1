//! Monte Carlo ensemble of bouncing atoms and the phase-space density of pump events.
//!
//! Each atom is drawn from a Gaussian molasses, falls freely to the edge of the
//! evanescent region at z_edge = 5/(2κ), and is bounced with [`integrate_bounce`].
//! Pump coordinates are binned into a [`PhaseSpaceHistogram`].
//!
//! Atom `i` uses its own ChaCha8 stream `i` under the master seed and draws,
//! in order, z, v and the pump threshold. Counts are integers, so the result
//! does not depend on how the atoms are split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate_bounce, IntegratorOptions};
use crate::mirror::MirrorConfig;
use crate::physics::{AtomSpecies, KinematicState, BOLTZMANN, GRAVITY, PLANCK};

/// Entry edge of the evanescent region in units of 1/κ.
pub const EDGE_IN_DECAY_LENGTHS: f64 = 2.5;

/// Gaussian molasses the atoms are released from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MolassesConfig {
    /// r.m.s. height spread, m.
    pub sigma_z: f64,
    /// r.m.s. vertical velocity spread, m/s.
    pub sigma_v: f64,
    /// Height of the cloud center above the surface, m.
    pub drop_height: f64,
    pub n_atoms: u64,
    pub master_seed: u64,
}

impl MolassesConfig {
    pub fn new(
        sigma_z: f64,
        sigma_v: f64,
        drop_height: f64,
        n_atoms: u64,
        master_seed: u64,
    ) -> Result<Self> {
        let cfg = MolassesConfig {
            sigma_z,
            sigma_v,
            drop_height,
            n_atoms,
            master_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Velocity spread √(k_B T/m) of a thermal cloud.
    pub fn from_temperature(
        species: &AtomSpecies,
        sigma_z: f64,
        temperature: f64,
        drop_height: f64,
        n_atoms: u64,
        master_seed: u64,
    ) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::invalid(
                "molasses",
                format!("temperature must be positive, got {temperature}"),
            ));
        }
        let sigma_v = (BOLTZMANN * temperature / species.mass).sqrt();
        Self::new(sigma_z, sigma_v, drop_height, n_atoms, master_seed)
    }

    /// The reference cloud: T = 10 µK, σ_z = 0.2 mm, 6 mm above the surface.
    pub fn reference(species: &AtomSpecies, n_atoms: u64, master_seed: u64) -> Result<Self> {
        Self::from_temperature(species, 2e-4, 1e-5, 6e-3, n_atoms, master_seed)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("sigma_z", self.sigma_z),
            ("sigma_v", self.sigma_v),
            ("drop_height", self.drop_height),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(
                    "molasses",
                    format!("{name} must be positive, got {value}"),
                ));
            }
        }
        if self.n_atoms == 0 {
            return Err(Error::invalid("molasses", "n_atoms must be at least 1"));
        }
        Ok(())
    }

    pub fn with_atoms(mut self, n_atoms: u64) -> Result<Self> {
        self.n_atoms = n_atoms;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    /// Peak of the initial dimensionless density, (h/m)/(2πσ_zσ_v).
    pub fn initial_peak_density(&self, species: &AtomSpecies) -> f64 {
        PLANCK / species.mass / (2.0 * std::f64::consts::PI * self.sigma_z * self.sigma_v)
    }
}

/// The random stream of atom `index`.
pub fn atom_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

fn draw_state(cfg: &MolassesConfig, rng: &mut ChaCha8Rng) -> KinematicState {
    let gz: f64 = StandardNormal.sample(rng);
    let gv: f64 = StandardNormal.sample(rng);
    KinematicState {
        z: cfg.drop_height + cfg.sigma_z * gz,
        v: cfg.sigma_v * gv,
        t: 0.0,
    }
}

/// Initial states of all atoms, in index order.
pub fn sample_initial(cfg: &MolassesConfig) -> impl Iterator<Item = KinematicState> + '_ {
    (0..cfg.n_atoms).map(move |i| draw_state(cfg, &mut atom_rng(cfg.master_seed, i)))
}

/// Ballistic flight under gravity down to `edge_height`.
pub fn free_fall_to_mirror(state: &KinematicState, edge_height: f64) -> Result<KinematicState> {
    let drop = state.z - edge_height;
    if !(drop >= 0.0) {
        return Err(Error::domain(
            "free_fall_to_mirror",
            format!(
                "atom starts at z = {:e} m, below the edge at {edge_height:e} m",
                state.z
            ),
        ));
    }
    let v_i = -(state.v * state.v + 2.0 * GRAVITY * drop).sqrt();
    Ok(KinematicState {
        z: edge_height,
        v: v_i,
        t: state.t + (state.v - v_i) / GRAVITY,
    })
}

/// Histogram resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinSpec {
    pub nz: usize,
    pub nv: usize,
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec { nz: 64, nv: 64 }
    }
}

impl BinSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nz < 3 || self.nv < 2 {
            return Err(Error::invalid(
                "bins",
                format!("need nz >= 3 and nv >= 2, got {} x {}", self.nz, self.nv),
            ));
        }
        Ok(())
    }
}

/// Pump events binned on a regular (z, v) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceHistogram {
    pub z_edges: Vec<f64>,
    pub v_edges: Vec<f64>,
    /// Row-major counts, index `iz * nv + iv`.
    pub counts: Vec<u64>,
    /// Number of atoms the probabilities are normalized to.
    pub total_weight: u64,
    /// Pump events that fell outside the grid.
    pub outside: u64,
    /// Area of one quantum state, h/m, m²/s.
    pub state_area: f64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

impl PhaseSpaceHistogram {
    pub fn new(
        z_range: (f64, f64),
        v_range: (f64, f64),
        bins: BinSpec,
        species: &AtomSpecies,
    ) -> Result<Self> {
        bins.validate()?;
        if !(z_range.1 > z_range.0 && v_range.1 > v_range.0) {
            return Err(Error::invalid("histogram", "ranges must have positive width"));
        }
        Ok(PhaseSpaceHistogram {
            z_edges: linspace(z_range.0, z_range.1, bins.nz),
            v_edges: linspace(v_range.0, v_range.1, bins.nv),
            counts: vec![0; bins.nz * bins.nv],
            total_weight: 0,
            outside: 0,
            state_area: PLANCK / species.mass,
        })
    }

    pub fn nz(&self) -> usize {
        self.z_edges.len() - 1
    }

    pub fn nv(&self) -> usize {
        self.v_edges.len() - 1
    }

    pub fn dz(&self) -> f64 {
        (self.z_edges[self.nz()] - self.z_edges[0]) / self.nz() as f64
    }

    pub fn dv(&self) -> f64 {
        (self.v_edges[self.nv()] - self.v_edges[0]) / self.nv() as f64
    }

    pub fn z_centers(&self) -> Vec<f64> {
        self.z_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn v_centers(&self) -> Vec<f64> {
        self.v_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    fn index(&self, z: f64, v: f64) -> Option<usize> {
        let fz = (z - self.z_edges[0]) / self.dz();
        let fv = (v - self.v_edges[0]) / self.dv();
        if !(fz >= 0.0 && fv >= 0.0) {
            return None;
        }
        let (iz, iv) = (fz as usize, fv as usize);
        (iz < self.nz() && iv < self.nv()).then(|| iz * self.nv() + iv)
    }

    /// Adds one pump event.
    pub fn record(&mut self, z: f64, v: f64) {
        match self.index(z, v) {
            Some(i) => self.counts[i] += 1,
            None => self.outside += 1,
        }
    }

    /// Adds the counts of another histogram on the same grid.
    pub fn merge(&mut self, other: &PhaseSpaceHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.outside += other.outside;
        self.total_weight += other.total_weight;
    }

    pub fn count(&self, iz: usize, iv: usize) -> u64 {
        self.counts[iz * self.nv() + iv]
    }

    /// Probability of bin (iz, iv).
    pub fn probability(&self, iz: usize, iv: usize) -> f64 {
        if self.total_weight == 0 {
            return 0.0;
        }
        self.count(iz, iv) as f64 / self.total_weight as f64
    }

    /// Dimensionless phase-space density of bin (iz, iv): probability per quantum state.
    pub fn density(&self, iz: usize, iv: usize) -> f64 {
        self.probability(iz, iv) / (self.dz() * self.dv()) * self.state_area
    }

    /// Total binned probability.
    pub fn binned_mass(&self) -> f64 {
        if self.total_weight == 0 {
            return 0.0;
        }
        self.counts.iter().sum::<u64>() as f64 / self.total_weight as f64
    }

    /// Density along v = 0, interpolated between the two rows whose centers bracket it.
    pub fn line_at_v0(&self) -> Vec<f64> {
        let centers = self.v_centers();
        let (lo, hi, w) = bracket(&centers, 0.0);
        (0..self.nz())
            .map(|iz| (1.0 - w) * self.density(iz, lo) + w * self.density(iz, hi))
            .collect()
    }

    /// Density averaged over the `half_rows` rows on each side of v = 0 and
    /// smoothed along z with the kernel [1, 2, 1]/4.
    pub fn smoothed_line_at_v0(&self, half_rows: usize) -> Vec<f64> {
        let centers = self.v_centers();
        let (lo, hi, _) = bracket(&centers, 0.0);
        let half = half_rows.max(1);
        let first = (lo + 1).saturating_sub(half);
        let last = (hi + half - 1).min(self.nv() - 1);
        let rows = (last - first + 1) as f64;
        let line: Vec<f64> = (0..self.nz())
            .map(|iz| (first..=last).map(|iv| self.density(iz, iv)).sum::<f64>() / rows)
            .collect();
        let n = line.len();
        (0..n)
            .map(|i| {
                let left = line[i.saturating_sub(1)];
                let right = line[(i + 1).min(n - 1)];
                0.25 * (left + 2.0 * line[i] + right)
            })
            .collect()
    }

    /// Probability per unit height, summed over velocity.
    pub fn z_marginal(&self) -> Vec<f64> {
        (0..self.nz())
            .map(|iz| (0..self.nv()).map(|iv| self.probability(iz, iv)).sum::<f64>() / self.dz())
            .collect()
    }
}

/// Returns (i, i + 1, w) with centers[i] <= x <= centers[i + 1] and linear weight w.
fn bracket(centers: &[f64], x: f64) -> (usize, usize, f64) {
    let n = centers.len();
    if x <= centers[0] {
        return (0, 0, 0.0);
    }
    if x >= centers[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let i = centers.partition_point(|&c| c <= x) - 1;
    let w = (x - centers[i]) / (centers[i + 1] - centers[i]);
    (i, i + 1, w)
}

/// Peak of a sampled profile with 3-point parabolic refinement: (position, value).
pub fn refined_peak(positions: &[f64], values: &[f64]) -> Option<(f64, f64)> {
    let (imax, &ymax) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if ymax <= 0.0 {
        return None;
    }
    if imax == 0 || imax + 1 == values.len() {
        return Some((positions[imax], ymax));
    }
    let (a, b, c) = (values[imax - 1], ymax, values[imax + 1]);
    let curvature = a - 2.0 * b + c;
    if curvature >= 0.0 {
        return Some((positions[imax], ymax));
    }
    let offset = 0.5 * (a - c) / curvature;
    let step = positions[imax + 1] - positions[imax];
    Some((positions[imax] + offset * step, b - 0.25 * (a - c) * offset))
}

/// Full width at half maximum of a sampled profile, by linear interpolation.
pub fn full_width_half_max(positions: &[f64], values: &[f64]) -> Option<f64> {
    let (imax, &ymax) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if ymax <= 0.0 {
        return None;
    }
    let half = 0.5 * ymax;
    let cross = |i: usize, j: usize| {
        let (yi, yj) = (values[i], values[j]);
        positions[i] + (half - yi) / (yj - yi) * (positions[j] - positions[i])
    };
    let mut left = positions[0];
    for i in (0..imax).rev() {
        if values[i] < half {
            left = cross(i, i + 1);
            break;
        }
    }
    let mut right = positions[values.len() - 1];
    for i in imax + 1..values.len() {
        if values[i] < half {
            right = cross(i - 1, i);
            break;
        }
    }
    Some(right - left)
}

/// Scalar summary of an ensemble run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    /// Peak dimensionless density of the initial cloud.
    pub peak_initial: f64,
    /// Peak dimensionless density of pump events along v = 0.
    pub peak_final: f64,
    pub compression_factor: f64,
    /// Height of the v = 0 peak, m.
    pub z_peak: f64,
    /// FWHM in z of the v = 0 density, m.
    pub width_z_at_v0: f64,
    pub pumped_fraction: f64,
    pub unpumped_fraction: f64,
    pub overrun_fraction: f64,
    pub n_atoms: u64,
    pub n_pumped: u64,
    pub n_unpumped: u64,
    pub n_overrun: u64,
    pub warnings: Vec<String>,
}

#[derive(Clone)]
struct Tally {
    hist: PhaseSpaceHistogram,
    pumped: u64,
    unpumped: u64,
    overrun: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.hist.merge(&other.hist);
        self.pumped += other.pumped;
        self.unpumped += other.unpumped;
        self.overrun += other.overrun;
        self
    }
}

/// Height of the evanescent-region edge, 5/(2κ).
pub fn edge_height(mirror: &MirrorConfig) -> f64 {
    EDGE_IN_DECAY_LENGTHS / mirror.kappa()
}

/// Nominal entry speed √(2g·drop) of an atom released at rest at the cloud center.
pub fn nominal_entry_speed(mol: &MolassesConfig, mirror: &MirrorConfig) -> f64 {
    (2.0 * GRAVITY * (mol.drop_height - edge_height(mirror)).max(0.0)).sqrt()
}

/// Empty histogram over [0, z_edge] × [−v_nom, v_nom].
pub fn default_histogram(
    mol: &MolassesConfig,
    mirror: &MirrorConfig,
    bins: BinSpec,
) -> Result<PhaseSpaceHistogram> {
    let v_nom = nominal_entry_speed(mol, mirror);
    PhaseSpaceHistogram::new(
        (0.0, edge_height(mirror)),
        (-v_nom, v_nom),
        bins,
        mirror.species(),
    )
}

/// Simulates `mol.n_atoms` bounces and histograms the pump coordinates.
///
/// Runs on the current rayon pool. Atoms overrunning the mirror are counted, not errors.
pub fn run_ensemble(
    mol: &MolassesConfig,
    mirror: &MirrorConfig,
    bins: BinSpec,
    options: &IntegratorOptions,
) -> Result<(PhaseSpaceHistogram, CompressionReport)> {
    mol.validate()?;
    let empty = default_histogram(mol, mirror, bins)?;
    let edge = edge_height(mirror);
    let zero = Tally {
        hist: empty,
        pumped: 0,
        unpumped: 0,
        overrun: 0,
    };

    let tally = (0..mol.n_atoms)
        .into_par_iter()
        .try_fold(
            || zero.clone(),
            |mut acc, i| -> Result<Tally> {
                let mut rng = atom_rng(mol.master_seed, i);
                let start = draw_state(mol, &mut rng);
                let entry = free_fall_to_mirror(&start, edge)?;
                match integrate_bounce(mirror, &entry, &mut rng, options) {
                    Ok(out) => match out.pump {
                        Some(p) => {
                            acc.pumped += 1;
                            acc.hist.record(p.z, p.v);
                        }
                        None => acc.unpumped += 1,
                    },
                    Err(Error::MirrorOverrun { .. }) => acc.overrun += 1,
                    Err(e) => return Err(e),
                }
                Ok(acc)
            },
        )
        .try_reduce(|| zero.clone(), |a, b| Ok(a.merge(b)))?;

    let mut hist = tally.hist;
    hist.total_weight = mol.n_atoms;
    let report = summarize(&hist, mol, mirror, tally.pumped, tally.unpumped, tally.overrun);
    Ok((hist, report))
}

fn summarize(
    hist: &PhaseSpaceHistogram,
    mol: &MolassesConfig,
    mirror: &MirrorConfig,
    pumped: u64,
    unpumped: u64,
    overrun: u64,
) -> CompressionReport {
    let n = mol.n_atoms;
    let peak_initial = mol.initial_peak_density(mirror.species());
    let z = hist.z_centers();
    let line = hist.line_at_v0();
    let mut warnings = Vec::new();
    let (z_peak, peak_final) = refined_peak(&z, &line).unwrap_or((0.0, 0.0));
    let width = full_width_half_max(&z, &line).unwrap_or(0.0);
    if pumped == 0 {
        warnings.push("no atoms were pumped".to_string());
    } else if peak_final == 0.0 {
        warnings.push("no pump events on the v = 0 line".to_string());
    }
    if overrun > 0 {
        warnings.push(format!("{overrun} atoms overran the mirror"));
    }
    if hist.outside > 0 {
        warnings.push(format!("{} pump events fell outside the grid", hist.outside));
    }
    CompressionReport {
        peak_initial,
        peak_final,
        compression_factor: peak_final / peak_initial,
        z_peak,
        width_z_at_v0: width,
        pumped_fraction: pumped as f64 / n as f64,
        unpumped_fraction: unpumped as f64 / n as f64,
        overrun_fraction: overrun as f64 / n as f64,
        n_atoms: n,
        n_pumped: pumped,
        n_unpumped: unpumped,
        n_overrun: overrun,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::InterfaceGeometry;
    use crate::physics::{builtin_rb87, impact_momentum};
    use approx::assert_relative_eq;

    fn mirror() -> MirrorConfig {
        let rb = builtin_rb87();
        let geom = InterfaceGeometry::above_critical(1.51, 0.01, 780e-9).unwrap();
        let u0 = 2.0 * crate::physics::impact_energy(&rb, 6e-3).unwrap().0;
        MirrorConfig::new(rb, geom, u0, 100.0 * rb.gamma(), 0.5).unwrap()
    }

    #[test]
    fn reference_initial_peak() {
        let rb = builtin_rb87();
        let mol = MolassesConfig::reference(&rb, 1, 0).unwrap();
        let peak = mol.initial_peak_density(&rb);
        assert!((peak - 1.18e-4).abs() < 0.01e-4, "{peak}");
    }

    #[test]
    fn sample_moments() {
        let rb = builtin_rb87();
        let n = 100_000u64;
        let mol = MolassesConfig::reference(&rb, n, 7).unwrap();
        let states: Vec<_> = sample_initial(&mol).collect();
        let nf = n as f64;
        let mean_z = states.iter().map(|s| s.z).sum::<f64>() / nf;
        let mean_v = states.iter().map(|s| s.v).sum::<f64>() / nf;
        let var_z = states.iter().map(|s| (s.z - mean_z).powi(2)).sum::<f64>() / nf;
        let var_v = states.iter().map(|s| (s.v - mean_v).powi(2)).sum::<f64>() / nf;
        assert!((mean_z - mol.drop_height).abs() < 4.0 * mol.sigma_z / nf.sqrt());
        assert!(mean_v.abs() < 4.0 * mol.sigma_v / nf.sqrt());
        let se_var = (2.0 / nf).sqrt();
        assert!((var_z / mol.sigma_z.powi(2) - 1.0).abs() < 4.0 * se_var);
        assert!((var_v / mol.sigma_v.powi(2) - 1.0).abs() < 4.0 * se_var);
        let again: Vec<_> = sample_initial(&mol).take(10).collect();
        assert_eq!(&states[..10], &again[..]);
    }

    #[test]
    fn free_fall_cases() {
        let rb = builtin_rb87();
        let s = KinematicState::new(6e-3 + 1e-6, 0.0, 0.0).unwrap();
        let out = free_fall_to_mirror(&s, 1e-6).unwrap();
        let expected = impact_momentum(&rb, 6e-3).unwrap().speed(rb.mass);
        assert_relative_eq!(-out.v, expected, max_relative = 1e-12);
        let s = KinematicState::new(1e-3, -0.2, 0.5).unwrap();
        assert_eq!(free_fall_to_mirror(&s, 1e-3).unwrap(), s);
        assert!(free_fall_to_mirror(&s, 2e-3).is_err());
    }

    #[test]
    fn arrival_map_preserves_flux_weighted_volume() {
        // (z, v) -> (t_arrival, v_i): |v_i| · |det J| = 1.
        let edge = 2e-6;
        let map = |z: f64, v: f64| {
            let s = free_fall_to_mirror(&KinematicState { z, v, t: 0.0 }, edge).unwrap();
            (s.t, s.v)
        };
        for (z, v) in [(6e-3, 0.0), (5.8e-3, 0.03), (6.3e-3, -0.05)] {
            let (hz, hv) = (1e-9, 1e-7);
            let (tzp, vzp) = map(z + hz, v);
            let (tzm, vzm) = map(z - hz, v);
            let (tvp, vvp) = map(z, v + hv);
            let (tvm, vvm) = map(z, v - hv);
            let j = [
                [(tzp - tzm) / (2.0 * hz), (tvp - tvm) / (2.0 * hv)],
                [(vzp - vzm) / (2.0 * hz), (vvp - vvm) / (2.0 * hv)],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let (_, v_i) = map(z, v);
            assert_relative_eq!(det.abs() * v_i.abs(), 1.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn histogram_binning_and_density() {
        let rb = builtin_rb87();
        let mut h = PhaseSpaceHistogram::new((0.0, 1.0), (-1.0, 1.0), BinSpec { nz: 4, nv: 2 }, &rb).unwrap();
        h.record(0.1, -0.5);
        h.record(0.1, -0.5);
        h.record(0.9, 0.5);
        h.record(1.5, 0.0);
        h.total_weight = 4;
        assert_eq!(h.count(0, 0), 2);
        assert_eq!(h.count(3, 1), 1);
        assert_eq!(h.outside, 1);
        assert_relative_eq!(h.binned_mass(), 0.75);
        assert_relative_eq!(h.density(0, 0), 0.5 / (0.25 * 1.0) * PLANCK / rb.mass);
        // v = 0 sits between the two rows.
        let line = h.line_at_v0();
        assert_relative_eq!(line[0], 0.5 * h.density(0, 0));
    }

    #[test]
    fn peak_refinement_exact_on_parabola() {
        let x: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&x| 5.0 - (x - 3.3f64).powi(2)).collect();
        let (xp, yp) = refined_peak(&x, &y).unwrap();
        assert_relative_eq!(xp, 3.3, epsilon = 1e-12);
        assert_relative_eq!(yp, 5.0, epsilon = 1e-12);
        assert!(refined_peak(&x, &[0.0; 9]).is_none());
    }

    #[test]
    fn fwhm_of_triangle() {
        let x: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&x| (4.0 - (x - 5.0f64).abs()).max(0.0)).collect();
        assert_relative_eq!(full_width_half_max(&x, &y).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn no_pumping_gives_empty_histogram() {
        let rb = builtin_rb87();
        let mol = MolassesConfig::reference(&rb, 200, 1).unwrap();
        let m = mirror().with_raman_rate(0.0).unwrap();
        let (hist, report) = run_ensemble(&mol, &m, BinSpec::default(), &IntegratorOptions::default()).unwrap();
        assert_eq!(report.pumped_fraction, 0.0);
        assert_eq!(report.peak_final, 0.0);
        assert!(hist.counts.iter().all(|&c| c == 0));
        assert!(!report.warnings.is_empty());
        assert_eq!(report.n_unpumped, 200);
    }

    #[test]
    fn small_ensemble_accounting() {
        let rb = builtin_rb87();
        let mol = MolassesConfig::reference(&rb, 500, 3).unwrap();
        let (hist, report) = run_ensemble(&mol, &mirror(), BinSpec::default(), &IntegratorOptions::default()).unwrap();
        assert_eq!(report.n_pumped + report.n_unpumped + report.n_overrun, 500);
        assert_eq!(hist.counts.iter().sum::<u64>() + hist.outside, report.n_pumped);
        assert!(report.pumped_fraction > 0.7 && report.pumped_fraction < 0.95);
        assert!(report.compression_factor > 0.0);
    }

    #[test]
    fn invalid_molasses() {
        assert!(MolassesConfig::new(0.0, 1.0, 1.0, 1, 0).is_err());
        assert!(MolassesConfig::new(1.0, 1.0, 1.0, 0, 0).is_err());
        assert!(MolassesConfig::from_temperature(&builtin_rb87(), 1.0, -1.0, 1.0, 1, 0).is_err());
    }
}
