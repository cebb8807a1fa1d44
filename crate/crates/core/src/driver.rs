//! Experiment configuration, orchestration and result emission.
//!
//! Every experiment is a pure function of an [`ExperimentConfig`]: random
//! streams are keyed by `(seed, N, replica)` and replicas are reduced in a
//! fixed order, so reports and tables are bit-identical across runs and
//! thread counts.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::elliptic::{linear_instability_count, linearization_spectrum, literal_branch_count, Census, ProfileKind};
use crate::fwgraph::{tree_report, w_eval, TreeReport, TreeWeights};
use crate::model::{profile_measure, replica_rng, CylinderRate, FourierTable, LatticeConfig, MeasureCoords, Simulator};
use crate::pde::{hydro_solve, DensityField, HydroOptions};
use crate::quasipotential::{
    best_interpolation_cost, mam_minimize, v_matrix, BoundOptions, CostMatrix, MamOptions, VMatrixOptions,
};
use crate::reaction::{bd_polynomials, chafee_infante_params, ReactionPolynomials};
use crate::{Error, Result};

/// Current configuration schema version.
pub const CONFIG_VERSION: u32 = 1;

/// Names accepted by [`run_experiment`].
pub const EXPERIMENTS: [&str; 4] = ["hydrodynamics", "hydrostatics", "census", "quasipotential"];

/// Jump rates of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Rates whose reaction term is `(𝔟 - 𝔞)(2ρ - 1) - 𝔟(2ρ - 1)³`.
    ChafeeInfante {
        frak_a: f64,
        frak_b: f64,
        #[serde(default)]
        a2: Option<f64>,
    },
    /// Radius-one rates `(a0, a1, a2)`.
    Triple { a0: f64, a1: f64, a2: f64 },
    /// A full rate table indexed by the window pattern.
    Table { radius: usize, table: Vec<f64> },
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::ChafeeInfante { frak_a: 1.0, frak_b: 2.0, a2: None }
    }
}

impl ModelSpec {
    pub fn rates(&self) -> Result<CylinderRate> {
        match self {
            ModelSpec::ChafeeInfante { frak_a, frak_b, a2 } => chafee_infante_params(*frak_a, *frak_b, *a2)?.rates(),
            ModelSpec::Triple { a0, a1, a2 } => CylinderRate::from_triple(*a0, *a1, *a2),
            ModelSpec::Table { radius, table } => CylinderRate::from_table(*radius, table.clone()),
        }
    }

    pub fn polynomials(&self) -> Result<ReactionPolynomials> {
        bd_polynomials(&self.rates()?)
    }
}

/// Macroscopic initial profile `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialProfile {
    Constant {
        value: f64,
    },
    /// `mean + amplitude · cos(2π mode θ)`.
    Cosine {
        mean: f64,
        amplitude: f64,
        mode: u32,
    },
}

impl Default for InitialProfile {
    fn default() -> Self {
        InitialProfile::Cosine { mean: 0.5, amplitude: 0.3, mode: 1 }
    }
}

impl InitialProfile {
    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            InitialProfile::Constant { value } => value,
            InitialProfile::Cosine { mean, amplitude, mode } => {
                mean + amplitude * (2.0 * std::f64::consts::PI * mode as f64 * theta).cos()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = match *self {
            InitialProfile::Constant { value } => (value, value),
            InitialProfile::Cosine { mean, amplitude, .. } => (mean - amplitude.abs(), mean + amplitude.abs()),
        };
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
            return Err(Error::InvalidArgument(format!("initial profile leaves [0, 1]: range [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// Settings of the quasi-potential stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QpConfig {
    pub t_grid: Vec<f64>,
    pub slices: usize,
    pub mam_grid: usize,
    pub trace_grid: usize,
    /// Number of constant targets in the landscape of `W`.
    pub landscape_points: usize,
}

impl Default for QpConfig {
    fn default() -> Self {
        let m = MamOptions::default();
        Self {
            t_grid: m.t_grid,
            slices: m.slices,
            mam_grid: m.grid,
            trace_grid: VMatrixOptions::default().trace_grid,
            landscape_points: 9,
        }
    }
}

impl QpConfig {
    pub fn mam_options(&self) -> MamOptions {
        MamOptions { t_grid: self.t_grid.clone(), slices: self.slices, grid: self.mam_grid, ..MamOptions::default() }
    }

    pub fn v_matrix_options(&self) -> VMatrixOptions {
        VMatrixOptions { mam: self.mam_options(), trace_grid: self.trace_grid, ..VMatrixOptions::default() }
    }
}

/// Versioned experiment configuration; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub model: ModelSpec,
    /// Lattice size of single runs.
    pub n: usize,
    /// Lattice sizes of refinement studies.
    pub n_sweep: Vec<usize>,
    /// Spatial grid of the macroscopic solvers.
    pub grid: usize,
    pub dt: f64,
    pub horizon: f64,
    pub burn_in: f64,
    /// Samples per lattice size.
    pub samples: usize,
    /// Time between recorded samples.
    pub thinning: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Fourier truncation `K` of the metric.
    pub truncation: usize,
    /// Neighborhood radius in the metric.
    pub delta: f64,
    pub initial: InitialProfile,
    /// Values of `a = (𝔟 - 𝔞)/2` for the census sweep, with `𝔞 = 1`.
    pub a_sweep: Vec<f64>,
    pub qp: QpConfig,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            model: ModelSpec::default(),
            n: 256,
            n_sweep: vec![64, 128, 256, 512],
            grid: 256,
            dt: 1e-4,
            horizon: 0.1,
            burn_in: 2.0,
            samples: 10_000,
            thinning: 0.1,
            replicas: 20,
            seed: 1,
            truncation: crate::model::DEFAULT_TRUNCATION,
            delta: 0.05,
            initial: InitialProfile::default(),
            a_sweep: vec![0.5, 1.5, 2.5, 3.5, 4.5, 5.5, 8.0],
            qp: QpConfig::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Defaults tuned for one experiment.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::default();
        Ok(match name {
            "hydrodynamics" => Self { replicas: 8, ..base },
            "hydrostatics" => Self { n_sweep: vec![64, 128, 256], replicas: 200, burn_in: 3.0, thinning: 0.05, ..base },
            "census" | "quasipotential" => base,
            other => return Err(Error::InvalidArgument(format!("unknown experiment {other:?}"))),
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("config version {} is not {CONFIG_VERSION}", self.version));
        }
        let rates = self.model.rates()?;
        let min_n = 2 * rates.radius() + 1;
        if self.n < min_n || self.n_sweep.iter().any(|&n| n < min_n) {
            return bad(format!("lattice sizes must be at least {min_n}"));
        }
        if self.grid < crate::pde::MIN_GRID
            || self.qp.mam_grid < crate::pde::MIN_GRID
            || self.qp.trace_grid < crate::pde::MIN_GRID
        {
            return bad(format!("grids must have at least {} nodes", crate::pde::MIN_GRID));
        }
        for (name, v) in
            [("dt", self.dt), ("horizon", self.horizon), ("thinning", self.thinning), ("delta", self.delta)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if !(self.burn_in >= 0.0) {
            return bad(format!("burn-in {} must be nonnegative", self.burn_in));
        }
        if self.samples == 0 || self.replicas == 0 || self.truncation == 0 || self.qp.slices < 2 {
            return bad("samples, replicas, truncation must be positive and slices at least 2".into());
        }
        if self.a_sweep.iter().any(|a| !(*a > 0.0)) || self.a_sweep.windows(2).any(|w| w[1] <= w[0]) {
            return bad("a sweep must be positive and increasing".into());
        }
        if self.qp.t_grid.is_empty() || self.qp.t_grid.iter().any(|t| !(*t > 0.0)) {
            return bad("the horizon grid must be nonempty and positive".into());
        }
        self.initial.validate()
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        format!("{:x}", Sha256::digest(bytes))
    }
}

/// Identifies the configuration and code that produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub experiment: String,
    pub config_hash: String,
    pub crate_version: String,
    pub config: ExperimentConfig,
}

impl ReportHeader {
    fn new(experiment: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            experiment: experiment.into(),
            config_hash: cfg.hash(),
            crate_version: env!("CARGO_PKG_VERSION").into(),
            config: cfg.clone(),
        }
    }
}

/// Random stream id of replica `r` at lattice size `n`.
fn stream(n: usize, r: usize) -> u64 {
    ((n as u64) << 32) | r as u64
}

/// Product measure with density `γ(x/N)`; the simulation itself uses the
/// same `(N, replica)` stream under `seed + 1`.
fn initial_config(cfg: &ExperimentConfig, n: usize, r: usize, gamma: impl Fn(f64) -> f64) -> LatticeConfig {
    let mut rng = replica_rng(cfg.seed, stream(n, r));
    LatticeConfig::sample_product(n, gamma, &mut rng)
}

fn simulator(
    cfg: &ExperimentConfig,
    rates: &CylinderRate,
    init: LatticeConfig,
    n: usize,
    r: usize,
) -> Result<Simulator> {
    Simulator::new(init, rates, cfg.seed.wrapping_add(1), stream(n, r))
}

fn median(mut x: Vec<f64>) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2]
    } else {
        0.5 * (x[n / 2 - 1] + x[n / 2])
    }
}

fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// One replica's distance to the PDE solution at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HydroRow {
    pub n: usize,
    pub replica: usize,
    pub time: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HydroSummary {
    pub n: usize,
    pub time: f64,
    pub median: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydrodynamicsReport {
    pub header: ReportHeader,
    pub tail_bound: f64,
    pub summary: Vec<HydroSummary>,
    #[serde(skip)]
    pub rows: Vec<HydroRow>,
}

impl HydrodynamicsReport {
    /// Median distance at the final time, per lattice size.
    pub fn final_medians(&self) -> Vec<(usize, f64)> {
        let t = self.header.config.horizon;
        self.summary.iter().filter(|s| s.time == t).map(|s| (s.n, s.median)).collect()
    }

    /// Number of doublings of `N` along which the final median decreases.
    pub fn decreasing_doublings(&self) -> (usize, usize) {
        let m = self.final_medians();
        let pairs: Vec<_> = m.windows(2).filter(|w| w[1].0 == 2 * w[0].0).collect();
        (pairs.iter().filter(|w| w[1].1 < w[0].1).count(), pairs.len())
    }

    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let (json, csv) = (dir.join("hydrodynamics.json"), dir.join("hydrodynamics.csv"));
        write_json(&json, self)?;
        write_csv(&csv, &self.rows)?;
        Ok(vec![json, csv])
    }
}

/// Distance between the empirical measure and the hydrodynamic solution at
/// times `0, T/2, T` for every lattice size and replica.
pub fn experiment_hydrodynamics(cfg: &ExperimentConfig) -> Result<HydrodynamicsReport> {
    cfg.validate()?;
    let rates = cfg.model.rates()?;
    let poly = bd_polynomials(&rates)?;
    let gamma = cfg.initial;
    let half_steps = (0.5 * cfg.horizon / cfg.dt).ceil() as usize;
    let opts = HydroOptions { dt: cfg.dt, save_every: half_steps.max(1), ..HydroOptions::default() };
    let pde = hydro_solve(&DensityField::from_fn(cfg.grid, |t| gamma.eval(t))?, cfg.horizon, &poly, &opts)?;
    let times = [0.0, 0.5 * cfg.horizon, cfg.horizon];
    let targets: Vec<MeasureCoords> =
        [0, 1, 2].iter().map(|&k| profile_measure(pde.slices()[k].values(), cfg.truncation)).collect();
    let mut rows = Vec::new();
    for &n in &cfg.n_sweep {
        let table = FourierTable::new(n, cfg.truncation);
        let per: Vec<Vec<HydroRow>> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| {
                let init = initial_config(cfg, n, r, |t| gamma.eval(t));
                let mut sim = simulator(cfg, &rates, init, n, r)?;
                let mut out = Vec::new();
                for (t, target) in times.iter().zip(&targets) {
                    sim.advance_to(*t);
                    let d = crate::model::measure_distance(&table.empirical(sim.config()), target)?;
                    out.push(HydroRow { n, replica: r, time: *t, distance: d.value });
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        rows.extend(per.into_iter().flatten());
    }
    let mut summary = Vec::new();
    for &n in &cfg.n_sweep {
        for &t in &times {
            let d: Vec<f64> = rows.iter().filter(|r| r.n == n && r.time == t).map(|r| r.distance).collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            summary.push(HydroSummary { n, time: t, median: median(d), mean });
        }
    }
    Ok(HydrodynamicsReport {
        header: ReportHeader::new("hydrodynamics", cfg),
        tail_bound: crate::model::tail_bound(cfg.truncation),
        summary,
        rows,
    })
}

/// One stationary sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticSample {
    pub n: usize,
    pub replica: usize,
    pub time: f64,
    pub density: f64,
    pub nearest: usize,
    pub distance: f64,
}

/// A sample with its distances to every stationary family.
type TaggedSample = (StaticSample, Vec<f64>);

/// Aggregates at one lattice size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticSummary {
    pub n: usize,
    pub samples: usize,
    /// Fraction within `δ` of some stationary family.
    pub within_solutions: f64,
    /// Fraction within `δ` of a stable family.
    pub within_stable: f64,
    /// Fraction of samples nearest to each family.
    pub nearest_fraction: Vec<f64>,
    /// Among samples nearest to a stable family, the fraction at each one,
    /// listed in the order of [`HydrostaticsReport::stable`].
    pub well_split: Vec<f64>,
    /// Fraction of samples nearest to an unstable family.
    pub near_unstable: f64,
    pub median_distance_stable: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydrostaticsReport {
    pub header: ReportHeader,
    pub flip_symmetric: bool,
    pub kinds: Vec<ProfileKind>,
    pub stable: Vec<usize>,
    pub summary: Vec<StaticSummary>,
    #[serde(skip)]
    pub samples: Vec<StaticSample>,
}

impl HydrostaticsReport {
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let (json, csv) = (dir.join("hydrostatics.json"), dir.join("hydrostatics.csv"));
        write_json(&json, self)?;
        write_csv(&csv, &self.samples)?;
        Ok(vec![json, csv])
    }
}

/// Coordinates of every grid translate of each family representative.
fn family_coords(census: &Census, truncation: usize) -> Vec<Vec<MeasureCoords>> {
    census
        .profiles
        .iter()
        .map(|p| {
            let shifts = if p.is_constant() { 1 } else { p.field.grid_size() };
            (0..shifts).map(|s| profile_measure(p.field.rotated(s).values(), truncation)).collect()
        })
        .collect()
}

/// Distance from `x` to each family, minimized over translates.
fn family_distances(x: &MeasureCoords, families: &[Vec<MeasureCoords>]) -> Result<Vec<f64>> {
    families
        .iter()
        .map(|f| {
            f.iter()
                .map(|c| crate::model::measure_distance(x, c).map(|d| d.value))
                .try_fold(f64::INFINITY, |m, d| d.map(|d| m.min(d)))
        })
        .collect()
}

/// Long runs from the flip-symmetric product measure at density `1/2`:
/// after the burn-in every replica records a sample each `thinning` time
/// units, and each sample is compared with every stationary family.
pub fn experiment_hydrostatics(cfg: &ExperimentConfig) -> Result<HydrostaticsReport> {
    cfg.validate()?;
    let rates = cfg.model.rates()?;
    let poly = bd_polynomials(&rates)?;
    let census = Census::compute(&poly, cfg.grid)?;
    let families = family_coords(&census, cfg.truncation);
    let stable = census.stable();
    let per_replica = cfg.samples.div_ceil(cfg.replicas);
    let mut samples = Vec::new();
    let mut summary = Vec::new();
    for &n in &cfg.n_sweep {
        let table = FourierTable::new(n, cfg.truncation);
        let per: Vec<Vec<TaggedSample>> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| {
                let init = initial_config(cfg, n, r, |_| 0.5);
                let mut sim = simulator(cfg, &rates, init, n, r)?;
                let mut out = Vec::with_capacity(per_replica);
                for s in 0..per_replica {
                    let t = cfg.burn_in + s as f64 * cfg.thinning;
                    sim.advance_to(t);
                    let d = family_distances(&table.empirical(sim.config()), &families)?;
                    let nearest = (0..d.len()).fold(0, |b, i| if d[i] < d[b] { i } else { b });
                    let density = sim.config().particles() as f64 / n as f64;
                    out.push((StaticSample { n, replica: r, time: t, density, nearest, distance: d[nearest] }, d));
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let all: Vec<TaggedSample> = per.into_iter().flatten().collect();
        let count = all.len() as f64;
        let frac = |f: &dyn Fn(&TaggedSample) -> bool| all.iter().filter(|x| f(x)).count() as f64 / count;
        let within_solutions = frac(&|(s, _)| s.distance <= cfg.delta);
        let within_stable = frac(&|(_, d)| stable.iter().any(|&i| d[i] <= cfg.delta));
        let nearest_fraction: Vec<f64> = (0..census.len()).map(|i| frac(&|(s, _)| s.nearest == i)).collect();
        let stable_total: f64 = stable.iter().map(|&i| nearest_fraction[i]).sum();
        let well_split =
            stable.iter().map(|&i| if stable_total > 0.0 { nearest_fraction[i] / stable_total } else { 0.0 }).collect();
        let near_unstable = 1.0 - stable_total;
        let median_distance_stable =
            median(all.iter().map(|(_, d)| stable.iter().map(|&i| d[i]).fold(f64::INFINITY, f64::min)).collect());
        summary.push(StaticSummary {
            n,
            samples: all.len(),
            within_solutions,
            within_stable,
            nearest_fraction,
            well_split,
            near_unstable,
            median_distance_stable,
        });
        samples.extend(all.into_iter().map(|(s, _)| s));
    }
    Ok(HydrostaticsReport {
        header: ReportHeader::new("hydrostatics", cfg),
        flip_symmetric: rates.is_flip_symmetric(),
        kinds: census.profiles.iter().map(|p| p.kind).collect(),
        stable,
        summary,
        samples,
    })
}

/// One family of the census at one value of `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusEntry {
    pub family_id: usize,
    pub kind: ProfileKind,
    pub periods: usize,
    pub top_eigenvalue: f64,
    pub residual: f64,
    pub profile_csv_path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusPoint {
    /// `F'(1/2) / 4`.
    pub a: f64,
    pub model: ModelSpec,
    pub families: usize,
    /// Branch count from the literal threshold `m² < 32π²a`.
    pub literal_branches: usize,
    /// Unstable Fourier modes at `1/2`.
    pub unstable_modes: usize,
    pub entries: Vec<CensusEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub header: ReportHeader,
    pub points: Vec<CensusPoint>,
    #[serde(skip)]
    pub censuses: Vec<Census>,
}

impl CensusReport {
    pub fn counts(&self) -> Vec<(f64, usize)> {
        self.points.iter().map(|p| (p.a, p.families)).collect()
    }

    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        for (p, c) in self.points.iter().zip(&self.censuses) {
            for (e, prof) in p.entries.iter().zip(&c.profiles) {
                let path = dir.join(&e.profile_csv_path);
                let rows: Vec<(f64, f64)> =
                    prof.field.values().iter().enumerate().map(|(j, v)| (prof.field.theta(j), *v)).collect();
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(["theta", "rho"])?;
                for r in rows {
                    w.serialize(r)?;
                }
                w.flush()?;
                out.push(path);
            }
        }
        let json = dir.join("census.json");
        write_json(&json, self)?;
        out.push(json);
        Ok(out)
    }
}

fn census_point(model: ModelSpec, grid: usize) -> Result<(CensusPoint, Census)> {
    let poly = model.polynomials()?;
    let a = poly.f_prime().eval(0.5) / 4.0;
    let census = Census::compute(&poly, grid)?;
    let entries = census
        .profiles
        .iter()
        .map(|p| CensusEntry {
            family_id: p.family_id,
            kind: p.kind,
            periods: p.periods,
            top_eigenvalue: linearization_spectrum(p, &poly, 1)[0],
            residual: p.residual(&poly),
            profile_csv_path: format!("census_a{a}_family{}.csv", p.family_id),
        })
        .collect();
    let point = CensusPoint {
        a,
        model,
        families: census.len(),
        literal_branches: literal_branch_count(a),
        unstable_modes: linear_instability_count(a),
        entries,
    };
    Ok((point, census))
}

/// Stationary families along the sweep `(𝔞, 𝔟) = (1, 1 + 2a)`.
pub fn experiment_census(cfg: &ExperimentConfig) -> Result<CensusReport> {
    cfg.validate()?;
    let (points, censuses) = cfg
        .a_sweep
        .iter()
        .map(|&a| census_point(ModelSpec::ChafeeInfante { frak_a: 1.0, frak_b: 1.0 + 2.0 * a, a2: None }, cfg.grid))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok(CensusReport { header: ReportHeader::new("census", cfg), points, censuses })
}

/// Stationary families of the configured model alone.
pub fn model_census(cfg: &ExperimentConfig) -> Result<CensusReport> {
    cfg.validate()?;
    let (point, census) = census_point(cfg.model.clone(), cfg.grid)?;
    Ok(CensusReport { header: ReportHeader::new("census", cfg), points: vec![point], censuses: vec![census] })
}

/// `V_i` and `W` at one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRow {
    pub target: f64,
    pub costs: Vec<f64>,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasipotentialReport {
    pub header: ReportHeader,
    pub kinds: Vec<ProfileKind>,
    pub costs: CostMatrix,
    pub w: Vec<f64>,
    pub w_normalized: Vec<f64>,
    pub argmin: Vec<usize>,
    pub trees: Vec<TreeReport>,
    /// `W(ρ̄_j)` from the cost matrix, family by family.
    pub w_at_families: Vec<f64>,
    pub triangle_violation: Option<(usize, usize)>,
    /// Values along constant targets; all costs are numerical upper
    /// estimates, and extending the horizon grid can only lower them.
    pub landscape: Vec<LandscapeRow>,
}

impl QuasipotentialReport {
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let (json, csv_path) = (dir.join("quasipotential.json"), dir.join("landscape.csv"));
        write_json(&json, self)?;
        let mut w = csv::Writer::from_path(&csv_path)?;
        let l = self.w.len();
        let mut header = vec!["target".to_string()];
        header.extend((0..l).map(|i| format!("V_{i}")));
        header.push("W".into());
        w.write_record(&header)?;
        for r in &self.landscape {
            let mut rec = vec![r.target.to_string()];
            rec.extend(r.costs.iter().map(f64::to_string));
            rec.push(r.w.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(vec![json, csv_path])
    }
}

/// Census, cost matrix, arborescence weights and the static rate function
/// along constant targets.
pub fn experiment_quasipotential(cfg: &ExperimentConfig) -> Result<QuasipotentialReport> {
    cfg.validate()?;
    let poly = cfg.model.polynomials()?;
    let census = Census::compute(&poly, cfg.grid)?;
    let vopts = cfg.qp.v_matrix_options();
    let costs = v_matrix(&census, &poly, &vopts)?;
    let tw = TreeWeights::compute(&costs.v)?;
    let l = census.len();
    let w_at_families =
        (0..l).map(|j| w_eval(&(0..l).map(|i| costs.v[i][j]).collect::<Vec<_>>(), &tw)).collect::<Result<Vec<_>>>()?;
    let fd = census.on_fd_grid(cfg.qp.mam_grid, &poly)?;
    let bounds = BoundOptions { slices: cfg.qp.slices, ..BoundOptions::default() };
    let p = cfg.qp.landscape_points;
    let targets: Vec<f64> = (1..=p).map(|k| k as f64 / (p + 1) as f64).collect();
    let landscape = targets
        .par_iter()
        .map(|&s| {
            let target = DensityField::constant(cfg.qp.mam_grid, s)?;
            let costs = fd
                .profiles
                .iter()
                .map(|src| {
                    let mam = mam_minimize(src, &target, &poly, &vopts.mam)?.value;
                    let ub = best_interpolation_cost(&src.field, &target, &poly, &bounds)?.0;
                    Ok(mam.min(ub))
                })
                .collect::<Result<Vec<_>>>()?;
            let w = w_eval(&costs, &tw)?;
            Ok(LandscapeRow { target: s, costs, w })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QuasipotentialReport {
        header: ReportHeader::new("quasipotential", cfg),
        kinds: census.profiles.iter().map(|p| p.kind).collect(),
        triangle_violation: tw.triangle_violation(&costs.v, 1e-12),
        trees: tree_report(&costs.v, &tw),
        w: tw.w.clone(),
        w_normalized: tw.normalized.clone(),
        argmin: tw.argmin.clone(),
        w_at_families,
        costs,
        landscape,
    })
}

/// Runs the named experiment and writes its outputs to `out`; returns the
/// JSON report and the written files.
pub fn run_experiment(name: &str, cfg: &ExperimentConfig, out: &Path) -> Result<(serde_json::Value, Vec<PathBuf>)> {
    fs::create_dir_all(out)?;
    macro_rules! emit {
        ($r:expr) => {{
            let r = $r;
            let files = r.write_to(out)?;
            (serde_json::to_value(&r)?, files)
        }};
    }
    Ok(match name {
        "hydrodynamics" => emit!(experiment_hydrodynamics(cfg)?),
        "hydrostatics" => emit!(experiment_hydrostatics(cfg)?),
        "census" => emit!(experiment_census(cfg)?),
        "quasipotential" => emit!(experiment_quasipotential(cfg)?),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown experiment {other:?}; expected one of {EXPERIMENTS:?}"
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_and_hash_is_stable() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.hash(), back.hash());
        let other = ExperimentConfig { seed: 2, ..cfg.clone() };
        assert_ne!(cfg.hash(), other.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        assert!(ExperimentConfig::from_json(r#"{"version": 2}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"dt": -1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"unknown": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"model": {"kind": "triple", "a0": 1, "a1": 0, "a2": 1}}"#).is_err());
        let ok = ExperimentConfig::from_json(r#"{"model": {"kind": "triple", "a0": 17, "a1": 1, "a2": 5}, "n": 32}"#)
            .unwrap();
        assert_eq!(ok.n, 32);
    }

    #[test]
    fn small_hydrodynamics_run_is_reproducible() {
        let cfg = ExperimentConfig {
            n_sweep: vec![32, 64],
            replicas: 3,
            horizon: 0.02,
            grid: 64,
            dt: 1e-3,
            ..ExperimentConfig::default()
        };
        let a = experiment_hydrodynamics(&cfg).unwrap();
        let b = experiment_hydrodynamics(&cfg).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.rows.len(), 2 * 3 * 3);
        assert!(a.rows.iter().all(|r| r.distance >= 0.0));
    }

    #[test]
    fn census_sweep_counts() {
        let cfg = ExperimentConfig { a_sweep: vec![0.5, 5.5], grid: 128, ..ExperimentConfig::default() };
        let r = experiment_census(&cfg).unwrap();
        assert_eq!(r.counts(), vec![(0.5, 3), (5.5, 4)]);
        assert_eq!(r.points[0].literal_branches, 12);
    }
}
