use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rdld::driver::{model_census, run_experiment, ExperimentConfig, EXPERIMENTS};
use rdld::elliptic::Census;
use rdld::fwgraph::{tree_report, TreeWeights};
use rdld::ldp::rate_report;
use rdld::model::{kmc_run, replica_rng, write_snapshots, LatticeConfig};
use rdld::pde::{hydro_solve, DensityField, DensityPath, HydroOptions};
use rdld::quasipotential::{v_matrix, CostMatrix};

/// Reaction-diffusion lattice gas: simulation, hydrodynamics, stationary
/// solutions, rate functionals and quasi-potentials.
#[derive(Debug, Parser)]
#[command(name = "rdld", version)]
struct Cli {
    /// JSON experiment configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the particle system and record snapshots every `thinning`.
    Simulate,
    /// Solve the hydrodynamic equation from the configured initial profile.
    Hydro {
        /// Number of saved frames.
        #[arg(long, default_value_t = 100)]
        frames: usize,
    },
    /// Stationary families of the configured model.
    Census,
    /// Evaluate the rate functional of a path stored as CSV.
    RateEval {
        #[arg(long)]
        path: PathBuf,
    },
    /// Cost matrix between the stationary families.
    Qp,
    /// Arborescence weights of a cost matrix (computed when not given).
    Fw {
        /// JSON cost matrix as written by `qp`.
        #[arg(long)]
        costs: Option<PathBuf>,
    },
    /// Run a named experiment.
    Experiment {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(EXPERIMENTS))]
        name: String,
    },
}

fn load_config(cli: &Cli, preset: Option<&str>) -> Result<ExperimentConfig> {
    let mut cfg = match (&cli.config, preset) {
        (Some(p), _) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn compute_costs(cfg: &ExperimentConfig) -> Result<CostMatrix> {
    let poly = cfg.model.polynomials()?;
    let census = Census::compute(&poly, cfg.grid)?;
    Ok(v_matrix(&census, &poly, &cfg.qp.v_matrix_options())?)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let out = cli.out.clone();
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    match &cli.command {
        Command::Simulate => {
            let cfg = load_config(&cli, None)?;
            let rates = cfg.model.rates()?;
            let gamma = cfg.initial;
            let init = LatticeConfig::sample_product(cfg.n, |t| gamma.eval(t), &mut replica_rng(cfg.seed, u64::MAX));
            let steps = (cfg.horizon / cfg.thinning).floor() as usize;
            let times: Vec<f64> = (0..=steps).map(|k| k as f64 * cfg.thinning).collect();
            let snaps = kmc_run(&init, &rates, cfg.horizon, cfg.seed, &times)?;
            let path = out.join("snapshots.txt");
            write_snapshots(BufWriter::new(File::create(&path)?), &snaps)?;
            println!("{}", path.display());
        }
        Command::Hydro { frames } => {
            let cfg = load_config(&cli, None)?;
            let poly = cfg.model.polynomials()?;
            let gamma = DensityField::from_fn(cfg.grid, |t| cfg.initial.eval(t))?;
            let opts = HydroOptions::for_frames(cfg.dt, cfg.horizon, *frames)?;
            let sol = hydro_solve(&gamma, cfg.horizon, &poly, &opts)?;
            let path = out.join("hydro.csv");
            sol.write_csv(BufWriter::new(File::create(&path)?))?;
            println!("{}", path.display());
        }
        Command::Census => {
            let cfg = load_config(&cli, None)?;
            let report = model_census(&cfg)?;
            for p in report.write_to(&out)? {
                println!("{}", p.display());
            }
        }
        Command::RateEval { path } => {
            let cfg = load_config(&cli, None)?;
            let poly = cfg.model.polynomials()?;
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let report = rate_report(&DensityPath::read_csv(BufReader::new(file))?, &poly)?;
            write_json(&out.join("rate.json"), &report)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Qp => {
            let cfg = load_config(&cli, None)?;
            let costs = compute_costs(&cfg)?;
            let path = out.join("costs.json");
            fs::write(&path, costs.to_json()? + "\n")?;
            println!("{}", path.display());
        }
        Command::Fw { costs } => {
            let v = match costs {
                Some(p) => {
                    CostMatrix::from_json(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?
                }
                None => compute_costs(&load_config(&cli, None)?)?,
            };
            let tw = TreeWeights::compute(&v.v)?;
            let report = serde_json::json!({
                "w": tw.w,
                "w_normalized": tw.normalized,
                "argmin": tw.argmin,
                "trees": tree_report(&v.v, &tw),
                "triangle_violation": tw.triangle_violation(&v.v, 1e-12),
            });
            write_json(&out.join("fw.json"), &report)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Experiment { name } => {
            let cfg = load_config(&cli, Some(name))?;
            let (_, files) = run_experiment(name, &cfg, &out)?;
            for p in files {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}
