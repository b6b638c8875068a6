//! Command-line front end for the experiment runners.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 when a numerical
//! flag was raised (boundary critical point) with partial results written.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use levelset_lab::experiment::{self, ExperimentConfig, SeedRange};
use levelset_lab::Error;

#[derive(Parser)]
#[command(
    name = "levelset-lab",
    about = "Level-set laboratory for stationary Gaussian fields",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's seed range, e.g. 0..200.
    #[arg(long, global = true, value_name = "A..B")]
    seed_range: Option<String>,

    /// Output directory (overrides the config's `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the config's grid resolution.
    #[arg(long, global = true)]
    grid_n: Option<usize>,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Dump one field realization (jet grid + optional level polylines).
    Sample,
    /// Validate a spectral measure and report its moments.
    Measure,
    /// Divergence-identity residual suite over seeds and grids.
    Identity,
    /// Monte Carlo nodal length versus the Kac-Rice expectation.
    Kacrice,
    /// Conditional curvature estimates against -a E|grad f|.
    Condcurv,
    /// Optimal transport plan and coupling diagnostics for two measures.
    Couple,
    /// Coupled-pair scaling study of E|delta H| versus sigma_D.
    Scaling,
    /// Product-Gaussian sign probability versus the arccos formula.
    Productgauss,
}

fn run(cli: &Cli) -> Result<i32, Error> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }

    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let mut cfg = ExperimentConfig::from_file(config_path)?;
    if let Some(sr) = &cli.seed_range {
        cfg.seed_range = sr.parse::<SeedRange>()?;
    }
    if let Some(n) = cli.grid_n {
        cfg.domain.grid_n = n;
    }
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));

    match &cli.command {
        Command::Sample => {
            let s = experiment::run_sample(&cfg, &out_dir)?;
            println!("wrote {} (seed {})", s.dump_path, s.seed);
        }
        Command::Measure => {
            let r = experiment::run_measure(&cfg, &out_dir)?;
            println!(
                "measure: {} atoms, {}",
                r.atom_count,
                if r.valid { "non-degenerate" } else { "DEGENERATE" }
            );
        }
        Command::Identity => {
            let s = experiment::run_identity_suite(&cfg, &out_dir)?;
            println!(
                "identity: median normalized residual {:.4} (grid {}) / {:.4} (grid {})",
                s.fine.q50, s.fine.grid_n, s.coarse.q50, s.coarse.grid_n
            );
            if !s.flagged_seeds.is_empty() {
                eprintln!(
                    "numerical flag: boundary critical points on seeds {:?}",
                    s.flagged_seeds
                );
                return Ok(3);
            }
        }
        Command::Kacrice => {
            let s = experiment::run_kac_rice(&cfg, &out_dir)?;
            println!(
                "kacrice: mean {:.4} +- {:.4}, oracle {:.4}, z = {:.2}",
                s.mean_length, s.standard_error, s.oracle, s.z_score
            );
        }
        Command::Condcurv => {
            let s = experiment::run_conditional_curvature(&cfg, &out_dir)?;
            for row in &s.rows {
                println!(
                    "condcurv: a = {:+.3} h = {:.3}: {:+.4} +- {:.4} (oracle {:+.4})",
                    row.level, row.bandwidth, row.estimate, row.standard_error, row.oracle
                );
            }
        }
        Command::Couple => {
            let s = experiment::run_couple(&cfg, &out_dir)?;
            println!(
                "couple: cost {:.6e}, sigma_D {:.6e}, proxy {:.6e}",
                s.cost, s.sigma_d, s.sigma_bound_proxy
            );
        }
        Command::Scaling => {
            let s = experiment::run_scaling_study(&cfg, &out_dir)?;
            println!(
                "scaling: spearman {:.3}, slope {}",
                s.spearman,
                s.slope.as_ref().map_or("n/a".to_string(), |f| format!(
                    "{:.3} [{:.3}, {:.3}]",
                    f.slope, f.ci95_lo, f.ci95_hi
                ))
            );
        }
        Command::Productgauss => {
            let s = experiment::run_product_gaussian(&cfg, &out_dir)?;
            for row in &s.rows {
                println!(
                    "productgauss: rho = {:+.2}: mc {:.5} vs formula {:.5} (z = {:+.2})",
                    row.rho, row.mc_estimate, row.formula, row.z_score
                );
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
