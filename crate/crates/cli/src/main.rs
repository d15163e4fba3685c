use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use wpdgmres::diagnostics::rho_bound_pde;
use wpdgmres::experiment::{
    emit_plots, inspect_pencil, run_experiment, write_outputs, write_spectra, ExperimentConfig, ProblemSource,
};
use wpdgmres::problems::{assemble_cdr, save_bundle, structured_mesh};
use wpdgmres::Error;

const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_BOUND_VIOLATION: u8 = 3;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser)]
#[command(name = "wpdgmres", version, about = "Weighted, preconditioned, deflated GMRES experiments")]
struct Cli {
    /// Worker threads for independent runs (default: all cores).
    #[arg(long, global = true, env = "WPDGMRES_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, env = "WPDGMRES_CONFIG")]
    config: PathBuf,

    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, env = "WPDGMRES_OUT")]
    out: Option<PathBuf>,

    /// Random seed; overrides `seed` from the config.
    #[arg(long, env = "WPDGMRES_SEED")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured sweep and write tables, residual histories and plot scripts.
    Run {
        #[command(flatten)]
        common: Common,
        /// Exit with status 3 if any applicable convergence bound is violated.
        #[arg(long, env = "WPDGMRES_STRICT")]
        strict: bool,
    },
    /// Print and save the largest pencil eigenvalues in modulus.
    Inspect {
        #[command(flatten)]
        common: Common,
        /// Number of eigenvalues to report.
        #[arg(long, default_value_t = 200)]
        top: usize,
    },
    /// Assemble the model problem and write it as a bundle directory.
    Assemble {
        /// Cells per axis.
        #[arg(long, default_value_t = 32)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        c0: f64,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, env = "WPDGMRES_OUT")]
        out: PathBuf,
    },
}

/// Any failure to read or validate the configuration.
#[derive(Debug)]
struct ConfigFailure(Error);

impl std::fmt::Display for ConfigFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for ConfigFailure {}

fn load_config(common: &Common) -> Result<ExperimentConfig, ConfigFailure> {
    let mut cfg = ExperimentConfig::load(&common.config).map_err(ConfigFailure)?;
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn is_config_error(e: &anyhow::Error) -> bool {
    e.downcast_ref::<ConfigFailure>().is_some()
        || matches!(
            e.downcast_ref::<Error>(),
            Some(Error::Config(_) | Error::Parse { .. } | Error::InvalidArgument(_))
        )
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Run { common, strict } => {
            let cfg = load_config(&common)?;
            let outcome = run_experiment(&cfg)?;
            write_outputs(&outcome, &cfg.output_dir)?;
            emit_plots(&outcome.records, &cfg.output_dir)?;
            for r in &outcome.records {
                println!(
                    "{:<48} iter {:>5}  conv {:<5}  theta_th {:.3e}  theta_exp {}  bound {}",
                    r.id,
                    r.report.iterations,
                    r.report.converged,
                    r.bound.theta_th,
                    r.bound.theta_exp.map_or("NA".into(), |t| format!("{t:.3e}")),
                    if !r.bound_applicable { "n/a" } else if r.bound_violated() { "VIOLATED" } else { "ok" }
                );
            }
            println!("results written to {}", cfg.output_dir.display());
            if strict && outcome.any_bound_violation() {
                return Ok(EXIT_BOUND_VIOLATION);
            }
            if !outcome.all_converged() {
                return Ok(EXIT_NOT_CONVERGED);
            }
            Ok(0)
        }
        Command::Inspect { common, top } => {
            let cfg = load_config(&common)?;
            let tables = inspect_pencil(&cfg, top)?;
            write_spectra(&tables, &cfg.output_dir)?;
            let bound_params = match &cfg.problem {
                ProblemSource::Generated { c0, nu, .. } => Some((*nu, *c0)),
                _ => None,
            };
            for t in &tables {
                let bound = bound_params.map(|(nu, c0)| rho_bound_pde(nu, c0, t.eta)).transpose()?;
                println!("eta = {}{}", t.eta, bound.map_or(String::new(), |b| format!("  (bound {b:.4})")));
                println!("{:>6}  {:>22}", "index", "|lambda|");
                for (i, v) in t.abs_lambda.iter().enumerate() {
                    println!("{:>6}  {:>22.15e}", i + 1, v);
                }
            }
            Ok(0)
        }
        Command::Assemble { k, c0, nu, eta, out } => {
            let mesh = structured_mesh(k)?;
            let p = assemble_cdr(&mesh, c0, nu, eta)?;
            save_bundle(&out, &p)?;
            mesh.write_tables(out.join("mesh"))?;
            println!("{} unknowns written to {}", p.n(), out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_config_error(&e) { EXIT_CONFIG } else { 1 })
        }
    }
}
