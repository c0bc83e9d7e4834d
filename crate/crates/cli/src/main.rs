//! `billiard`: batch runs of the barrier-billiard toolkit.
//!
//! Each run reads an optional JSON config, applies flag overrides, computes
//! everything in memory and only then writes its CSV files and
//! `manifest.json` into one output directory. Exit codes: 0 success,
//! 2 validation, 3 numerical abort, 4 I/O.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{
    CommandName, EnsembleChoice, EnsembleConfig, GeometryConfig, NumericsConfig, RunConfig, ScanConfig,
};
use error::{CliError, CliResult};

/// Environment variable naming the default output root.
const OUTPUT_ROOT_VAR: &str = "BILLIARD_OUTPUT_ROOT";

#[derive(Debug, Parser)]
#[command(name = "billiard", version, about = "Barrier billiard spectra, transfer operators and random-matrix ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Wiener-Hopf factor K+ along a real alpha sweep.
    Kplus(KplusArgs),
    /// Scattering and transfer matrices at one wavenumber.
    Smatrix(SmatrixArgs),
    /// Nearest-neighbour spacing histogram of a random-matrix ensemble.
    Ensemble(EnsembleArgs),
    /// P_n, form factor and number variance of an ensemble.
    Stats(EnsembleArgs),
    /// Periodic orbits, Q-matrix checks and (with --k-max) the length spectrum.
    Trace(TraceArgs),
    /// Eigen-wavenumbers from the secular scan.
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: $BILLIARD_OUTPUT_ROOT/<command>, else runs/<command>).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct GeometryArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Neumann part of the barrier.
    #[arg(long)]
    h1: Option<f64>,
}

impl GeometryArgs {
    fn config(&self) -> GeometryConfig {
        GeometryConfig {
            a: self.a,
            b: self.b,
            h1: self.h1,
        }
    }
}

#[derive(Debug, Args)]
struct KplusArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    k: Option<f64>,
    /// Slab width (default 1).
    #[arg(long)]
    b: Option<f64>,
    /// Real alpha values as lo:hi:step.
    #[arg(long)]
    alpha_sweep: Option<String>,
    #[arg(long)]
    n_terms: Option<usize>,
}

#[derive(Debug, Args)]
struct SmatrixArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    geometry: GeometryArgs,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    n_evanescent: Option<usize>,
    #[arg(long)]
    n_terms: Option<usize>,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    kind: Option<EnsembleChoice>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    realisations: Option<usize>,
    /// Lax coupling: 0.5 or 1/(2 dim).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    s_max: Option<f64>,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    geometry: GeometryArgs,
    #[arg(long)]
    l_max: Option<f64>,
    /// Q-matrix truncation R.
    #[arg(long)]
    q_dim: Option<usize>,
    #[arg(long)]
    k_min: Option<f64>,
    /// Also scan the spectrum up to this wavenumber and write its length spectrum.
    #[arg(long)]
    k_max: Option<f64>,
    #[arg(long)]
    dk: Option<f64>,
    #[arg(long)]
    n_evanescent: Option<usize>,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    geometry: GeometryArgs,
    #[arg(long)]
    k_min: Option<f64>,
    #[arg(long)]
    k_max: Option<f64>,
    #[arg(long)]
    dk: Option<f64>,
    #[arg(long)]
    n_evanescent: Option<usize>,
    #[arg(long)]
    n_terms: Option<usize>,
}

impl Command {
    fn name(&self) -> CommandName {
        match self {
            Self::Kplus(_) => CommandName::Kplus,
            Self::Smatrix(_) => CommandName::Smatrix,
            Self::Ensemble(_) => CommandName::Ensemble,
            Self::Stats(_) => CommandName::Stats,
            Self::Trace(_) => CommandName::Trace,
            Self::Spectrum(_) => CommandName::Spectrum,
        }
    }

    fn common(&self) -> &Common {
        match self {
            Self::Kplus(a) => &a.common,
            Self::Smatrix(a) => &a.common,
            Self::Ensemble(a) | Self::Stats(a) => &a.common,
            Self::Trace(a) => &a.common,
            Self::Spectrum(a) => &a.common,
        }
    }

    /// The flags as a sparse config.
    fn overrides(&self) -> RunConfig {
        let common = self.common();
        let mut c = RunConfig {
            command: Some(self.name()),
            seed: common.seed,
            output_dir: common.output_dir.clone(),
            ..RunConfig::default()
        };
        match self {
            Self::Kplus(a) => {
                c.geometry.b = a.b;
                c.scan = ScanConfig {
                    k: a.k,
                    alpha_sweep: a.alpha_sweep.clone(),
                    ..ScanConfig::default()
                };
                c.numerics.n_terms = a.n_terms;
            }
            Self::Smatrix(a) => {
                c.geometry = a.geometry.config();
                c.scan.k = a.k;
                c.numerics.n_evanescent = a.n_evanescent;
                c.numerics.n_terms = a.n_terms;
            }
            Self::Ensemble(a) | Self::Stats(a) => {
                c.ensemble = EnsembleConfig {
                    kind: a.kind,
                    dim: a.dim,
                    realisations: a.realisations,
                    alpha: a.alpha,
                };
                c.numerics.bins = a.bins;
                c.numerics.s_max = a.s_max;
            }
            Self::Trace(a) => {
                c.geometry = a.geometry.config();
                c.numerics = NumericsConfig {
                    l_max: a.l_max,
                    q_dim: a.q_dim,
                    dk: a.dk,
                    n_evanescent: a.n_evanescent,
                    ..NumericsConfig::default()
                };
                c.scan.k_min = a.k_min;
                c.scan.k_max = a.k_max;
            }
            Self::Spectrum(a) => {
                c.geometry = a.geometry.config();
                c.scan.k_min = a.k_min;
                c.scan.k_max = a.k_max;
                c.numerics.dk = a.dk;
                c.numerics.n_evanescent = a.n_evanescent;
                c.numerics.n_terms = a.n_terms;
            }
        }
        c
    }
}

fn resolve(command: &Command) -> CliResult<RunConfig> {
    let file = match &command.common().config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(named) = file.command {
        if named != command.name() {
            return Err(CliError::validation(
                "command",
                format!("config file is for `{}`, not `{}`", named.as_str(), command.name().as_str()),
            ));
        }
    }
    let mut config = command.overrides().over(file);
    if config.output_dir.is_none() {
        let root = std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
        config.output_dir = Some(root.join(command.name().as_str()));
    }
    Ok(config)
}

fn run(command: &Command) -> CliResult<PathBuf> {
    let start = Instant::now();
    let config = resolve(command)?;
    let artifacts = match command.name() {
        CommandName::Kplus => commands::kplus(&config),
        CommandName::Smatrix => commands::smatrix(&config),
        CommandName::Ensemble => commands::ensemble(&config),
        CommandName::Stats => commands::stats(&config),
        CommandName::Trace => commands::trace(&config),
        CommandName::Spectrum => commands::spectrum(&config),
    }?;
    let dir = config.output_dir.clone().expect("resolved above");
    output::write_run(&dir, command.name().as_str(), &config, &artifacts, start.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
