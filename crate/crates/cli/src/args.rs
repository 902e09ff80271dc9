use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Format, ModelChoice, Observable, RunSection};

/// Magnon dynamics in long-range trapped-ion spin chains.
///
/// Values are resolved flag > config file > built-in default. Couplings come
/// from `--couplings` if given, otherwise from the [trap] and [beam] config
/// sections, otherwise from a synthetic power law J̄/|i−j|^α on `--n` sites.
#[derive(Debug, Parser)]
#[command(name = "magnon", version)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML file with [trap], [beam] and [run] sections.
    #[arg(short = 'c', long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $MAGNON_OUT_DIR, else the working directory].
    #[arg(short = 'o', long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(short = 's', long, global = true)]
    pub seed: Option<u64>,
    #[arg(short = 'm', long, global = true, value_enum)]
    pub model: Option<ModelChoice>,
    /// Coupling matrix CSV with a `# unit: rad/s|hz` line.
    #[arg(short = 'J', long, global = true)]
    pub couplings: Option<PathBuf>,
    /// Chain length for synthetic couplings.
    #[arg(short = 'n', long, global = true)]
    pub n: Option<usize>,
    /// Power-law exponent for synthetic couplings.
    #[arg(short = 'a', long, global = true)]
    pub alpha: Option<f64>,
    /// Nearest-neighbour coupling J̄/2π for synthetic couplings, Hz.
    #[arg(long, global = true)]
    pub jbar_hz: Option<f64>,
    /// Transverse field B/2π, Hz (Ising model only).
    #[arg(short = 'B', long, global = true)]
    pub field_hz: Option<f64>,
    /// First output time, s.
    #[arg(long, global = true)]
    pub t_start: Option<f64>,
    /// Last output time, s.
    #[arg(short = 't', long, global = true)]
    pub t_end: Option<f64>,
    #[arg(short = 'p', long, global = true)]
    pub n_points: Option<usize>,
    #[arg(short = 'f', long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium positions and transverse normal modes of the trap.
    Modes,
    /// Coupling matrix J_ij in rad/s.
    Couplings,
    /// Magnon dispersion and power-law exponent fits.
    Dispersion,
    /// Local quench from the all-down state.
    Quench {
        /// Sites to flip, 1-based.
        #[arg(long, value_delimiter = ',')]
        flip: Vec<usize>,
        #[arg(long, value_delimiter = ',', value_enum)]
        observables: Vec<Observable>,
    },
    /// Every spin prepared in (|↓⟩ + |↑⟩)/√2.
    GlobalQuench {
        #[arg(long, value_delimiter = ',', value_enum)]
        observables: Vec<Observable>,
    },
    /// Simulated two-spin tomography with projection noise.
    Tomo {
        #[arg(long, value_delimiter = ',')]
        flip: Vec<usize>,
        /// Sites of the measured pair, 1-based, e.g. `3,5`.
        #[arg(long, value_parser = parse_pair)]
        pair: Option<[usize; 2]>,
        /// Evolution time before measurement, s (defaults to t_end).
        #[arg(long)]
        time: Option<f64>,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        resamples: Option<usize>,
    },
    /// Nearest-neighbour light cone and Lieb–Robinson bound grid.
    Lightcone,
    /// Fits to previously written data.
    Fit {
        /// Magnetisation CSV (t_s,site,sz) for arrival and front fits.
        #[arg(long, requires = "source")]
        magnetisation: Option<PathBuf>,
        /// Quench site of the magnetisation data, 1-based.
        #[arg(long)]
        source: Option<usize>,
        /// Dispersion CSV (n,k_n,omega_rad_s,node_count) for an α fit.
        #[arg(long)]
        dispersion: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::Couplings => "couplings",
            Command::Dispersion => "dispersion",
            Command::Quench { .. } => "quench",
            Command::GlobalQuench { .. } => "global-quench",
            Command::Tomo { .. } => "tomo",
            Command::Lightcone => "lightcone",
            Command::Fit { .. } => "fit",
        }
    }
}

impl Cli {
    /// Flag values as a [run] section, for overlaying on the config file.
    pub fn overrides(&self) -> RunSection {
        let c = &self.common;
        let mut run = RunSection {
            model: c.model,
            t_start: c.t_start,
            t_end: c.t_end,
            n_points: c.n_points,
            seed: c.seed,
            output_dir: c.out_dir.clone(),
            format: c.format,
            field_hz: c.field_hz,
            n: c.n,
            alpha: c.alpha,
            jbar_hz: c.jbar_hz,
            couplings: c.couplings.clone(),
            ..RunSection::default()
        };
        let non_empty = |v: &Vec<usize>| (!v.is_empty()).then(|| v.clone());
        match &self.command {
            Command::Quench { flip, observables } => {
                run.flip = non_empty(flip);
                run.observables = (!observables.is_empty()).then(|| observables.clone());
            }
            Command::GlobalQuench { observables } => {
                run.observables = (!observables.is_empty()).then(|| observables.clone());
            }
            Command::Tomo { flip, pair, time, shots, resamples } => {
                run.flip = non_empty(flip);
                run.pair = *pair;
                run.time = *time;
                run.shots = *shots;
                run.resamples = *resamples;
            }
            _ => {}
        }
        run
    }
}

fn parse_pair(s: &str) -> Result<[usize; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts[..] {
        [a, b] => Ok([a.parse().map_err(|e| format!("{a}: {e}"))?, b.parse().map_err(|e| format!("{b}: {e}"))?]),
        _ => Err(format!("expected two comma-separated sites, got `{s}`")),
    }
}
