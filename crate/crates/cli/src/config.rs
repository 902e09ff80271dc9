use std::path::{Path, PathBuf};

use clap::ValueEnum;
use magnon_core::{BeamProfile, TrapConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MAGNON_OUT_DIR";

pub const DEFAULT_ALPHA: f64 = 1.36;
/// J̄/2π of the seven-ion trap at the detuning that yields α ≈ 1.36.
pub const DEFAULT_JBAR_HZ: f64 = 160.0;
/// Ising transverse field in units of max |J_ij| when none is configured.
pub const DEFAULT_FIELD_RATIO: f64 = 50.0;
pub const DEFAULT_N_POINTS: usize = 101;
/// Default t_end in units of 1/J̄.
pub const DEFAULT_DURATION: f64 = 10.0;
pub const DEFAULT_SHOTS: u64 = 1000;
pub const DEFAULT_RESAMPLES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Ising,
    Xy,
    /// One-excitation sector of the XY model, via the magnon eigenmodes.
    SingleExcitation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Ndjson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Magnetisation,
    Correlations,
    AveragedCorrelations,
}

/// Contents of a TOML config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub trap: Option<TrapConfig>,
    pub beam: Option<BeamProfile>,
    #[serde(default)]
    pub run: RunSection,
}

/// Run options; every field is optional so flags can be overlaid.
/// Sites are 1-based, frequencies in Hz, times in seconds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub model: Option<ModelChoice>,
    pub flip: Option<Vec<usize>>,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub n_points: Option<usize>,
    pub observables: Option<Vec<Observable>>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub field_hz: Option<f64>,
    pub n: Option<usize>,
    pub alpha: Option<f64>,
    pub jbar_hz: Option<f64>,
    pub couplings: Option<PathBuf>,
    pub pair: Option<[usize; 2]>,
    pub time: Option<f64>,
    pub shots: Option<u64>,
    pub resamples: Option<usize>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        RunSection { $($field: $top.$field.or($base.$field)),* }
    };
}

impl RunSection {
    /// Fields set in `top` win.
    pub fn overlay(self, top: RunSection) -> RunSection {
        overlay!(
            self, top, model, flip, t_start, t_end, n_points, observables, seed, output_dir, format, field_hz, n, alpha,
            jbar_hz, couplings, pair, time, shots, resamples
        )
    }
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| e.context(&path.display().to_string()))
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| CliError::config(e.to_string().trim_end().to_string()))?;
        if let Some(trap) = &cfg.trap {
            trap.validate().map_err(|e| CliError::config(format!("[trap] {e}")))?;
        }
        if let Some(beam) = &cfg.beam {
            beam.validate().map_err(|e| CliError::config(format!("[beam] {e}")))?;
        }
        Ok(cfg)
    }
}

/// Everything that determines the outputs of one invocation, hashed into
/// every file header. The output directory is left out so relocating a
/// run does not change its bytes.
#[derive(Debug, Serialize)]
struct HashInput<'a> {
    command: &'a str,
    trap: &'a Option<TrapConfig>,
    beam: &'a Option<BeamProfile>,
    run: &'a RunSection,
    /// (role, sha256) of every input file.
    inputs: &'a [(String, String)],
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn config_hash(
    command: &str,
    cfg: &ConfigFile,
    run: &RunSection,
    inputs: &[(String, String)],
) -> CliResult<String> {
    let mut run = run.clone();
    run.output_dir = None;
    let input = HashInput { command, trap: &cfg.trap, beam: &cfg.beam, run: &run, inputs };
    let text = toml::to_string(&input).map_err(|e| CliError::config(e.to_string()))?;
    Ok(sha256_hex(text.as_bytes()))
}

/// Output directory: flag or config, else $MAGNON_OUT_DIR, else ".".
pub fn output_dir(run: &RunSection) -> PathBuf {
    run.output_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
[trap]
n_ions = 7
axial_freq = 219e3
transverse_freq_x = 2.655e6
transverse_freq_y = 2.628e6
detuning = 2.695e6
ion_mass = 6.6359e-26
laser_wavelength = 729e-9

[beam]
peak_rabi = 125e3
waist_along_chain = 380e-6
waist_transverse = 22e-6

[run]
model = "single_excitation"
flip = [4]
t_end = 0.01
observables = ["magnetisation", "averaged_correlations"]
"#;

    #[test]
    fn parses_example() {
        let cfg = ConfigFile::parse(EXAMPLE).unwrap();
        assert_eq!(cfg.trap.as_ref().unwrap().n_ions, 7);
        assert_eq!(cfg.trap.as_ref().unwrap().transverse_field, 0.0);
        assert_eq!(cfg.beam.as_ref().unwrap().center_offset, 0.0);
        assert_eq!(cfg.run.model, Some(ModelChoice::SingleExcitation));
        assert_eq!(cfg.run.observables.as_ref().unwrap()[1], Observable::AveragedCorrelations);
    }

    #[test]
    fn reports_line_of_bad_field() {
        let err = ConfigFile::parse("[run]\nn_points = \"many\"\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = ConfigFile::parse("[run]\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn rejects_invalid_trap() {
        let bad = EXAMPLE.replace("transverse_freq_y = 2.628e6", "transverse_freq_y = 1e5");
        let err = ConfigFile::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("transverse_freq_y"), "{err}");
    }

    #[test]
    fn flags_override_file() {
        let file = RunSection { n: Some(7), alpha: Some(1.0), seed: Some(3), ..RunSection::default() };
        let flags = RunSection { alpha: Some(0.75), ..RunSection::default() };
        let run = file.overlay(flags);
        assert_eq!((run.n, run.alpha, run.seed), (Some(7), Some(0.75), Some(3)));
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let cfg = ConfigFile::default();
        let a = RunSection { n: Some(7), output_dir: Some("x".into()), ..RunSection::default() };
        let b = RunSection { output_dir: Some("y".into()), ..a.clone() };
        let c = RunSection { seed: Some(1), ..a.clone() };
        let h = |r: &RunSection| config_hash("quench", &cfg, r, &[]).unwrap();
        assert_eq!(h(&a), h(&b));
        assert_ne!(h(&a), h(&c));
        assert_eq!(h(&a).len(), 64);
    }
}
