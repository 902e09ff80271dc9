use std::path::{Path, PathBuf};

use magnon_core::analysis::{fit_alpha_dispersion, fit_alpha_realspace, front_from_magnetisation};
use magnon_core::bounds::{lr_bound_bessel, nn_lightcone};
use magnon_core::dynamics::{
    averaged_correlations, build_hamiltonian, evolve_map, magnetisation, prepare_state, two_point_correlations,
    EvolveOptions, Model, QuenchSpec, StateVector,
};
use magnon_core::entanglement::{
    bootstrap, concurrence, measure_all_bases, reduced_density_matrix, tomography_reconstruct, von_neumann_entropy,
    Statistic, Subsystem,
};
use magnon_core::io::{self, Header};
use magnon_core::ionchain::{couplings_from_config, transverse_mode_spectrum, CouplingMatrix};
use magnon_core::magnon::{diagonalize_magnons, SingleExcitationState};
use magnon_core::units::{hz_to_rad, rad_to_hz};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use crate::args::{Cli, Command};
use crate::config::{self, ConfigFile, Format, ModelChoice, Observable, RunSection};
use crate::error::{CliError, CliResult};
use crate::output::{write_artifact, Artifact};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const BIT_ORDER: &str = "bit i set = site i up; site 1 = least significant bit";

/// A file read as pipeline input, kept as bytes so its digest enters the
/// config hash.
struct Input {
    path: PathBuf,
    bytes: Vec<u8>,
}

impl Input {
    fn read(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Ok(Self { path: path.to_path_buf(), bytes })
    }

    fn digest(&self) -> String {
        config::sha256_hex(&self.bytes)
    }
}

struct Context {
    command: &'static str,
    file: ConfigFile,
    run: RunSection,
    hash: String,
    out_dir: PathBuf,
    imported: Option<CouplingMatrix>,
}

pub fn run(cli: &Cli) -> CliResult<Vec<Artifact>> {
    let file = match &cli.common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let run = file.run.clone().overlay(cli.overrides());
    let couplings = run.couplings.as_deref().map(Input::read).transpose()?;
    let (fit_mag, fit_disp, source) = match &cli.command {
        Command::Fit { magnetisation, dispersion, source } => {
            (magnetisation.as_deref().map(Input::read).transpose()?, dispersion.as_deref().map(Input::read).transpose()?, *source)
        }
        _ => (None, None, None),
    };
    let digests: Vec<(String, String)> = [("couplings", &couplings), ("magnetisation", &fit_mag), ("dispersion", &fit_disp)]
        .into_iter()
        .filter_map(|(name, input)| input.as_ref().map(|i| (name.to_string(), i.digest())))
        .collect();
    let hash = config::config_hash(cli.command.name(), &file, &run, &digests)?;

    let imported = match &couplings {
        Some(input) => {
            let label = input.path.display().to_string();
            let (j, report) = io::read_couplings_csv(input.bytes.as_slice(), &label).map_err(|e| CliError::from(e).context(&label))?;
            for w in &report.warnings {
                eprintln!("warning: {label}: {w}");
            }
            Some(j)
        }
        None => None,
    };
    let ctx = Context { command: cli.command.name(), out_dir: config::output_dir(&run), file, run, hash, imported };

    match &cli.command {
        Command::Modes => modes(&ctx),
        Command::Couplings => couplings_cmd(&ctx),
        Command::Dispersion => dispersion(&ctx),
        Command::Quench { .. } => quench(&ctx, false),
        Command::GlobalQuench { .. } => quench(&ctx, true),
        Command::Tomo { .. } => tomo(&ctx),
        Command::Lightcone => lightcone(&ctx),
        Command::Fit { .. } => fit(&ctx, fit_mag.as_ref(), source, fit_disp.as_ref()),
    }
}

/// NDJSON record carrying the same provenance as a CSV header.
#[derive(Serialize)]
struct Record<'a, T: Serialize> {
    kind: &'a str,
    version: &'a str,
    config_hash: &'a str,
    seed: u64,
    #[serde(flatten)]
    body: T,
}

impl Context {
    fn seed(&self) -> u64 {
        self.run.seed.unwrap_or(0)
    }

    fn header(&self) -> Header {
        Header::new(VERSION, &self.hash, Some(self.seed())).with("command", self.command)
    }

    fn record<'a, T: Serialize>(&'a self, kind: &'a str, body: T) -> Record<'a, T> {
        Record { kind, version: VERSION, config_hash: &self.hash, seed: self.seed(), body }
    }

    fn write(&self, name: &str, file_name: &str, contents: Vec<u8>) -> CliResult<Artifact> {
        write_artifact(&self.out_dir, name, file_name, contents)
    }

    fn couplings(&self) -> CliResult<CouplingMatrix> {
        let j = if let Some(j) = &self.imported {
            j.clone()
        } else if let Some(trap) = &self.file.trap {
            let beam = self.file.beam.as_ref().ok_or_else(|| CliError::config("[trap] given without [beam]"))?;
            couplings_from_config(trap, beam).map_err(|e| CliError::from(e).context("couplings"))?.1
        } else {
            let n = self
                .run
                .n
                .ok_or_else(|| CliError::config("no couplings: pass --couplings, a config with [trap] and [beam], or --n"))?;
            let alpha = self.run.alpha.unwrap_or(config::DEFAULT_ALPHA);
            let jbar = self.run.jbar_hz.unwrap_or(config::DEFAULT_JBAR_HZ);
            if !(alpha.is_finite() && alpha >= 0.0) || !(jbar.is_finite() && jbar != 0.0) {
                return Err(CliError::config(format!("need finite alpha >= 0 and non-zero jbar_hz, got {alpha} and {jbar}")));
            }
            return Ok(CouplingMatrix::power_law(n, hz_to_rad(jbar), alpha)?);
        };
        if let Some(n) = self.run.n {
            if n != j.n() {
                return Err(CliError::config(format!("n = {n} conflicts with the {}-site coupling matrix", j.n())));
            }
        }
        Ok(j)
    }

    fn times(&self, j: &CouplingMatrix) -> CliResult<Vec<f64>> {
        let t_start = self.run.t_start.unwrap_or(0.0);
        let t_end = match self.run.t_end {
            Some(t) => t,
            None => {
                let jbar = j.mean_nearest_neighbour().abs();
                if jbar == 0.0 {
                    return Err(CliError::config("t_end is required when the nearest-neighbour couplings vanish"));
                }
                config::DEFAULT_DURATION / jbar
            }
        };
        let n_points = self.run.n_points.unwrap_or(config::DEFAULT_N_POINTS);
        if n_points < 2 || !(t_start >= 0.0) || !(t_end > t_start) || !t_end.is_finite() {
            return Err(CliError::config(format!(
                "time grid needs n_points >= 2 and t_end > t_start >= 0, got {n_points} points on [{t_start}, {t_end}]"
            )));
        }
        let span = t_end - t_start;
        Ok((0..n_points).map(|i| t_start + span * i as f64 / (n_points - 1) as f64).collect())
    }

    /// B in rad/s: explicit value, else the trap's field, else 50·max|J|.
    fn field(&self, j: &CouplingMatrix) -> f64 {
        if let Some(b) = self.run.field_hz {
            return hz_to_rad(b);
        }
        match &self.file.trap {
            Some(trap) if trap.transverse_field != 0.0 && self.imported.is_none() => hz_to_rad(trap.transverse_field),
            _ => config::DEFAULT_FIELD_RATIO * j.max_abs(),
        }
    }

    /// Flipped sites, 0-based; defaults to the central site.
    fn flips(&self, n: usize) -> CliResult<Vec<usize>> {
        let sites = self.run.flip.clone().unwrap_or_else(|| vec![n.div_ceil(2)]);
        sites
            .iter()
            .map(|&s| {
                if s == 0 || s > n {
                    Err(CliError::config(format!("site {s} outside 1..={n}")))
                } else {
                    Ok(s - 1)
                }
            })
            .collect()
    }

    fn format(&self) -> Format {
        self.run.format.unwrap_or(Format::Csv)
    }
}

fn ndjson_lines<T: Serialize>(records: &[T]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    io::write_ndjson(&mut buf, records)?;
    Ok(buf)
}

fn modes(ctx: &Context) -> CliResult<Vec<Artifact>> {
    let trap = ctx.file.trap.as_ref().ok_or_else(|| CliError::config("`modes` needs a [trap] section"))?;
    let spectrum = transverse_mode_spectrum(trap).map_err(|e| CliError::from(e).context("modes"))?;
    let n = spectrum.n_ions();
    let header = ctx.header().with("detuning_above_top_mode_hz", spectrum.detuning_above_top_mode(trap).to_string());

    let mut columns = vec!["branch".to_string(), "mode".to_string(), "frequency_hz".to_string()];
    columns.extend((1..=n).map(|i| format!("b_{i}")));
    let mut buf = Vec::new();
    header.write(&mut buf)?;
    use std::io::Write;
    writeln!(buf, "{}", columns.join(","))?;
    for (k, mode) in spectrum.modes.iter().enumerate() {
        let cells: Vec<String> = mode.vector.iter().map(|v| v.to_string()).collect();
        writeln!(buf, "{},{},{},{}", mode.branch.name(), k % n + 1, mode.frequency, cells.join(","))?;
    }
    let modes = ctx.write("modes", "modes.csv", buf)?;

    let rows: Vec<Vec<f64>> = spectrum
        .positions
        .iter()
        .zip(spectrum.positions_m())
        .enumerate()
        .map(|(i, (&u, x))| vec![(i + 1) as f64, u, x])
        .collect();
    let mut buf = Vec::new();
    io::write_table_csv(&mut buf, &["site", "u", "x_m"], &rows, &ctx.header())?;
    Ok(vec![modes, ctx.write("positions", "positions.csv", buf)?])
}

fn couplings_cmd(ctx: &Context) -> CliResult<Vec<Artifact>> {
    let j = ctx.couplings()?;
    let mut buf = Vec::new();
    io::write_couplings_csv(&mut buf, &j, &ctx.header())?;
    Ok(vec![ctx.write("couplings", "couplings.csv", buf)?])
}

fn dispersion(ctx: &Context) -> CliResult<Vec<Artifact>> {
    let j = ctx.couplings()?;
    let spectrum = diagonalize_magnons(&j);
    if let magnon_core::magnon::Labeling::Ambiguous(why) = spectrum.labeling() {
        eprintln!("warning: mode labels ambiguous: {why}");
    }
    let header = ctx.header().with("max_group_velocity_sites_per_s", spectrum.max_group_velocity().to_string());
    let mut buf = Vec::new();
    io::write_dispersion_csv(&mut buf, &spectrum, &header)?;
    let table = ctx.write("dispersion", "dispersion.csv", buf)?;

    let disp = fit_alpha_dispersion(&spectrum.dispersion(), j.n()).map_err(|e| CliError::from(e).context("alpha fit"))?;
    let mut records = vec![ctx.record("alpha_fit", json!({ "fit": disp, "input_hash": ctx.hash }))];
    match fit_alpha_realspace(&j) {
        Ok(real) => {
            let difference = real.alpha - disp.alpha;
            records.push(ctx.record("alpha_fit", json!({ "fit": real, "input_hash": ctx.hash, "minus_dispersion_alpha": difference })));
        }
        Err(e) => eprintln!("warning: real-space alpha fit skipped: {e}"),
    }
    Ok(vec![table, ctx.write("alpha_fit", "alpha_fit.ndjson", ndjson_lines(&records)?)?])
}

struct Observed {
    sz: Vec<f64>,
    c: Option<DMatrix<f64>>,
}

fn quench(ctx: &Context, global: bool) -> CliResult<Vec<Artifact>> {
    let j = ctx.couplings()?;
    let n = j.n();
    let times = ctx.times(&j)?;
    let default_model = if global { ModelChoice::Ising } else { ModelChoice::Xy };
    let model = ctx.run.model.unwrap_or(default_model);
    let default_obs: &[Observable] = if global {
        &[Observable::Magnetisation, Observable::Correlations, Observable::AveragedCorrelations]
    } else {
        &[Observable::Magnetisation]
    };
    let observables = ctx.run.observables.clone().unwrap_or_else(|| default_obs.to_vec());
    let need_c = observables.iter().any(|o| *o != Observable::Magnetisation);

    let mut header = ctx.header().with("model", format!("{model:?}").to_lowercase()).with("basis", BIT_ORDER);
    let spec = if global {
        header = header.with("quench", "global");
        QuenchSpec::Global
    } else {
        let flips = ctx.flips(n)?;
        let listed: Vec<String> = flips.iter().map(|s| (s + 1).to_string()).collect();
        header = header.with("quench", format!("local flip={}", listed.join(";")));
        QuenchSpec::local(flips)
    };

    let observed: Vec<Observed> = match model {
        ModelChoice::SingleExcitation => {
            let site = match &spec {
                QuenchSpec::Local { flipped_sites } if flipped_sites.len() == 1 => flipped_sites[0],
                _ => return Err(CliError::config("single_excitation needs exactly one flipped site")),
            };
            let spectrum = diagonalize_magnons(&j);
            spectrum
                .evolve(site, &times)?
                .iter()
                .map(|s| Observed { sz: s.magnetisation(), c: need_c.then(|| s.correlations()) })
                .collect()
        }
        ModelChoice::Ising | ModelChoice::Xy => {
            let core_model = if model == ModelChoice::Ising { Model::Ising } else { Model::Xy };
            let field = ctx.field(&j);
            if model == ModelChoice::Ising {
                header = header.with("field_hz", rad_to_hz(field).to_string());
            }
            let h = build_hamiltonian(&j, field, core_model)?;
            let state = prepare_state(&spec, n)?;
            evolve_map(&state, &h, &times, &EvolveOptions::default(), |_, s| Observed {
                sz: magnetisation(s),
                c: need_c.then(|| two_point_correlations(s)),
            })
            .map_err(|e| CliError::from(e).context("dynamics"))?
        }
    };
    write_trajectory(ctx, &header, &times, &observed, &observables)
}

fn write_trajectory(
    ctx: &Context,
    header: &Header,
    times: &[f64],
    observed: &[Observed],
    observables: &[Observable],
) -> CliResult<Vec<Artifact>> {
    let mut artifacts = Vec::new();
    let sz: Vec<Vec<f64>> = observed.iter().map(|o| o.sz.clone()).collect();
    let c: Vec<DMatrix<f64>> = observed.iter().filter_map(|o| o.c.clone()).collect();
    let header_record = || {
        let mut meta = serde_json::Map::new();
        meta.insert("version".into(), json!(header.version));
        meta.insert("config_hash".into(), json!(header.config_hash));
        meta.insert("seed".into(), json!(header.seed));
        for (k, v) in &header.extra {
            meta.insert(k.clone(), json!(v));
        }
        json!({ "header": meta })
    };
    for obs in observables {
        let (name, buf) = match (obs, ctx.format()) {
            (Observable::Magnetisation, Format::Csv) => {
                let mut buf = Vec::new();
                io::write_magnetisation_csv(&mut buf, times, &sz, header)?;
                ("magnetisation", buf)
            }
            (Observable::Correlations, Format::Csv) => {
                let mut buf = Vec::new();
                io::write_correlations_csv(&mut buf, times, &c, header)?;
                ("correlations", buf)
            }
            (Observable::AveragedCorrelations, Format::Csv) => {
                let rows: Vec<Vec<f64>> = times
                    .iter()
                    .zip(&c)
                    .flat_map(|(&t, m)| {
                        averaged_correlations(m).into_iter().enumerate().map(move |(k, v)| vec![t, (k + 1) as f64, v])
                    })
                    .collect();
                let mut buf = Vec::new();
                io::write_table_csv(&mut buf, &["t_s", "n", "cbar"], &rows, header)?;
                ("averaged_correlations", buf)
            }
            (obs, Format::Ndjson) => {
                let mut records = vec![header_record()];
                for (k, &t) in times.iter().enumerate() {
                    records.push(match obs {
                        Observable::Magnetisation => json!({ "t_s": t, "sz": sz[k] }),
                        Observable::Correlations => {
                            let rows: Vec<Vec<f64>> = c[k].row_iter().map(|r| r.iter().copied().collect()).collect();
                            json!({ "t_s": t, "c": rows })
                        }
                        Observable::AveragedCorrelations => json!({ "t_s": t, "cbar": averaged_correlations(&c[k]) }),
                    });
                }
                let name = match obs {
                    Observable::Magnetisation => "magnetisation",
                    Observable::Correlations => "correlations",
                    Observable::AveragedCorrelations => "averaged_correlations",
                };
                (name, ndjson_lines(&records)?)
            }
        };
        let ext = if ctx.format() == Format::Csv { "csv" } else { "ndjson" };
        artifacts.push(ctx.write(name, &format!("{name}.{ext}"), buf)?);
    }
    Ok(artifacts)
}

fn tomo(ctx: &Context) -> CliResult<Vec<Artifact>> {
    let j = ctx.couplings()?;
    let n = j.n();
    let model = ctx.run.model.unwrap_or(ModelChoice::Xy);
    let [a, b] = ctx.run.pair.ok_or_else(|| CliError::config("tomography needs a pair of sites (--pair i,j)"))?;
    if a == b || a == 0 || b == 0 || a > n || b > n {
        return Err(CliError::config(format!("pair ({a}, {b}) must be two distinct sites in 1..={n}")));
    }
    let time = match ctx.run.time {
        Some(t) => t,
        None => *ctx.times(&j)?.last().expect("time grid has at least two points"),
    };
    if !(time.is_finite() && time >= 0.0) {
        return Err(CliError::config(format!("time must be finite and >= 0, got {time}")));
    }
    let shots = ctx.run.shots.unwrap_or(config::DEFAULT_SHOTS);
    let resamples = ctx.run.resamples.unwrap_or(config::DEFAULT_RESAMPLES);
    let flips = ctx.flips(n)?;

    let state: StateVector = match model {
        ModelChoice::SingleExcitation => {
            let [site] = flips[..] else {
                return Err(CliError::config("single_excitation needs exactly one flipped site"));
            };
            let spectrum = diagonalize_magnons(&j);
            spectrum.propagate(&SingleExcitationState::localized(n, site), time).embed()?
        }
        ModelChoice::Ising | ModelChoice::Xy => {
            let core_model = if model == ModelChoice::Ising { Model::Ising } else { Model::Xy };
            let h = build_hamiltonian(&j, ctx.field(&j), core_model)?;
            let start = prepare_state(&QuenchSpec::local(flips.clone()), n)?;
            if time == 0.0 {
                start
            } else {
                evolve_map(&start, &h, &[time], &EvolveOptions::default(), |_, s| s.clone())?.remove(0)
            }
        }
    };

    let exact = reduced_density_matrix(&state, &[a - 1, b - 1])?;
    let records = measure_all_bases(&exact, shots, ctx.seed())?;
    let reconstructed = tomography_reconstruct(&records, Subsystem::Pair(a - 1, b - 1))?;
    let boot = bootstrap(&records, resamples, &Statistic::Concurrence, ctx.seed())?;

    let header = ctx.header().with("pair", format!("{a};{b}")).with("time_s", time.to_string()).with("shots", shots.to_string());
    let rows: Vec<Vec<f64>> = records
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let mut row = vec![(k + 1) as f64, r.shots as f64];
            row.extend(r.counts.iter().map(|&c| c as f64));
            row
        })
        .collect();
    let basis_names: Vec<String> = records.iter().map(|r| format!("{}{}", r.basis.0.name(), r.basis.1.name())).collect();
    let mut buf = Vec::new();
    io::write_table_csv(&mut buf, &["basis_index", "shots", "n_pp", "n_pm", "n_mp", "n_mm"], &rows, &header.clone().with("bases", basis_names.join(";")))?;
    let counts = ctx.write("tomography_counts", "tomo_counts.csv", buf)?;

    let mut buf = Vec::new();
    io::write_density_csv(&mut buf, &reconstructed, &header)?;
    let rho = ctx.write("density", "density.csv", buf)?;
    let mut buf = Vec::new();
    io::write_density_csv(&mut buf, &exact, &header)?;
    let rho_exact = ctx.write("density_exact", "density_exact.csv", buf)?;

    let report = ctx.record(
        "tomography",
        json!({
            "pair": [a, b],
            "time_s": time,
            "shots_per_basis": shots,
            "concurrence": concurrence(&reconstructed)?,
            "concurrence_sigma": boot.sigma,
            "concurrence_bootstrap_mean": boot.mean,
            "bootstrap_resamples": boot.resamples,
            "concurrence_exact": concurrence(&exact)?,
            "entropy_bits": von_neumann_entropy(&reconstructed)?,
            "entropy_exact_bits": von_neumann_entropy(&exact)?,
        }),
    );
    Ok(vec![counts, rho, rho_exact, ctx.write("tomography", "tomo.ndjson", ndjson_lines(&[report])?)?])
}

fn lightcone(ctx: &Context) -> CliResult<Vec<Artifact>> {
    let j = ctx.couplings()?;
    let n = j.n();
    let params = nn_lightcone(&j)?;
    let times = ctx.times(&j)?;
    let header = ctx.header().with("g_rad_s", params.g.to_string()).with("v_sites_per_s", params.v.to_string());

    let distances: Vec<f64> = (0..n).map(|d| d as f64).collect();
    let mut buf = Vec::new();
    io::write_cone_csv(&mut buf, &distances, params.v, &header)?;
    let cone = ctx.write("cone", "cone.csv", buf)?;

    let mut rows = Vec::with_capacity(n * times.len());
    for d in 0..n {
        for &t in &times {
            rows.push(vec![d as f64, t, lr_bound_bessel(d as u64, t, params.g).map_err(|e| CliError::from(e).context("bound"))?]);
        }
    }
    let mut buf = Vec::new();
    io::write_table_csv(&mut buf, &["d", "t_s", "F"], &rows, &header)?;
    let bound = ctx.write("lr_bound", "lr_bound.csv", buf)?;

    let v_actual = diagonalize_magnons(&j).max_group_velocity();
    let report = ctx.record("lightcone", json!({ "params": params, "max_group_velocity": v_actual }));
    Ok(vec![cone, bound, ctx.write("lightcone", "lightcone.ndjson", ndjson_lines(&[report])?)?])
}

/// Numeric rows of a CSV with `#` comments and the given column header.
fn read_table(input: &Input, columns: &[&str]) -> CliResult<Vec<Vec<f64>>> {
    let label = input.path.display().to_string();
    let text = std::str::from_utf8(&input.bytes).map_err(|e| CliError::config(format!("{label}: {e}")))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let expected = columns.join(",");
    match lines.next() {
        Some((_, h)) if h.trim() == expected => {}
        Some((i, h)) => return Err(CliError::config(format!("{label}:{}: expected header `{expected}`, found `{h}`", i + 1))),
        None => return Err(CliError::config(format!("{label}: empty table"))),
    }
    lines
        .map(|(i, line)| {
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| CliError::config(format!("{label}:{}: {e}", i + 1)))?;
            if row.len() != columns.len() {
                return Err(CliError::config(format!("{label}:{}: expected {} columns", i + 1, columns.len())));
            }
            Ok(row)
        })
        .collect()
}

fn fit(ctx: &Context, magnetisation_csv: Option<&Input>, source: Option<usize>, dispersion_csv: Option<&Input>) -> CliResult<Vec<Artifact>> {
    if magnetisation_csv.is_none() && dispersion_csv.is_none() {
        return Err(CliError::config("`fit` needs --magnetisation or --dispersion"));
    }
    let mut records = Vec::new();
    if let Some(input) = magnetisation_csv {
        let rows = read_table(input, &["t_s", "site", "sz"])?;
        let n = rows.iter().map(|r| r[1] as usize).max().unwrap_or(0);
        if n == 0 || rows.len() % n != 0 {
            return Err(CliError::config(format!("{}: rows do not form a complete time x site grid", input.path.display())));
        }
        let mut times = Vec::new();
        let mut sz = Vec::new();
        for chunk in rows.chunks(n) {
            if chunk.iter().enumerate().any(|(i, r)| r[1] as usize != i + 1 || r[0] != chunk[0][0]) {
                return Err(CliError::config(format!("{}: expected sites 1..={n} in order at every time", input.path.display())));
            }
            times.push(chunk[0][0]);
            sz.push(chunk.iter().map(|r| r[2]).collect::<Vec<f64>>());
        }
        let source = source.ok_or_else(|| CliError::config("--source is required with --magnetisation"))?;
        if source == 0 || source > n {
            return Err(CliError::config(format!("source {source} outside 1..={n}")));
        }
        let (arrivals, front) = front_from_magnetisation(&times, &sz, source - 1).map_err(|e| CliError::from(e).context("arrival fit"))?;
        let digest = input.digest();
        for a in &arrivals {
            records.push(ctx.record(
                "arrival_fit",
                json!({
                    "site": a.site + 1,
                    "t0_s": a.t0,
                    "t0_stderr_s": a.t0_stderr,
                    "width_s": a.width,
                    "amplitude": a.amplitude,
                    "baseline": a.baseline,
                    "goodness": a.goodness,
                    "samples": a.samples,
                    "input_hash": digest,
                }),
            ));
        }
        records.push(ctx.record("front_fit", json!({ "fit": front, "source": source, "input_hash": digest })));
    }
    if let Some(input) = dispersion_csv {
        let rows = read_table(input, &["n", "k_n", "omega_rad_s", "node_count"])?;
        let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r[1], r[2])).collect();
        let fit = fit_alpha_dispersion(&pairs, pairs.len()).map_err(|e| CliError::from(e).context("alpha fit"))?;
        records.push(ctx.record("alpha_fit", json!({ "fit": fit, "input_hash": input.digest() })));
    }
    Ok(vec![ctx.write("fit", "fit.ndjson", ndjson_lines(&records)?)?])
}
