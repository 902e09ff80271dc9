use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use magnon_core::dynamics::{build_hamiltonian, evolve_map, magnetisation, prepare_state, EvolveOptions, Model, QuenchSpec};
use magnon_core::ionchain::{couplings_from_config, CouplingMatrix};
use magnon_core::magnon::diagonalize_magnons;
use magnon_core::units::hz_to_rad;
use magnon_core::{BeamProfile, TrapConfig};

const CONFIG: &str = r#"
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
flip = [4]
t_end = 0.009
n_points = 41
seed = 11
pair = [3, 5]
shots = 500
resamples = 100
"#;

fn magnon(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magnon"))
        .args(args)
        .current_dir(dir)
        .env_remove("MAGNON_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "exit {:?}\nstderr: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
}

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, CONFIG).unwrap();
    path
}

fn body(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect()
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn quench_matches_library_bit_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&magnon(&["quench", "--flip", "8", "--n", "15", "-p", "21", "-o", "out"], tmp.path()));
    let rows = body(&tmp.path().join("out/magnetisation.csv"));
    assert_eq!(rows[0], "t_s,site,sz");
    let times: Vec<f64> = rows[1..].iter().step_by(15).map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(times.len(), 21);

    let j = CouplingMatrix::power_law(15, hz_to_rad(160.0), 1.36).unwrap();
    let h = build_hamiltonian(&j, 0.0, Model::Xy).unwrap();
    let psi = prepare_state(&QuenchSpec::local([7]), 15).unwrap();
    let sz = evolve_map(&psi, &h, &times, &EvolveOptions::default(), |_, s| magnetisation(s)).unwrap();
    let expected: Vec<String> = times
        .iter()
        .zip(&sz)
        .flat_map(|(t, row)| row.iter().enumerate().map(move |(i, v)| format!("{t},{},{v}", i + 1)))
        .collect();
    assert_eq!(rows[1..], expected[..]);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let cfg = cfg.to_str().unwrap();
    for out in ["a", "b"] {
        for cmd in [&["tomo"][..], &["global-quench", "-p", "11"], &["dispersion"], &["lightcone"]] {
            let mut args = vec!["-c", cfg, "-o", out];
            args.extend_from_slice(cmd);
            ok(&magnon(&args, tmp.path()));
        }
    }
    let a = dir_contents(&tmp.path().join("a"));
    let b = dir_contents(&tmp.path().join("b"));
    assert!(a.len() >= 10);
    assert_eq!(a, b);

    ok(&magnon(&["-c", cfg, "-o", "c", "--seed", "12", "tomo"], tmp.path()));
    let c = dir_contents(&tmp.path().join("c"));
    assert_ne!(a["tomo_counts.csv"], c["tomo_counts.csv"]);
}

#[test]
fn headers_record_hash_seed_and_version() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    ok(&magnon(&["-c", cfg.to_str().unwrap(), "-o", ".", "quench"], tmp.path()));
    let text = std::fs::read_to_string(tmp.path().join("magnetisation.csv")).unwrap();
    let header: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    assert_eq!(header[0], format!("# version: {}", env!("CARGO_PKG_VERSION")));
    assert!(header[1].starts_with("# config_hash: ") && header[1].len() == "# config_hash: ".len() + 64);
    assert_eq!(header[2], "# seed: 11");
    assert!(header.iter().any(|l| l.contains("least significant bit")));
}

#[test]
fn dispersion_matches_module_calls() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out = magnon(&["-c", cfg.to_str().unwrap(), "-o", ".", "dispersion"], tmp.path());
    ok(&out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 2);
    assert!(stdout.lines().all(|l| l.starts_with("{\"artifact\":")));

    let trap = TrapConfig { detuning: 2.695e6, ion_mass: 6.6359e-26, ..TrapConfig::innsbruck_seven(0.0) };
    let beam = BeamProfile { peak_rabi: 125e3, waist_along_chain: 380e-6, waist_transverse: 22e-6, center_offset: 0.0 };
    let (_, j) = couplings_from_config(&trap, &beam).unwrap();
    let spectrum = diagonalize_magnons(&j);
    let rows = body(&tmp.path().join("dispersion.csv"));
    for (row, ((k, w), nodes)) in rows[1..].iter().zip(spectrum.dispersion().into_iter().zip(spectrum.node_counts())) {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!((cells[1], cells[2], cells[3] as usize), (k, w, *nodes));
    }
    let fits = std::fs::read_to_string(tmp.path().join("alpha_fit.ndjson")).unwrap();
    let first: serde_json::Value = serde_json::from_str(fits.lines().next().unwrap()).unwrap();
    let alpha = first["fit"]["alpha"].as_f64().unwrap();
    assert!(alpha > 1.0 && alpha < 1.8, "{alpha}");
}

#[test]
fn couplings_export_import_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    ok(&magnon(&["-c", cfg.to_str().unwrap(), "-o", "x", "couplings"], tmp.path()));
    ok(&magnon(&["-J", "x/couplings.csv", "-o", "y", "couplings"], tmp.path()));
    let a = body(&tmp.path().join("x/couplings.csv"));
    let b = body(&tmp.path().join("y/couplings.csv"));
    assert_eq!(a, b);
}

#[test]
fn slightly_asymmetric_import_warns() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("j.csv"), "# unit: hz\n0,101,20\n100,0,100\n20,100,0\n").unwrap();
    let out = magnon(&["-J", "j.csv", "-o", ".", "couplings"], tmp.path());
    ok(&out);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("warning") && stderr.contains("asymmetric"), "{stderr}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("nounit.csv"), "0,1\n1,0\n").unwrap();
    let out = magnon(&["-J", "nounit.csv", "couplings"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unit"));

    std::fs::write(tmp.path().join("bad.toml"), "[run]\nn_points = \"lots\"\n").unwrap();
    let out = magnon(&["-c", "bad.toml", "quench"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    assert_eq!(magnon(&["quench", "--n", "7", "--flip", "9"], tmp.path()).status.code(), Some(2));
    assert_eq!(magnon(&["quench"], tmp.path()).status.code(), Some(2));
    assert_eq!(magnon(&["bogus-subcommand"], tmp.path()).status.code(), Some(2));
    assert_eq!(magnon(&["--n", "7", "tomo", "--pair", "3"], tmp.path()).status.code(), Some(2));
    ok(&magnon(&["--n", "7", "tomo", "--pair", "3,5", "-p", "3", "-o", "pair"], tmp.path()));

    // Detuning exactly on the centre-of-mass mode.
    let resonant = CONFIG.replace("detuning = 2.695e6", "detuning = 2.655e6");
    std::fs::write(tmp.path().join("resonant.toml"), resonant).unwrap();
    let out = magnon(&["-c", "resonant.toml", "couplings"], tmp.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_magnon"))
        .args(["couplings", "--n", "4"])
        .current_dir(tmp.path())
        .env("MAGNON_OUT_DIR", "from_env")
        .output()
        .unwrap();
    ok(&out);
    assert!(tmp.path().join("from_env/couplings.csv").exists());
}

#[test]
fn fit_reads_quench_output() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&magnon(&["quench", "--n", "15", "--flip", "8", "-m", "single-excitation", "-a", "3", "-t", "0.006", "-p", "601", "-o", "."], tmp.path()));
    ok(&magnon(&["fit", "--magnetisation", "magnetisation.csv", "--source", "8", "-o", "."], tmp.path()));
    let text = std::fs::read_to_string(tmp.path().join("fit.ndjson")).unwrap();
    let records: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let sites: Vec<u64> = records.iter().filter(|r| r["kind"] == "arrival_fit").map(|r| r["site"].as_u64().unwrap()).collect();
    assert_eq!(sites, vec![9, 10, 11, 12, 13, 14]);
    let front = records.iter().find(|r| r["kind"] == "front_fit").unwrap();
    assert!(front["fit"]["velocity"].as_f64().unwrap() > 0.0);
}

#[test]
fn ndjson_trajectory_has_one_record_per_time() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&magnon(&["quench", "--n", "5", "-p", "7", "-f", "ndjson", "-o", "."], tmp.path()));
    let text = std::fs::read_to_string(tmp.path().join("magnetisation.ndjson")).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 8);
    assert!(lines[0]["header"]["config_hash"].is_string());
    assert_eq!(lines[1]["sz"].as_array().unwrap().len(), 5);
}
