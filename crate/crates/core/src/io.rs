//! Plain-text interchange: CSV tables with `#` comment headers and NDJSON
//! fit reports. Sites are 1-based in every file. Floats are written in
//! Rust's shortest round-trip form, so export followed by import is exact.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::entanglement::DensityMatrix;
use crate::error::{Error, Result};
use crate::ionchain::{CouplingMatrix, Provenance};
use crate::magnon::MagnonSpectrum;

/// Comment lines written at the top of every output file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Header {
    pub version: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    /// Further `key: value` lines, in order.
    pub extra: Vec<(String, String)>,
}

impl Header {
    pub fn new(version: impl Into<String>, config_hash: impl Into<String>, seed: Option<u64>) -> Self {
        Self { version: version.into(), config_hash: config_hash.into(), seed, extra: Vec::new() }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.extra.push((key.into(), value.into()));
        self
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "# version: {}", self.version)?;
        writeln!(w, "# config_hash: {}", self.config_hash)?;
        match self.seed {
            Some(s) => writeln!(w, "# seed: {s}")?,
            None => writeln!(w, "# seed: none")?,
        }
        for (k, v) in &self.extra {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }
}

/// Unit of the numbers in an imported coupling file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingUnit {
    RadPerSecond,
    /// Entries are J/2π in Hz.
    Hertz,
}

/// Outcome of symmetrising an imported matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ImportReport {
    /// max |J_ij − J_ji| / max |J|.
    pub max_asymmetry: f64,
    pub warnings: Vec<String>,
}

/// Asymmetry tolerated (and repaired) on import.
pub const MAX_IMPORT_ASYMMETRY: f64 = 0.05;

pub fn write_couplings_csv(w: &mut impl Write, j: &CouplingMatrix, header: &Header) -> Result<()> {
    header.write(w)?;
    let source = match j.provenance() {
        Provenance::Trap(_) => "trap parameters".to_string(),
        Provenance::Synthetic(s) => format!("synthetic {s}"),
        Provenance::External(s) => format!("externally supplied {s}"),
    };
    writeln!(w, "# provenance: {source}")?;
    writeln!(w, "# unit: rad/s")?;
    for row in j.values().row_iter() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Reads an N×N coupling CSV.
///
/// A `# unit: rad/s` or `# unit: hz` comment is mandatory. The matrix is
/// replaced by (J + Jᵀ)/2; any asymmetry above 1e-12 is reported as a
/// warning and above [`MAX_IMPORT_ASYMMETRY`] is an error.
pub fn read_couplings_csv(r: impl BufRead, label: &str) -> Result<(CouplingMatrix, ImportReport)> {
    let mut unit = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once(':') {
                if key.trim().eq_ignore_ascii_case("unit") {
                    unit = Some(match value.trim().to_ascii_lowercase().as_str() {
                        "rad/s" => CouplingUnit::RadPerSecond,
                        "hz" => CouplingUnit::Hertz,
                        other => return Err(Error::Parse { line: line_no, reason: format!("unknown unit `{other}` (expected rad/s or hz)") }),
                    });
                }
            }
            continue;
        }
        let row = trimmed
            .split(',')
            .map(|c| c.trim().parse::<f64>().map_err(|e| Error::Parse { line: line_no, reason: format!("`{}`: {e}", c.trim()) }))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let unit = unit.ok_or_else(|| Error::Parse { line: 0, reason: "missing `# unit: rad/s|hz` tag".into() })?;
    let n = rows.len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::Parse { line: 0, reason: format!("row {} has {} columns, expected {n}", i + 1, r.len()) });
    }
    let factor = match unit {
        CouplingUnit::RadPerSecond => 1.0,
        CouplingUnit::Hertz => 2.0 * std::f64::consts::PI,
    };
    let raw = DMatrix::from_fn(n, n, |i, k| rows[i][k] * factor);
    let scale = raw.amax();
    let asym = (&raw - raw.transpose()).amax();
    let max_asymmetry = if scale > 0.0 { asym / scale } else { 0.0 };
    if max_asymmetry > MAX_IMPORT_ASYMMETRY {
        return Err(Error::param("couplings", format!("asymmetry {:.2}% exceeds {:.0}%", 100.0 * max_asymmetry, 100.0 * MAX_IMPORT_ASYMMETRY)));
    }
    let mut warnings = Vec::new();
    if max_asymmetry > 1e-12 {
        warnings.push(format!("matrix asymmetric by {:.3}% (relative); replaced by (J + J^T)/2", 100.0 * max_asymmetry));
    }
    let sym = (&raw + raw.transpose()) * 0.5;
    let j = CouplingMatrix::new(sym, Provenance::External(label.to_string()))?;
    Ok((j, ImportReport { max_asymmetry, warnings }))
}

/// Columns n, k_n, omega_rad_s, node_count.
pub fn write_dispersion_csv(w: &mut impl Write, spectrum: &MagnonSpectrum, header: &Header) -> Result<()> {
    header.write(w)?;
    writeln!(w, "n,k_n,omega_rad_s,node_count")?;
    for (idx, ((k, omega), nodes)) in spectrum.dispersion().into_iter().zip(spectrum.node_counts()).enumerate() {
        writeln!(w, "{},{k},{omega},{nodes}", idx + 1)?;
    }
    Ok(())
}

/// Long-format heat map: columns t_s, site, sz.
pub fn write_magnetisation_csv(w: &mut impl Write, times: &[f64], sz: &[Vec<f64>], header: &Header) -> Result<()> {
    header.write(w)?;
    writeln!(w, "t_s,site,sz")?;
    for (t, row) in times.iter().zip(sz) {
        for (i, v) in row.iter().enumerate() {
            writeln!(w, "{t},{},{v}", i + 1)?;
        }
    }
    Ok(())
}

/// Connected correlations for i < j: columns t_s, i, j, Cij.
pub fn write_correlations_csv(w: &mut impl Write, times: &[f64], c: &[DMatrix<f64>], header: &Header) -> Result<()> {
    header.write(w)?;
    writeln!(w, "t_s,i,j,Cij")?;
    for (t, m) in times.iter().zip(c) {
        for i in 0..m.nrows() {
            for j in i + 1..m.ncols() {
                writeln!(w, "{t},{},{},{}", i + 1, j + 1, m[(i, j)])?;
            }
        }
    }
    Ok(())
}

/// Generic table with a caller-supplied column header line.
pub fn write_table_csv(w: &mut impl Write, columns: &[&str], rows: &[Vec<f64>], header: &Header) -> Result<()> {
    header.write(w)?;
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// One line per element: row, col, re, im (1-based, basis index 2·b_first + b_second).
pub fn write_density_csv(w: &mut impl Write, rho: &DensityMatrix, header: &Header) -> Result<()> {
    header.write(w)?;
    writeln!(w, "# subsystem: {}", rho.subsystem().tag())?;
    writeln!(w, "# basis: index = 2*bit(first) + bit(second), bit 1 = up")?;
    writeln!(w, "row,col,re,im")?;
    let m: &DMatrix<Complex64> = rho.matrix();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            writeln!(w, "{},{},{},{}", r + 1, c + 1, m[(r, c)].re, m[(r, c)].im)?;
        }
    }
    Ok(())
}

/// Light-cone overlay: columns d, t_cone_s.
pub fn write_cone_csv(w: &mut impl Write, distances: &[f64], velocity: f64, header: &Header) -> Result<()> {
    header.write(w)?;
    writeln!(w, "d,t_cone_s")?;
    for d in distances {
        writeln!(w, "{d},{}", d / velocity)?;
    }
    Ok(())
}

/// One JSON object per line.
pub fn write_ndjson<T: Serialize>(w: &mut impl Write, records: &[T]) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Parse { line: 0, reason: e.to_string() })?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnon::diagonalize_magnons;

    fn header() -> Header {
        Header::new("0.1.0", "abc123", Some(7))
    }

    #[test]
    fn coupling_round_trip_is_exact() {
        let j = CouplingMatrix::power_law(7, 2.0 * std::f64::consts::PI * 412.3, 1.36).unwrap();
        let mut buf = Vec::new();
        write_couplings_csv(&mut buf, &j, &header()).unwrap();
        let (back, report) = read_couplings_csv(buf.as_slice(), "round-trip").unwrap();
        assert_eq!(back.values(), j.values());
        assert_eq!(report.max_asymmetry, 0.0);
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn hertz_unit_is_converted() {
        let text = "# unit: hz\n0,100\n100,0\n";
        let (j, _) = read_couplings_csv(text.as_bytes(), "t").unwrap();
        assert!((j.get(0, 1) - 2.0 * std::f64::consts::PI * 100.0).abs() < 1e-12);
    }

    #[test]
    fn missing_unit_is_an_error() {
        let err = read_couplings_csv("0,1\n1,0\n".as_bytes(), "t").unwrap_err();
        assert!(err.to_string().contains("unit"));
    }

    #[test]
    fn slight_asymmetry_is_repaired_with_warning() {
        let text = "# unit: rad/s\n0,1.01,0.5\n1,0,1\n0.5,1,0\n";
        let (j, report) = read_couplings_csv(text.as_bytes(), "t").unwrap();
        assert!((j.get(0, 1) - 1.005).abs() < 1e-15);
        assert_eq!(j.get(0, 1), j.get(1, 0));
        assert!((report.max_asymmetry - 0.01 / 1.01).abs() < 1e-12);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn large_asymmetry_and_bad_shapes_fail() {
        assert!(read_couplings_csv("# unit: rad/s\n0,1.2\n1,0\n".as_bytes(), "t").is_err());
        assert!(read_couplings_csv("# unit: rad/s\n0,1,2\n1,0\n".as_bytes(), "t").is_err());
        assert!(read_couplings_csv("# unit: furlongs\n0,1\n1,0\n".as_bytes(), "t").is_err());
        let err = read_couplings_csv("# unit: rad/s\n0,x\n1,0\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn headers_carry_hash_seed_version() {
        let mut buf = Vec::new();
        header().with("model", "xy").write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# version: 0.1.0\n# config_hash: abc123\n# seed: 7\n# model: xy\n");
    }

    #[test]
    fn dispersion_table_layout() {
        let s = diagonalize_magnons(&CouplingMatrix::nearest_neighbour(3, 1.0).unwrap());
        let mut buf = Vec::new();
        write_dispersion_csv(&mut buf, &s, &header()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "n,k_n,omega_rad_s,node_count");
        assert_eq!(rows.len(), 4);
        assert!(rows[3].starts_with("3,") && rows[3].ends_with(",2"));
    }
}
