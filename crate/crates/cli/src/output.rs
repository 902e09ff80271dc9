use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::sha256_hex;
use crate::error::CliResult;

/// A file written by a subcommand.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Artifact {
    pub artifact: String,
    pub path: PathBuf,
    pub bytes: usize,
    pub sha256: String,
}

impl Artifact {
    /// One JSON object per artifact, printed to stdout.
    pub fn summary_line(&self) -> String {
        serde_json::to_string(self).expect("artifact summary serialises")
    }
}

/// Writes `contents` to `dir/file_name`, creating `dir` if needed.
pub(crate) fn write_artifact(dir: &Path, name: &str, file_name: &str, contents: Vec<u8>) -> CliResult<Artifact> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(file_name);
    std::fs::write(&path, &contents)?;
    Ok(Artifact { artifact: name.to_string(), path, bytes: contents.len(), sha256: sha256_hex(&contents) })
}
