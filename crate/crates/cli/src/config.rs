use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

/// Seed used when neither `--seed` nor the config file sets one.
pub const DEFAULT_SEED: u64 = 0;

/// Contents of `--config file.json`. Every key is optional and loses to the
/// matching command-line flag. Relative paths are taken as given, i.e.
/// relative to the working directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub log_level: Option<String>,

    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub recipe: Option<PathBuf>,
    pub preview: Option<bool>,

    pub cameras: Option<PathBuf>,
    pub target: Option<String>,
    pub k: Option<usize>,
    pub grid: Option<usize>,
    pub sphere_center: Option<[f64; 3]>,
    pub sphere_radius: Option<f64>,

    pub scenes: Option<PathBuf>,
    pub video: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub count: Option<usize>,
    pub fraction: Option<f64>,
    pub crop: Option<usize>,
    pub holdout: Option<usize>,

    pub no_sgn: Option<bool>,
    pub no_repos: Option<bool>,
    pub no_ablur: Option<bool>,
    pub no_ra: Option<bool>,

    #[serde(rename = "ref")]
    pub reference: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub images: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Param(format!("config {}: {e}", path.display())))
    }
}

/// Flag value, else config value.
pub fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

pub fn require<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Param(format!("missing required option --{name}")))
}

pub fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got {s:?}"));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|e| format!("{p:?}: {e}"))?;
    }
    Ok(out)
}
