//! `<output>.manifest.json`: everything needed to rerun a command.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub threads: usize,
    /// Fully resolved configuration after file and flag overrides.
    pub config: RunConfig,
    pub outputs: Vec<PathBuf>,
    pub wall_time_seconds: f64,
}

impl Manifest {
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }
}
