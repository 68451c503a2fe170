//! Run manifests: enough metadata next to every output set to re-run it
//! bit-identically.

use std::path::{Path, PathBuf};

use serde::Serialize;
use twpac::Result;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub subcommand: String,
    pub device_config: Option<PathBuf>,
    pub parameters: serde_json::Value,
    pub output_directory: PathBuf,
    pub seed: u64,
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        device_config: Option<&Path>,
        parameters: serde_json::Value,
        out_dir: &Path,
        seed: u64,
    ) -> Self {
        Self {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            device_config: device_config.map(|p| p.to_path_buf()),
            parameters,
            output_directory: out_dir.to_path_buf(),
            seed,
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join(format!("{}_manifest.json", self.subcommand));
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| twpac::Error::Config(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}
