use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use glovenet_core::dataset::{DATA_FILE, MANIFEST_FILE};
use glovenet_core::{Error, Result};

pub const RUN_MANIFEST: &str = "run_manifest.json";

/// Record of one finished command. Written last, so its presence means every
/// listed artifact is complete.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Every flag after defaults and environment fallbacks were applied.
    pub flags: serde_json::Value,
    pub seeds: Vec<u64>,
    /// SHA-256 of the dataset's manifest.json followed by data.f32.
    pub dataset_hash: Option<String>,
    /// Paths relative to the run directory.
    pub artifacts: Vec<String>,
    pub wall_clock_seconds: f64,
    pub git_describe: String,
}

pub fn dataset_hash(dir: &Path) -> Result<String> {
    let mut h = Sha256::new();
    for name in [MANIFEST_FILE, DATA_FILE] {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
        h.update(&bytes);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

/// Output directory of a command in progress.
pub struct RunDir {
    pub dir: PathBuf,
    command: &'static str,
    artifacts: Vec<String>,
    started: Instant,
}

impl RunDir {
    /// Creates `out` and removes any stale manifest from an earlier run.
    /// `inputs` are directories the command reads; writing into them is refused.
    pub fn create(command: &'static str, out: &Path, inputs: &[&Path]) -> Result<RunDir> {
        if let Some(input) = inputs.iter().find(|i| same_dir(out, i)) {
            return Err(Error::Usage(format!(
                "--out {} is also an input directory; choose a fresh output directory",
                input.display()
            )));
        }
        fs::create_dir_all(out)?;
        match fs::remove_file(out.join(RUN_MANIFEST)) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e.into()),
            _ => {}
        }
        Ok(RunDir {
            dir: out.to_path_buf(),
            command,
            artifacts: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.record(name);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, serde_json::to_string_pretty(value)?)
    }

    /// Notes a file that something else already wrote into the directory.
    pub fn record(&mut self, name: &str) {
        if !self.artifacts.iter().any(|a| a == name) {
            self.artifacts.push(name.to_string());
        }
    }

    pub fn finish(self, flags: &impl Serialize, seeds: Vec<u64>, dataset_hash: Option<String>) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            flags: serde_json::to_value(flags)?,
            seeds,
            dataset_hash,
            artifacts: self.artifacts,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            git_describe: env!("GLOVENET_GIT_DESCRIBE").to_string(),
        };
        // rename keeps a half-written manifest from ever being visible
        let tmp = self.dir.join(format!("{RUN_MANIFEST}.tmp"));
        fs::write(&tmp, serde_json::to_string_pretty(&manifest)?)?;
        fs::rename(&tmp, self.dir.join(RUN_MANIFEST))?;
        Ok(())
    }
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(RUN_MANIFEST);
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Format(format!("{} is not a finished run ({e})", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
