//! Run manifests: every command writes one alongside its outputs, and every
//! output file names the manifest that produced it.

use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub struct ManifestBuilder {
    command: String,
    flags: Vec<(String, String)>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            flags: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn flag(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.flags.push((key.to_string(), value.to_string()));
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    /// Writes `<stem>.manifest` next to the primary output and returns the
    /// manifest file name outputs should reference.
    pub fn write(&self, primary_output: &Path) -> anyhow::Result<String> {
        let manifest_path = manifest_path_for(primary_output);
        let mut out = std::fs::File::create(&manifest_path)?;
        writeln!(out, "# run-manifest")?;
        writeln!(out, "command = {}", self.command)?;
        writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "duration_seconds = {:.3}", self.started.elapsed().as_secs_f64())?;
        for (k, v) in &self.flags {
            writeln!(out, "flag {k} = {v}")?;
        }
        for input in &self.inputs {
            let digest = hash_file(input)?;
            writeln!(out, "input {} sha256 = {digest}", input.display())?;
        }
        for output in &self.outputs {
            writeln!(out, "output = {}", output.display())?;
        }
        Ok(manifest_file_name(primary_output))
    }
}

pub fn manifest_path_for(output: &Path) -> PathBuf {
    let mut os = output.as_os_str().to_owned();
    os.push(".manifest");
    PathBuf::from(os)
}

pub fn manifest_file_name(output: &Path) -> String {
    manifest_path_for(output)
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run.manifest".into())
}

fn hash_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex::encode(hasher.finalize()))
}
