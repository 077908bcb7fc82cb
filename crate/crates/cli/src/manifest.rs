//! Per-run record of configuration, seeds, file digests and stage timings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::errors::MissingInput;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDigest {
    /// As given on the command line, relative to the workdir when relative.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
    pub config: Config,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub stages: Vec<StageTiming>,
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

/// Collects manifest facts while a command runs; `finish` hashes the
/// outputs and writes the manifest under `<workdir>/manifests/` atomically.
pub struct Run {
    workdir: PathBuf,
    manifest: RunManifest,
    outputs: Vec<(String, PathBuf)>,
}

impl Run {
    pub fn new(workdir: &Path, command: &str, args: Vec<String>, config: Config) -> Run {
        Run {
            workdir: workdir.to_path_buf(),
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command: command.to_string(),
                args,
                seeds: BTreeMap::new(),
                config,
                inputs: Vec::new(),
                outputs: Vec::new(),
                stages: Vec::new(),
            },
            outputs: Vec::new(),
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.workdir.join(p)
    }

    /// Resolves an input path, failing with a usage error when it is
    /// missing, and records its digest.
    pub fn input(&mut self, p: &Path) -> Result<PathBuf> {
        let full = self.resolve(p);
        if !full.is_file() {
            return Err(MissingInput(full).into());
        }
        let (sha256, bytes) = sha256_file(&full)?;
        self.manifest.inputs.push(FileDigest { path: p.display().to_string(), sha256, bytes });
        Ok(full)
    }

    /// Resolves an output path and creates its parent directory.
    pub fn output(&mut self, p: &Path) -> Result<PathBuf> {
        let full = self.resolve(p);
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        self.outputs.push((p.display().to_string(), full.clone()));
        Ok(full)
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.manifest.seeds.insert(name.to_string(), value);
    }

    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f();
        self.manifest.stages.push(StageTiming { stage: name.to_string(), seconds: start.elapsed().as_secs_f64() });
        log::debug!("stage {name}: {:.3}s", start.elapsed().as_secs_f64());
        out
    }

    /// `<command>-<digest of args>.json`: one file per distinct invocation,
    /// stable across reruns.
    pub fn file_name(&self) -> String {
        let digest = Sha256::digest(self.manifest.args.join("\0").as_bytes());
        format!("{}-{}.json", self.manifest.command, &hex::encode(digest)[..12])
    }

    pub fn finish(mut self) -> Result<RunManifest> {
        for (shown, full) in &self.outputs {
            let (sha256, bytes) = sha256_file(full)?;
            self.manifest.outputs.push(FileDigest { path: shown.clone(), sha256, bytes });
        }
        let path = self.workdir.join("manifests").join(self.file_name());
        std::fs::create_dir_all(path.parent().expect("manifest path has a parent"))
            .with_context(|| format!("creating {}", path.display()))?;
        let mut body = serde_json::to_string_pretty(&self.manifest).context("serializing manifest")?;
        body.push('\n');
        codemix::io::write_atomic(&path, body.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
        Ok(self.manifest)
    }
}
