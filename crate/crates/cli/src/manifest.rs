//! The reproducibility ledger attached to every output.
//!
//! A manifest fingerprints one run: subcommand, flags, digests of every
//! input file, the seed and toolkit version. Identical manifests imply
//! identical outputs. The copy embedded in JSON outputs omits wall
//! time, keeping outputs byte-identical across reruns; the sidecar
//! `<output>.manifest.json` records the measured wall time.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub flags: BTreeMap<String, String>,
    pub input_digests: BTreeMap<String, String>,
    pub seed: u64,
    pub version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

pub struct ManifestBuilder {
    manifest: RunManifest,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        Self {
            manifest: RunManifest {
                subcommand: subcommand.to_string(),
                flags: BTreeMap::new(),
                input_digests: BTreeMap::new(),
                seed,
                version: env!("CARGO_PKG_VERSION"),
                wall_time_ms: None,
            },
            started: Instant::now(),
        }
    }

    pub fn flag(mut self, key: &str, value: impl ToString) -> Self {
        self.manifest.flags.insert(key.to_string(), value.to_string());
        self
    }

    pub fn input(mut self, path: &Path) -> anyhow::Result<Self> {
        let digest = sha256_file(path)?;
        self.manifest
            .input_digests
            .insert(path.display().to_string(), digest);
        Ok(self)
    }

    /// The wall-time-free manifest for embedding in outputs.
    pub fn embedded(&self) -> RunManifest {
        self.manifest.clone()
    }

    /// The full manifest (with wall time) for the sidecar file.
    pub fn sidecar(&self) -> RunManifest {
        let mut m = self.manifest.clone();
        m.wall_time_ms = Some(self.started.elapsed().as_millis() as u64);
        m
    }

    /// Write `<output>.manifest.json` next to an output file.
    pub fn write_sidecar(&self, output: &Path) -> anyhow::Result<()> {
        let path = sidecar_path(output);
        let json = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }
}

pub fn sidecar_path(output: &Path) -> std::path::PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".manifest.json");
    output.with_file_name(name)
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let mut file =
        File::open(path).map_err(|e| anyhow::anyhow!("open {}: {e}", path.display()))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Wrap a report with its manifest under the documented keys.
#[derive(Serialize)]
pub struct WithManifest<T: Serialize> {
    pub manifest: RunManifest,
    #[serde(flatten)]
    pub report: T,
}

pub fn to_json_with_manifest<T: Serialize>(
    builder: &ManifestBuilder,
    report: T,
) -> anyhow::Result<String> {
    let wrapped = WithManifest {
        manifest: builder.embedded(),
        report,
    };
    Ok(serde_json::to_string_pretty(&wrapped)?)
}
