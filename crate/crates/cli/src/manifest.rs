use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::Failure;

#[derive(Debug, Serialize)]
struct Input {
    path: PathBuf,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    config_sha256: String,
    config: &'a RunConfig,
    versions: Versions,
    inputs: Vec<Input>,
}

#[derive(Debug, Serialize)]
struct Versions {
    oscar_core: &'static str,
    oscar_kit: &'static str,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> std::io::Result<String> {
    let mut f = std::fs::File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex(&h.finalize()))
}

/// Hash of the effective configuration, after flags are applied.
pub fn config_sha256(cfg: &RunConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    hex(&Sha256::digest(&bytes))
}

/// Writes `out/manifest/<command>.json`.
pub fn write(cfg: &RunConfig, command: &str, inputs: &[PathBuf]) -> Result<(), Failure> {
    let inputs = inputs
        .iter()
        .filter(|p| p.is_file())
        .map(|p| Ok(Input { path: p.clone(), sha256: file_sha256(p)? }))
        .collect::<std::io::Result<Vec<_>>>()?;
    let m = Manifest {
        command,
        seed: cfg.seed(),
        config_sha256: config_sha256(cfg),
        config: cfg,
        versions: Versions { oscar_core: oscar_core::VERSION, oscar_kit: env!("CARGO_PKG_VERSION") },
        inputs,
    };
    let dir = cfg.out.join("manifest");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join(format!("{command}.json")), serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(())
}
