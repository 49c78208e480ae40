use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

/// Writes `config.toml` (the resolved configuration, reusable via
/// `--config`) and `manifest.json` into `out`.
pub fn write<C: Serialize>(
    out: &Path,
    command: &str,
    config: &C,
    seed: u64,
    seed_derivation: &str,
    outputs: &[&str],
    details: Value,
) -> Result<()> {
    let toml_text = toml::to_string(config).context("serializing the resolved configuration")?;
    fs::write(out.join("config.toml"), &toml_text).with_context(|| format!("writing {}", out.join("config.toml").display()))?;
    let mut files: Vec<&str> = outputs.to_vec();
    files.push("config.toml");
    let manifest = json!({
        "command": command,
        "config": config,
        "seed": seed,
        "versions": {
            "orthonn-cli": env!("CARGO_PKG_VERSION"),
            "orthonn": orthonn::VERSION,
        },
        "seed_derivation": seed_derivation,
        "reproduce": format!("orthonn {command} --config config.toml"),
        "outputs": files,
        "details": details,
    });
    let path = out.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))
}
