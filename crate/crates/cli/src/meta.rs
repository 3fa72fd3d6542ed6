//! Reproducibility headers: every output records the tool version and a
//! hash of the fully resolved configuration, and is byte-identical across
//! reruns with the same inputs.

use sha2::{Digest, Sha256};

use covgf_core::io::FileMeta;

pub const TOOL: &str = "covgf";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Canonical one-line rendering of a resolved configuration.
pub fn canonical_config(command: &str, fields: &[(&str, String)]) -> String {
    let mut line = command.to_owned();
    for (key, value) in fields {
        line.push_str(&format!(" {key}={value}"));
    }
    line
}

pub fn config_hash(config: &str) -> String {
    let digest = Sha256::digest(config.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Comment header for CSV and DOT outputs.
pub fn text_header(config: &str) -> String {
    format!(
        "{TOOL} {VERSION}\nconfig: {config}\nconfig_hash: {}",
        config_hash(config)
    )
}

/// Meta block for JSON outputs (JSON has no comments).
pub fn file_meta(config: &str) -> FileMeta {
    FileMeta {
        tool: TOOL.to_owned(),
        version: VERSION.to_owned(),
        config: config.to_owned(),
        config_hash: config_hash(config),
    }
}
