#![allow(dead_code)]

use std::path::PathBuf;

use windgame_cli::ScenarioConfig;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn scenario(name: &str) -> ScenarioConfig {
    let path = repo_root().join("scenarios").join(format!("{name}.toml"));
    ScenarioConfig::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
