//! Pipeline configuration files.

use std::path::{Path, PathBuf};

use anyhow::Context;
use warehouse_router_core::PipelineConfig;

/// Environment variable consulted when no `--config` path is given.
pub const CONFIG_ENV: &str = "WAREHOUSE_ROUTER_CONFIG";

pub fn load(path: &Path) -> anyhow::Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg: PipelineConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    cfg.validate().with_context(|| format!("validating {}", path.display()))?;
    Ok(cfg)
}

/// Explicit path, else the environment variable, else built-in defaults.
pub fn resolve(explicit: Option<&Path>) -> anyhow::Result<PipelineConfig> {
    let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    match explicit.map(Path::to_path_buf).or(from_env) {
        Some(p) => load(&p),
        None => Ok(PipelineConfig::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_uses_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"gap_px": 4, "goals": {"1": [10.0, 20.0]}}"#).unwrap();
        let cfg = load(&p).unwrap();
        assert_eq!(cfg.gap_px, 4);
        assert_eq!(cfg.goals[&1].x, 10.0);
        assert_eq!(cfg.classes, PipelineConfig::default().classes);
    }

    #[test]
    fn invalid_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"goals": {"7": [1.0, 1.0]}}"#).unwrap();
        assert!(load(&p).is_err());
        std::fs::write(&p, "{").unwrap();
        assert!(load(&p).is_err());
    }
}
