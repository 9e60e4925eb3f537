//! Command-line tools and the session HTTP service for R-T-B assessment.

pub mod api;
pub mod cli;
pub mod session;
pub mod surface;

use std::path::Path;

use rtb_core::model::CausalNetwork;
use rtb_core::{Error, Result};

/// Loads every `*.json` model in `dir`, sorted by file name, and validates
/// each one.
pub fn load_model_dir(dir: &Path) -> Result<Vec<CausalNetwork>> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("json") {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Parse(format!("no model files in {}", dir.display())));
    }
    paths
        .into_iter()
        .map(|path| {
            let net = CausalNetwork::load(&path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            net.ensure_valid()?;
            Ok(net)
        })
        .collect()
}
