//! Artifact writing helpers.

use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Crate version plus the `git describe` of the source tree it was built from.
pub fn build_version() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("QTOMO_GIT_DESCRIBE"))
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(format!("JSON encoding failed: {e}")))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = to_json(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
