use std::fs;
use std::path::Path;

use foodchain::{Model, ModelConfig};

use crate::CliError;

/// Byte offset of a 1-based (line, column) position in `text`.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    line_start + column.saturating_sub(1)
}

pub fn parse_config(text: &str, origin: &str) -> Result<ModelConfig, CliError> {
    serde_json::from_str(text).map_err(|e| {
        let offset = byte_offset(text, e.line(), e.column());
        let kind = if e.is_syntax() || e.is_eof() {
            "malformed JSON"
        } else {
            "invalid config"
        };
        CliError::Input(format!(
            "{origin}: {kind} at line {}, column {} (byte offset {offset}): {e}",
            e.line(),
            e.column()
        ))
    })
}

pub fn load_config(path: &Path) -> Result<ModelConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string())
}

pub fn load_model(path: &Path) -> Result<(ModelConfig, Model), CliError> {
    let cfg = load_config(path)?;
    let model = cfg
        .into_model()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((cfg, model))
}
