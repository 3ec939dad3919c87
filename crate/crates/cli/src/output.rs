use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// Floats are written with 16 significant digits so reruns compare byte for byte.
pub fn sci(v: f64) -> String {
    format!("{v:.15e}")
}

pub fn prepare_dir(out: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    fs::write(out.join("config.toml"), cfg.to_toml())?;
    Ok(())
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
