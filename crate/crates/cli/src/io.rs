//! Input vectors and file helpers.
//!
//! A vector file is either a JSON array of numbers or one decimal per line.
//! Blank lines and lines starting with `#` are skipped in the line format.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{CliError, CliResult};

pub fn parse_vector(text: &str) -> CliResult<Vec<f64>> {
    let trimmed = text.trim_start();
    let values: Vec<f64> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed).map_err(|e| CliError::Usage(format!("bad JSON vector: {e}")))?
    } else {
        trimmed
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .map(|(i, l)| {
                l.parse::<f64>()
                    .map_err(|e| CliError::Usage(format!("line {}: {l:?}: {e}", i + 1)))
            })
            .collect::<CliResult<_>>()?
    };
    if values.is_empty() {
        return Err(CliError::Usage("vector is empty".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(CliError::Usage(format!("entry {i} is not finite")));
    }
    Ok(values)
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_vector(path: &Path) -> CliResult<Vec<f64>> {
    parse_vector(&read_text(path)?)
}

/// Parses `"1e-2,1e-3"` style lists.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| CliError::Usage(format!("bad {what} {t:?}: {e}"))))
        .collect()
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}
