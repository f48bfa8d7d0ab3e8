//! Flag/file configuration resolution.
//!
//! Every experiment flag can also come from a `key = value` config file;
//! command-line flags win over file entries, which win over defaults. The
//! resolved values are echoed into the run manifest.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::AppError;

/// Parsed `key = value` file; later duplicate keys override earlier ones.
#[derive(Debug, Default)]
pub struct KvFile {
    entries: BTreeMap<String, String>,
}

impl KvFile {
    pub fn load(path: Option<&Path>) -> Result<Self, AppError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Io(format!("config file {}: {e}", path.display())))?;
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                AppError::InvalidConfig(format!(
                    "config file {} line {}: expected key = value",
                    path.display(),
                    lineno + 1
                ))
            })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

/// Tracks resolved settings for the manifest echo.
#[derive(Debug, Default)]
pub struct ResolvedConfig {
    pub values: BTreeMap<String, String>,
}

impl ResolvedConfig {
    pub fn note(&mut self, key: &str, value: impl Display) {
        self.values.insert(key.to_string(), value.to_string());
    }
}

/// Flag > file > default, recording the outcome.
pub fn resolve<T>(
    resolved: &mut ResolvedConfig,
    key: &str,
    cli: Option<T>,
    file: &KvFile,
    default: T,
) -> Result<T, AppError>
where
    T: FromStr + Display,
    T::Err: Display,
{
    let value = match cli {
        Some(v) => v,
        None => match file.get(key) {
            Some(raw) => raw.parse::<T>().map_err(|e| {
                AppError::InvalidConfig(format!("config key '{key}' = '{raw}': {e}"))
            })?,
            None => default,
        },
    };
    resolved.note(key, &value);
    Ok(value)
}

/// Same as [`resolve`] but without a default; `None` when absent everywhere.
pub fn resolve_opt<T>(
    resolved: &mut ResolvedConfig,
    key: &str,
    cli: Option<T>,
    file: &KvFile,
) -> Result<Option<T>, AppError>
where
    T: FromStr + Display,
    T::Err: Display,
{
    let value = match cli {
        Some(v) => Some(v),
        None => match file.get(key) {
            Some(raw) => Some(raw.parse::<T>().map_err(|e| {
                AppError::InvalidConfig(format!("config key '{key}' = '{raw}': {e}"))
            })?),
            None => None,
        },
    };
    if let Some(v) = &value {
        resolved.note(key, v);
    }
    Ok(value)
}

/// Path-valued variant of [`resolve`].
pub fn resolve_path(
    resolved: &mut ResolvedConfig,
    key: &str,
    cli: Option<std::path::PathBuf>,
    file: &KvFile,
    default: std::path::PathBuf,
) -> Result<std::path::PathBuf, AppError> {
    let value = cli
        .or_else(|| file.get(key).map(std::path::PathBuf::from))
        .unwrap_or(default);
    resolved.note(key, value.display());
    Ok(value)
}

/// Path-valued variant of [`resolve_opt`].
pub fn resolve_opt_path(
    resolved: &mut ResolvedConfig,
    key: &str,
    cli: Option<std::path::PathBuf>,
    file: &KvFile,
) -> Result<Option<std::path::PathBuf>, AppError> {
    let value = cli.or_else(|| file.get(key).map(std::path::PathBuf::from));
    if let Some(v) = &value {
        resolved.note(key, v.display());
    }
    Ok(value)
}

/// Comma-separated pair, e.g. `--xi 1,1`.
pub fn parse_pair(raw: &str, what: &str) -> Result<[f64; 2], AppError> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 2 {
        return Err(AppError::InvalidConfig(format!(
            "{what}: expected two comma-separated numbers, got '{raw}'"
        )));
    }
    let mut out = [0.0; 2];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| AppError::InvalidConfig(format!("{what}: '{part}': {e}")))?;
    }
    Ok(out)
}

/// Comma-separated domain `xmin,xmax,ymin,ymax`.
pub fn parse_domain(raw: &str) -> Result<[f64; 4], AppError> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 4 {
        return Err(AppError::InvalidConfig(format!(
            "domain: expected xmin,xmax,ymin,ymax, got '{raw}'"
        )));
    }
    let mut out = [0.0; 4];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| AppError::InvalidConfig(format!("domain: '{part}': {e}")))?;
    }
    Ok(out)
}

/// Comma-separated list of numbers.
pub fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>, AppError>
where
    T::Err: Display,
{
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<T>()
                .map_err(|e| AppError::InvalidConfig(format!("{what}: '{part}': {e}")))
        })
        .collect()
}
