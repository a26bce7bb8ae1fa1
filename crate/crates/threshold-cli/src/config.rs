use std::path::Path;

use serde::Deserialize;
use threshold_lab::gamma_core::Configuration;
use threshold_lab::{DEFAULT_TOL, TOL_ENV};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    centres: Vec<[f64; 2]>,
    alphas: Vec<f64>,
    tolerance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CentresFile {
    centres: Vec<[f64; 2]>,
}

/// A validated configuration together with the tolerance that applies to it.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub configuration: Configuration,
    pub tolerance: f64,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| {
        // serde_json reports the line and column itself
        CliError::Input(format!("{}: {e}", path.display()))
    })
}

fn check_tolerance(tol: f64, origin: &str) -> Result<f64, CliError> {
    if tol > 0.0 && tol < 1.0 {
        Ok(tol)
    } else {
        Err(CliError::Input(format!("{origin}: tolerance must lie in (0, 1), got {tol}")))
    }
}

/// Tolerance from `THRESHOLD_LAB_TOL`, falling back to the library default.
pub fn global_tolerance() -> Result<f64, CliError> {
    match std::env::var(TOL_ENV) {
        Ok(s) => {
            let tol = s.trim().parse::<f64>().map_err(|_| CliError::Input(format!("{TOL_ENV}={s:?} is not a number")))?;
            check_tolerance(tol, TOL_ENV)
        }
        Err(_) => Ok(DEFAULT_TOL),
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let file: ConfigFile = parse(path)?;
    let tolerance = match file.tolerance {
        Some(t) => check_tolerance(t, &path.display().to_string())?,
        None => global_tolerance()?,
    };
    let configuration = Configuration::new(file.centres, file.alphas).map_err(CliError::from)?;
    Ok(RunConfig { configuration, tolerance })
}

pub fn load_centres(path: &Path) -> Result<Vec<[f64; 2]>, CliError> {
    let file: CentresFile = parse(path)?;
    if file.centres.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::Input(format!("{}: centres must be finite", path.display())));
    }
    Ok(file.centres)
}
