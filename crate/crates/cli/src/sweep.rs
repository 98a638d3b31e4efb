//! Parameter sweeps: one isolated output directory per value.

use std::path::Path;

use thiserror::Error;

use crate::config::RunConfig;
use crate::runner::{run, RunArtifacts, RunError};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("unknown sweep parameter {0:?}; supported: scenario.force, scenario.field, scenario.imbalance, scenario.detuning, multimode.gamma")]
    UnknownParameter(String),
    #[error("sweep over {param}: config validation failed for value {value}: {source}")]
    InvalidPoint {
        param: String,
        value: f64,
        #[source]
        source: crate::config::ConfigError,
    },
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn apply(cfg: &mut RunConfig, param: &str, value: f64) -> Result<(), SweepError> {
    match param {
        "scenario.force" => cfg.scenario.force = Some(value),
        "scenario.field" => cfg.scenario.field = Some(value),
        "scenario.imbalance" => cfg.scenario.imbalance = Some(value),
        "scenario.detuning" => cfg.scenario.detuning = Some(value),
        "multimode.gamma" => {
            let mm = cfg.multimode.get_or_insert(crate::config::MultimodeConfig {
                gamma: value,
                dispersion: 0.0,
                samples: 24,
            });
            mm.gamma = value;
        }
        other => return Err(SweepError::UnknownParameter(other.to_string())),
    }
    Ok(())
}

pub fn sweep(
    base: &RunConfig,
    param: &str,
    values: &[f64],
    out_dir: &Path,
    base_dir: &Path,
) -> Result<Vec<RunArtifacts>, SweepError> {
    let mut artifacts = Vec::with_capacity(values.len());
    for &value in values {
        let mut cfg = base.clone();
        apply(&mut cfg, param, value)?;
        cfg.validate().map_err(|source| SweepError::InvalidPoint {
            param: param.to_string(),
            value,
            source,
        })?;
        let dir = out_dir.join(format!("{param}={value}"));
        artifacts.push(run(&cfg, &dir, base_dir)?);
    }
    Ok(artifacts)
}
