//! Strict configuration parsing. Unknown keys are fatal and every domain
//! failure names the offending key and the violated constraint: silent typos
//! in physics parameters are the dominant user error.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use quasibeam::grid::TransverseGrid;
use quasibeam::scenario::magnetic_max_half_height;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("config key {key}: {constraint}")]
    Domain { key: String, constraint: String },
    #[error("scenario {kind:?} requires key {key}")]
    Missing { kind: String, key: &'static str },
    #[error("key {key} does not apply to scenario {kind:?}")]
    Unexpected { kind: String, key: &'static str },
    #[error("referenced file {0:?} does not exist")]
    MissingFile(PathBuf),
}

fn domain(key: &str, constraint: impl Into<String>) -> ConfigError {
    ConfigError::Domain { key: key.to_string(), constraint: constraint.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Run,
    Verify,
    Sweep,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    pub grid: GridConfig,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub beam: BeamConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    pub propagation: PropagationConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical: Option<PhysicalConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multimode: Option<MultimodeConfig>,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    #[serde(default)]
    pub x_offset: f64,
    #[serde(default)]
    pub y_offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<MaskConfig>,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MaskConfig {
    pub width: f64,
    #[serde(default = "default_mask_strength")]
    pub strength: f64,
    /// subset of {"left", "right", "bottom", "top"}; all four if omitted
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sides: Option<Vec<String>>,
}

fn default_mask_strength() -> f64 {
    20.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Free,
    Electric,
    Magnetic,
    AharonovBohm,
    Custom,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Free => "free",
            ScenarioKind::Electric => "electric",
            ScenarioKind::Magnetic => "magnetic",
            ScenarioKind::AharonovBohm => "aharonov_bohm",
            ScenarioKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// scaled quasi-electric field strength F = F_phys k w0^3
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force: Option<f64>,
    /// scaled quasi-magnetic field strength B = B_phys w0^2
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<f64>,
    /// control-beam imbalance R in [-1/2, 1/2]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imbalance: Option<f64>,
    /// dimensionless detuning combination D
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<f64>,
    /// magnetic only: "neglected" (default) or "parametric"
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalar: Option<String>,
    /// custom only: sampled control-leg snapshot files
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legs: Option<Vec<PathBuf>>,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BeamConfig {
    /// launch centroid, in waists
    pub x0: f64,
    pub y0: f64,
    /// launch tilt (transverse wavevector in 1/w0)
    pub kx: f64,
    pub ky: f64,
    /// orbital angular momentum index of the launch vortex
    pub oam: i32,
    /// coefficient c of an extra phase exp(i c (x-x0)(y-y0)); the Landau
    /// coherent states carry c = -B/2
    pub xy_phase: f64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self { x0: 0.0, y0: 0.0, kx: 0.0, ky: 0.0, oam: 0, xy_phase: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKindConfig {
    /// strang for scalar scenarios, mixed_rep for the Landau gauge, rk4
    /// for general vector potentials
    #[default]
    Auto,
    Strang,
    MixedRep,
    Rk4,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub kind: IntegratorKindConfig,
    /// step; split methods default to 1e-3, rk4 to safety times its
    /// stability bound
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dzeta: Option<f64>,
    pub safety: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { kind: IntegratorKindConfig::Auto, dzeta: None, safety: 0.5 }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PropagationConfig {
    pub zeta_max: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// spacing of diagnostics rows in zeta
    pub diagnostics_interval: f64,
    /// zeta values at which to write field snapshots
    pub snapshot_zetas: Vec<f64>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { diagnostics_interval: 0.01, snapshot_zetas: Vec::new() }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConfig {
    /// signal wavelength, meters
    pub wavelength: f64,
    /// EIT cell length, meters
    pub cell_length: f64,
    /// atoms per volume k^-3
    pub density: f64,
    /// k w0
    pub kw: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MultimodeConfig {
    /// scaled absorption rate of the non-transparent modes
    pub gamma: f64,
    #[serde(default)]
    pub dispersion: f64,
    /// rows in the overlap trace
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    24
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        TransverseGrid::with_offset(g.nx, g.ny, g.lx, g.ly, g.x_offset, g.y_offset)
            .map_err(|e| domain("grid", e.to_string()))?;
        if let Some(mask) = &g.mask {
            if !(mask.width > 0.0 && mask.width < 0.5 * g.lx.min(g.ly)) {
                return Err(domain(
                    "grid.mask.width",
                    "must be positive and smaller than half the grid extent",
                ));
            }
            if !(mask.strength >= 0.0) {
                return Err(domain("grid.mask.strength", "must be nonnegative"));
            }
            if let Some(sides) = &mask.sides {
                for s in sides {
                    if !matches!(s.as_str(), "left" | "right" | "bottom" | "top") {
                        return Err(domain(
                            "grid.mask.sides",
                            format!("unknown side {s:?}; use left/right/bottom/top"),
                        ));
                    }
                }
            }
        }

        self.validate_scenario()?;

        if let Some(dz) = self.integrator.dzeta {
            if !(dz > 0.0 && dz.is_finite()) {
                return Err(domain("integrator.dzeta", "must be positive and finite"));
            }
        }
        if !(self.integrator.safety > 0.0 && self.integrator.safety <= 1.0) {
            return Err(domain("integrator.safety", "must be in (0, 1]"));
        }
        if !(self.propagation.zeta_max > 0.0 && self.propagation.zeta_max.is_finite()) {
            return Err(domain("propagation.zeta_max", "must be positive and finite"));
        }
        if !(self.output.diagnostics_interval > 0.0) {
            return Err(domain("output.diagnostics_interval", "must be positive"));
        }
        for (i, z) in self.output.snapshot_zetas.iter().enumerate() {
            if !(*z >= 0.0 && *z <= self.propagation.zeta_max) {
                return Err(domain(
                    "output.snapshot_zetas",
                    format!("entry {i} must lie in [0, zeta_max]"),
                ));
            }
        }
        if let Some(p) = &self.physical {
            for (key, v) in [
                ("physical.wavelength", p.wavelength),
                ("physical.cell_length", p.cell_length),
                ("physical.density", p.density),
                ("physical.kw", p.kw),
            ] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(domain(key, "must be positive and finite"));
                }
            }
        }
        if let Some(m) = &self.multimode {
            if !(m.gamma >= 0.0 && m.gamma.is_finite()) {
                return Err(domain("multimode.gamma", "must be nonnegative and finite"));
            }
            if m.samples == 0 {
                return Err(domain("multimode.samples", "must be at least 1"));
            }
            if self.scenario.kind != ScenarioKind::Magnetic {
                return Err(domain(
                    "multimode",
                    "the multimode comparison is implemented for the magnetic scenario",
                ));
            }
        }
        Ok(())
    }

    fn validate_scenario(&self) -> Result<(), ConfigError> {
        let s = &self.scenario;
        let kind = s.kind.name().to_string();
        let forbid = |val: bool, key: &'static str| {
            if val {
                Err(ConfigError::Unexpected { kind: kind.clone(), key })
            } else {
                Ok(())
            }
        };
        match s.kind {
            ScenarioKind::Free => {
                forbid(s.force.is_some(), "scenario.force")?;
                forbid(s.field.is_some(), "scenario.field")?;
                forbid(s.imbalance.is_some(), "scenario.imbalance")?;
                forbid(s.detuning.is_some(), "scenario.detuning")?;
                forbid(s.scalar.is_some(), "scenario.scalar")?;
                forbid(s.legs.is_some(), "scenario.legs")?;
            }
            ScenarioKind::Electric => {
                let force = s.force.ok_or(ConfigError::Missing {
                    kind: kind.clone(),
                    key: "scenario.force",
                })?;
                if !(force > 0.0 && force.is_finite()) {
                    return Err(domain("scenario.force", "must be positive and finite"));
                }
                forbid(s.field.is_some(), "scenario.field")?;
                forbid(s.imbalance.is_some(), "scenario.imbalance")?;
                forbid(s.scalar.is_some(), "scenario.scalar")?;
                forbid(s.legs.is_some(), "scenario.legs")?;
            }
            ScenarioKind::Magnetic => {
                let field = s.field.ok_or(ConfigError::Missing {
                    kind: kind.clone(),
                    key: "scenario.field",
                })?;
                if !(field > 0.0 && field.is_finite()) {
                    return Err(domain("scenario.field", "must be positive and finite"));
                }
                if let Some(scalar) = &s.scalar {
                    match scalar.as_str() {
                        "neglected" => {}
                        "parametric" => {
                            // |R| <= 1/2 must hold on the grid
                            let max_half = magnetic_max_half_height(field);
                            let top = 0.5 * self.grid.ly + self.grid.y_offset.abs();
                            if top > max_half {
                                return Err(domain(
                                    "scenario.scalar",
                                    format!(
                                        "parametric scalar potential needs |R| = sqrt(B/2)|y| <= 1/2 on the grid; \
                                         half-height {top:.3} exceeds {max_half:.3}"
                                    ),
                                ));
                            }
                        }
                        other => {
                            return Err(domain(
                                "scenario.scalar",
                                format!("unknown value {other:?}; use neglected or parametric"),
                            ))
                        }
                    }
                }
                forbid(s.force.is_some(), "scenario.force")?;
                forbid(s.imbalance.is_some(), "scenario.imbalance")?;
                forbid(s.legs.is_some(), "scenario.legs")?;
            }
            ScenarioKind::AharonovBohm => {
                let r = s.imbalance.ok_or(ConfigError::Missing {
                    kind: kind.clone(),
                    key: "scenario.imbalance",
                })?;
                if !(r.abs() <= 0.5) {
                    return Err(domain("scenario.imbalance", "must satisfy |R| <= 1/2"));
                }
                if let Some(d) = s.detuning {
                    if !d.is_finite() {
                        return Err(domain("scenario.detuning", "must be finite"));
                    }
                }
                forbid(s.force.is_some(), "scenario.force")?;
                forbid(s.field.is_some(), "scenario.field")?;
                forbid(s.scalar.is_some(), "scenario.scalar")?;
                forbid(s.legs.is_some(), "scenario.legs")?;
            }
            ScenarioKind::Custom => {
                let legs = s.legs.as_ref().ok_or(ConfigError::Missing {
                    kind: kind.clone(),
                    key: "scenario.legs",
                })?;
                if legs.len() < 2 {
                    return Err(domain("scenario.legs", "needs at least two control legs"));
                }
                forbid(s.force.is_some(), "scenario.force")?;
                forbid(s.field.is_some(), "scenario.field")?;
                forbid(s.imbalance.is_some(), "scenario.imbalance")?;
                forbid(s.scalar.is_some(), "scenario.scalar")?;
            }
        }
        Ok(())
    }

    /// Check that referenced files exist, resolving relative paths against
    /// `base`.
    pub fn validate_paths(&self, base: &Path) -> Result<(), ConfigError> {
        if let Some(legs) = &self.scenario.legs {
            for leg in legs {
                let p = if leg.is_absolute() { leg.clone() } else { base.join(leg) };
                if !p.exists() {
                    return Err(ConfigError::MissingFile(p));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_free_config_fills_defaults() {
        let cfg = parse_config(
            r#"
            [grid]
            nx = 64
            ny = 64
            lx = 16.0
            ly = 16.0
            [scenario]
            kind = "free"
            [propagation]
            zeta_max = 0.5
            "#,
        )
        .unwrap();
        assert_eq!(cfg.mode, Mode::Run);
        assert_eq!(cfg.beam.oam, 0);
        assert_eq!(cfg.integrator.kind, IntegratorKindConfig::Auto);
        assert_eq!(cfg.output.diagnostics_interval, 0.01);
    }

    #[test]
    fn unknown_keys_are_fatal() {
        let err = parse_config(
            r#"
            [grid]
            nx = 64
            ny = 64
            lx = 16.0
            ly = 16.0
            wavelength = 0.795
            [scenario]
            kind = "free"
            [propagation]
            zeta_max = 0.5
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("wavelength"), "{err}");
    }

    #[test]
    fn ab_imbalance_bound_is_named() {
        let err = parse_config(
            r#"
            [grid]
            nx = 64
            ny = 64
            lx = 16.0
            ly = 16.0
            [scenario]
            kind = "aharonov_bohm"
            imbalance = 0.6
            [propagation]
            zeta_max = 0.5
            "#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("scenario.imbalance") && msg.contains("|R| <= 1/2"), "{msg}");
    }

    #[test]
    fn magnetic_parametric_scalar_cites_the_grid_bound() {
        let err = parse_config(
            r#"
            [grid]
            nx = 64
            ny = 64
            lx = 16.0
            ly = 16.0
            [scenario]
            kind = "magnetic"
            field = 2.0
            scalar = "parametric"
            [propagation]
            zeta_max = 0.5
            "#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("|R| = sqrt(B/2)|y| <= 1/2"), "{msg}");
    }

    #[test]
    fn scenario_parameter_mixups_are_rejected() {
        let err = parse_config(
            r#"
            [grid]
            nx = 64
            ny = 64
            lx = 16.0
            ly = 16.0
            [scenario]
            kind = "electric"
            force = 0.2
            field = 1.0
            [propagation]
            zeta_max = 0.5
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("scenario.field"), "{err}");
        let err2 = parse_config(
            r#"
            [grid]
            nx = 64
            ny = 64
            lx = 16.0
            ly = 16.0
            [scenario]
            kind = "electric"
            [propagation]
            zeta_max = 0.5
            "#,
        )
        .unwrap_err();
        assert!(err2.to_string().contains("scenario.force"), "{err2}");
    }

    #[test]
    fn config_echo_round_trips() {
        let text = r#"
            [grid]
            nx = 128
            ny = 64
            lx = 20.0
            ly = 10.0
            [grid.mask]
            width = 1.5
            sides = ["right"]
            [scenario]
            kind = "electric"
            force = 0.2
            [beam]
            x0 = -4.0
            [integrator]
            kind = "strang"
            dzeta = 1e-3
            [propagation]
            zeta_max = 1.0
            [output]
            diagnostics_interval = 0.02
            snapshot_zetas = [0.5, 1.0]
            "#;
        let cfg = parse_config(text).unwrap();
        let echo = toml::to_string(&cfg).unwrap();
        let back = parse_config(&echo).unwrap();
        assert_eq!(cfg, back);
    }
}
