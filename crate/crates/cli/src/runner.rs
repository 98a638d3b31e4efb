//! Execute one configured run: build the scenario, propagate, and emit
//! deterministic artifacts (diagnostics CSV, snapshots, manifest).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use quasibeam::Complex64;
use thiserror::Error;

use quasibeam::diagnostics::{moments, norm_sq, oam_expectation, DiagnosticsError};
use quasibeam::field::ComplexField;
use quasibeam::gauge::{gauge_numeric, ControlConfig, DerivativeMethod, GaugeError, SampledConfig};
use quasibeam::grid::{GridError, TransverseGrid};
use quasibeam::multimode::{
    compare_with_single_mode, AbsorptionModel, MultimodeError, MultimodeSystem,
};
use quasibeam::oracle::free_gaussian;
use quasibeam::propagate::{
    IntegratorChoice, IntegratorKind, MaskSpec, PropagationError, Propagator,
};
use quasibeam::scenario::{
    make_aharonov_bohm, make_electric, make_magnetic, validate_feasibility, BoundStatus,
    MagneticScalar, PhysicalParams, ScenarioError, ScenarioFields,
};
use quasibeam::snapshot::{read_snapshot, write_snapshot, SnapshotError};

use crate::config::{
    IntegratorKindConfig, MaskConfig, RunConfig, ScenarioKind,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Multimode(#[from] MultimodeError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config echo failed to serialize: {0}")]
    Echo(#[from] toml::ser::Error),
    #[error("{0}")]
    Unsupported(String),
}

pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub diagnostics: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn build_mask(mask: &MaskConfig) -> MaskSpec {
    let mut spec = MaskSpec::all_sides(mask.width, mask.strength);
    if let Some(sides) = &mask.sides {
        spec.left = sides.iter().any(|s| s == "left");
        spec.right = sides.iter().any(|s| s == "right");
        spec.bottom = sides.iter().any(|s| s == "bottom");
        spec.top = sides.iter().any(|s| s == "top");
    }
    spec
}

fn build_beam(grid: TransverseGrid, cfg: &RunConfig) -> ComplexField {
    let b = &cfg.beam;
    if b.x0 == 0.0 && b.y0 == 0.0 && b.kx == 0.0 && b.ky == 0.0 && b.oam == 0 && b.xy_phase == 0.0
    {
        return free_gaussian(grid, 0.0);
    }
    let m = b.oam;
    let mut f = ComplexField::from_fn(grid, |x, y| {
        let dx = x - b.x0;
        let dy = y - b.y0;
        let envelope = (-(dx * dx + dy * dy)).exp();
        let vortex = if m == 0 {
            Complex64::ONE
        } else if m > 0 {
            Complex64::new(dx, dy).powu(m as u32)
        } else {
            Complex64::new(dx, -dy).powu((-m) as u32)
        };
        let phase = Complex64::new(0.0, b.kx * x + b.ky * y + b.xy_phase * dx * dy).exp();
        vortex * phase * envelope
    });
    let n = norm_sq(&f);
    f.scale(n.sqrt().recip());
    f
}

struct BuiltScenario {
    fields: ScenarioFields,
    default_kind: IntegratorKind,
    id: String,
    warnings: Vec<String>,
}

fn build_scenario(
    grid: TransverseGrid,
    cfg: &RunConfig,
    base_dir: &Path,
) -> Result<BuiltScenario, RunError> {
    let s = &cfg.scenario;
    Ok(match s.kind {
        ScenarioKind::Free => BuiltScenario {
            fields: ScenarioFields::free(grid),
            default_kind: IntegratorKind::Strang,
            id: "free".into(),
            warnings: Vec::new(),
        },
        ScenarioKind::Electric => {
            let sc = make_electric(grid, s.force.unwrap())?;
            BuiltScenario {
                fields: sc.fields,
                default_kind: IntegratorKind::Strang,
                id: format!("electric F={}", sc.force),
                warnings: sc.warnings,
            }
        }
        ScenarioKind::Magnetic => {
            let scalar = match s.scalar.as_deref() {
                Some("parametric") => MagneticScalar::Parametric,
                _ => MagneticScalar::Neglected,
            };
            let sc = make_magnetic(grid, s.field.unwrap(), scalar)?;
            BuiltScenario {
                fields: sc.fields,
                default_kind: IntegratorKind::MixedRep,
                id: format!("magnetic B={}", sc.field),
                warnings: Vec::new(),
            }
        }
        ScenarioKind::AharonovBohm => {
            let sc = make_aharonov_bohm(grid, s.imbalance.unwrap(), s.detuning.unwrap_or(0.0), None)?;
            BuiltScenario {
                fields: sc.fields,
                default_kind: IntegratorKind::Rk4,
                id: format!("aharonov_bohm R={} D={}", sc.imbalance, sc.detuning),
                warnings: Vec::new(),
            }
        }
        ScenarioKind::Custom => {
            let mut legs = Vec::new();
            for path in s.legs.as_ref().unwrap() {
                let p = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                let (field, _) = read_snapshot(File::open(&p)?)?;
                if field.grid() != &grid {
                    return Err(RunError::Unsupported(format!(
                        "control leg {p:?} is sampled on a different grid than [grid]"
                    )));
                }
                legs.push(field);
            }
            let control =
                ControlConfig::Sampled(SampledConfig { legs, derivative: DerivativeMethod::Fd4 });
            let reduced = gauge_numeric(&control)?.reduced();
            BuiltScenario {
                fields: ScenarioFields { gauge: reduced, detuning: None },
                default_kind: IntegratorKind::Rk4,
                id: "custom".into(),
                warnings: Vec::new(),
            }
        }
    })
}

fn feasibility_warnings(cfg: &RunConfig) -> Vec<String> {
    let Some(p) = &cfg.physical else { return Vec::new() };
    let phys = PhysicalParams {
        wavelength: p.wavelength,
        cell_length: p.cell_length,
        density: p.density,
        kw: p.kw,
    };
    let eta = cfg.scenario.field.map(|b| b / 4.0);
    let report = validate_feasibility(cfg.scenario.force, eta, &phys);
    report
        .checks
        .iter()
        .filter(|c| c.status != BoundStatus::Pass)
        .map(|c| {
            let level = match c.status {
                BoundStatus::Warning => "warning",
                BoundStatus::Violation => "VIOLATION",
                BoundStatus::Pass => unreachable!(),
            };
            format!("feasibility {level}: {} (ratio {:.3e}; {})", c.name, c.ratio, c.detail)
        })
        .collect()
}

/// Deterministic artifacts: identical config -> byte-identical diagnostics.
pub fn run(cfg: &RunConfig, out_dir: &Path, base_dir: &Path) -> Result<RunArtifacts, RunError> {
    let started = Instant::now();
    fs::create_dir_all(out_dir)?;
    let grid = TransverseGrid::with_offset(
        cfg.grid.nx,
        cfg.grid.ny,
        cfg.grid.lx,
        cfg.grid.ly,
        cfg.grid.x_offset,
        cfg.grid.y_offset,
    )?;
    let scenario = build_scenario(grid, cfg, base_dir)?;
    let mut warnings = scenario.warnings.clone();
    warnings.extend(feasibility_warnings(cfg));

    let kind = match cfg.integrator.kind {
        IntegratorKindConfig::Auto => scenario.default_kind,
        IntegratorKindConfig::Strang => IntegratorKind::Strang,
        IntegratorKindConfig::MixedRep => IntegratorKind::MixedRep,
        IntegratorKindConfig::Rk4 => IntegratorKind::Rk4,
    };
    let choice = match (kind, cfg.integrator.dzeta) {
        (IntegratorKind::Rk4, None) => IntegratorChoice::rk4_auto(
            &grid,
            &scenario.fields.gauge,
            scenario.fields.detuning.as_ref(),
            cfg.integrator.safety,
        ),
        (k, dz) => IntegratorChoice {
            kind: k,
            dzeta: dz.unwrap_or(1e-3),
            safety: cfg.integrator.safety,
        },
    };
    let mask = cfg.grid.mask.as_ref().map(build_mask);
    let psi0 = build_beam(grid, cfg);
    let mut propagator = Propagator::new(
        psi0,
        &scenario.fields.gauge,
        scenario.fields.detuning.as_ref(),
        choice,
        mask.as_ref(),
    )?;

    let diagnostics_path = out_dir.join("diagnostics.csv");
    let mut csv = BufWriter::new(File::create(&diagnostics_path)?);
    writeln!(csv, "zeta,norm,xc,yc,wx2,wy2,lz")?;
    let mut write_row = |zeta: f64, psi: &ComplexField| -> Result<(), RunError> {
        let m = moments(psi)?;
        let lz = oam_expectation(psi)?;
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            fmt_f64(zeta),
            fmt_f64(m.norm_sq),
            fmt_f64(m.centroid_x),
            fmt_f64(m.centroid_y),
            fmt_f64(m.width_sq_x()),
            fmt_f64(m.width_sq_y()),
            fmt_f64(lz)
        )?;
        Ok(())
    };
    write_row(0.0, &propagator.state().psi)?;

    let mut snapshots = Vec::new();
    let mut snapshot_left: Vec<f64> = cfg.output.snapshot_zetas.clone();
    snapshot_left.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let take_snapshots =
        |zeta: f64, psi: &ComplexField, pending: &mut Vec<f64>, out: &mut Vec<PathBuf>| -> Result<(), RunError> {
            let dz_half = 0.5 * choice.dzeta;
            while let Some(&next) = pending.first() {
                if zeta + dz_half >= next {
                    pending.remove(0);
                    let path = out_dir.join(format!("field_zeta={next:.6}.qpf"));
                    write_snapshot(BufWriter::new(File::create(&path)?), psi, zeta, &scenario.id)?;
                    out.push(path);
                } else {
                    break;
                }
            }
            Ok(())
        };
    take_snapshots(0.0, &propagator.state().psi, &mut snapshot_left, &mut snapshots)?;

    let interval = cfg.output.diagnostics_interval;
    let rows = (cfg.propagation.zeta_max / interval).round().max(1.0) as usize;
    for row in 1..=rows {
        let target = (cfg.propagation.zeta_max * row as f64 / rows as f64)
            .min(cfg.propagation.zeta_max);
        propagator.advance_to(target)?;
        write_row(propagator.state().zeta, &propagator.state().psi)?;
        take_snapshots(
            propagator.state().zeta,
            &propagator.state().psi,
            &mut snapshot_left,
            &mut snapshots,
        )?;
    }

    if let Some(mm) = &cfg.multimode {
        let field = cfg.scenario.field.unwrap();
        let control = quasibeam::scenario::magnetic_saturated_config(grid, field)?;
        let matrix = gauge_numeric(&control)?;
        let system = MultimodeSystem::new(&matrix, DerivativeMethod::Fd4);
        let mut absorption = AbsorptionModel::uniform(2, mm.gamma);
        absorption.dispersion = vec![mm.dispersion, 0.0];
        let reduced = quasibeam::scenario::magnetic_saturated_fields(grid, field);
        let dz = 0.5 * system.stability_limit(&absorption);
        let trace = compare_with_single_mode(
            &build_beam(grid, cfg),
            system,
            &absorption,
            &reduced.gauge,
            None,
            IntegratorChoice::new(IntegratorKind::MixedRep, choice.dzeta.min(1e-3)),
            dz,
            cfg.propagation.zeta_max,
            mm.samples,
        )?;
        let path = out_dir.join("overlap_trace.csv");
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "zeta,overlap,leakage,total_norm")?;
        for row in &trace {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(row.zeta),
                fmt_f64(row.overlap),
                fmt_f64(row.leakage),
                fmt_f64(row.total_norm)
            )?;
        }
    }

    // manifest: config echo (re-parses to an equivalent RunConfig), tool
    // version, wall time
    let manifest_path = out_dir.join("manifest.toml");
    let mut manifest = String::new();
    manifest.push_str(&format!("version = {:?}\n", env!("CARGO_PKG_VERSION")));
    manifest.push_str(&format!("scenario = {:?}\n", scenario.id));
    manifest.push_str(&format!("wall_time_s = {:.3}\n", started.elapsed().as_secs_f64()));
    if !warnings.is_empty() {
        manifest.push_str(&format!("warnings = {warnings:?}\n"));
    }
    manifest.push_str("\n[config]\n");
    let echo = toml::to_string(cfg)?;
    for line in echo.lines() {
        // nest the echo one level down
        if let Some(rest) = line.strip_prefix('[') {
            manifest.push_str(&format!("[config.{rest}\n"));
        } else {
            manifest.push_str(line);
            manifest.push('\n');
        }
    }
    fs::write(&manifest_path, manifest)?;

    Ok(RunArtifacts { out_dir: out_dir.to_path_buf(), diagnostics: diagnostics_path, snapshots, warnings })
}
