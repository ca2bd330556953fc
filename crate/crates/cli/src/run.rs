//! Sweep execution and output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::Instant;

use serde_json::json;

use scint_core::scintillation::SweepOptions;
use scint_core::{CurvePoint, InnerCoefficients, Model, Scintillation};

use crate::config::{method_name, RunConfig};
use crate::output::{metadata_path, write_csv, CSV_COLUMNS};
use crate::CliError;

/// Outcome of a completed run.
#[derive(Debug)]
pub struct RunSummary {
    pub points: Vec<CurvePoint>,
    pub failed_points: usize,
    pub wall_time_s: f64,
}

pub fn model(cfg: &RunConfig) -> Result<Model, CliError> {
    Scintillation::new(cfg.beam, cfg.turbulence, cfg.integration)
        .and_then(|m| m.with_coefficients(cfg.coefficients))
        .map_err(|e| CliError::Config(e.to_string()))
}

/// Evaluates the sweep without writing anything.
pub fn evaluate(cfg: &RunConfig) -> Result<Vec<CurvePoint>, CliError> {
    let opts = SweepOptions {
        correlated: cfg.sweep.modes.correlated(),
        multiplicative: cfg.sweep.modes.multiplicative(),
        min_applicability: cfg.sweep.min_applicability,
        r_perp: cfg.sweep.r_perp,
    };
    model(cfg)?
        .sweep(&cfg.sweep.z, &opts)
        .map_err(|e| CliError::Config(format!("sweep.z: {e}")))
}

/// Runs the sweep, writes the CSV and its metadata sidecar, and logs one
/// line per point to `log`.
pub fn run(cfg: &RunConfig, log: &mut dyn Write) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    let points = evaluate(cfg)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let mut failed_points = 0;
    for p in &points {
        let _ = writeln!(
            log,
            "z = {} m: sigma2 correlated {:.4} (+- {:.1e}), multiplicative {:.4} (+- {:.1e}), applicability {:.1}",
            p.z,
            p.sigma2_correlated,
            p.err_sigma2_correlated,
            p.sigma2_multiplicative,
            p.err_sigma2_multiplicative,
            p.applicability_ratio
        );
        if p.below_applicability {
            let _ = writeln!(
                log,
                "warning: z = {} m is below the applicability floor ({:.2} < {})",
                p.z, p.applicability_ratio, cfg.sweep.min_applicability
            );
        }
        if !p.failures.is_empty() {
            failed_points += 1;
            for f in &p.failures {
                let _ = writeln!(log, "error: z = {} m: {f}", p.z);
            }
        }
    }
    let path = &cfg.output.path;
    let io_err = |p: &std::path::Path, e: std::io::Error| CliError::Io {
        path: p.display().to_string(),
        source: e,
    };
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    write_csv(&mut w, &points).and_then(|_| w.flush()).map_err(|e| io_err(path, e))?;

    let meta = metadata(cfg, &points, wall_time_s);
    let meta_path = metadata_path(path);
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    std::fs::write(&meta_path, text + "\n").map_err(|e| io_err(&meta_path, e))?;
    Ok(RunSummary {
        points,
        failed_points,
        wall_time_s,
    })
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        serde_json::Value::Null
    }
}

pub fn metadata(cfg: &RunConfig, points: &[CurvePoint], wall_time_s: f64) -> serde_json::Value {
    let i = &cfg.integration;
    let t = &cfg.turbulence;
    json!({
        "code_version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": wall_time_s,
        "columns": CSV_COLUMNS,
        "seed": i.seed,
        "workers": i.workers,
        "integration": {
            "method": method_name(i.method),
            "rel_tol": i.rel_tol,
            "abs_tol": i.abs_tol,
            "max_evals": i.max_evals,
            "truncation_sigmas": i.truncation_sigmas,
            "coefficients": match cfg.coefficients {
                InnerCoefficients::Derived => "derived",
                InnerCoefficients::Printed => "printed",
            },
        },
        "beam": {
            "r0": cfg.beam.r0,
            "q0": cfg.beam.q0,
            "lambda_diffuser": finite_or_null(cfg.beam.lambda_diffuser),
            "r1": cfg.beam.r1(),
        },
        "turbulence": {
            "cn2": t.cn2,
            "l0": t.inner_scale,
            "L0": finite_or_null(t.outer_scale),
            "model": match t.model {
                scint_core::SpectrumModel::Tatarskii => "tatarskii",
                scint_core::SpectrumModel::VonKarman => "von_karman",
            },
        },
        "sweep": {
            "points": points.len(),
            "modes": cfg.sweep.modes.name(),
            "r_perp": cfg.sweep.r_perp,
            "min_applicability": cfg.sweep.min_applicability,
            "below_applicability_z": points.iter().filter(|p| p.below_applicability).map(|p| p.z).collect::<Vec<_>>(),
        },
        "failures": points
            .iter()
            .flat_map(|p| p.failures.iter().map(move |f| json!({"z_m": p.z, "message": f})))
            .collect::<Vec<_>>(),
    })
}
