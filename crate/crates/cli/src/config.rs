//! Run configuration: a TOML document with the flat sections `[beam]`,
//! `[turbulence]`, `[sweep]`, `[integration]` and `[output]`.
//!
//! Every key is optional in the grammar; required keys are enforced after
//! `--set` overrides are merged, so a value may come from either place.
//! Precedence is command line, then file, then `SCINT_WORKERS` (workers
//! only), then built-in defaults.

use std::path::PathBuf;

use serde::Deserialize;
use toml::{Table, Value};

use scint_core::quadrature::Method;
use scint_core::{Beam, InnerCoefficients, Integration, Turbulence};

use crate::CliError;

/// Keys that fall back to a default when omitted.
pub const DEFAULTED_KEYS: &[&str] = &[
    "beam.q0",
    "beam.lambda_diffuser",
    "turbulence.model",
    "sweep.r_perp",
    "sweep.modes",
    "sweep.min_applicability",
    "sweep.z_spacing",
    "integration.*",
    "output.path",
    "output.format",
];

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "SCINT_WORKERS";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    beam: Option<RawBeam>,
    turbulence: Option<RawTurbulence>,
    sweep: Option<RawSweep>,
    integration: Option<RawIntegration>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBeam {
    r0: Option<f64>,
    q0: Option<f64>,
    lambda_diffuser: Option<f64>,
    r1_sq_over_r0_sq: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTurbulence {
    cn2: Option<f64>,
    l0: Option<f64>,
    #[serde(rename = "L0")]
    outer_scale: Option<f64>,
    model: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    z: Option<Vec<f64>>,
    z_min: Option<f64>,
    z_max: Option<f64>,
    z_count: Option<i64>,
    z_spacing: Option<String>,
    r_perp: Option<Vec<f64>>,
    modes: Option<String>,
    min_applicability: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegration {
    method: Option<String>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    max_evals: Option<i64>,
    truncation_sigmas: Option<f64>,
    seed: Option<i64>,
    workers: Option<i64>,
    coefficients: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<String>,
    format: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSelection {
    Correlated,
    Multiplicative,
    Both,
}

impl ModeSelection {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "correlated" => Some(Self::Correlated),
            "multiplicative" => Some(Self::Multiplicative),
            "both" => Some(Self::Both),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Correlated => "correlated",
            Self::Multiplicative => "multiplicative",
            Self::Both => "both",
        }
    }

    pub fn correlated(self) -> bool {
        self != Self::Multiplicative
    }

    pub fn multiplicative(self) -> bool {
        self != Self::Correlated
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub z: Vec<f64>,
    pub r_perp: [f64; 2],
    pub modes: ModeSelection,
    pub min_applicability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub path: PathBuf,
    pub format: OutputFormat,
}

/// Fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub beam: Beam,
    pub turbulence: Turbulence,
    pub sweep: SweepConfig,
    pub integration: Integration,
    pub coefficients: InnerCoefficients,
    pub output: OutputConfig,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn missing(key: &str) -> CliError {
    config_err(format!(
        "missing required key `{key}` (keys with defaults: {})",
        DEFAULTED_KEYS.join(", ")
    ))
}

/// Prefixes a core validation error with the config key it came from.
fn keyed(e: scint_core::Error) -> CliError {
    match e {
        scint_core::Error::InvalidParameter { field, detail } => {
            let key = match field {
                "cn2" => "turbulence.cn2",
                "l0" => "turbulence.l0",
                "L0" => "turbulence.L0",
                "q0" => "beam.q0",
                "r0/lambda_diffuser" => "beam.r0 / beam.lambda_diffuser",
                "r1^2/r0^2" => "beam.r1_sq_over_r0_sq",
                "rel_tol" | "abs_tol" | "max_evals" | "truncation_sigmas" => {
                    return config_err(format!("integration.{field}: {detail}"))
                }
                other => other,
            };
            config_err(format!("{key}: {detail}"))
        }
        other => config_err(other.to_string()),
    }
}

/// Parses a `section.key=value` override. The value is read as a TOML
/// value, falling back to a bare string.
pub fn parse_override(s: &str) -> Result<(String, String, Value), CliError> {
    let (path, raw) = s
        .split_once('=')
        .ok_or_else(|| config_err(format!("override `{s}` must look like section.key=value")))?;
    let (section, key) = path
        .trim()
        .split_once('.')
        .ok_or_else(|| config_err(format!("override key `{path}` must look like section.key")))?;
    let raw = raw.trim();
    let value = toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((section.to_string(), key.to_string(), value))
}

/// Parses `text`, applies `overrides` on top, and validates.
pub fn parse_config(text: &str, overrides: &[(String, String, Value)]) -> Result<RunConfig, CliError> {
    let mut table: Table = toml::from_str(text).map_err(|e| config_err(format!("config syntax: {e}")))?;
    for (section, key, value) in overrides {
        let entry = table
            .entry(section.clone())
            .or_insert_with(|| Value::Table(Table::new()));
        match entry {
            Value::Table(t) => {
                t.insert(key.clone(), value.clone());
            }
            _ => return Err(config_err(format!("`{section}` is not a section"))),
        }
    }
    let raw: RawConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| config_err(format!("config: {}", e.message())))?;
    validate(raw)
}

fn validate(raw: RawConfig) -> Result<RunConfig, CliError> {
    let b = raw.beam.unwrap_or_default();
    let r0 = b.r0.ok_or_else(|| missing("beam.r0"))?;
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(config_err(format!("beam.r0: must be finite and > 0, got {r0}")));
    }
    let q0 = b.q0.unwrap_or(1e7);
    let beam = match (b.lambda_diffuser, b.r1_sq_over_r0_sq) {
        (Some(_), Some(_)) => {
            return Err(config_err(
                "beam.lambda_diffuser and beam.r1_sq_over_r0_sq are mutually exclusive",
            ))
        }
        (_, Some(ratio)) => Beam::with_radius_ratio(r0, q0, ratio),
        (lambda, None) => Beam::new(r0, q0, lambda.unwrap_or(f64::INFINITY)),
    }
    .map_err(keyed)?;

    let t = raw.turbulence.unwrap_or_default();
    let cn2 = t.cn2.ok_or_else(|| missing("turbulence.cn2"))?;
    let l0 = t.l0.ok_or_else(|| missing("turbulence.l0"))?;
    let turbulence = match t.model.as_deref().unwrap_or("tatarskii") {
        "tatarskii" => {
            if let Some(outer) = t.outer_scale {
                if outer.is_finite() {
                    return Err(config_err(
                        "turbulence.L0: the tatarskii model has no outer scale; set model = \"von_karman\"",
                    ));
                }
            }
            Turbulence::tatarskii(cn2, l0)
        }
        "von_karman" => {
            let outer = t
                .outer_scale
                .ok_or_else(|| config_err("turbulence.L0: required when model = \"von_karman\""))?;
            Turbulence::von_karman(cn2, l0, outer)
        }
        other => {
            return Err(config_err(format!(
                "turbulence.model: expected \"tatarskii\" or \"von_karman\", got \"{other}\""
            )))
        }
    }
    .map_err(keyed)?;

    let sweep = validate_sweep(raw.sweep.unwrap_or_default())?;
    let (integration, coefficients) = validate_integration(raw.integration.unwrap_or_default())?;
    if coefficients == InnerCoefficients::Printed && turbulence.model != scint_core::SpectrumModel::Tatarskii {
        return Err(config_err(
            "integration.coefficients: \"printed\" constants are valid for the tatarskii model only",
        ));
    }

    let o = raw.output.unwrap_or_default();
    let format = match o.format.as_deref().unwrap_or("csv") {
        "csv" => OutputFormat::Csv,
        other => return Err(config_err(format!("output.format: only \"csv\" is supported, got \"{other}\""))),
    };
    let path = o.path.unwrap_or_else(|| "scint.csv".into());
    if path.is_empty() {
        return Err(config_err("output.path: must not be empty"));
    }
    Ok(RunConfig {
        beam,
        turbulence,
        sweep,
        integration,
        coefficients,
        output: OutputConfig {
            path: PathBuf::from(path),
            format,
        },
    })
}

fn validate_sweep(s: RawSweep) -> Result<SweepConfig, CliError> {
    let range = [s.z_min.is_some(), s.z_max.is_some(), s.z_count.is_some()];
    let z = match (s.z, range) {
        (Some(_), r) if r.iter().any(|&x| x) => {
            return Err(config_err("sweep.z: give either a list or z_min/z_max/z_count, not both"))
        }
        (Some(z), _) => z,
        (None, [true, true, true]) => {
            let (lo, hi, n) = (s.z_min.unwrap(), s.z_max.unwrap(), s.z_count.unwrap());
            if n < 0 {
                return Err(config_err(format!("sweep.z_count: must be >= 0, got {n}")));
            }
            if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
                return Err(config_err(format!("sweep.z_min/z_max: need 0 < z_min <= z_max, got {lo}, {hi}")));
            }
            let n = n as usize;
            let log = match s.z_spacing.as_deref().unwrap_or("linear") {
                "linear" => false,
                "log" => true,
                other => {
                    return Err(config_err(format!(
                        "sweep.z_spacing: expected \"linear\" or \"log\", got \"{other}\""
                    )))
                }
            };
            (0..n)
                .map(|i| {
                    let f = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                    if log {
                        lo * (hi / lo).powf(f)
                    } else {
                        lo + (hi - lo) * f
                    }
                })
                .collect()
        }
        (None, [false, false, false]) => return Err(missing("sweep.z")),
        (None, _) => return Err(config_err("sweep: z_min, z_max and z_count must be given together")),
    };
    if let Some(bad) = z.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(config_err(format!("sweep.z: every distance must be finite and > 0, got {bad}")));
    }
    if z.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(config_err("sweep.z: distances must be strictly increasing"));
    }
    let r_perp = match s.r_perp.as_deref() {
        None => [0.0, 0.0],
        Some([x, y]) if x.is_finite() && y.is_finite() => [*x, *y],
        Some(other) => return Err(config_err(format!("sweep.r_perp: need two finite numbers, got {other:?}"))),
    };
    let modes = match s.modes.as_deref() {
        None => ModeSelection::Both,
        Some(m) => ModeSelection::parse(m).ok_or_else(|| {
            config_err(format!(
                "sweep.modes: expected \"correlated\", \"multiplicative\" or \"both\", got \"{m}\""
            ))
        })?,
    };
    let min_applicability = s.min_applicability.unwrap_or(scint_core::scintillation::DEFAULT_MIN_APPLICABILITY);
    if !(min_applicability >= 0.0) || !min_applicability.is_finite() {
        return Err(config_err(format!("sweep.min_applicability: must be >= 0, got {min_applicability}")));
    }
    Ok(SweepConfig {
        z,
        r_perp,
        modes,
        min_applicability,
    })
}

fn default_workers() -> Result<usize, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| config_err(format!("{WORKERS_ENV}: expected a non-negative integer, got \"{v}\""))),
        Err(_) => Ok(0),
    }
}

fn validate_integration(i: RawIntegration) -> Result<(Integration, InnerCoefficients), CliError> {
    let mut cfg = Integration::default();
    if let Some(m) = i.method.as_deref() {
        cfg.method = match m {
            "adaptive" => Method::AdaptiveProduct,
            "qmc" => Method::QuasiMonteCarlo,
            "mc" => Method::MonteCarlo,
            other => {
                return Err(config_err(format!(
                    "integration.method: expected \"adaptive\", \"qmc\" or \"mc\", got \"{other}\""
                )))
            }
        };
    }
    if let Some(v) = i.rel_tol {
        cfg.rel_tol = v;
    }
    if let Some(v) = i.abs_tol {
        cfg.abs_tol = v;
    }
    if let Some(v) = i.max_evals {
        cfg.max_evals = usize::try_from(v)
            .map_err(|_| config_err(format!("integration.max_evals: must be >= 1000, got {v}")))?;
    }
    if let Some(v) = i.truncation_sigmas {
        cfg.truncation_sigmas = v;
    }
    if let Some(v) = i.seed {
        cfg.seed = u64::try_from(v).map_err(|_| config_err(format!("integration.seed: must be >= 0, got {v}")))?;
    }
    cfg.workers = match i.workers {
        Some(v) => usize::try_from(v).map_err(|_| config_err(format!("integration.workers: must be >= 0, got {v}")))?,
        None => default_workers()?,
    };
    cfg.validate().map_err(keyed)?;
    let coefficients = match i.coefficients.as_deref().unwrap_or("derived") {
        "derived" => InnerCoefficients::Derived,
        "printed" => InnerCoefficients::Printed,
        other => {
            return Err(config_err(format!(
                "integration.coefficients: expected \"derived\" or \"printed\", got \"{other}\""
            )))
        }
    };
    Ok((cfg, coefficients))
}

pub fn method_name(m: Method) -> &'static str {
    match m {
        Method::AdaptiveProduct => "adaptive",
        Method::QuasiMonteCarlo => "qmc",
        Method::MonteCarlo => "mc",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[beam]\nr0 = 0.01\n[turbulence]\ncn2 = 1e-13\nl0 = 0.006283\n[sweep]\nz = [1000.0]\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse_config(MINIMAL, &[]).unwrap();
        assert_eq!(c.beam.q0, 1e7);
        assert!(c.beam.is_coherent());
        assert_eq!(c.sweep.modes, ModeSelection::Both);
        assert_eq!(c.integration.rel_tol, 1e-2);
        assert_eq!(c.output.path, PathBuf::from("scint.csv"));
    }

    #[test]
    fn overrides_take_precedence() {
        let o = vec![
            parse_override("turbulence.cn2=2.5e-14").unwrap(),
            parse_override("sweep.modes=correlated").unwrap(),
            parse_override("integration.seed = 9").unwrap(),
        ];
        let c = parse_config(MINIMAL, &o).unwrap();
        assert_eq!(c.turbulence.cn2, 2.5e-14);
        assert_eq!(c.sweep.modes, ModeSelection::Correlated);
        assert_eq!(c.integration.seed, 9);
        assert!(parse_override("nodot=1").is_err());
        assert!(parse_override("a.b").is_err());
    }

    #[test]
    fn range_sweeps() {
        let text = MINIMAL.replace("z = [1000.0]", "z_min = 100.0\nz_max = 10000.0\nz_count = 3\nz_spacing = \"log\"");
        let c = parse_config(&text, &[]).unwrap();
        let want = [100.0, 1000.0, 10000.0];
        for (a, b) in c.sweep.z.iter().zip(want) {
            assert!((a / b - 1.0).abs() < 1e-12);
        }
        let text = MINIMAL.replace("z = [1000.0]", "z_min = 100.0\nz_max = 300.0\nz_count = 3");
        assert_eq!(parse_config(&text, &[]).unwrap().sweep.z, vec![100.0, 200.0, 300.0]);
        let text = MINIMAL.replace("z = [1000.0]", "z_min = 100.0\nz_count = 3");
        assert!(parse_config(&text, &[]).is_err());
    }

    #[test]
    fn diagnostics_name_the_key() {
        let err = |t: &str| parse_config(t, &[]).unwrap_err().to_string();
        assert!(err(&MINIMAL.replace("cn2 = 1e-13", "cn2 = -1.0")).contains("turbulence.cn2"));
        assert!(err(&MINIMAL.replace("cn2 = 1e-13", "cn3 = 1e-13")).contains("cn3"));
        assert!(err(&MINIMAL.replace("r0 = 0.01", "")).contains("beam.r0"));
        assert!(err(&MINIMAL.replace("r0 = 0.01", "")).contains("integration.*"));
        let vk = MINIMAL.replace("cn2 = 1e-13", "cn2 = 1e-13\nmodel = \"von_karman\"");
        assert!(err(&vk).contains("turbulence.L0"));
        assert!(parse_config(&vk.replace("l0 = 0.006283", "l0 = 0.006283\nL0 = 10.0"), &[]).is_ok());
        assert!(err(&MINIMAL.replace("z = [1000.0]", "z = [2.0, 1.0]")).contains("sweep.z"));
        assert!(err(&format!("{MINIMAL}[integration]\nrel_tol = 0.0\n")).contains("integration.rel_tol"));
        assert!(err(&format!("{MINIMAL}[extra]\nx = 1\n")).contains("extra"));
        assert!(err("[beam\n").contains("syntax"));
    }

    #[test]
    fn diffuser_forms() {
        let c = parse_config(&MINIMAL.replace("r0 = 0.01", "r0 = 0.01\nr1_sq_over_r0_sq = 0.5"), &[]).unwrap();
        assert!((c.beam.r1().powi(2) / 1e-4 - 0.5).abs() < 1e-12);
        let both = MINIMAL.replace("r0 = 0.01", "r0 = 0.01\nr1_sq_over_r0_sq = 0.5\nlambda_diffuser = 0.01");
        assert!(parse_config(&both, &[]).is_err());
        let c = parse_config(&MINIMAL.replace("r0 = 0.01", "r0 = 0.01\nlambda_diffuser = inf"), &[]).unwrap();
        assert!(c.beam.is_coherent());
    }
}
