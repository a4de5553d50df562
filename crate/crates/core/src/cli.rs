//! Run configuration, the synthesize/verify/export pipeline and its output formats.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, SpectralDataError};
use crate::marchenko::{eval_l, oracle_solve, QuadratureRule, QuadratureSpec};
use crate::reconstruct::{dist3, field_on_grid_with, magnetization, MagnetizationField, E3};
use crate::spectral::{embed_with, realize_triplet, Eigenvalue, SpectralData};
use crate::tolerances::Tolerances;
use crate::verify::{pde_residual, roundtrip_report_with, IntegrationSpec, ResidualReport, ScatteringReport};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: malformed document: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("line {line}: {source}")]
    Spectral {
        line: usize,
        #[source]
        source: SpectralDataError,
    },
    #[error("line {line}: {message}")]
    Grid { line: usize, message: String },
    #[error("line {line}: unknown verification '{name}' (expected one of pde, norm, roundtrip, oracle)")]
    Verify { line: usize, name: String },
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no output path given")]
    NoOutput,
    #[error(transparent)]
    Pipeline(#[from] Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyFlag {
    Pde,
    Norm,
    Roundtrip,
    Oracle,
}

impl FromStr for VerifyFlag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "pde" => Ok(Self::Pde),
            "norm" => Ok(Self::Norm),
            "roundtrip" => Ok(Self::Roundtrip),
            "oracle" => Ok(Self::Oracle),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spectral: SpectralData,
    pub z_min: f64,
    pub z_max: f64,
    pub n_z: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub verify_flags: BTreeSet<VerifyFlag>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub tolerances: Tolerances,
}

impl RunConfig {
    pub fn z_grid(&self) -> Vec<f64> {
        linspace(self.z_min, self.z_max, self.n_z)
    }

    pub fn t_grid(&self) -> Vec<f64> {
        linspace(self.t_min, self.t_max, self.n_t)
    }
}

/// `n` points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEigenvalue {
    a: Complex64,
    norming: Vec<Complex64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    z: [f64; 3],
    t: [f64; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    eigenvalues: Vec<RawEigenvalue>,
    grid: Option<RawGrid>,
    z: Option<[f64; 3]>,
    t: Option<[f64; 3]>,
    #[serde(default)]
    verify: Vec<String>,
    output: Option<PathBuf>,
    #[serde(default)]
    format: Format,
    #[serde(default)]
    tolerances: Tolerances,
}

/// 1-based line of byte offset `pos`.
fn line_of(text: &str, pos: usize) -> usize {
    text[..pos.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Byte offsets of the values of the top-level array stored under `key`.
fn array_items(text: &str, key: &str) -> Vec<usize> {
    let needle = format!("\"{key}\"");
    let Some(start) = text.find(&needle) else {
        return vec![];
    };
    let bytes = text.as_bytes();
    let Some(open) = text[start..].find('[').map(|i| start + i) else {
        return vec![];
    };
    let mut items = Vec::new();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut expect_item = true;
    let mut i = open + 1;
    while i < bytes.len() {
        let b = bytes[i];
        if in_string {
            match b {
                b'\\' => i += 1,
                b'"' => in_string = false,
                _ => {}
            }
        } else {
            match b {
                b'"' | b'{' | b'[' if depth == 0 && expect_item => {
                    items.push(i);
                    expect_item = false;
                }
                b',' if depth == 0 => expect_item = true,
                b']' if depth == 0 => break,
                _ if depth == 0 && expect_item && !b.is_ascii_whitespace() => {
                    items.push(i);
                    expect_item = false;
                }
                _ => {}
            }
            match b {
                b'"' => in_string = true,
                b'{' | b'[' => depth += 1,
                b'}' | b']' => depth = depth.saturating_sub(1),
                _ => {}
            }
        }
        i += 1;
    }
    items
}

fn key_line(text: &str, key: &str) -> usize {
    text.find(&format!("\"{key}\"")).map_or(1, |p| line_of(text, p))
}

fn grid_axis(
    text: &str,
    key: &str,
    spec: [f64; 3],
    min_count: usize,
) -> Result<(f64, f64, usize), ConfigError> {
    let line = key_line(text, key);
    let err = |message: String| ConfigError::Grid { line, message };
    let [lo, hi, count] = spec;
    if !lo.is_finite() || !hi.is_finite() {
        return Err(err(format!("{key} bounds must be finite")));
    }
    if count.fract() != 0.0 || count < min_count as f64 || count > 1e8 {
        return Err(err(format!("{key} count must be an integer >= {min_count}, got {count}")));
    }
    let n = count as usize;
    if key == "z" && lo >= hi {
        return Err(err(format!("z range needs min < max, got [{lo}, {hi}]")));
    }
    if key == "t" && (lo > hi || (n > 1 && lo == hi)) {
        return Err(err(format!("t range needs min <= max with distinct points, got [{lo}, {hi}]")));
    }
    Ok((lo, hi, n))
}

/// Parses and validates a JSON run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| {
        let (line, column, message) = (e.line(), e.column(), e.to_string());
        // serde_json appends its own position; keep the message alone.
        let message = message
            .rsplit_once(" at line ")
            .map_or(message.clone(), |(m, _)| m.to_string());
        match e.classify() {
            serde_json::error::Category::Data => ConfigError::Schema { line, column, message },
            _ => ConfigError::Syntax { line, column, message },
        }
    })?;

    let entries: Vec<Eigenvalue> = raw
        .eigenvalues
        .into_iter()
        .map(|e| Eigenvalue { a: e.a, norming: e.norming })
        .collect();
    let spectral = SpectralData::new(entries).map_err(|source| {
        let index = match source {
            SpectralDataError::NonPositiveRealPart { index, .. }
            | SpectralDataError::EmptyNorming { index }
            | SpectralDataError::ZeroLeadingNorming { index }
            | SpectralDataError::NonFinite { index }
            | SpectralDataError::NotSimple { index, .. } => index,
            SpectralDataError::DuplicateEigenvalue { second, .. } => second,
        };
        let line = array_items(text, "eigenvalues")
            .get(index)
            .map_or_else(|| key_line(text, "eigenvalues"), |&p| line_of(text, p));
        ConfigError::Spectral { line, source }
    })?;

    let (z, t) = match (raw.grid, raw.z, raw.t) {
        (Some(g), None, None) => (g.z, g.t),
        (None, Some(z), Some(t)) => (z, t),
        (Some(_), _, _) => {
            return Err(ConfigError::Grid {
                line: key_line(text, "grid"),
                message: "give the grid either under \"grid\" or as top-level \"z\" and \"t\", not both".into(),
            })
        }
        _ => {
            return Err(ConfigError::Grid {
                line: 1,
                message: "missing grid: expected grid.z and grid.t as [min, max, count]".into(),
            })
        }
    };
    let (z_min, z_max, n_z) = grid_axis(text, "z", z, 2)?;
    let (t_min, t_max, n_t) = grid_axis(text, "t", t, 1)?;

    let items = array_items(text, "verify");
    let mut verify_flags = BTreeSet::new();
    for (i, name) in raw.verify.iter().enumerate() {
        let flag = name.parse().map_err(|name| ConfigError::Verify {
            line: items.get(i).map_or(1, |&p| line_of(text, p)),
            name,
        })?;
        verify_flags.insert(flag);
    }

    Ok(RunConfig {
        spectral,
        z_min,
        z_max,
        n_z,
        t_min,
        t_max,
        n_t,
        verify_flags,
        output_path: raw.output,
        format: raw.format,
        tolerances: raw.tolerances,
    })
}

/// One gated quantity of the verification report.
#[derive(Debug, Clone, Serialize)]
pub struct Gate {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Gate {
    fn new(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub max_norm_defect: f64,
    pub max_hermitian_defect: f64,
    pub max_trace_defect: f64,
    /// Half-width `40 / (2 min Re a_j)` at which the boundary defect is measured.
    pub boundary_z: f64,
    pub boundary_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PdeReport {
    pub t_centers: Vec<f64>,
    pub z_range: [f64; 2],
    pub residuals: Vec<ResidualReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundtripReport {
    pub scattering: Vec<ScatteringReport>,
    /// `|a_num(0) - 1|`.
    pub zero_defect: f64,
    /// `max |a_num(lambda, t_max) - a_num(lambda, t_min)|`.
    pub time_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub z: Vec<f64>,
    pub intervals: usize,
    pub max_difference: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tolerances: Tolerances,
    pub gates: Vec<Gate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pde: Option<PdeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roundtrip: Option<RoundtripReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub field: MagnetizationField,
    pub output_path: PathBuf,
    pub report_path: Option<PathBuf>,
    pub report: RunReport,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.report.passed
    }
}

/// Field table as CSV with 17 significant digits.
pub fn field_csv(field: &MagnetizationField) -> String {
    let mut out = String::from("t,z,m1,m2,m3\n");
    for (ti, &t) in field.t_grid.iter().enumerate() {
        for (zi, &z) in field.z_grid.iter().enumerate() {
            let m = field.at(ti, zi);
            writeln!(out, "{t:.16e},{z:.16e},{:.16e},{:.16e},{:.16e}", m[0], m[1], m[2])
                .expect("writing to a String cannot fail");
        }
    }
    out
}

#[derive(Serialize)]
struct JsonRow {
    t: f64,
    z: f64,
    m1: f64,
    m2: f64,
    m3: f64,
}

/// Field table as a JSON array of `{t, z, m1, m2, m3}` rows.
pub fn field_json(field: &MagnetizationField) -> String {
    let rows: Vec<JsonRow> = field
        .t_grid
        .iter()
        .enumerate()
        .flat_map(|(ti, &t)| {
            field.z_grid.iter().enumerate().map(move |(zi, &z)| {
                let m = field.at(ti, zi);
                JsonRow { t, z, m1: m[0], m2: m[1], m3: m[2] }
            })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
    s.push('\n');
    s
}

/// `out.csv` -> `out.report.json`.
pub fn report_path(output: &Path) -> PathBuf {
    output.with_extension("report.json")
}

const PDE_HZ: f64 = 5e-3;
const PDE_HT: f64 = 1e-4;
const ROUNDTRIP_LAMBDAS: [f64; 7] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
const ORACLE_Z: [f64; 3] = [-1.0, 0.0, 2.0];
const ORACLE_INTERVALS: usize = 2000;

fn t_centers(cfg: &RunConfig) -> Vec<f64> {
    let mut c = vec![cfg.t_min];
    if cfg.t_max > cfg.t_min {
        c.push(cfg.t_max);
    }
    c
}

fn verify_norm(cfg: &RunConfig, field: &MagnetizationField, gates: &mut Vec<Gate>) -> crate::Result<NormReport> {
    let tol = &cfg.tolerances;
    let tr = realize_triplet(&cfg.spectral);
    let boundary_z = cfg.spectral.decay_half_width();
    let mut boundary_defect: f64 = 0.0;
    for &t in &cfg.t_grid() {
        let sys = embed_with(&tr, t, tol)?;
        for z in [-boundary_z, boundary_z] {
            boundary_defect = boundary_defect.max(dist3(&magnetization(&sys, z)?, &E3));
        }
    }
    let report = NormReport {
        max_norm_defect: field.norm_defect(),
        max_hermitian_defect: field.max_hermitian_defect,
        max_trace_defect: field.max_trace_defect,
        boundary_z,
        boundary_defect,
    };
    gates.push(Gate::new("norm", report.max_norm_defect, tol.norm));
    gates.push(Gate::new("hermitian", report.max_hermitian_defect, tol.hermitian));
    gates.push(Gate::new("boundary", report.boundary_defect, tol.boundary));
    Ok(report)
}

fn verify_pde(cfg: &RunConfig, gates: &mut Vec<Gate>) -> crate::Result<PdeReport> {
    let n_z = (((cfg.z_max - cfg.z_min) / PDE_HZ).round() as usize).max(4) + 1;
    let z = linspace(cfg.z_min, cfg.z_max, n_z);
    let centers = t_centers(cfg);
    let mut residuals = Vec::new();
    for &tc in &centers {
        let t: Vec<f64> = (-2..=2).map(|k| tc + k as f64 * PDE_HT).collect();
        let field = field_on_grid_with(&cfg.spectral, &z, &t, &cfg.tolerances)?;
        residuals.push(pde_residual(&field)?);
    }
    let worst = residuals.iter().map(|r| r.max_pde_residual).fold(0.0, f64::max);
    gates.push(Gate::new("pde", worst, cfg.tolerances.pde));
    Ok(PdeReport {
        t_centers: centers,
        z_range: [cfg.z_min, cfg.z_max],
        residuals,
    })
}

fn verify_roundtrip(cfg: &RunConfig, gates: &mut Vec<Gate>) -> crate::Result<RoundtripReport> {
    let tol = &cfg.tolerances;
    let spec = IntegrationSpec {
        tolerance: tol.scatter * 1e-2,
        ..IntegrationSpec::default()
    };
    let scattering = t_centers(cfg)
        .into_iter()
        .map(|t| roundtrip_report_with(&cfg.spectral, t, &ROUNDTRIP_LAMBDAS, &spec, tol))
        .collect::<crate::Result<Vec<_>>>()?;
    let first = &scattering[0];
    let last = &scattering[scattering.len() - 1];
    let zero = ROUNDTRIP_LAMBDAS.iter().position(|&l| l == 0.0).expect("grid holds 0");
    let zero_defect = (first.a_numeric[zero] - 1.0).norm();
    let time_defect = first
        .a_numeric
        .iter()
        .zip(&last.a_numeric)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    let unimodularity = scattering.iter().map(|s| s.unimodularity_defect).fold(0.0, f64::max);
    let reflection = scattering.iter().map(|s| s.reflection_defect).fold(0.0, f64::max);
    gates.push(Gate::new("unimodularity", unimodularity, tol.scatter));
    gates.push(Gate::new("reflection", reflection, tol.scatter));
    gates.push(Gate::new("transmission_at_zero", zero_defect, tol.scatter));
    gates.push(Gate::new("transmission_time_invariance", time_defect, tol.scatter));
    Ok(RoundtripReport {
        scattering,
        zero_defect,
        time_defect,
    })
}

fn verify_oracle(cfg: &RunConfig, gates: &mut Vec<Gate>) -> crate::Result<OracleReport> {
    let sys = embed_with(&realize_triplet(&cfg.spectral), cfg.t_min, &cfg.tolerances)?;
    let mut max_difference = Vec::new();
    for z in ORACLE_Z {
        let sol = oracle_solve(&sys, z, QuadratureSpec::new(ORACLE_INTERVALS, QuadratureRule::Simpson))?;
        let mut worst: f64 = 0.0;
        for (y, l) in sol.y.iter().zip(&sol.l) {
            worst = worst.max(l.max_abs_diff(&eval_l(&sys, z, *y)?));
        }
        max_difference.push(worst);
    }
    let worst = max_difference.iter().copied().fold(0.0, f64::max);
    gates.push(Gate::new("oracle", worst, cfg.tolerances.oracle));
    Ok(OracleReport {
        z: ORACLE_Z.to_vec(),
        intervals: ORACLE_INTERVALS,
        max_difference,
    })
}

/// Computes the verification report for `cfg` and the already synthesized `field`.
pub fn verify(cfg: &RunConfig, field: &MagnetizationField) -> crate::Result<RunReport> {
    let mut gates = Vec::new();
    let flags = &cfg.verify_flags;
    let norm = if flags.contains(&VerifyFlag::Norm) {
        Some(verify_norm(cfg, field, &mut gates)?)
    } else {
        None
    };
    let pde = if flags.contains(&VerifyFlag::Pde) {
        Some(verify_pde(cfg, &mut gates)?)
    } else {
        None
    };
    let roundtrip = if flags.contains(&VerifyFlag::Roundtrip) {
        Some(verify_roundtrip(cfg, &mut gates)?)
    } else {
        None
    };
    let oracle = if flags.contains(&VerifyFlag::Oracle) {
        Some(verify_oracle(cfg, &mut gates)?)
    } else {
        None
    };
    Ok(RunReport {
        tolerances: cfg.tolerances,
        passed: gates.iter().all(|g| g.passed),
        gates,
        norm,
        pde,
        roundtrip,
        oracle,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    std::fs::write(path, contents).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Synthesizes the field, runs the requested verifications and writes the artifacts.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, RunError> {
    let output_path = cfg.output_path.clone().ok_or(RunError::NoOutput)?;
    let field = field_on_grid_with(&cfg.spectral, &cfg.z_grid(), &cfg.t_grid(), &cfg.tolerances)?;
    let table = match cfg.format {
        Format::Csv => field_csv(&field),
        Format::Json => field_json(&field),
    };
    write(&output_path, &table)?;
    let report = verify(cfg, &field)?;
    let report_path = if cfg.verify_flags.is_empty() {
        None
    } else {
        let path = report_path(&output_path);
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        write(&path, &text)?;
        Some(path)
    };
    Ok(RunOutcome {
        field,
        output_path,
        report_path,
        report,
    })
}
