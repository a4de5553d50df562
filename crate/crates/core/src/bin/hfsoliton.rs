use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hfsoliton::cli::{self, Format, VerifyFlag};

/// Synthesize multi-soliton solutions of the Heisenberg ferromagnet equation.
#[derive(Parser, Debug)]
#[command(name = "hfsoliton", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Field table path; overrides the configuration.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Field table format; overrides the configuration.
    #[arg(long)]
    format: Option<Format>,
    /// Comma-separated checks: pde, norm, roundtrip, oracle. Overrides the configuration.
    #[arg(long, value_delimiter = ',')]
    verify: Option<Vec<VerifyFlag>>,

    #[arg(long, value_name = "VALUE")]
    tol_residual: Option<f64>,
    #[arg(long, value_name = "VALUE")]
    tol_pivot: Option<f64>,
    #[arg(long, value_name = "VALUE")]
    tol_overlap: Option<f64>,
    #[arg(long, value_name = "VALUE")]
    tol_hermitian: Option<f64>,
    #[arg(long, value_name = "VALUE")]
    tol_stable_switch: Option<f64>,
    #[arg(long, value_name = "VALUE")]
    tol_pole: Option<f64>,
    #[arg(long, value_name = "VALUE")]
    tol_norm: Option<f64>,
    #[arg(long, value_name = "VALUE")]
    tol_boundary: Option<f64>,
    #[arg(long, value_name = "VALUE")]
    tol_pde: Option<f64>,
    #[arg(long, value_name = "VALUE")]
    tol_scatter: Option<f64>,
    #[arg(long, value_name = "VALUE")]
    tol_oracle: Option<f64>,
}

impl Args {
    fn tolerance_overrides(&self) -> [(&'static str, Option<f64>); 11] {
        [
            ("residual", self.tol_residual),
            ("pivot", self.tol_pivot),
            ("overlap", self.tol_overlap),
            ("hermitian", self.tol_hermitian),
            ("stable_switch", self.tol_stable_switch),
            ("pole", self.tol_pole),
            ("norm", self.tol_norm),
            ("boundary", self.tol_boundary),
            ("pde", self.tol_pde),
            ("scatter", self.tol_scatter),
            ("oracle", self.tol_oracle),
        ]
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("HFSOLITON_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| format!("HFSOLITON_THREADS must be a non-negative integer, got '{value}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    let mut cfg = match cli::parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(1);
        }
    };
    if let Some(out) = &args.output {
        cfg.output_path = Some(out.clone());
    }
    if let Some(f) = args.format {
        cfg.format = f;
    }
    if let Some(v) = &args.verify {
        cfg.verify_flags = v.iter().copied().collect();
    }
    for (name, value) in args.tolerance_overrides() {
        if let Some(v) = value {
            cfg.tolerances.set(name, v);
        }
    }

    let outcome = match cli::run(&cfg) {
        Ok(o) => o,
        Err(cli::RunError::NoOutput) => {
            eprintln!("error: no output path; pass --output or set \"output\" in the configuration");
            return ExitCode::from(1);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    for gate in &outcome.report.gates {
        eprintln!(
            "{} {:<30} {:.3e} (tolerance {:.1e})",
            if gate.passed { "PASS" } else { "FAIL" },
            gate.name,
            gate.value,
            gate.tolerance
        );
    }
    if outcome.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
