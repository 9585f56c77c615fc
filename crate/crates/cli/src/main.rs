//! `cvtrust`: rescaling plans, equivalence verification, key-rate scans and
//! detector calibration from the command line.
//!
//! Exit codes: 0 on success, 1 when a verification or calibration check
//! fails, 2 on usage or configuration errors.

mod config;
mod output;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cvtrust::keyrate::{loss_grid, run_scan, ProtocolVariant, ScanConfig};
use cvtrust::lab::{analytic_sweep, monte_carlo_sweep, spec_grid, Sabotage, SweepConfig, SweepMode};
use cvtrust::trusted::{
    noise_figure_from_vacuum_variance, rescale_plan, rescale_plan_limit, vacuum_floor, NoiseFigure,
};
use cvtrust::{DetectorKind, DetectorSpec, Error, Scenario};
use serde_json::json;

use config::{ScanDocument, ScanFile, VerifyDocument, VerifyFile, SCHEMA_VERSION};
use output::{resolve_out_dir, to_json, write_atomic};

#[derive(Parser)]
#[command(name = "cvtrust", version, about = "Trusted detector noise as equivalent loss")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the outcome rescaling plan of a detector.
    Rescale(RescaleArgs),
    /// Check the noise-loss equivalence over a grid of inputs and detectors.
    Verify(VerifyArgs),
    /// Tabulate key rates against channel loss.
    Scan(ScanArgs),
    /// Infer the noise figure from a vacuum-input variance.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Clone, Copy)]
#[group(multiple = false)]
struct NoiseArgs {
    /// Noise figure 2n̄(1 − η_d).
    #[arg(long, value_name = "VALUE")]
    two_nu: Option<f64>,
    /// Noise figure n̄(1 − η_d).
    #[arg(long, value_name = "VALUE")]
    nu: Option<f64>,
}

impl NoiseArgs {
    fn nu(self) -> Option<f64> {
        self.nu.or(self.two_nu.map(|t| t / 2.0))
    }
}

#[derive(Args)]
struct RescaleArgs {
    #[arg(long)]
    kind: DetectorKind,
    #[arg(long)]
    eta_d: Option<f64>,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Thermal photon number of the detector ancilla.
    #[arg(long, conflicts_with_all = ["two_nu", "nu"])]
    nbar: Option<f64>,
    /// Take η_d → 1 at fixed noise figure.
    #[arg(long, conflicts_with_all = ["eta_d", "nbar"])]
    limit: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Analytic,
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum SabotageArg {
    None,
    SkipRescale,
    WrongR,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Samples per model and cell in Monte-Carlo mode.
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict the detector grid to this efficiency.
    #[arg(long)]
    eta_d: Option<f64>,
    /// Restrict the detector grid to this noise figure.
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, value_enum)]
    sabotage: Option<SabotageArg>,
    /// Factor applied to r by `--sabotage wrong-r`.
    #[arg(long, default_value_t = 1.01)]
    wrong_r_factor: f64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    #[value(alias = "all-heterodyne")]
    Heterodyne,
    Hybrid,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long, value_enum)]
    protocol: Option<ProtocolArg>,
    #[arg(long)]
    eta_d: Option<f64>,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Channel excess noise at the input, in vacuum units.
    #[arg(long)]
    xi0: Option<f64>,
    /// Loss grid `start:stop:step` in dB.
    #[arg(long, value_name = "RANGE")]
    loss_db: Option<String>,
    /// Comma-separated subset of ideal, trusted, untrusted.
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<Scenario>>,
    /// Name of the rate function.
    #[arg(long)]
    rate: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    kind: DetectorKind,
    #[arg(long, required_unless_present = "samples", conflicts_with = "samples")]
    vacuum_variance: Option<f64>,
    /// File of outcome values separated by whitespace or commas; `#` starts
    /// a comment.
    #[arg(long, value_name = "FILE")]
    samples: Option<PathBuf>,
}

enum Failure {
    /// A check ran and failed.
    Check(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

const DEFAULT_ETA_D: f64 = 0.7;
const DEFAULT_TWO_NU: f64 = 1e-3;
const DEFAULT_XI0: f64 = 1e-3;
const DEFAULT_LOSS_DB: &str = "0:40:1";
const DEFAULT_MC_SAMPLES: usize = 1_000_000;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rescale(a) => cmd_rescale(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Calibrate(a) => cmd_calibrate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("cvtrust: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("cvtrust: {msg}");
            ExitCode::from(2)
        }
    }
}

fn cmd_rescale(a: RescaleArgs) -> CmdResult {
    let plan = if a.limit {
        let nu = a
            .noise
            .nu()
            .ok_or_else(|| Failure::Usage("--limit needs --nu or --two-nu".into()))?;
        rescale_plan_limit(NoiseFigure::new(nu)?, a.kind)
    } else if let Some(nbar) = a.nbar {
        let eta_d = a
            .eta_d
            .ok_or_else(|| Failure::Usage("--nbar needs --eta-d".into()))?;
        rescale_plan(&DetectorSpec::new(a.kind, eta_d, nbar)?)
    } else {
        let nu = a.noise.nu().ok_or_else(|| {
            Failure::Usage("give --nbar, --nu or --two-nu".into())
        })?;
        rescale_plan(&DetectorSpec::from_noise_figure(a.kind, a.eta_d.unwrap_or(1.0), nu)?)
    };
    print!("{}", to_json(&plan));
    Ok(())
}

fn unique(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let file: Option<VerifyFile> = a.config.as_deref().map(config::load).transpose().map_err(Failure::Usage)?;
    let mode = match (a.mode, file.as_ref().and_then(|f| f.mode)) {
        (Some(ModeArg::Analytic), _) => SweepMode::Analytic,
        (Some(ModeArg::Mc), _) => SweepMode::MonteCarlo,
        (None, Some(m)) => m,
        (None, None) => SweepMode::Analytic,
    };
    let mut cfg = match file {
        Some(f) => f.config,
        None => match mode {
            SweepMode::Analytic => SweepConfig::default_grid(),
            SweepMode::MonteCarlo => SweepConfig::monte_carlo_grid(DEFAULT_MC_SAMPLES, 0),
        },
    };
    if let Some(n) = a.mc_samples {
        cfg.mc_samples = n;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if a.eta_d.is_some() || a.noise.nu().is_some() {
        let kinds: Vec<DetectorKind> = cfg.specs.iter().map(|s| s.kind).collect::<BTreeSet<_>>().into_iter().collect();
        let eta_ds = a.eta_d.map(|e| vec![e]).unwrap_or_else(|| unique(cfg.specs.iter().map(|s| s.eta_d())));
        let nus = a.noise.nu().map(|n| vec![n]).unwrap_or_else(|| unique(cfg.specs.iter().map(|s| s.nu())));
        cfg.specs = spec_grid(&kinds, &eta_ds, &nus)?;
    }
    if let Some(s) = a.sabotage {
        cfg.sabotage = match s {
            SabotageArg::None => Sabotage::None,
            SabotageArg::SkipRescale => Sabotage::SkipRescale,
            SabotageArg::WrongR => Sabotage::WrongR(a.wrong_r_factor),
        };
    }

    let report = match mode {
        SweepMode::Analytic => analytic_sweep(&cfg)?,
        SweepMode::MonteCarlo => monte_carlo_sweep(&cfg)?,
    };
    let dir = resolve_out_dir(a.out_dir);
    let doc = VerifyDocument {
        schema_version: SCHEMA_VERSION,
        report: &report,
    };
    write_outputs(&dir, "verify_report", &to_json(&doc), &report.to_csv())?;

    let s = &report.summary;
    println!(
        "{}",
        json!({
            "mode": report.mode,
            "cells": s.cells,
            "failures": s.failures,
            "worst_mean_gap": s.worst_mean_gap,
            "worst_var_gap": s.worst_var_gap,
            "max_ks_statistic": s.max_ks_statistic,
            "pass": s.pass,
        })
    );
    if s.pass {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "equivalence check failed in {} of {} cells",
            s.failures, s.cells
        )))
    }
}

fn write_outputs(dir: &Path, stem: &str, json: &str, csv: &str) -> CmdResult {
    for (ext, body) in [("json", json), ("csv", csv)] {
        let path = dir.join(format!("{stem}.{ext}"));
        write_atomic(&path, body.as_bytes())
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn parse_range(s: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Failure::Usage(format!("invalid loss range '{s}', expected start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    Ok(loss_grid(nums[0], nums[1], nums[2])?)
}

fn cmd_scan(a: ScanArgs) -> CmdResult {
    let file: Option<ScanFile> = a.config.as_deref().map(config::load).transpose().map_err(Failure::Usage)?;
    let rebuild = a.protocol.is_some() || a.eta_d.is_some() || a.noise.nu().is_some();
    let mut cfg = match file {
        Some(f) => f.config,
        None => ScanConfig::for_protocol(
            ProtocolVariant::AllHeterodyne,
            DEFAULT_ETA_D,
            DEFAULT_TWO_NU / 2.0,
            DEFAULT_XI0,
            parse_range(DEFAULT_LOSS_DB)?,
        )?,
    };
    if rebuild {
        let protocol = match a.protocol {
            Some(ProtocolArg::Heterodyne) => ProtocolVariant::AllHeterodyne,
            Some(ProtocolArg::Hybrid) => ProtocolVariant::Hybrid,
            None => cfg.protocol,
        };
        let first = cfg.detectors.first();
        let eta_d = a.eta_d.or(first.map(|d| d.eta_d())).unwrap_or(DEFAULT_ETA_D);
        let nu = a.noise.nu().or(first.map(|d| d.nu())).unwrap_or(DEFAULT_TWO_NU / 2.0);
        let fresh = ScanConfig::for_protocol(protocol, eta_d, nu, cfg.xi0, cfg.loss_db.clone())?;
        cfg.protocol = fresh.protocol;
        cfg.detectors = fresh.detectors;
    }
    if let Some(xi0) = a.xi0 {
        cfg.xi0 = xi0;
    }
    if let Some(range) = &a.loss_db {
        cfg.loss_db = parse_range(range)?;
    }
    if let Some(s) = a.scenarios {
        cfg.scenarios = s;
    }
    if let Some(r) = a.rate {
        cfg.rate_function = r;
    }

    let table = run_scan(&cfg)?;
    let dir = resolve_out_dir(a.out_dir);
    let doc = ScanDocument {
        schema_version: SCHEMA_VERSION,
        table: &table,
    };
    write_outputs(&dir, "scan", &to_json(&doc), &table.to_csv())?;

    let failed = table.rows.iter().filter(|r| r.status != "ok").count();
    println!(
        "{}",
        json!({
            "protocol": table.config.protocol,
            "rate_function": table.metadata.rate_function,
            "eta_e_min": table.metadata.eta_e_min,
            "rows": table.rows.len(),
            "failed_points": failed,
        })
    );
    Ok(())
}

fn read_samples(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let v: f64 = tok.parse().map_err(|_| {
                Failure::Usage(format!("{}:{}: not a number: '{tok}'", path.display(), n + 1))
            })?;
            values.push(v);
        }
    }
    if values.len() < 2 {
        return Err(Failure::Usage(format!("{} holds fewer than two samples", path.display())));
    }
    Ok(values)
}

fn cmd_calibrate(a: CalibrateArgs) -> CmdResult {
    let (variance, count) = match (a.vacuum_variance, &a.samples) {
        (Some(v), _) => (v, None),
        (None, Some(path)) => {
            let xs = read_samples(path)?;
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var, Some(xs.len()))
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    if !variance.is_finite() {
        return Err(Failure::Usage(format!("variance {variance} is not finite")));
    }
    let floor = vacuum_floor(a.kind);
    if variance < floor {
        return Err(Failure::Check(format!(
            "variance {variance} is below the vacuum floor {floor} of {} detection",
            a.kind
        )));
    }
    let nu = noise_figure_from_vacuum_variance(variance, a.kind)?.nu;
    // dν/dvar = 2 for both kinds.
    let standard_error = count.map(|n| 2.0 * variance * (2.0 / (n as f64 - 1.0)).sqrt());
    print!(
        "{}",
        to_json(&json!({
            "kind": a.kind,
            "variance": variance,
            "samples": count,
            "nu": nu,
            "two_nu": 2.0 * nu,
            "standard_error": standard_error,
        }))
    );
    Ok(())
}
