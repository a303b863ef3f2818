//! `unruh-qfi` command-line front end.
//!
//! Exit codes: 0 on success, 1 when `verify` finds a tolerance failure, 2 on
//! invalid input, conflicting flags or a numerical fault.

mod config;

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use unruh_qfi::field_response::OracleSettings;
use unruh_qfi::report::{format_value, write_csv, write_with_manifest};
use unruh_qfi::sweep::{
    run_evolve, run_preset, run_sweep, with_workers, Grid, Preset, Scenario, SweepSpec, SweptVar,
    Table,
};
use unruh_qfi::verify::{run_verification, VerifySettings};

use config::PhysicsArgs;

#[derive(Debug, Parser)]
#[command(
    name = "unruh-qfi",
    version,
    about = "QFI dynamics of an accelerated detector near mirrors"
)]
struct Cli {
    /// Worker threads for grid evaluation (defaults to all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decay rates at the configured point
    Rates {
        #[command(flatten)]
        physics: PhysicsArgs,
        /// Also write the rates as CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bloch trajectory and QFI over a proper-time grid
    Evolve {
        #[command(flatten)]
        physics: PhysicsArgs,
        #[arg(long, default_value_t = 0.0)]
        tau_from: f64,
        #[arg(long, default_value_t = 1.0)]
        tau_to: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// CSV path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// QFI, spectrum and Cramer-Rao bound at one proper time
    Qfi {
        #[command(flatten)]
        physics: PhysicsArgs,
        /// Number of repeated measurements for the Cramer-Rao bound
        #[arg(long)]
        measurements: Option<u64>,
        /// Write the full record as JSON
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parameter sweep or figure preset, written as CSV plus manifest
    Sweep(SweepArgs),
    /// Cross-check closed forms against independent numerical routes
    Verify {
        /// Override the Fourier-oracle integration window
        #[arg(long)]
        oracle_window: Option<f64>,
        /// Per-check summary CSV
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-point response comparison CSV
        #[arg(long)]
        response_out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    physics: PhysicsArgs,
    /// Figure preset: fig2, fig3 or fig4
    #[arg(long)]
    preset: Option<Preset>,
    /// Swept variable: a, R, alpha, tau or theta
    #[arg(long)]
    swept: Option<SweptVar>,
    #[arg(long, allow_hyphen_values = true)]
    from: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    to: Option<String>,
    #[arg(long)]
    points: Option<usize>,
    /// Comma-separated column values for the fig2/fig3 presets
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let threads = cli.threads;
    if threads == Some(0) {
        bail!("--threads must be at least 1");
    }
    match cli.command {
        Command::Rates { physics, out } => cmd_rates(&physics, out.as_deref()),
        Command::Evolve {
            physics,
            tau_from,
            tau_to,
            points,
            out,
        } => {
            let grid = Grid::new(tau_from, tau_to, points)?;
            cmd_evolve(&physics, grid, out.as_deref(), threads)
        }
        Command::Qfi {
            physics,
            measurements,
            out,
        } => cmd_qfi(&physics, measurements, out.as_deref()),
        Command::Sweep(args) => cmd_sweep(&args, threads),
        Command::Verify {
            oracle_window,
            out,
            response_out,
        } => cmd_verify(
            oracle_window,
            out.as_deref(),
            response_out.as_deref(),
            threads,
        ),
    }
}

fn scenario(physics: &PhysicsArgs) -> Result<Scenario> {
    let s = physics.resolve(&physics.config()?)?;
    warn_coupling(&s);
    Ok(s)
}

fn warn_coupling(s: &Scenario) {
    if !s.detector.is_weak_coupling() {
        eprintln!(
            "warning: lambda/omega0 = {} exceeds the weak-coupling regime",
            s.detector.lambda / s.detector.omega0
        );
    }
}

fn cmd_rates(physics: &PhysicsArgs, out: Option<&Path>) -> Result<ExitCode> {
    let s = scenario(physics)?;
    let r = s.rates()?;
    let b_inf = r.stationary_bz().unwrap_or(f64::NAN);
    let values = [
        ("gamma_plus", r.gamma_plus),
        ("gamma_minus", r.gamma_minus),
        ("gamma_z", r.gamma_z),
        ("transverse", r.transverse()),
        ("longitudinal", r.longitudinal()),
        ("b_inf", b_inf),
    ];
    let mut stdout = io::stdout().lock();
    for (name, v) in values {
        writeln!(stdout, "{name} = {}", format_value(v))?;
    }
    if let Some(path) = out {
        let table = Table {
            header: values.iter().map(|(n, _)| n.to_string()).collect(),
            rows: vec![values.iter().map(|(_, v)| *v).collect()],
        };
        write_with_manifest(path, &table, "rates", json!({ "scenario": s }))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_evolve(
    physics: &PhysicsArgs,
    grid: Grid,
    out: Option<&Path>,
    threads: Option<usize>,
) -> Result<ExitCode> {
    let s = scenario(physics)?;
    let table = with_workers(threads, || run_evolve(&s, &grid))?;
    let params = json!({ "scenario": s, "tau_grid": grid });
    emit_table(&table, out, "evolve", params)?;
    Ok(ExitCode::SUCCESS)
}

fn emit_table(
    table: &Table,
    out: Option<&Path>,
    command: &str,
    params: serde_json::Value,
) -> Result<()> {
    match out {
        Some(path) => {
            write_with_manifest(path, table, command, params)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => write_csv(io::stdout().lock(), table, None)?,
    }
    Ok(())
}

fn cmd_qfi(
    physics: &PhysicsArgs,
    measurements: Option<u64>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let mut s = scenario(physics)?;
    if let Some(m) = measurements {
        s.measurements = m;
    }
    let rec = s.record()?;
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "tau = {}", format_value(rec.tau))?;
    writeln!(stdout, "qfi = {}", format_value(rec.qfi))?;
    writeln!(stdout, "qfi_closed = {}", format_value(rec.qfi_closed))?;
    writeln!(stdout, "p0 = {}", format_value(rec.eigenvalues[0]))?;
    writeln!(stdout, "p1 = {}", format_value(rec.eigenvalues[1]))?;
    match rec.crb {
        Some(crb) => writeln!(stdout, "crb = {}", format_value(crb))?,
        None => writeln!(stdout, "crb = unbounded")?,
    }
    if let Some(path) = out {
        let body = json!({ "scenario": s, "record": rec });
        std::fs::write(path, serde_json::to_string_pretty(&body)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_bound(text: &Option<String>) -> Result<Option<f64>> {
    text.as_deref()
        .map(|t| config::parse_angle(t).map_err(anyhow::Error::msg))
        .transpose()
}

fn cmd_sweep(args: &SweepArgs, threads: Option<usize>) -> Result<ExitCode> {
    let from = parse_bound(&args.from)?;
    let to = parse_bound(&args.to)?;
    let cfg = args.physics.config()?;
    match (args.preset, args.swept) {
        (Some(_), Some(_)) => bail!("--preset and --swept are mutually exclusive"),
        (None, None) => bail!("sweep needs either --preset or --swept"),
        (Some(preset), None) => {
            let fixed = args.physics.supplied(&cfg);
            if !fixed.is_empty() {
                bail!(
                    "preset {preset} fixes its own parameters; remove: {}",
                    fixed.join(", ")
                );
            }
            let base = args.physics.resolve(&cfg)?;
            let mut run = preset.default_run(base.convention);
            run.base.omega_offset = base.omega_offset;
            if let Some(f) = from {
                run.rows.from = f;
            }
            if let Some(t) = to {
                run.rows.to = t;
            }
            if let Some(p) = args.points {
                run.rows.points = p;
            }
            if let Some(cols) = &args.columns {
                if preset.column_var().is_none() {
                    bail!("preset {preset} has no column parameter; --columns is not allowed");
                }
                run.columns = cols.clone();
            }
            run.rows.validate()?;
            let table = with_workers(threads, || run_preset(&run))?;
            write_with_manifest(&args.out, &table, "sweep", json!({ "preset_run": run }))
                .with_context(|| format!("writing {}", args.out.display()))?;
        }
        (None, Some(swept)) => {
            if args.columns.is_some() {
                bail!("--columns only applies to presets");
            }
            let (Some(f), Some(t), Some(p)) = (from, to, args.points) else {
                bail!("--swept needs --from, --to and --points");
            };
            if args.physics.supplied(&cfg).contains(&swept.name()) {
                eprintln!("warning: fixed value of `{swept}` is ignored by the sweep");
            }
            let fixed = args.physics.resolve(&cfg)?;
            warn_coupling(&fixed);
            let spec = SweepSpec {
                swept,
                grid: Grid::new(f, t, p)?,
                fixed,
            };
            let table = with_workers(threads, || run_sweep(&spec))?;
            write_with_manifest(&args.out, &table, "sweep", json!({ "spec": spec }))
                .with_context(|| format!("writing {}", args.out.display()))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(
    oracle_window: Option<f64>,
    out: Option<&Path>,
    response_out: Option<&Path>,
    threads: Option<usize>,
) -> Result<ExitCode> {
    let settings = VerifySettings {
        oracle: OracleSettings {
            window: oracle_window,
            ..OracleSettings::default()
        },
        ..VerifySettings::default()
    };
    let report = with_workers(threads, || run_verification(&settings));
    let mut stdout = io::stdout().lock();
    for c in &report.checks {
        writeln!(
            stdout,
            "{} {:<30} points={:<4} max_error={:.3e} tolerance={:.1e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.points,
            c.max_error,
            c.tolerance
        )?;
        if let Some(f) = &c.failure {
            writeln!(stdout, "     {f}")?;
        }
    }
    if let Some(path) = out {
        let mut buf = Vec::new();
        report.write_checks_csv(&mut buf)?;
        std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = response_out {
        let mut buf = Vec::new();
        report.write_response_csv(&mut buf)?;
        std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?;
    }
    if report.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verification failed: {}", report.failing().join(", "));
        Ok(ExitCode::from(1))
    }
}
