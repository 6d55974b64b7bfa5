use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use lethargy_cli::config::Mode;
use lethargy_cli::report::{load_report, verify_report, write_csv, write_report, Report};
use lethargy_cli::{load_config, run_scenario, CliError};

#[derive(Parser)]
#[command(
    name = "lethargy",
    version,
    about = "Constructs elements at prescribed distances from nested subspace chains, \
             with independently verifiable certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        config: PathBuf,
        /// Write the per-index table as CSV.
        #[arg(long)]
        emit_csv: Option<PathBuf>,
        /// Write the structured report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the acceptance tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Replay every certificate of an emitted report.
    Verify { report: PathBuf },
    /// Run the functional-probe findings for a config (mode forced to probe).
    Probe {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every *.json config in a directory; failures do not abort.
    Batch {
        dir: PathBuf,
        /// Directory for reports and CSV files (default: <dir>/reports).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn print_report(report: &Report) {
    println!(
        "mode {}  norm {}  ambient {}  hash {}",
        report.mode,
        report.norm,
        report.ambient_dim,
        &report.metadata.config_hash[..12]
    );
    if !report.rows.is_empty() {
        println!(
            "{:>4} {:>22} {:>22} {:>22} {:>10} {:>5}",
            "n", "d_n", "rho", "gap", "ratio", "pass"
        );
        for r in &report.rows {
            println!(
                "{:>4} {:>22.15e} {:>22.15e} {:>22.3e} {:>10.6} {:>5}",
                r.n,
                r.d_n,
                r.rho,
                r.cert_upper - r.cert_lower,
                r.ratio,
                r.pass
            );
        }
    }
    if let Some(findings) = &report.findings {
        println!("findings:");
        for f in findings {
            println!(
                "  {} [{}]: nu {:.9}, required {:.9}, achieved {:.9}, margin {:.9}, feasible {}",
                f.name, f.norm, f.nu, f.required_norm, f.achieved_norm, f.margin, f.feasible
            );
        }
    }
    if let Some(conv) = &report.convergence {
        println!("pairwise truncation distances:");
        for p in &conv.pairs {
            println!(
                "  ({:>2}, {:>2}): diff {:.12e}, tail component {:.12e}",
                p.m, p.n, p.diff, p.tail_component
            );
        }
    }
    if let Some(fin) = &report.finite {
        println!(
            "anchor: lambda {:.12}, residual {:.3e}",
            fin.lambda, fin.anchor_residual
        );
    }
    println!("verdict: {}", report.verdict);
}

fn run_one(
    config: &Path,
    emit_csv: Option<&Path>,
    out: Option<&Path>,
    tol: Option<f64>,
    force_probe: bool,
) -> Result<Report, CliError> {
    let mut cfg = load_config(config)?;
    if let Some(t) = tol {
        cfg.tolerances.accept = t;
    }
    if force_probe {
        cfg.mode = Mode::Probe;
    }
    let report = run_scenario(&cfg)?;
    if let Some(path) = out {
        write_report(&report, path)?;
    }
    if let Some(path) = emit_csv {
        write_csv(&report, path)?;
    }
    Ok(report)
}

fn batch(dir: &Path, out: Option<&Path>) -> i32 {
    let out_dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join("reports"));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return 1;
    }
    let mut entries: Vec<PathBuf> = match std::fs::read_dir(dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect(),
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", dir.display());
            return 3;
        }
    };
    entries.sort();
    let mut worst = 0i32;
    println!("{:<40} {:>8} detail", "scenario", "verdict");
    for path in entries {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let report_path = out_dir.join(format!("{stem}.report.json"));
        let csv_path = out_dir.join(format!("{stem}.csv"));
        match run_one(&path, Some(&csv_path), Some(&report_path), None, false) {
            Ok(report) => {
                let code = if report.passes() { 0 } else { 1 };
                worst = worst.max(code);
                println!(
                    "{:<40} {:>8} rows {}",
                    stem,
                    report.verdict,
                    report.rows.len()
                );
            }
            Err(e) => {
                worst = worst.max(e.exit_code());
                println!("{:<40} {:>8} {e}", stem, "error");
            }
        }
    }
    worst
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run {
            config,
            emit_csv,
            out,
            tol,
        } => match run_one(config, emit_csv.as_deref(), out.as_deref(), *tol, false) {
            Ok(report) => {
                print_report(&report);
                if report.passes() {
                    0
                } else {
                    1
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Probe { config, out } => {
            match run_one(config, None, out.as_deref(), None, true) {
                Ok(report) => {
                    print_report(&report);
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::Verify { report } => match load_report(report).and_then(|r| verify_report(&r))
        {
            Ok(true) => {
                println!("verified: pass");
                0
            }
            Ok(false) => {
                println!("verified: fail (certificates reproduce a failing verdict)");
                1
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Batch { dir, out } => batch(dir, out.as_deref()),
    };
    ExitCode::from(code as u8)
}
