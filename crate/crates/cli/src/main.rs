use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use vdp_terminal::io::METRICS_FILE;
use vdp_terminal::metrics::Metrics;
use vdp_terminal::runner::{render_run_dir, run_scenario, write_run_dir};
use vdp_terminal::scenario::{validate_scenario, Scenario, ScenarioConfig};
use vdp_terminal::sweep::{sweep, sweep_table_csv, CellOutcome, Grid};
use vdp_terminal::verify::{run_verify, DEFAULT_SAMPLES};
use vdp_terminal::Error;

/// Terminal-manifold control of the forced Van der Pol oscillator.
#[derive(Parser)]
#[command(name = "vdp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its run directory.
    Simulate {
        config: PathBuf,
        /// Output directory (default: run-<config name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the cross product of a parameter grid over a base scenario.
    Sweep {
        config: PathBuf,
        /// e.g. "mu=0.05,0.1,0.2;b1=1.0,1.5"
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized control-law checks.
    Verify {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Regenerate the SVG figures of a run directory from its CSV files.
    Render { run_dir: PathBuf },
    /// Print the reference scenario configuration.
    Reference {
        /// Drop the control bounds.
        #[arg(long)]
        unbounded: bool,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
    Verify,
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
            Failure::Verify => 4,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let cfg = ScenarioConfig::from_json(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    validate_scenario(&cfg).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn default_out(config: &Path, prefix: &str) -> PathBuf {
    let stem = config
        .file_stem()
        .map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned());
    PathBuf::from(format!("{prefix}-{stem}"))
}

fn print_summary(m: &Metrics) {
    for t in &m.trajectories {
        let status = match (&t.failure, t.convergence_time) {
            (Some(f), _) => format!("failed: {f}"),
            (None, Some(tc)) => format!("converged at t={tc:.2}"),
            (None, None) => format!("not converged, final v={:.3e}", t.final_offset),
        };
        println!(
            "  [{}] r0={} theta0={}: {status}; max|u|={:.4}, clamps={}, min dtheta/dt={:.4}",
            t.index, t.initial.r, t.initial.theta, t.max_abs_u, t.clamp_count, t.min_dtheta_dt
        );
    }
    let a = &m.aggregate;
    println!(
        "  {}/{} converged, {} failed",
        a.converged, a.trajectories, a.failed
    );
}

fn simulate(config: &Path, out: Option<PathBuf>) -> Result<(), Failure> {
    let scenario = load(config)?;
    let dir = out.unwrap_or_else(|| default_out(config, "run"));
    let output = run_scenario(&scenario);
    write_run_dir(&dir, &scenario, &output).context("writing run directory")?;
    println!("wrote {}", dir.display());
    print_summary(&output.metrics);
    match output.first_failure() {
        Some(e) => Err(Failure::Runtime(e.to_string())),
        None => Ok(()),
    }
}

fn run_sweep(config: &Path, grid: &str, out: Option<PathBuf>) -> Result<(), Failure> {
    let base = load(config)?;
    let grid: Grid = grid
        .parse()
        .map_err(|e: Error| Failure::Config(e.to_string()))?;
    let dir = out.unwrap_or_else(|| default_out(config, "sweep"));
    let cells = sweep(&base, &grid);
    let mut failures = 0;
    for cell in &cells {
        if let Some((s, output)) = &cell.run {
            write_run_dir(&dir.join(format!("cell_{}", cell.row.cell)), s, output)
                .context("writing cell directory")?;
            failures += output.metrics.aggregate.failed;
        }
    }
    let rows: Vec<_> = cells.into_iter().map(|c| c.row).collect();
    fs::write(dir.join("sweep.csv"), sweep_table_csv(&grid, &rows)).context("writing sweep.csv")?;
    let json = serde_json::to_string_pretty(&rows).context("serializing sweep")?;
    fs::write(dir.join("sweep.json"), json).context("writing sweep.json")?;
    println!("wrote {} ({} cells)", dir.display(), rows.len());
    for row in &rows {
        let params: Vec<_> = row.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let status = match &row.outcome {
            CellOutcome::Ok { metrics } => format!(
                "{}/{} converged, {} failed",
                metrics.aggregate.converged,
                metrics.aggregate.trajectories,
                metrics.aggregate.failed
            ),
            CellOutcome::ConfigError { message } => {
                format!("config error: {}", message.replace('\n', "; "))
            }
        };
        println!("  cell {} [{}]: {status}", row.cell, params.join(", "));
    }
    if failures > 0 {
        return Err(Failure::Runtime(format!("{failures} trajectories failed")));
    }
    Ok(())
}

fn verify(seed: u64, samples: usize, json: bool) -> Result<(), Failure> {
    let report = run_verify(seed, samples);
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).context("serializing report")?
        );
    } else {
        for c in &report.checks {
            println!("{c}");
        }
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn render(dir: &Path) -> Result<(), Failure> {
    let written = render_run_dir(dir).map_err(|e| match e {
        Error::Config(_) => Failure::Config(e.to_string()),
        other => Failure::Other(
            anyhow::Error::new(other).context(format!("rendering {}", dir.display())),
        ),
    })?;
    for p in written {
        println!("wrote {}", p.display());
    }
    if !dir.join(METRICS_FILE).exists() {
        eprintln!("note: {} has no {METRICS_FILE}", dir.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out } => simulate(&config, out),
        Command::Sweep { config, grid, out } => run_sweep(&config, &grid, out),
        Command::Verify {
            seed,
            samples,
            json,
        } => verify(seed, samples, json),
        Command::Render { run_dir } => render(&run_dir),
        Command::Reference { unbounded } => {
            let cfg = if unbounded {
                ScenarioConfig::reference_unbounded()
            } else {
                ScenarioConfig::reference()
            };
            println!("{}", cfg.to_json());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("config error: {m}"),
                Failure::Runtime(m) => eprintln!("integration failure: {m}"),
                Failure::Verify => eprintln!("verification failed"),
                Failure::Other(e) => eprintln!("error: {e:#}"),
            }
            ExitCode::from(f.code())
        }
    }
}
