use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cyclonet_core::config::RunConfig;
use cyclonet_core::report::analyze;
use cyclonet_core::sim::simulate;
use cyclonet_core::sweep::run_sweep;
use cyclonet_core::tables::{self, TableSetup};
use cyclonet_core::Error;

const THREADS_ENV: &str = "CYCLONET_THREADS";

/// Analyze and simulate networks of coupled cyclic feedback oscillators.
#[derive(Parser)]
#[command(name = "cyclonet", version, arg_required_else_help = true)]
struct Cli {
    /// Print an example configuration (or write it to PATH) and exit.
    #[arg(long, value_name = "PATH", num_args = 0..=1)]
    dump_config: Option<Option<PathBuf>>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Oscillation, synchronization and period analysis. Report JSON goes to
    /// stdout (or output.report); the summary line goes to stderr.
    Analyze {
        config: PathBuf,
        /// Also simulate with the config's sim section and cross-check.
        #[arg(long)]
        simulate: bool,
    },
    /// Integrate the network. Trajectory CSV goes to stdout (or output.csv);
    /// the result JSON goes to stderr (or output.report).
    Simulate { config: PathBuf },
    /// Evaluate the config's sweep grid and print a long-form CSV.
    Sweep { config: PathBuf },
    /// Regenerate one of the reference tables as CSV.
    Reproduce {
        table: Table,
        #[arg(long, default_value_t = tables::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        precision: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    Table1,
    Table2,
    Table3,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Integration { .. } | Error::Numerical(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Input(format!("cannot write {}: {e}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| Failure::Input(e.to_string()))
        }
    }
}

fn thread_cap() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Input(format!("{THREADS_ENV}: expected a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(path) = cli.dump_config {
        let mut text = RunConfig::example().to_json();
        text.push('\n');
        return emit(path.as_deref(), &text);
    }
    let Some(command) = cli.command else {
        return Err(Failure::Input("no command given; see --help".into()));
    };
    match command {
        Command::Analyze { config, simulate } => {
            let cfg = RunConfig::from_path(&config)?;
            let net = cfg.network_model()?;
            let report = analyze(&net, simulate.then_some(&cfg.sim))?;
            let mut json = report.to_json();
            json.push('\n');
            emit(cfg.output.report.as_deref(), &json)?;
            eprintln!("{}", report.summary_line());
        }
        Command::Simulate { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let net = cfg.network_model()?;
            let (traj, result) = simulate(&net, &cfg.sim)?;
            let mut csv = Vec::new();
            traj.write_csv(&mut csv, cfg.output.precision).map_err(|e| Failure::Input(e.to_string()))?;
            emit(cfg.output.csv.as_deref(), &String::from_utf8_lossy(&csv))?;
            let mut json = serde_json::to_string_pretty(&result).expect("result serializes");
            json.push('\n');
            match cfg.output.report.as_deref() {
                Some(p) => fs::write(p, json).map_err(|e| io_failure(p, e))?,
                None => eprint!("{json}"),
            }
        }
        Command::Sweep { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let out = run_sweep(&cfg, thread_cap()?)?;
            emit(cfg.output.csv.as_deref(), &out.to_csv(cfg.output.precision))?;
        }
        Command::Reproduce { table, seed, out, precision } => {
            if precision == 0 {
                return Err(Failure::Input("--precision: must be at least 1".into()));
            }
            let setup = TableSetup::new(seed);
            let csv = match table {
                Table::Table1 => tables::table1_csv(&tables::table1(&setup)?, precision),
                Table::Table2 => tables::table2_csv(&tables::table2()?, precision),
                Table::Table3 => tables::table3_csv(&tables::table3(&setup)?, precision),
            };
            emit(out.as_deref(), &csv)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
